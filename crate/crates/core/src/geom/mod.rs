//! Geometric queries on Bernstein curves.

mod collision;
mod distance;
mod extrema;
mod gjk;

pub use collision::{collision_check, CollisionVerdict, DEFAULT_MAX_ITER};
pub use distance::{
    min_distance, min_distance_to_shape, DistanceEstimate, DistanceQuery, DEFAULT_DISTANCE_EPSILON,
};
pub use extrema::{
    coeff_bounds, maximum, minimum, ExtremaQuery, Extremum, DEFAULT_EXTREMA_EPSILON, DEFAULT_MAX_DEPTH,
};
pub use gjk::{gjk_distance, ConvexPointSet, GjkOutcome};
