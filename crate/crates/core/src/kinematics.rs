//! Speed, acceleration, heading and turn rate of a trajectory, kept in
//! (rational) Bernstein form.

use crate::error::{Error, Result};
use crate::poly::BernsteinPoly;
use crate::rational::RationalBernsteinPoly;

/// Extra elevation allowed when a positive denominator has a non-positive
/// coefficient at its native degree.
const MAX_DENOMINATOR_ELEVATION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryQuantities {
    pub speed_sq: BernsteinPoly,
    pub accel_sq: BernsteinPoly,
    pub heading_tan: RationalBernsteinPoly,
    pub ang_rate: RationalBernsteinPoly,
}

impl TrajectoryQuantities {
    pub fn new(traj: &BernsteinPoly) -> Result<Self> {
        Ok(TrajectoryQuantities {
            speed_sq: speed_squared(traj)?,
            accel_sq: accel_squared(traj),
            heading_tan: heading_tangent(traj)?,
            ang_rate: angular_rate(traj)?,
        })
    }
}

fn require_planar(traj: &BernsteinPoly) -> Result<()> {
    if traj.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: traj.dim(),
        });
    }
    Ok(())
}

/// `|C'(t)|^2`, degree `2(n-1)`.
pub fn speed_squared(traj: &BernsteinPoly) -> Result<BernsteinPoly> {
    if traj.degree() == 0 {
        return Err(Error::domain("speed needs degree >= 1"));
    }
    Ok(traj.derivative().norm_squared())
}

/// `|C''(t)|^2`; zero for degree below 2.
pub fn accel_squared(traj: &BernsteinPoly) -> BernsteinPoly {
    if traj.degree() < 2 {
        let (t0, tf) = traj.interval();
        return BernsteinPoly::constant(&[0.0], 0, t0, tf).expect("valid interval");
    }
    traj.derivative().derivative().norm_squared()
}

/// `y'/x'` for a planar trajectory whose `x'` coefficients share a strict sign.
pub fn heading_tangent(traj: &BernsteinPoly) -> Result<RationalBernsteinPoly> {
    require_planar(traj)?;
    if traj.degree() == 0 {
        return Err(Error::domain("heading needs degree >= 1"));
    }
    let vel = traj.derivative();
    let mut dx = vel.component(0);
    let mut dy = vel.component(1);
    let (lo, hi) = dx.coeff_range();
    if hi < 0.0 {
        dx = dx.scale(-1.0);
        dy = dy.scale(-1.0);
    } else if !(lo > 0.0) {
        return Err(Error::domain(
            "heading tangent needs x' coefficients all strictly positive or all strictly negative",
        ));
    }
    dy.divide(&dx)
}

/// Numerator `x'y'' - x''y'` and denominator `|C'|^2` of the turn rate, both
/// at degree `2n - 2`. Neither is checked for sign.
pub fn angular_rate_parts(traj: &BernsteinPoly) -> Result<(BernsteinPoly, BernsteinPoly)> {
    require_planar(traj)?;
    let n = traj.degree();
    if n < 2 {
        return Err(Error::domain("angular rate needs degree >= 2"));
    }
    let vel = traj.derivative();
    let acc = vel.derivative();
    let (dx, dy) = (vel.component(0), vel.component(1));
    let (ddx, ddy) = (acc.component(0), acc.component(1));
    let num = dx.multiply(&ddy)?.sub(&ddx.multiply(&dy)?)?;
    let den = vel.norm_squared();
    Ok((num.elevate(den.degree())?, den))
}

/// Turn rate `(x'y'' - x''y') / (x'^2 + y'^2)` as a rational polynomial.
///
/// When the speed curve is positive but some of its coefficients are not,
/// numerator and denominator are elevated together until they are.
pub fn angular_rate(traj: &BernsteinPoly) -> Result<RationalBernsteinPoly> {
    let (mut num, mut den) = angular_rate_parts(traj)?;
    let cap = den.degree() + MAX_DENOMINATOR_ELEVATION;
    while den.coeff_range().0 <= 0.0 {
        if den.degree() >= cap || den.as_flat()[0] <= 0.0 || *den.as_flat().last().unwrap() <= 0.0 {
            return Err(Error::domain(
                "angular rate needs speed squared coefficients strictly positive",
            ));
        }
        den = den.elevate_once();
        num = num.elevate_once();
    }
    num.divide(&den)
}

/// `|a(t) - b(t)|^2` for curves on the same interval.
pub fn squared_distance(a: &BernsteinPoly, b: &BernsteinPoly) -> Result<BernsteinPoly> {
    Ok(a.sub(b)?.norm_squared())
}

/// A stationary point expressed as a degree-`n` curve.
pub fn obstacle_poly(position: &[f64], n: usize, t0: f64, tf: f64) -> Result<BernsteinPoly> {
    BernsteinPoly::constant(position, n, t0, tf)
}
