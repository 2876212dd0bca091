mod common;

use bernopt::kinematics::*;
use bernopt::BernsteinPoly;
use common::*;
use proptest::prelude::*;

fn c1() -> BernsteinPoly {
    BernsteinPoly::new(
        vec![vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0], vec![5.0, 0.0, 2.0, 3.0, 10.0, 3.0]],
        10.0,
        20.0,
    )
    .unwrap()
}

fn c2() -> BernsteinPoly {
    BernsteinPoly::new(
        vec![vec![1.0, 3.0, 6.0, 8.0, 10.0, 12.0], vec![6.0, 9.0, 10.0, 11.0, 8.0, 8.0]],
        10.0,
        20.0,
    )
    .unwrap()
}

/// Five-point central difference of the directly evaluated curve.
fn fd_velocity(p: &BernsteinPoly, t: f64, h: f64) -> Vec<f64> {
    let f = |t: f64| direct_point(p, t);
    let (a, b, c, d) = (f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h));
    (0..p.dim()).map(|k| (a[k] - 8.0 * b[k] + 8.0 * c[k] - d[k]) / (12.0 * h)).collect()
}

fn fd_accel(p: &BernsteinPoly, t: f64, h: f64) -> Vec<f64> {
    let f = |t: f64| direct_point(p, t);
    let (a, b, c, d, e) = (f(t - 2.0 * h), f(t - h), f(t), f(t + h), f(t + 2.0 * h));
    (0..p.dim())
        .map(|k| (-a[k] + 16.0 * b[k] - 30.0 * c[k] + 16.0 * d[k] - e[k]) / (12.0 * h * h))
        .collect()
}

fn heading(p: &BernsteinPoly, t: f64, h: f64) -> f64 {
    let v = fd_velocity(p, t, h);
    v[1].atan2(v[0])
}

fn relative(got: f64, want: f64, scale: f64) -> f64 {
    (got - want).abs() / scale.max(1e-300)
}

#[test]
fn speed_of_the_example_curve() {
    let p = c1();
    let s = speed_squared(&p).unwrap();
    let h = 1e-3;
    let pts: Vec<f64> = grid(10.0 + 2.0 * h, 20.0 - 2.0 * h, 200).collect();
    let want: Vec<f64> = pts.iter().map(|&t| fd_velocity(&p, t, h).iter().map(|v| v * v).sum()).collect();
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (t, w) in pts.iter().zip(&want) {
        assert!(relative(s.evaluate(*t).unwrap()[0], *w, scale) <= 1e-6);
    }
}

#[test]
fn turn_rate_of_a_quarter_bend_starts_at_one() {
    let p = BernsteinPoly::new(vec![vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0]], 0.0, 1.0).unwrap();
    let w = angular_rate(&p).unwrap().evaluate(0.0).unwrap()[0];
    let h = 1e-5;
    // One-sided difference of the heading; the curve's polynomial extension
    // supplies samples just before t = 0 for the velocity stencil.
    let hd = |t: f64| heading(&p, t, 1e-7);
    let fd = (-3.0 * hd(0.0) + 4.0 * hd(h) - hd(2.0 * h)) / (2.0 * h);
    assert!((w - 1.0).abs() <= 1e-12);
    assert!((fd - 1.0).abs() <= 1e-3, "{fd}");
}

#[test]
fn mirrored_path_turns_the_other_way() {
    let p = BernsteinPoly::new(vec![vec![0.0, 1.0, 3.0, 4.0], vec![0.0, 2.0, -1.0, 1.0]], 0.0, 2.0).unwrap();
    let m = BernsteinPoly::new(vec![p.row(0), p.row(1).iter().map(|v| -v).collect()], 0.0, 2.0).unwrap();
    let (a, b) = (angular_rate(&p).unwrap(), angular_rate(&m).unwrap());
    for t in grid(0.0, 2.0, 50) {
        assert!((a.evaluate(t).unwrap()[0] + b.evaluate(t).unwrap()[0]).abs() <= 1e-12);
    }
}

#[test]
fn squared_distance_between_the_example_curves() {
    let d = squared_distance(&c1(), &c2()).unwrap();
    for t in grid(10.0, 20.0, 500) {
        let (a, b) = (direct_point(&c1(), t), direct_point(&c2(), t));
        let want: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!((d.evaluate(t).unwrap()[0] - want).abs() <= 1e-9);
    }
}

#[test]
fn point_obstacle_as_a_curve() {
    let o = obstacle_poly(&[3.0, 4.0], 5, 10.0, 20.0).unwrap();
    assert_eq!(o.degree(), 5);
    assert!(o.points().all(|c| c == [3.0, 4.0]));
    let d = squared_distance(&c1(), &o).unwrap();
    for t in grid(10.0, 20.0, 500) {
        let x = direct_point(&c1(), t);
        let want = (x[0] - 3.0).powi(2) + (x[1] - 4.0).powi(2);
        assert!((d.evaluate(t).unwrap()[0] - want).abs() <= 1e-9);
    }
}

fn planar(degrees: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = BernsteinPoly> {
    degrees.prop_flat_map(|n| {
        (prop::collection::vec(0.5..2.0f64, n), prop::collection::vec(-1.5..1.5f64, n + 1), 0.5..4.0f64).prop_map(
            move |(steps, y, len)| {
                // Increasing x coefficients keep the heading away from vertical.
                let mut x = vec![0.0];
                for s in steps {
                    x.push(x.last().unwrap() + s);
                }
                BernsteinPoly::new(vec![x, y], 0.0, len).unwrap()
            },
        )
    })
}

fn cubic() -> impl Strategy<Value = BernsteinPoly> {
    (prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 2..=3), 0.5..4.0f64)
        .prop_map(|(rows, len)| BernsteinPoly::new(rows, 0.0, len).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn acceleration_matches_finite_differences(p in cubic()) {
        let a = accel_squared(&p);
        let (t0, tf) = p.interval();
        let h = 1e-3 * (tf - t0);
        let pts: Vec<f64> = grid(t0 + 2.0 * h, tf - 2.0 * h, 50).collect();
        let want: Vec<f64> = pts.iter().map(|&t| fd_accel(&p, t, h).iter().map(|v| v * v).sum()).collect();
        let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (t, w) in pts.iter().zip(&want) {
            prop_assert!(relative(a.evaluate(*t).unwrap()[0], *w, scale) <= 1e-5);
        }
    }

    #[test]
    fn heading_tangent_matches_slope(p in planar(2..=7)) {
        let r = heading_tangent(&p).unwrap();
        let (t0, tf) = p.interval();
        let n = p.degree() as f64 / (tf - t0);
        for t in grid(t0, tf, 100) {
            let s = (t - t0) / (tf - t0);
            // Hodograph evaluated directly from coefficient differences.
            let vel: Vec<f64> = p
                .rows()
                .iter()
                .map(|row| n * direct(&row.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>(), s))
                .collect();
            let want = vel[1] / vel[0];
            let got = r.evaluate(t).unwrap()[0];
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn turn_rate_matches_heading_differences(p in planar(2..=6)) {
        let w = angular_rate(&p).unwrap();
        let (t0, tf) = p.interval();
        let h = 1e-4 * (tf - t0);
        let pts: Vec<f64> = grid(t0 + 0.05 * (tf - t0), tf - 0.05 * (tf - t0), 40).collect();
        let want: Vec<f64> = pts
            .iter()
            .map(|&t| (heading(&p, t + h, 1e-3 * h) - heading(&p, t - h, 1e-3 * h)) / (2.0 * h))
            .collect();
        let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (t, v) in pts.iter().zip(&want) {
            prop_assert!(relative(w.evaluate(*t).unwrap()[0], *v, scale) <= 1e-4);
        }
    }
}
