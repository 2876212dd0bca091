use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bernopt::geom::{maximum, minimum, ExtremaQuery, DEFAULT_EXTREMA_EPSILON};
use bernopt::BernsteinPoly;
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bernopt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn plan(args: &[&str]) -> (Output, TempDir) {
    let out = TempDir::new().unwrap();
    let mut all = vec!["plan", "--out", path(out.path())];
    all.extend_from_slice(args);
    (run(&all), out)
}

fn report(dir: &TempDir) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap()
}

fn final_time(dir: &TempDir) -> f64 {
    report(dir)["final_times"][0].as_f64().unwrap()
}

#[test]
fn eval_prints_the_point() {
    let o = run(&["eval", path(&fixture("c1.json")), "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0,5");
    let tmp = TempDir::new().unwrap();
    let c = write(&tmp, "c.json", r#"{"t0": 0, "tf": 2, "coeffs": [[1.5, 1.5, 1.5], [-2, -2, -2]]}"#);
    assert_eq!(stdout(&run(&["eval", path(&c), "1.3"])), "1.5,-2");
}

#[test]
fn eval_outside_the_interval_is_an_input_error() {
    let o = run(&["eval", path(&fixture("c1.json")), "25"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "/nonexistent/poly.json", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extrema_of_the_quintic() {
    let o = run(&["extrema", path(&fixture("quintic.json"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: Vec<f64> = text.split(',').map(|s| s.parse().unwrap()).collect();
    assert!((v[0] - 2.26).abs() <= 0.01 && (v[1] - 5.70).abs() <= 0.01, "{text}");
    let p: BernsteinPoly = serde_json::from_str(&std::fs::read_to_string(fixture("quintic.json")).unwrap()).unwrap();
    let q = ExtremaQuery::with_epsilon(DEFAULT_EXTREMA_EPSILON);
    let want = format!("{},{}", minimum(&p, &q).unwrap().value, maximum(&p, &q).unwrap().value);
    assert_eq!(text, want);
}

#[test]
fn extrema_of_a_constant() {
    let tmp = TempDir::new().unwrap();
    let c = write(&tmp, "c.json", r#"{"t0": 0, "tf": 1, "coeffs": [[4, 4, 4, 4]]}"#);
    assert_eq!(stdout(&run(&["extrema", path(&c), "--eps", "1e-3"])), "4,4");
}

#[test]
fn mindist_cases() {
    let c1 = fixture("c1.json");
    assert_eq!(stdout(&run(&["mindist", path(&c1), path(&c1)])), "0");
    let tmp = TempDir::new().unwrap();
    let a = write(&tmp, "a.json", r#"{"t0": 0, "tf": 1, "coeffs": [[0, 5], [0, 0]]}"#);
    let b = write(&tmp, "b.json", r#"{"t0": 0, "tf": 1, "coeffs": [[0, 5], [2.5, 2.5]]}"#);
    let d: f64 = stdout(&run(&["mindist", path(&a), path(&b)])).parse().unwrap();
    assert!((d - 2.5).abs() <= 1e-9);
    let d: f64 = stdout(&run(&["mindist", path(&c1), path(&fixture("obstacle.json"))])).parse().unwrap();
    assert!((d - 1.7427565735048052).abs() <= 1e-3);
}

#[test]
fn collide_exit_codes() {
    let (c1, c2) = (fixture("c1.json"), fixture("c2.json"));
    let o = run(&["collide", path(&c1), path(&c2)]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "no_collision"));
    let o = run(&["collide", path(&c1), path(&c1), "--max-iter", "5"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(3), "collision_possible"));
}

#[test]
fn dubins_plans_and_hull_mode_is_slower() {
    let scenario = fixture("dubins.json");
    let (o, ext) = plan(&["--scenario", path(&scenario)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&ext);
    assert_eq!(r["feasible"], Value::Bool(true));
    let tf_ext = final_time(&ext);
    assert!((5.2..=7.7).contains(&tf_ext), "{tf_ext}");
    let (o, hull) = plan(&["--scenario", path(&scenario), "--mode", "hull", "--elevate", "10"]);
    assert!(o.status.success());
    assert!(final_time(&hull) >= tf_ext);
}

#[test]
fn swarm_margins_are_nonnegative() {
    let (o, dir) = plan(&["--scenario", path(&fixture("swarm_decentralized.json")), "--samples", "50"]);
    assert!(o.status.success());
    let r = report(&dir);
    let margins = r["certificate"]["margins"].as_array().unwrap();
    let sep: Vec<&Value> = margins.iter().filter(|m| m["constraint"] == "separation").collect();
    assert_eq!(sep.len(), 45);
    assert!(sep.iter().all(|m| m["margin"].as_f64().unwrap() >= 0.0));
}

#[test]
fn samples_reproduce_the_written_trajectories() {
    let (o, dir) = plan(&["--scenario", path(&fixture("cluttered.json")), "--samples", "31"]);
    assert!(o.status.success());
    let trajs: Vec<BernsteinPoly> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectories.json")).unwrap()).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("samples.csv")).unwrap();
    let header = rd.headers().unwrap().clone();
    assert_eq!(header.len(), 1 + 2 * trajs.len());
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let mut col = 1;
        for p in &trajs {
            for v in p.evaluate(t).unwrap() {
                let got: f64 = rec[col].parse().unwrap();
                assert_eq!(got.to_bits(), v.to_bits());
                col += 1;
            }
        }
        rows += 1;
    }
    assert_eq!(rows, 31);
    let cons = csv::Reader::from_path(dir.path().join("constraints.csv")).unwrap().headers().unwrap().clone();
    assert!(cons.iter().any(|h| h == "dist_sq_0_1") && cons.iter().any(|h| h == "obs_sq_2_3"));
}

#[test]
fn too_few_samples_is_an_input_error() {
    let (o, _dir) = plan(&["--scenario", path(&fixture("dubins.json")), "--samples", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _dir) = plan(&["--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_keeps_outputs_and_exits_four() {
    let tmp = TempDir::new().unwrap();
    let opts = write(&tmp, "opts.json", r#"{"max_outer_iters": 1, "max_inner_iters": 1}"#);
    let (o, dir) = plan(&["--scenario", path(&fixture("dubins.json")), "--solver-opts", path(&opts)]);
    assert_eq!(o.status.code(), Some(4));
    let r = report(&dir);
    assert_eq!(r["solver_feasible"], Value::Bool(false));
    assert!(r["failure"].is_string());
    assert!(dir.path().join("trajectories.json").exists());
}

#[test]
fn plan_output_is_deterministic() {
    let scenario = fixture("swarm_decentralized.json");
    let (_, a) = plan(&["--scenario", path(&scenario), "--seed", "3", "--samples", "20"]);
    let (_, b) = plan(&["--scenario", path(&scenario), "--seed", "3", "--samples", "20"]);
    for f in ["trajectories.json", "samples.csv", "constraints.csv", "report.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
