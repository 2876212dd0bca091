use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bernopt::geom::{
    collision_check, maximum, min_distance, min_distance_to_shape, minimum, CollisionVerdict, ConvexPointSet,
    DistanceQuery, ExtremaQuery, DEFAULT_DISTANCE_EPSILON, DEFAULT_EXTREMA_EPSILON, DEFAULT_MAX_ITER,
};
use bernopt::planner::{plan, Enforcement, PlanOptions, ScenarioConfig};
use bernopt::{BernsteinPoly, Error as CoreError, SolverOptions};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

mod output;

const EXIT_INPUT: u8 = 2;
const EXIT_COLLISION: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "bernopt", version, about = "Bernstein polynomial trajectory tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a curve at time t.
    Eval { poly: PathBuf, t: f64 },
    /// Minimum and maximum of a 1-D polynomial, printed as `min,max`.
    Extrema {
        poly: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXTREMA_EPSILON)]
        eps: f64,
    },
    /// Minimum distance between a curve and another curve or a point set.
    Mindist {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DISTANCE_EPSILON)]
        eps: f64,
    },
    /// Collision check between two curves; exits 3 when a collision is possible.
    Collide {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Plan a scenario and write trajectories, samples, constraint traces and a report.
    Plan(PlanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Hull,
    Extrema,
}

#[derive(clap::Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    elevate: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    solver_opts: Option<PathBuf>,
}

/// Second operand of `mindist`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Target {
    Curve(BernsteinPoly),
    Shape { points: ConvexPointSet },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn eval(poly: &Path, t: f64) -> Result<ExitCode> {
    let p: BernsteinPoly = read_json(poly)?;
    println!("{}", join(&p.evaluate(t)?));
    Ok(ExitCode::SUCCESS)
}

fn extrema(poly: &Path, eps: f64) -> Result<ExitCode> {
    let p: BernsteinPoly = read_json(poly)?;
    let q = ExtremaQuery::with_epsilon(eps);
    let (lo, hi) = (minimum(&p, &q)?, maximum(&p, &q)?);
    println!("{},{}", lo.value, hi.value);
    Ok(ExitCode::SUCCESS)
}

fn mindist(a: &Path, b: &Path, eps: f64) -> Result<ExitCode> {
    let a: BernsteinPoly = read_json(a)?;
    let q = DistanceQuery::with_epsilon(eps);
    let d = match read_json::<Target>(b)? {
        Target::Curve(b) => min_distance(&a, &b, &q)?,
        Target::Shape { points } => min_distance_to_shape(&a, &points, &q)?,
    };
    println!("{}", d.value);
    Ok(ExitCode::SUCCESS)
}

fn collide(a: &Path, b: &Path, max_iter: usize) -> Result<ExitCode> {
    let a: BernsteinPoly = read_json(a)?;
    let b: BernsteinPoly = read_json(b)?;
    match collision_check(&a, &b, max_iter)? {
        CollisionVerdict::NoCollision => {
            println!("no_collision");
            Ok(ExitCode::SUCCESS)
        }
        CollisionVerdict::CollisionPossible => {
            println!("collision_possible");
            Ok(ExitCode::from(EXIT_COLLISION))
        }
    }
}

fn enforcement(cfg: &ScenarioConfig, args: &PlanArgs) -> Enforcement {
    let mode = args.mode.unwrap_or(match cfg.enforcement {
        Enforcement::Hull { .. } => Mode::Hull,
        Enforcement::Extrema { .. } => Mode::Extrema,
    });
    match (mode, cfg.enforcement) {
        (Mode::Hull, Enforcement::Hull { elevate_to }) => Enforcement::Hull {
            elevate_to: args.elevate.unwrap_or(elevate_to),
        },
        (Mode::Hull, _) => Enforcement::Hull {
            elevate_to: args.elevate.unwrap_or(cfg.degree),
        },
        (Mode::Extrema, Enforcement::Extrema { epsilon }) => Enforcement::Extrema {
            epsilon: args.eps.unwrap_or(epsilon),
        },
        (Mode::Extrema, _) => Enforcement::Extrema {
            epsilon: args.eps.unwrap_or(DEFAULT_EXTREMA_EPSILON),
        },
    }
}

/// Input problems exit 2; anything the solver stage raises exits 4.
fn is_input_error(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::Config(_) | CoreError::Json(_) | CoreError::Io(_) | CoreError::DimensionMismatch { .. }
    )
}

fn run_plan(args: &PlanArgs) -> Result<ExitCode> {
    if args.samples < 2 {
        bail!("--samples must be at least 2");
    }
    let mut cfg = ScenarioConfig::load(&args.scenario).with_context(|| format!("loading {}", args.scenario.display()))?;
    cfg.enforcement = enforcement(&cfg, args);
    cfg.validate()?;
    let solver: SolverOptions = match &args.solver_opts {
        Some(path) => read_json(path)?,
        None => SolverOptions::default(),
    };
    let opts = PlanOptions {
        solver: SolverOptions { seed: args.seed, ..solver },
        seed: args.seed,
        ..PlanOptions::default()
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    match plan(&cfg, &opts) {
        Ok(outcome) => {
            output::write_all(&args.out, &outcome, args.samples)?;
            if outcome.solver_feasible() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("solver did not reach a feasible point; outputs hold the best iterate");
                Ok(ExitCode::from(EXIT_SOLVER))
            }
        }
        Err(e) if is_input_error(&e) => Err(e.into()),
        Err(e) => {
            output::write_failure(&args.out, &cfg, &e.to_string())?;
            eprintln!("planning failed: {e}");
            Ok(ExitCode::from(EXIT_SOLVER))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval { poly, t } => eval(poly, *t),
        Command::Extrema { poly, eps } => extrema(poly, *eps),
        Command::Mindist { a, b, eps } => mindist(a, b, *eps),
        Command::Collide { a, b, max_iter } => collide(a, b, *max_iter),
        Command::Plan(args) => run_plan(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
