mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use quake_limit::dynamic::{apriori_bounds_check, simulate_dynamic, DynamicConfig};
use quake_limit::energy::check_gradient;
use quake_limit::limit::{epsilon_sweep, InitialVelocity, SweepConfig};
use quake_limit::model::{check_r5, froude_number, unit_sphere_samples, validate_model, R5_DEFAULT_CEILING};
use quake_limit::quasistatic::{
    catching_up, check_uniqueness_conditions, simulate_quasistatic, verify_global_stability, verify_improved_stability, verify_web,
    CompetitorGrid, QuasistaticConfig,
};
use quake_limit::Trajectory64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::Loaded;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(name = "quake-limit", version, about = "Dynamic and quasistatic simulation of rate-independent systems with small inertia")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trajectory.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Dynamic)]
        mode: Mode,
        /// Inertia parameter (dynamic mode).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Largest time step.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run an ε ladder against a quasistatic reference.
    Sweep {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Cap of the dynamic step (each run uses min(step, ε/50)).
        #[arg(long)]
        step: Option<f64>,
        /// Quasistatic reference step (default 1e-4·T).
        #[arg(long)]
        quasi_step: Option<f64>,
        /// Treat the initial velocity `w` of the model file as `w/ε`.
        #[arg(long)]
        ill_prepared: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run structural and trajectory checks and write a JSON report.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Check::Validate, Check::Uniqueness, Check::R5, Check::Gradient])]
        check: Vec<Check>,
        /// Quasistatic step for the trajectory checks.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 100.0)]
        ceiling: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Froude number m·L/(T²·F) of characteristic scales.
    Froude {
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        length: f64,
        #[arg(long)]
        time: f64,
        #[arg(long)]
        force: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Dynamic,
    Quasistatic,
    CatchingUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    Validate,
    Uniqueness,
    R5,
    Gradient,
    Stability,
    Web,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QUAKE_LIMIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Parse(e.render().to_string().trim().to_string())),
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(cli.command, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn run(command: Command, args: &[String]) -> Result<(), CliError> {
    match command {
        Command::Simulate { model, mode, epsilon, step, out, tol } => simulate(&model, mode, epsilon, step, &out, tol, args),
        Command::Sweep { model, eps, step, quasi_step, ill_prepared, workers, out, tol } => {
            sweep(&model, eps, step, quasi_step, ill_prepared, workers, &out, tol, args)
        }
        Command::Verify { model, check, step, ceiling, out, tol } => verify(&model, &check, step, ceiling, &out, tol, args),
        Command::Froude { mass, length, time, force } => {
            let fr = froude_number(mass, length, time, force)?;
            println!("{}", json!({ "froude": fr, "quasistatic_regime": fr < 1e-2 }));
            Ok(())
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("--{name} must be positive, got {v}")))
    }
}

fn open(model: &std::path::Path, out: &std::path::Path) -> Result<(Loaded, OutputDir), CliError> {
    let loaded = config::load(model)?;
    let mut dir = OutputDir::create(out)?;
    dir.record_input(model, &loaded.bytes);
    Ok((loaded, dir))
}

fn trajectory_summary(traj: &Trajectory64) -> Value {
    let max_residual = traj.balance_residual.iter().map(|r| r.abs()).fold(0.0f64, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) });
    json!({
        "steps": traj.len().saturating_sub(1),
        "final_time": traj.times.last(),
        "final_state": traj.final_state(),
        "total_dissipation": traj.total_dissipation(),
        "max_balance_residual": max_residual,
    })
}

fn simulate(
    path: &std::path::Path,
    mode: Mode,
    epsilon: Option<f64>,
    step: Option<f64>,
    out: &std::path::Path,
    tol: Option<f64>,
    args: &[String],
) -> Result<(), CliError> {
    let (loaded, mut dir) = open(path, out)?;
    let model = &loaded.model;
    let step = positive("step", step.or(loaded.file.step).unwrap_or(1e-3 * model.horizon.max(1.0)))?;
    let (traj, mut summary) = match mode {
        Mode::Dynamic => {
            let eps = positive("epsilon", epsilon.or(loaded.file.epsilon).ok_or_else(|| CliError::Validation("dynamic mode needs --epsilon".into()))?)?;
            let mut cfg = DynamicConfig::new(eps, step, loaded.x0.clone(), loaded.x1.clone());
            if let Some(t) = tol {
                cfg.tol = positive("tol", t)?;
            }
            let traj = simulate_dynamic(model, &cfg)?;
            let bounds = apriori_bounds_check(&traj, model, eps, 1.0);
            let mut s = trajectory_summary(&traj);
            s["epsilon"] = json!(eps);
            s["apriori"] = serde_json::to_value(bounds).unwrap_or(Value::Null);
            (traj, s)
        }
        Mode::Quasistatic | Mode::CatchingUp => {
            let mut cfg = QuasistaticConfig::new(step, loaded.x0.clone());
            if let Some(t) = tol {
                cfg.tol = positive("tol", t)?;
            }
            let traj = match mode {
                Mode::Quasistatic => simulate_quasistatic(model, &cfg)?,
                _ => catching_up(model, &cfg)?,
            };
            (traj.clone(), trajectory_summary(&traj))
        }
    };
    summary["mode"] = json!(format!("{mode:?}").to_lowercase());
    summary["step"] = json!(step);
    dir.write("trajectory.csv", traj.to_csv().as_bytes())?;
    dir.write_json("model.json", &json!({ "model": model, "initial_position": loaded.x0, "initial_velocity": loaded.x1 }))?;
    dir.write_json("summary.json", &summary)?;
    dir.finish(args, json!({}))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    path: &std::path::Path,
    eps: Option<Vec<f64>>,
    step: Option<f64>,
    quasi_step: Option<f64>,
    ill_prepared: bool,
    workers: usize,
    out: &std::path::Path,
    tol: Option<f64>,
    args: &[String],
) -> Result<(), CliError> {
    let (loaded, mut dir) = open(path, out)?;
    let eps_list = eps.or_else(|| loaded.file.eps.clone()).unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    let h_max = positive("step", step.or(loaded.file.step).unwrap_or(f64::INFINITY).min(1e300))?;
    let initial_velocity =
        if ill_prepared { InitialVelocity::InverseEpsilon(loaded.x1.clone()) } else { InitialVelocity::Fixed(loaded.x1.clone()) };
    let mut cfg = SweepConfig::new(eps_list, h_max, loaded.x0.clone(), initial_velocity);
    cfg.quasi_step = quasi_step.map(|q| positive("quasi-step", q)).transpose()?;
    cfg.workers = workers;
    if let Some(t) = tol {
        cfg.tol = positive("tol", t)?;
    }
    let mut report = epsilon_sweep(&loaded.model, &cfg)?;
    // timings go to the manifest so that reports are reproducible byte for byte
    let timings: Vec<Value> = report.rows.iter().map(|r| json!({ "epsilon": r.epsilon, "wall_clock_ms": r.wall_clock_ms })).collect();
    report.rows.iter_mut().for_each(|r| r.wall_clock_ms = 0.0);
    dir.write("report.csv", report.to_csv().as_bytes())?;
    let json_text = report.to_json()? + "\n";
    dir.write("report.json", json_text.as_bytes())?;
    dir.write("plot.gp", report.gnuplot_script("report.csv").as_bytes())?;
    let failed = report.rows.iter().filter(|r| r.failed.is_some()).count();
    dir.finish(args, json!({ "timings": timings, "workers": workers, "failed_rows": failed }))?;
    Ok(())
}

fn verify(
    path: &std::path::Path,
    checks: &[Check],
    step: Option<f64>,
    ceiling: f64,
    out: &std::path::Path,
    tol: Option<f64>,
    args: &[String],
) -> Result<(), CliError> {
    let (loaded, mut dir) = open(path, out)?;
    let model = &loaded.model;
    let mut report = serde_json::Map::new();
    let needs_traj = checks.iter().any(|c| matches!(c, Check::Stability | Check::Web));
    let traj = if needs_traj {
        let step = positive("step", step.or(loaded.file.step).unwrap_or(1e-3 * model.horizon.max(1.0)))?;
        let mut cfg = QuasistaticConfig::new(step, loaded.x0.clone());
        if let Some(t) = tol {
            cfg.tol = positive("tol", t)?;
        }
        Some(simulate_quasistatic(model, &cfg)?)
    } else {
        None
    };
    for check in checks {
        let value = match check {
            Check::Validate => serde_json::to_value(validate_model(model)?),
            Check::Uniqueness => serde_json::to_value(check_uniqueness_conditions(model)?),
            Check::R5 => {
                let samples = unit_sphere_samples(model.shape_dim(), 64);
                let ceiling = if ceiling > 0.0 { ceiling } else { R5_DEFAULT_CEILING };
                serde_json::to_value(check_r5(model.cone(), &model.shape_map, &samples, ceiling)?)
            }
            Check::Gradient => Ok(gradient_report(&loaded)),
            Check::Stability => {
                let traj = traj.as_ref().expect("trajectory computed above");
                let grid = CompetitorGrid::default();
                let global = verify_global_stability(traj, model, &grid);
                let improved = match verify_improved_stability(traj, model, &grid) {
                    Ok(r) => serde_json::to_value(r).unwrap_or(Value::Null),
                    Err(e) => json!({ "error": e.to_string() }),
                };
                Ok(json!({ "global": global, "improved": improved }))
            }
            Check::Web => {
                let traj = traj.as_ref().expect("trajectory computed above");
                let residuals = verify_web(traj, model);
                let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                Ok(json!({ "max_abs_residual": max, "final_residual": residuals.last() }))
            }
        };
        let key = format!("{check:?}").to_lowercase();
        report.insert(key, value.map_err(|e| CliError::Validation(format!("serializing report: {e}")))?);
    }
    dir.write_json("verify.json", &Value::Object(report))?;
    dir.finish(args, json!({}))?;
    Ok(())
}

/// Relative finite-difference error of `DₓE` and `∂ₜE` at seeded sample points.
fn gradient_report(loaded: &Loaded) -> Value {
    let model = &loaded.model;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..16 {
        let t = rng.gen_range(0.0..=model.horizon.max(0.0));
        let x: Vec<f64> = loaded.x0.iter().map(|c| c + rng.gen_range(-1.0..1.0)).collect();
        worst = worst.max(check_gradient(&model.energy, &model.shape_map, t, &x, 1e-6));
    }
    json!({ "samples": 16, "max_relative_error": worst, "passed": worst < 1e-5 })
}
