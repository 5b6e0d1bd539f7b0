//! Command-line entry point.
//!
//! Three subcommands: `simulate-1d`, `simulate-flock`, and `sweep`. Each
//! accepts a JSON config file, inline flags, or both; flags override file
//! values. Exit codes: 0 on success, 1 on validation failures (bad arguments,
//! unreadable or invalid config), 2 on runtime failures (simulation or I/O).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{
    ConfigError, PredatorNdConfig, RunConfig, Simulate1dConfig, SimulateFlockConfig,
    SweepFileConfig, SweepFlockConfig, SweepModelConfig, SweepOneDConfig,
};
use crate::consensus1d::{simulate_1d, ForceLaw, Predator1D, DEFAULT_EPS_SS, DEFAULT_T_MAX};
use crate::flock::simulate_flock;
use crate::output::{
    write_1d_summary, write_flock_series, write_flock_snapshot, write_flock_summary,
    write_sweep_csv, write_sweep_json, write_trajectory_1d,
};
use crate::sweep::{run_sweep, sample_initial_1d, sample_initial_flock, Objective};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "SWARM_ESCAPE_OUT_DIR";

#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "swarm-escape",
    version,
    about = "Deterministic consensus-swarm simulator and interaction-range optimizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate scalar consensus dynamics, optionally under a predator
    #[command(name = "simulate-1d")]
    Simulate1d(Simulate1dArgs),
    /// Simulate the constant-speed flock under a moving predator
    #[command(name = "simulate-flock")]
    SimulateFlock(SimulateFlockArgs),
    /// Sweep the interaction range over seeded trials and select the optimum
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct Simulate1dArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of agents
    #[arg(long = "n", visible_alias = "agents")]
    agents: Option<usize>,
    /// Interaction range
    #[arg(long)]
    rho: Option<f64>,
    /// Seed for the initial state sample
    #[arg(long)]
    seed: Option<u64>,
    /// Predator position (enables the predator; other predator fields default
    /// to rho-p 0.2, strength 2, force-law linear)
    #[arg(long)]
    x_p: Option<f64>,
    /// Predator influence range
    #[arg(long)]
    rho_p: Option<f64>,
    /// Repulsion strength
    #[arg(long)]
    strength: Option<f64>,
    /// Repulsive force law: sign | linear
    #[arg(long)]
    force_law: Option<String>,
    /// Steady-state tolerance on the sup-norm step change
    #[arg(long)]
    eps_ss: Option<f64>,
    /// Step cap
    #[arg(long)]
    t_max: Option<usize>,
    /// Output directory (default: config value, then $SWARM_ESCAPE_OUT_DIR, then ./out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateFlockArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of agents
    #[arg(long = "n", visible_alias = "agents")]
    agents: Option<usize>,
    /// Spatial dimension (2 or 3; the sampled motion is planar either way)
    #[arg(long)]
    dim: Option<usize>,
    /// Interaction range in meters
    #[arg(long)]
    rho: Option<f64>,
    /// Seed for the initial state sample
    #[arg(long)]
    seed: Option<u64>,
    /// Side length of the initial-position square in meters
    #[arg(long)]
    box_side: Option<f64>,
    /// Agent speed in m/s
    #[arg(long)]
    v0: Option<f64>,
    /// Time increment in seconds
    #[arg(long)]
    dt: Option<f64>,
    /// Agent mass in kg
    #[arg(long)]
    mass: Option<f64>,
    /// Rescale speeds back to v0 after each step (true/false)
    #[arg(long)]
    renormalize_speed: Option<bool>,
    /// Total simulated time in seconds
    #[arg(long)]
    horizon: Option<f64>,
    /// Steps between retained state snapshots
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Predator start position as x,y,z
    #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    predator_position: Option<Vec<f64>>,
    /// Predator velocity as x,y,z
    #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    predator_velocity: Option<Vec<f64>>,
    /// Predator influence range in meters
    #[arg(long)]
    rho_p: Option<f64>,
    /// Repulsion strength
    #[arg(long)]
    strength: Option<f64>,
    /// Output directory (default: config value, then $SWARM_ESCAPE_OUT_DIR, then ./out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model to sweep: one-d | flock (required without a config file)
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated ascending interaction ranges
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,
    /// Trials per grid point
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial k derives its own seed from it
    #[arg(long)]
    base_seed: Option<u64>,
    /// Objective: steady-state-escape | min-avg-distance | min-min-distance
    #[arg(long)]
    objective: Option<String>,
    /// Number of agents
    #[arg(long = "n", visible_alias = "agents")]
    agents: Option<usize>,
    /// Predator position (one-d model)
    #[arg(long)]
    x_p: Option<f64>,
    /// Predator influence range
    #[arg(long)]
    rho_p: Option<f64>,
    /// Repulsion strength
    #[arg(long)]
    strength: Option<f64>,
    /// Repulsive force law for the one-d model: sign | linear
    #[arg(long)]
    force_law: Option<String>,
    /// Steady-state tolerance (one-d model)
    #[arg(long)]
    eps_ss: Option<f64>,
    /// Step cap (one-d model)
    #[arg(long)]
    t_max: Option<usize>,
    /// Spatial dimension (flock model)
    #[arg(long)]
    dim: Option<usize>,
    /// Initial-position box side in meters (flock model)
    #[arg(long)]
    box_side: Option<f64>,
    /// Agent speed in m/s (flock model)
    #[arg(long)]
    v0: Option<f64>,
    /// Time increment in seconds (flock model)
    #[arg(long)]
    dt: Option<f64>,
    /// Agent mass in kg (flock model)
    #[arg(long)]
    mass: Option<f64>,
    /// Rescale speeds to v0 each step (flock model)
    #[arg(long)]
    renormalize_speed: Option<bool>,
    /// Simulated horizon in seconds (flock model)
    #[arg(long)]
    horizon: Option<f64>,
    /// Predator start position as x,y,z (flock model)
    #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    predator_position: Option<Vec<f64>>,
    /// Predator velocity as x,y,z (flock model)
    #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    predator_velocity: Option<Vec<f64>>,
    /// Output directory (default: config value, then $SWARM_ESCAPE_OUT_DIR, then ./out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate1d(args) => {
            build_1d_config(&args).and_then(|c| execute(c, args.out_dir.clone()))
        }
        Command::SimulateFlock(args) => {
            build_flock_config(&args).and_then(|c| execute(c, args.out_dir.clone()))
        }
        Command::Sweep(args) => {
            build_sweep_config(&args).and_then(|c| execute(c, args.out_dir.clone()))
        }
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn set_if<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn parse_force_law(text: &str) -> Result<ForceLaw, CliError> {
    match text {
        "sign" => Ok(ForceLaw::Sign),
        "linear" => Ok(ForceLaw::Linear),
        other => Err(validation(format!(
            "unknown force law '{other}'; expected sign or linear"
        ))),
    }
}

fn parse_objective(text: &str) -> Result<Objective, CliError> {
    match text {
        "steady-state-escape" => Ok(Objective::SteadyStateEscape),
        "min-avg-distance" => Ok(Objective::MinAvgDistance),
        "min-min-distance" => Ok(Objective::MinMinDistance),
        other => Err(validation(format!(
            "unknown objective '{other}'; expected steady-state-escape, min-avg-distance, or min-min-distance"
        ))),
    }
}

fn triple(values: &[f64]) -> [f64; 3] {
    [values[0], values[1], values[2]]
}

/// Default predator for inline 1D flags, matching the bundled experiment.
fn default_predator_1d(x_p: f64) -> Predator1D {
    Predator1D {
        x_p,
        rho_p: 0.2,
        s: 2.0,
        force_law: ForceLaw::Linear,
    }
}

fn build_1d_config(args: &Simulate1dArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => match RunConfig::from_file(path)? {
            RunConfig::Simulate1d(c) => c,
            _ => {
                return Err(validation(format!(
                    "config file {} is not a simulate-1d config",
                    path.display()
                )))
            }
        },
        None => Simulate1dConfig {
            agents: args
                .agents
                .ok_or_else(|| validation("--n is required without a config file"))?,
            rho: args
                .rho
                .ok_or_else(|| validation("--rho is required without a config file"))?,
            seed: 0,
            predator: None,
            eps_ss: DEFAULT_EPS_SS,
            t_max: DEFAULT_T_MAX,
            out_dir: None,
        },
    };
    set_if(&mut cfg.agents, args.agents);
    set_if(&mut cfg.rho, args.rho);
    set_if(&mut cfg.seed, args.seed);
    set_if(&mut cfg.eps_ss, args.eps_ss);
    set_if(&mut cfg.t_max, args.t_max);
    if args.x_p.is_some()
        || args.rho_p.is_some()
        || args.strength.is_some()
        || args.force_law.is_some()
    {
        let p = cfg
            .predator
            .get_or_insert_with(|| default_predator_1d(0.6));
        set_if(&mut p.x_p, args.x_p);
        set_if(&mut p.rho_p, args.rho_p);
        set_if(&mut p.s, args.strength);
        if let Some(law) = &args.force_law {
            p.force_law = parse_force_law(law)?;
        }
    }
    Ok(RunConfig::Simulate1d(cfg))
}

fn build_flock_config(args: &SimulateFlockArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => match RunConfig::from_file(path)? {
            RunConfig::SimulateFlock(c) => c,
            _ => {
                return Err(validation(format!(
                    "config file {} is not a simulate-flock config",
                    path.display()
                )))
            }
        },
        None => SimulateFlockConfig::with_required(
            args.agents
                .ok_or_else(|| validation("--n is required without a config file"))?,
            args.rho
                .ok_or_else(|| validation("--rho is required without a config file"))?,
        ),
    };
    set_if(&mut cfg.agents, args.agents);
    set_if(&mut cfg.dim, args.dim);
    set_if(&mut cfg.rho, args.rho);
    set_if(&mut cfg.seed, args.seed);
    set_if(&mut cfg.box_side, args.box_side);
    set_if(&mut cfg.v0, args.v0);
    set_if(&mut cfg.dt, args.dt);
    set_if(&mut cfg.mass, args.mass);
    set_if(&mut cfg.renormalize_speed, args.renormalize_speed);
    set_if(&mut cfg.horizon, args.horizon);
    set_if(&mut cfg.snapshot_stride, args.snapshot_stride);
    if args.predator_position.is_some()
        || args.predator_velocity.is_some()
        || args.rho_p.is_some()
        || args.strength.is_some()
    {
        let p = cfg.predator.get_or_insert_with(PredatorNdConfig::default);
        if let Some(pos) = &args.predator_position {
            p.position = triple(pos);
        }
        if let Some(vel) = &args.predator_velocity {
            p.velocity = triple(vel);
        }
        set_if(&mut p.rho_p, args.rho_p);
        set_if(&mut p.s, args.strength);
    }
    Ok(RunConfig::SimulateFlock(cfg))
}

fn build_sweep_config(args: &SweepArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => match RunConfig::from_file(path)? {
            RunConfig::Sweep(c) => c,
            _ => {
                return Err(validation(format!(
                    "config file {} is not a sweep config",
                    path.display()
                )))
            }
        },
        None => {
            let model = match args.model.as_deref() {
                Some("one-d") => SweepModelConfig::OneD(SweepOneDConfig {
                    agents: args
                        .agents
                        .ok_or_else(|| validation("--n is required without a config file"))?,
                    predator: default_predator_1d(args.x_p.ok_or_else(|| {
                        validation("--x-p is required for a one-d sweep without a config file")
                    })?),
                    eps_ss: DEFAULT_EPS_SS,
                    t_max: DEFAULT_T_MAX,
                }),
                Some("flock") => SweepModelConfig::Flock(SweepFlockConfig::with_required(
                    args.agents
                        .ok_or_else(|| validation("--n is required without a config file"))?,
                )),
                Some(other) => {
                    return Err(validation(format!(
                        "unknown model '{other}'; expected one-d or flock"
                    )))
                }
                None => {
                    return Err(validation(
                        "--model (one-d | flock) is required without a config file",
                    ))
                }
            };
            SweepFileConfig {
                model,
                rho_grid: None,
                trials: 40,
                base_seed: 0,
                objective: None,
                out_dir: None,
            }
        }
    };
    if let Some(model) = &args.model {
        let matches = matches!(
            (&cfg.model, model.as_str()),
            (SweepModelConfig::OneD(_), "one-d") | (SweepModelConfig::Flock(_), "flock")
        );
        if !matches {
            return Err(validation(format!(
                "--model {model} does not match the config file's model"
            )));
        }
    }
    set_if(&mut cfg.trials, args.trials);
    set_if(&mut cfg.base_seed, args.base_seed);
    if let Some(grid) = &args.rho_grid {
        cfg.rho_grid = Some(grid.clone());
    }
    if let Some(objective) = &args.objective {
        cfg.objective = Some(parse_objective(objective)?);
    }
    match &mut cfg.model {
        SweepModelConfig::OneD(model) => {
            set_if(&mut model.agents, args.agents);
            set_if(&mut model.eps_ss, args.eps_ss);
            set_if(&mut model.t_max, args.t_max);
            set_if(&mut model.predator.x_p, args.x_p);
            set_if(&mut model.predator.rho_p, args.rho_p);
            set_if(&mut model.predator.s, args.strength);
            if let Some(law) = &args.force_law {
                model.predator.force_law = parse_force_law(law)?;
            }
        }
        SweepModelConfig::Flock(model) => {
            set_if(&mut model.agents, args.agents);
            set_if(&mut model.dim, args.dim);
            set_if(&mut model.box_side, args.box_side);
            set_if(&mut model.v0, args.v0);
            set_if(&mut model.dt, args.dt);
            set_if(&mut model.mass, args.mass);
            set_if(&mut model.renormalize_speed, args.renormalize_speed);
            set_if(&mut model.horizon, args.horizon);
            if args.predator_position.is_some()
                || args.predator_velocity.is_some()
                || args.rho_p.is_some()
                || args.strength.is_some()
            {
                let p = model.predator.get_or_insert_with(PredatorNdConfig::default);
                if let Some(pos) = &args.predator_position {
                    p.position = triple(pos);
                }
                if let Some(vel) = &args.predator_velocity {
                    p.velocity = triple(vel);
                }
                set_if(&mut p.rho_p, args.rho_p);
                set_if(&mut p.s, args.strength);
            }
        }
    }
    Ok(RunConfig::Sweep(cfg))
}

fn resolve_out_dir(flag: Option<PathBuf>, config_dir: Option<&std::path::Path>) -> PathBuf {
    flag.or_else(|| config_dir.map(Into::into))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(mut config: RunConfig, out_dir_flag: Option<PathBuf>) -> Result<(), CliError> {
    config.resolve();
    config.validate()?;
    let dir = resolve_out_dir(out_dir_flag, config.out_dir());
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;

    match &config {
        RunConfig::Simulate1d(cfg) => {
            let x0 = sample_initial_1d(cfg.agents, cfg.seed);
            let (trajectory, report) = simulate_1d(&x0, &cfg.to_params()).map_err(runtime)?;
            let csv = dir.join("trajectory.csv");
            let json = dir.join("summary.json");
            write_trajectory_1d(&csv, &config, &trajectory).map_err(runtime)?;
            write_1d_summary(&json, &config, &report).map_err(runtime)?;
            println!(
                "simulate-1d: converged={} t_stop={} m_star={}{}",
                report.converged,
                report.t_stop,
                report.m_star,
                report
                    .d_ss
                    .map_or(String::new(), |d| format!(" d_ss={d}")),
            );
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
        }
        RunConfig::SimulateFlock(cfg) => {
            let initial = sample_initial_flock(cfg.agents, cfg.seed, cfg.box_side, cfg.v0, cfg.dim)
                .map_err(runtime)?;
            let (snapshots, series) = simulate_flock(
                initial,
                cfg.predator_model(),
                &cfg.to_params(),
                cfg.horizon,
                cfg.snapshot_stride,
            )
            .map_err(runtime)?;
            let csv = dir.join("series.csv");
            write_flock_series(&csv, &config, &series, cfg.dt).map_err(runtime)?;
            println!("wrote {}", csv.display());
            for snapshot in &snapshots {
                let path = dir.join(format!("snap_{}.csv", snapshot.step));
                write_flock_snapshot(&path, &config, snapshot).map_err(runtime)?;
                println!("wrote {}", path.display());
            }
            let json = dir.join("summary.json");
            write_flock_summary(&json, &config, &series).map_err(runtime)?;
            println!("wrote {}", json.display());
            if let Some(capture) = series.capture {
                println!(
                    "simulate-flock: agent {} captured at step {}",
                    capture.agent, capture.step
                );
            }
        }
        RunConfig::Sweep(cfg) => {
            let result = run_sweep(&cfg.to_sweep_config()).map_err(runtime)?;
            let csv = dir.join("sweep.csv");
            let json = dir.join("sweep.json");
            write_sweep_csv(&csv, &config, &result).map_err(runtime)?;
            write_sweep_json(&json, &config, &result).map_err(runtime)?;
            println!("sweep: rho_star={}", result.rho_star);
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
        }
    }
    Ok(())
}
