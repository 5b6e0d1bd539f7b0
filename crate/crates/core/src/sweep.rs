//! Seeded Monte-Carlo sweeps over the interaction range.
//!
//! A sweep samples `trials` initial conditions, runs each of them at every
//! grid value of the interaction range (the same trial reuses the identical
//! initial condition across the whole grid, so comparisons isolate the range)
//! and aggregates a per-range escape objective. Cells are pure functions of
//! the configuration, so trials run in parallel and the aggregate is
//! identical regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus1d::{simulate_1d, Predator1D, Sim1DParams};
use crate::flock::{simulate_flock, FlockParams, FlockState, PredatorND};
use nalgebra::Vector3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("{0}")]
    InvalidConfig(String),
    #[error("all {trials} trials failed at rho = {rho}; first failure: {first_failure}")]
    AllTrialsFailed {
        rho: f64,
        trials: usize,
        first_failure: String,
    },
    #[error("cannot select an optimum from zero records")]
    EmptyRecords,
}

/// Escape objective maximised over the range grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Closest agent-predator distance of the terminal state (scalar model).
    SteadyStateEscape,
    /// Smallest over time of the mean agent-predator distance (flock model).
    MinAvgDistance,
    /// Smallest over time of the minimum agent-predator distance (flock model).
    MinMinDistance,
}

/// Model-specific sweep inputs; the interaction range itself comes from the
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepModel {
    OneD {
        agents: usize,
        predator: Predator1D,
        eps_ss: f64,
        t_max: usize,
    },
    Flock {
        agents: usize,
        dim: usize,
        box_side: f64,
        v0: f64,
        dt: f64,
        mass: f64,
        renormalize_speed: bool,
        horizon: f64,
        predator: PredatorND,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: SweepModel,
    pub rho_grid: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub objective: Objective,
}

/// Result of one trial at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TrialOutcome {
    Ok {
        objective: f64,
        /// Terminal component count (scalar model only).
        clusters: Option<usize>,
    },
    Failed {
        error: String,
    },
}

impl TrialOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            TrialOutcome::Ok { objective, .. } => Some(*objective),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

/// Aggregated statistics of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoRecord {
    pub rho: f64,
    pub mean_objective: f64,
    /// Sample standard deviation over successful trials (0 when fewer than 2).
    pub std_objective: f64,
    pub mean_clusters: Option<f64>,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<RhoRecord>,
    pub rho_star: f64,
    pub trial_seeds: Vec<u64>,
}

/// Default scalar-model grid: 0 to 1 in steps of 0.05.
pub fn default_grid_1d() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// Default flock-model grid: 0 to 100 m in steps of 5 m.
pub fn default_grid_flock() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 5.0).collect()
}

/// Seed of trial `trial` under `base_seed`: the trial index is spread by a
/// fixed golden-ratio multiplier and folded into the base seed, so streams
/// are decorrelated yet reproducible on any platform. Trial 0 uses the base
/// seed itself.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    base_seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `n` independent draws from the uniform distribution on [0, 1), produced
/// by a ChaCha8 stream seeded with `seed`.
pub fn sample_initial_1d(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

/// Samples a planar flock: positions uniform over the `box_side` square
/// (third coordinate zero), headings uniform over [0, 2pi), every speed `v0`.
/// Per agent the draw order is x, y, angle; the stream is ChaCha8.
pub fn sample_initial_flock(
    n: usize,
    seed: u64,
    box_side: f64,
    v0: f64,
    dim: usize,
) -> Result<FlockState, SweepError> {
    if !(2..=3).contains(&dim) {
        return Err(SweepError::InvalidConfig(format!(
            "flock sampling is planar; dim must be 2 or 3, got {dim}"
        )));
    }
    if !(box_side > 0.0) || !box_side.is_finite() {
        return Err(SweepError::InvalidConfig(format!(
            "box_side must be finite and > 0, got {box_side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random::<f64>() * box_side;
        let y = rng.random::<f64>() * box_side;
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        positions.push(Vector3::new(x, y, 0.0));
        velocities.push(Vector3::new(v0 * theta.cos(), v0 * theta.sin(), 0.0));
    }
    Ok(FlockState {
        dim,
        positions,
        velocities,
        time: 0.0,
    })
}

fn validate(config: &SweepConfig) -> Result<(), SweepError> {
    if config.rho_grid.is_empty() {
        return Err(SweepError::InvalidConfig("rho_grid must be non-empty".into()));
    }
    if !config
        .rho_grid
        .iter()
        .all(|r| r.is_finite() && *r >= 0.0)
    {
        return Err(SweepError::InvalidConfig(
            "rho_grid values must be finite and >= 0".into(),
        ));
    }
    if !config.rho_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(SweepError::InvalidConfig(
            "rho_grid must be strictly ascending".into(),
        ));
    }
    if config.trials < 1 {
        return Err(SweepError::InvalidConfig("trials must be >= 1".into()));
    }
    match (&config.model, config.objective) {
        (SweepModel::OneD { .. }, Objective::SteadyStateEscape) => Ok(()),
        (SweepModel::OneD { .. }, other) => Err(SweepError::InvalidConfig(format!(
            "objective {other:?} requires the flock model"
        ))),
        (SweepModel::Flock { .. }, Objective::SteadyStateEscape) => {
            Err(SweepError::InvalidConfig(
                "objective SteadyStateEscape requires the one-d model".into(),
            ))
        }
        (SweepModel::Flock { .. }, _) => Ok(()),
    }
}

fn run_cell_1d(
    x0: &[f64],
    rho: f64,
    agents: usize,
    predator: &Predator1D,
    eps_ss: f64,
    t_max: usize,
) -> TrialOutcome {
    debug_assert_eq!(x0.len(), agents);
    let params = Sim1DParams {
        rho,
        predator: Some(*predator),
        eps_ss,
        t_max,
    };
    match simulate_1d(x0, &params) {
        Ok((_, report)) => TrialOutcome::Ok {
            objective: report.d_ss.expect("predator configured"),
            clusters: Some(report.m_star),
        },
        Err(e) => TrialOutcome::Failed {
            error: e.to_string(),
        },
    }
}

fn run_cell_flock(
    initial: &FlockState,
    rho: f64,
    model: &SweepModel,
    objective: Objective,
) -> TrialOutcome {
    let SweepModel::Flock {
        agents,
        v0,
        dt,
        mass,
        renormalize_speed,
        horizon,
        predator,
        ..
    } = model
    else {
        unreachable!("flock cell with non-flock model")
    };
    let params = FlockParams {
        rho,
        v0: *v0,
        dt: *dt,
        masses: vec![*mass; *agents],
        renormalize_speed: *renormalize_speed,
    };
    // Snapshots are not needed here; a huge stride keeps only step zero.
    match simulate_flock(initial.clone(), predator.clone(), &params, *horizon, usize::MAX) {
        Ok((_, series)) => {
            if let Some(capture) = series.capture {
                return TrialOutcome::Failed {
                    error: format!(
                        "agent {} captured at step {}",
                        capture.agent, capture.step
                    ),
                };
            }
            let source = match objective {
                Objective::MinAvgDistance => &series.mean,
                Objective::MinMinDistance => &series.min,
                Objective::SteadyStateEscape => unreachable!("validated objective"),
            };
            TrialOutcome::Ok {
                objective: source.iter().copied().fold(f64::INFINITY, f64::min),
                clusters: None,
            }
        }
        Err(e) => TrialOutcome::Failed {
            error: e.to_string(),
        },
    }
}

fn aggregate(rho: f64, outcomes: Vec<TrialOutcome>) -> Result<RhoRecord, SweepError> {
    let values: Vec<f64> = outcomes.iter().filter_map(TrialOutcome::objective).collect();
    let trials_ok = values.len();
    let trials_failed = outcomes.len() - trials_ok;
    if trials_ok == 0 {
        let first_failure = outcomes
            .iter()
            .find_map(|o| match o {
                TrialOutcome::Failed { error } => Some(error.clone()),
                TrialOutcome::Ok { .. } => None,
            })
            .unwrap_or_default();
        return Err(SweepError::AllTrialsFailed {
            rho,
            trials: outcomes.len(),
            first_failure,
        });
    }
    let mean = values.iter().sum::<f64>() / trials_ok as f64;
    let std = if trials_ok > 1 {
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (ss / (trials_ok - 1) as f64).sqrt()
    } else {
        0.0
    };
    let clusters: Vec<usize> = outcomes
        .iter()
        .filter_map(|o| match o {
            TrialOutcome::Ok {
                clusters: Some(c), ..
            } => Some(*c),
            _ => None,
        })
        .collect();
    let mean_clusters = if clusters.is_empty() {
        None
    } else {
        Some(clusters.iter().sum::<usize>() as f64 / clusters.len() as f64)
    };
    Ok(RhoRecord {
        rho,
        mean_objective: mean,
        std_objective: std,
        mean_clusters,
        trials_ok,
        trials_failed,
        outcomes,
    })
}

/// Runs the full sweep. Failed trials are recorded per grid point and
/// excluded from the statistics; a grid point with no successful trial
/// invalidates the whole sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    validate(config)?;
    let trials = config.trials;
    let trial_seeds: Vec<u64> = (0..trials as u64)
        .map(|k| trial_seed(config.base_seed, k))
        .collect();
    let grid = &config.rho_grid;

    // One initial condition per trial, shared across the entire grid.
    let outcomes: Vec<TrialOutcome> = match &config.model {
        SweepModel::OneD {
            agents,
            predator,
            eps_ss,
            t_max,
        } => {
            if *agents < 1 {
                return Err(SweepError::InvalidConfig("agents must be >= 1".into()));
            }
            let initials: Vec<Vec<f64>> = trial_seeds
                .iter()
                .map(|&s| sample_initial_1d(*agents, s))
                .collect();
            (0..grid.len() * trials)
                .into_par_iter()
                .map(|cell| {
                    let (gi, ti) = (cell / trials, cell % trials);
                    run_cell_1d(&initials[ti], grid[gi], *agents, predator, *eps_ss, *t_max)
                })
                .collect()
        }
        SweepModel::Flock {
            agents,
            dim,
            box_side,
            v0,
            ..
        } => {
            if *agents < 1 {
                return Err(SweepError::InvalidConfig("agents must be >= 1".into()));
            }
            let initials = trial_seeds
                .iter()
                .map(|&s| sample_initial_flock(*agents, s, *box_side, *v0, *dim))
                .collect::<Result<Vec<_>, _>>()?;
            (0..grid.len() * trials)
                .into_par_iter()
                .map(|cell| {
                    let (gi, ti) = (cell / trials, cell % trials);
                    run_cell_flock(&initials[ti], grid[gi], &config.model, config.objective)
                })
                .collect()
        }
    };

    let mut records = Vec::with_capacity(grid.len());
    for (gi, chunk) in outcomes.chunks(trials).enumerate() {
        records.push(aggregate(grid[gi], chunk.to_vec())?);
    }
    let rho_star = select_optimum(
        &records
            .iter()
            .map(|r| (r.rho, r.mean_objective))
            .collect::<Vec<_>>(),
    )?;
    Ok(SweepResult {
        records,
        rho_star,
        trial_seeds,
    })
}

/// The range with the largest mean objective; ties go to the smallest range.
pub fn select_optimum(records: &[(f64, f64)]) -> Result<f64, SweepError> {
    let mut best: Option<(f64, f64)> = None;
    for &(rho, mean) in records {
        match best {
            None => best = Some((rho, mean)),
            Some((_, best_mean)) if mean > best_mean => best = Some((rho, mean)),
            Some((best_rho, best_mean)) if mean == best_mean && rho < best_rho => {
                best = Some((rho, mean))
            }
            _ => {}
        }
    }
    best.map(|(rho, _)| rho).ok_or(SweepError::EmptyRecords)
}
