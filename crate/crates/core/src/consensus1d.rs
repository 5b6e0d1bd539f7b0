//! Scalar consensus dynamics with an optional stationary predator.
//!
//! Each step rebuilds the interaction graph from the current state, replaces
//! every agent's value with the mean over its neighbors (self included), and
//! adds the predator's repulsive displacement to agents strictly inside the
//! predator's influence range. Runs terminate when the sup-norm step change
//! drops below `eps_ss` or after `t_max` steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_graph_1d, GraphError, InteractionGraph};

/// Default steady-state tolerance for the sup-norm step change.
pub const DEFAULT_EPS_SS: f64 = 1e-9;
/// Default step cap.
pub const DEFAULT_T_MAX: usize = 10_000;
/// Per-entry tolerance used by [`steady_state_set_member`].
pub const MEMBER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("escape guarantee requires rho_p ({rho_p}) >= rho ({rho}) >= 0")]
    PredatorRangeTooSmall { rho: f64, rho_p: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Repulsive force law selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceLaw {
    /// Constant-magnitude push away from the predator.
    Sign,
    /// Push to a fixed offset `s * rho_p` on the agent's side of the predator.
    Linear,
}

/// Stationary predator acting on scalar states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predator1D {
    pub x_p: f64,
    pub rho_p: f64,
    pub s: f64,
    pub force_law: ForceLaw,
}

/// The three-valued sign with `sign(0) = 0`. `f64::signum` maps zero to one,
/// which would push an agent sitting exactly on the predator.
fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Predator1D {
    /// Additive displacement felt by an agent at `x`. Active strictly inside
    /// the influence range; at `|x - x_p| == rho_p` the force is zero.
    pub fn repulsion(&self, x: f64) -> f64 {
        let offset = x - self.x_p;
        if offset.abs() >= self.rho_p {
            return 0.0;
        }
        match self.force_law {
            ForceLaw::Sign => self.s * sign(offset),
            ForceLaw::Linear => -offset + self.s * self.rho_p * sign(offset),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if !(self.rho_p >= 0.0) || !self.rho_p.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "predator influence range rho_p must be finite and >= 0, got {}",
                self.rho_p
            )));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "repulsion strength s must be finite and > 0, got {}",
                self.s
            )));
        }
        if !self.x_p.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "predator position x_p must be finite, got {}",
                self.x_p
            )));
        }
        Ok(())
    }
}

/// Parameters of one scalar run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1DParams {
    pub rho: f64,
    pub predator: Option<Predator1D>,
    pub eps_ss: f64,
    pub t_max: usize,
}

impl Sim1DParams {
    pub fn new(rho: f64) -> Self {
        Self {
            rho,
            predator: None,
            eps_ss: DEFAULT_EPS_SS,
            t_max: DEFAULT_T_MAX,
        }
    }

    pub fn with_predator(mut self, predator: Predator1D) -> Self {
        self.predator = Some(predator);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(SimError::InvalidInput(format!(
                "interaction range rho must be finite and >= 0, got {}",
                self.rho
            )));
        }
        if !(self.eps_ss > 0.0) {
            return Err(SimError::InvalidInput(format!(
                "steady-state tolerance eps_ss must be > 0, got {}",
                self.eps_ss
            )));
        }
        if self.t_max < 1 {
            return Err(SimError::InvalidInput("t_max must be >= 1".into()));
        }
        if let Some(p) = &self.predator {
            p.validate()?;
        }
        Ok(())
    }
}

/// Per-step record of one run: the visited states plus the component count
/// and (when a predator is present) the closest agent-predator distance of
/// each recorded state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory1D {
    pub states: Vec<Vec<f64>>,
    pub component_counts: Vec<usize>,
    pub escape_distances: Option<Vec<f64>>,
}

/// Summary of the terminal state of a run.
///
/// `alphas` are the per-component means of `x_ss`, sorted ascending, with
/// `component_sizes` aligned to them. `d_ss` is absent on predator-free runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateReport {
    pub x_ss: Vec<f64>,
    pub m_star: usize,
    pub alphas: Vec<f64>,
    pub component_sizes: Vec<usize>,
    pub d_ss: Option<f64>,
    pub converged: bool,
    pub t_stop: usize,
}

/// One synchronous update: neighbor averaging over the range-`rho` graph of
/// `x`, plus the predator displacement when configured.
///
/// Panics if `params` are invalid or `x` is empty; [`simulate_1d`] reports
/// those as errors instead.
pub fn step_1d(x: &[f64], params: &Sim1DParams) -> Vec<f64> {
    params.validate().expect("invalid simulation parameters");
    assert!(!x.is_empty(), "state must contain at least one agent");
    let graph = build_graph_1d(x, params.rho).expect("validated range");
    step_with_graph(x, &graph, params.predator.as_ref())
}

fn step_with_graph(x: &[f64], graph: &InteractionGraph, predator: Option<&Predator1D>) -> Vec<f64> {
    let mut next = graph.neighbor_average(x);
    if let Some(p) = predator {
        for (value, &old) in next.iter_mut().zip(x) {
            *value += p.repulsion(old);
        }
    }
    next
}

fn min_predator_distance(x: &[f64], x_p: f64) -> f64 {
    x.iter()
        .map(|v| (v - x_p).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Iterates [`step_1d`] from `x0` until the sup-norm step change drops below
/// `params.eps_ss` (converged) or `params.t_max` steps have run. Every
/// visited state is recorded together with its component count and, when a
/// predator is configured, its escape distance.
pub fn simulate_1d(
    x0: &[f64],
    params: &Sim1DParams,
) -> Result<(Trajectory1D, SteadyStateReport), SimError> {
    params.validate()?;
    if x0.is_empty() {
        return Err(SimError::InvalidInput(
            "initial state must contain at least one agent".into(),
        ));
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(SimError::InvalidInput(
            "initial state must be finite".into(),
        ));
    }

    let predator = params.predator.as_ref();
    let mut states = Vec::new();
    let mut component_counts = Vec::new();
    let mut escape_distances = predator.map(|_| Vec::new());

    let mut record = |x: &[f64], graph: &InteractionGraph| {
        component_counts.push(graph.components().count);
        if let (Some(d), Some(p)) = (escape_distances.as_mut(), predator) {
            d.push(min_predator_distance(x, p.x_p));
        }
        states.push(x.to_vec());
    };

    let mut x = x0.to_vec();
    let mut graph = build_graph_1d(&x, params.rho)?;
    record(&x, &graph);

    let mut converged = false;
    for step in 1..=params.t_max {
        let next = step_with_graph(&x, &graph, predator);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFiniteState { step });
        }
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        graph = build_graph_1d(&next, params.rho)?;
        record(&next, &graph);
        x = next;
        if change < params.eps_ss {
            converged = true;
            break;
        }
    }

    let t_stop = states.len() - 1;
    let labeling = graph.components();
    let sizes = labeling.sizes();
    let mut sums = vec![0.0f64; labeling.count];
    for (value, &label) in x.iter().zip(&labeling.labels) {
        sums[label] += value;
    }
    let mut clusters: Vec<(f64, usize)> = sums
        .iter()
        .zip(&sizes)
        .map(|(&sum, &size)| (sum / size as f64, size))
        .collect();
    clusters.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (alphas, component_sizes): (Vec<f64>, Vec<usize>) = clusters.into_iter().unzip();

    let report = SteadyStateReport {
        d_ss: predator.map(|p| min_predator_distance(&x, p.x_p)),
        x_ss: x,
        m_star: labeling.count,
        alphas,
        component_sizes,
        converged,
        t_stop,
    };
    Ok((
        Trajectory1D {
            states,
            component_counts,
            escape_distances,
        },
        report,
    ))
}

/// The repulsion strength that guarantees every agent clears the predator's
/// influence zone in one step and never re-enters it: `rho_p + rho`.
/// Requires `rho_p >= rho >= 0`.
pub fn critical_strength(rho: f64, rho_p: f64) -> Result<f64, SimError> {
    if !(rho >= 0.0) || !(rho_p >= rho) {
        return Err(SimError::PredatorRangeTooSmall { rho, rho_p });
    }
    Ok(rho_p + rho)
}

/// Tests whether `x_candidate` is a permutation of the steady-state vector
/// described by `alphas` and `sizes`: its sorted entries must match, within
/// [`MEMBER_TOL`] per entry, the multiset holding `alphas[i]` repeated
/// `sizes[i]` times.
pub fn steady_state_set_member(
    x_candidate: &[f64],
    alphas: &[f64],
    sizes: &[usize],
) -> Result<bool, SimError> {
    if alphas.len() != sizes.len() {
        return Err(SimError::InvalidInput(format!(
            "{} component values but {} component sizes",
            alphas.len(),
            sizes.len()
        )));
    }
    let total: usize = sizes.iter().sum();
    if total != x_candidate.len() {
        return Err(SimError::InvalidInput(format!(
            "component sizes sum to {total} but candidate has {} entries",
            x_candidate.len()
        )));
    }
    let mut expected = Vec::with_capacity(total);
    for (&alpha, &size) in alphas.iter().zip(sizes) {
        expected.extend(std::iter::repeat(alpha).take(size));
    }
    expected.sort_by(f64::total_cmp);
    let mut sorted = x_candidate.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .iter()
        .zip(&expected)
        .all(|(a, b)| (a - b).abs() <= MEMBER_TOL))
}
