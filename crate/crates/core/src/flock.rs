//! Newtonian flock with velocity-direction consensus at constant speed and a
//! constant-velocity predator.
//!
//! States live in up to three spatial dimensions; lower-dimensional runs keep
//! the unused coordinates at zero. Each step builds the interaction graph
//! from the current positions, applies the consensus force (the neighbor-mean
//! velocity rescaled by `v0` over the agent's own speed) plus the radial
//! escape force, advances positions with the pre-update velocities, and then
//! optionally renormalizes every velocity back to magnitude `v0`.

use nalgebra::Vector3;
use thiserror::Error;

use crate::graph::{build_graph_points, GraphError, InteractionGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlockError {
    #[error("agent {agent} coincides with the predator; escape direction undefined (capture)")]
    Capture { agent: usize },
    #[error("agent {agent} has zero speed; heading undefined")]
    ZeroSpeed { agent: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Positions and velocities of the flock at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockState {
    /// Spatial dimension actually in use (1, 2, or 3).
    pub dim: usize,
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    /// Simulation time in seconds.
    pub time: f64,
}

impl FlockState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn validate(&self) -> Result<(), FlockError> {
        if self.is_empty() {
            return Err(FlockError::InvalidInput(
                "flock must contain at least one agent".into(),
            ));
        }
        if self.positions.len() != self.velocities.len() {
            return Err(FlockError::InvalidInput(format!(
                "{} positions but {} velocities",
                self.positions.len(),
                self.velocities.len()
            )));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(FlockError::InvalidInput(format!(
                "dim must be 1, 2, or 3, got {}",
                self.dim
            )));
        }
        let finite = |v: &Vector3<f64>| v.iter().all(|c| c.is_finite());
        if !self.positions.iter().all(finite) || !self.velocities.iter().all(finite) {
            return Err(FlockError::InvalidInput(
                "positions and velocities must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Physical parameters of the flock model.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockParams {
    /// Interaction range in meters.
    pub rho: f64,
    /// Common agent speed in m/s.
    pub v0: f64,
    /// Time increment in seconds.
    pub dt: f64,
    /// Per-agent masses in kg.
    pub masses: Vec<f64>,
    /// Rescale every velocity to magnitude `v0` after each force update.
    pub renormalize_speed: bool,
}

impl FlockParams {
    pub fn uniform(rho: f64, v0: f64, dt: f64, mass: f64, n: usize) -> Self {
        Self {
            rho,
            v0,
            dt,
            masses: vec![mass; n],
            renormalize_speed: true,
        }
    }

    fn validate(&self, n: usize) -> Result<(), FlockError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FlockError::InvalidInput(format!(
                "dt must be finite and > 0, got {}",
                self.dt
            )));
        }
        if !(self.v0 > 0.0) || !self.v0.is_finite() {
            return Err(FlockError::InvalidInput(format!(
                "v0 must be finite and > 0, got {}",
                self.v0
            )));
        }
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(FlockError::InvalidInput(format!(
                "rho must be finite and >= 0, got {}",
                self.rho
            )));
        }
        if self.masses.len() != n {
            return Err(FlockError::InvalidInput(format!(
                "{} masses for {n} agents",
                self.masses.len()
            )));
        }
        if !self.masses.iter().all(|m| m.is_finite() && *m > 0.0) {
            return Err(FlockError::InvalidInput(
                "all masses must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Constant-velocity predator with a radial influence zone.
#[derive(Debug, Clone, PartialEq)]
pub struct PredatorND {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Influence range in meters.
    pub rho_p: f64,
    /// Repulsion strength (newtons).
    pub s: f64,
}

impl PredatorND {
    /// Position after one time increment; the velocity never changes.
    pub fn advanced(&self, dt: f64) -> PredatorND {
        PredatorND {
            position: self.position + dt * self.velocity,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), FlockError> {
        if !(self.rho_p >= 0.0) || !self.rho_p.is_finite() {
            return Err(FlockError::InvalidInput(format!(
                "rho_p must be finite and >= 0, got {}",
                self.rho_p
            )));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(FlockError::InvalidInput(format!(
                "s must be finite and > 0, got {}",
                self.s
            )));
        }
        Ok(())
    }
}

/// Per-step agent-predator distance records of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSeries {
    /// `per_agent[t][i]` is agent `i`'s distance to the predator at step `t`.
    pub per_agent: Vec<Vec<f64>>,
    /// Mean distance per step.
    pub mean: Vec<f64>,
    /// Minimum distance per step.
    pub min: Vec<f64>,
    /// Index of the closest agent per step.
    pub min_index: Vec<usize>,
    /// Interaction-graph component count per step.
    pub component_counts: Vec<usize>,
    /// Set when the run stopped early because an agent reached the predator.
    pub capture: Option<CaptureEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CaptureEvent {
    pub step: usize,
    pub agent: usize,
}

/// State snapshot retained by [`simulate_flock`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlockSnapshot {
    pub step: usize,
    pub state: FlockState,
    pub predator: PredatorND,
}

/// Consensus force: the neighbor-mean velocity (self included), scaled by
/// `v0` over the agent's own speed. Errors if any agent has zero speed.
pub fn consensus_force(
    state: &FlockState,
    graph: &InteractionGraph,
    v0: f64,
) -> Result<Vec<Vector3<f64>>, FlockError> {
    let means = graph.neighbor_average_vectors(&state.velocities);
    state
        .velocities
        .iter()
        .zip(means)
        .enumerate()
        .map(|(agent, (v, mean))| {
            let speed = v.norm();
            if speed == 0.0 {
                Err(FlockError::ZeroSpeed { agent })
            } else {
                Ok(mean * (v0 / speed))
            }
        })
        .collect()
}

/// Escape force: strength `s` directed away from the predator for agents
/// within its influence range (inclusive), zero outside. An agent exactly on
/// the predator's position has no defined direction and counts as captured.
pub fn escape_force(
    state: &FlockState,
    predator: &PredatorND,
) -> Result<Vec<Vector3<f64>>, FlockError> {
    state
        .positions
        .iter()
        .enumerate()
        .map(|(agent, r)| {
            let offset = r - predator.position;
            let dist = offset.norm();
            if dist == 0.0 {
                Err(FlockError::Capture { agent })
            } else if dist <= predator.rho_p {
                Ok(offset * (predator.s / dist))
            } else {
                Ok(Vector3::zeros())
            }
        })
        .collect()
}

/// Integrator core. Positions advance with the pre-update velocities; the
/// force update uses the pre-update graph/positions captured in `f1`/`f2`.
fn advance(
    state: &FlockState,
    forces1: &[Vector3<f64>],
    forces2: &[Vector3<f64>],
    params: &FlockParams,
) -> Result<FlockState, FlockError> {
    let dt = params.dt;
    let positions = state
        .positions
        .iter()
        .zip(&state.velocities)
        .map(|(r, v)| r + dt * v)
        .collect();
    let velocities = state
        .velocities
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let raw = v + (dt / params.masses[i]) * (forces1[i] + forces2[i]);
            if params.renormalize_speed {
                let speed = raw.norm();
                if speed == 0.0 {
                    return Err(FlockError::ZeroSpeed { agent: i });
                }
                Ok(raw * (params.v0 / speed))
            } else {
                Ok(raw)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FlockState {
        dim: state.dim,
        positions,
        velocities,
        time: state.time + dt,
    })
}

/// One time increment of the flock and (when present) the predator.
pub fn step_flock(
    state: &FlockState,
    predator: Option<&PredatorND>,
    params: &FlockParams,
) -> Result<(FlockState, Option<PredatorND>), FlockError> {
    state.validate()?;
    params.validate(state.len())?;
    if let Some(p) = predator {
        p.validate()?;
    }
    let graph = build_graph_points(&state.positions, params.rho)?;
    let f1 = consensus_force(state, &graph, params.v0)?;
    let f2 = match predator {
        Some(p) => escape_force(state, p)?,
        None => vec![Vector3::zeros(); state.len()],
    };
    let next = advance(state, &f1, &f2, params)?;
    Ok((next, predator.map(|p| p.advanced(params.dt))))
}

/// Runs `ceil(horizon / dt)` steps from `initial`, recording the distance
/// series at every step (including the initial state) and state snapshots
/// every `snapshot_stride` steps plus the final step. A capture stops the run
/// early and is flagged in the series; other failures abort with an error.
pub fn simulate_flock(
    initial: FlockState,
    predator: PredatorND,
    params: &FlockParams,
    horizon: f64,
    snapshot_stride: usize,
) -> Result<(Vec<FlockSnapshot>, DistanceSeries), FlockError> {
    initial.validate()?;
    params.validate(initial.len())?;
    predator.validate()?;
    if !horizon.is_finite() || horizon < params.dt {
        return Err(FlockError::InvalidInput(format!(
            "horizon ({horizon}) must be finite and at least one time increment ({})",
            params.dt
        )));
    }
    if snapshot_stride == 0 {
        return Err(FlockError::InvalidInput(
            "snapshot_stride must be >= 1".into(),
        ));
    }

    let steps = (horizon / params.dt).ceil() as usize;
    let n = initial.len();
    let mut series = DistanceSeries {
        per_agent: Vec::with_capacity(steps + 1),
        mean: Vec::with_capacity(steps + 1),
        min: Vec::with_capacity(steps + 1),
        min_index: Vec::with_capacity(steps + 1),
        component_counts: Vec::with_capacity(steps + 1),
        capture: None,
    };
    let mut snapshots = Vec::new();

    let mut state = initial;
    let mut hunter = predator;
    for step in 0..=steps {
        let graph = build_graph_points(&state.positions, params.rho)?;

        let distances: Vec<f64> = state
            .positions
            .iter()
            .map(|r| (r - hunter.position).norm())
            .collect();
        let mean = distances.iter().sum::<f64>() / n as f64;
        let (min_index, min) = distances
            .iter()
            .copied()
            .enumerate()
            .fold((0usize, f64::INFINITY), |best, (i, d)| {
                if d < best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        series.per_agent.push(distances);
        series.mean.push(mean);
        series.min.push(min);
        series.min_index.push(min_index);
        series.component_counts.push(graph.components().count);

        if step % snapshot_stride == 0 || step == steps {
            snapshots.push(FlockSnapshot {
                step,
                state: state.clone(),
                predator: hunter.clone(),
            });
        }
        if step == steps {
            break;
        }

        let f1 = consensus_force(&state, &graph, params.v0)?;
        let f2 = match escape_force(&state, &hunter) {
            Ok(f) => f,
            Err(FlockError::Capture { agent }) => {
                series.capture = Some(CaptureEvent { step, agent });
                break;
            }
            Err(other) => return Err(other),
        };
        state = advance(&state, &f1, &f2, params)?;
        hunter = hunter.advanced(params.dt);
    }

    Ok((snapshots, series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_agent(v: Vector3<f64>) -> FlockState {
        FlockState {
            dim: 3,
            positions: vec![Vector3::zeros()],
            velocities: vec![v],
            time: 0.0,
        }
    }

    fn paper_predator() -> PredatorND {
        PredatorND {
            position: Vector3::new(-30.0, -30.0, 0.0),
            velocity: Vector3::new(10.0, 10.0, 0.0),
            rho_p: 30.0,
            s: 10.0,
        }
    }

    fn graph_of(state: &FlockState, rho: f64) -> InteractionGraph {
        build_graph_points(&state.positions, rho).unwrap()
    }

    #[test]
    fn isolated_agent_force_reproduces_its_velocity() {
        let state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        let f = consensus_force(&state, &graph_of(&state, 1.0), 10.0).unwrap();
        assert_eq!(f[0], Vector3::new(10.0, 0.0, 0.0));
    }

    #[test]
    fn mutual_neighbors_average_their_headings() {
        let state = FlockState {
            dim: 3,
            positions: vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)],
            velocities: vec![Vector3::new(10.0, 0.0, 0.0), Vector3::new(0.0, 10.0, 0.0)],
            time: 0.0,
        };
        let f = consensus_force(&state, &graph_of(&state, 10.0), 10.0).unwrap();
        for i in 0..2 {
            assert!((f[i] - Vector3::new(5.0, 5.0, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn aligned_flock_is_a_force_fixed_point() {
        let v = Vector3::new(0.0, 10.0, 0.0);
        let state = FlockState {
            dim: 3,
            positions: (0..4).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect(),
            velocities: vec![v; 4],
            time: 0.0,
        };
        let f = consensus_force(&state, &graph_of(&state, 100.0), 10.0).unwrap();
        for fi in f {
            assert!((fi - v).norm() <= 1e-12);
        }
    }

    #[test]
    fn zero_speed_agent_is_a_numeric_error() {
        let state = single_agent(Vector3::zeros());
        let err = consensus_force(&state, &graph_of(&state, 1.0), 10.0).unwrap_err();
        assert_eq!(err, FlockError::ZeroSpeed { agent: 0 });
    }

    #[test]
    fn escape_force_points_away_from_the_predator() {
        let mut state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        state.positions[0] = Vector3::new(-10.0, -10.0, 0.0);
        let f = escape_force(&state, &paper_predator()).unwrap();
        let expected = 10.0 / f64::sqrt(2.0);
        assert!((f[0].x - expected).abs() <= 1e-12, "fx = {}", f[0].x);
        assert!((f[0].y - expected).abs() <= 1e-12);
        assert_eq!(f[0].z, 0.0);
        assert!((f[0].x - 7.0711).abs() <= 1e-4);
    }

    #[test]
    fn agents_outside_the_influence_zone_feel_nothing() {
        let state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        // distance 42.43 > rho_p = 30
        let f = escape_force(&state, &paper_predator()).unwrap();
        assert_eq!(f[0], Vector3::zeros());
        let strong = PredatorND {
            s: 1e6,
            ..paper_predator()
        };
        assert_eq!(escape_force(&state, &strong).unwrap()[0], Vector3::zeros());
    }

    #[test]
    fn coincidence_with_the_predator_is_a_capture() {
        let mut state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        state.positions[0] = paper_predator().position;
        let err = escape_force(&state, &paper_predator()).unwrap_err();
        assert_eq!(err, FlockError::Capture { agent: 0 });
    }

    #[test]
    fn boundary_of_the_influence_zone_is_inclusive() {
        let mut state = single_agent(Vector3::new(1.0, 0.0, 0.0));
        state.positions[0] = Vector3::new(0.0, 0.0, 0.0);
        let p = PredatorND {
            position: Vector3::new(30.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
            rho_p: 30.0,
            s: 10.0,
        };
        let f = escape_force(&state, &p).unwrap();
        assert!((f[0] - Vector3::new(-10.0, 0.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn single_agent_step_shifts_then_renormalizes() {
        let state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        let params = FlockParams::uniform(1.0, 10.0, 0.05, 0.1, 1);
        let (next, _) = step_flock(&state, None, &params).unwrap();
        assert!((next.positions[0] - Vector3::new(0.5, 0.0, 0.0)).norm() <= 1e-15);
        assert!((next.velocities[0] - Vector3::new(10.0, 0.0, 0.0)).norm() <= 1e-9);
        assert!((next.time - 0.05).abs() <= 1e-15);
    }

    #[test]
    fn single_agent_step_without_renormalization_scales_speed() {
        let state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        let mut params = FlockParams::uniform(1.0, 10.0, 0.05, 0.1, 1);
        params.renormalize_speed = false;
        let (next, _) = step_flock(&state, None, &params).unwrap();
        assert!((next.velocities[0] - Vector3::new(15.0, 0.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn two_agent_step_matches_hand_computed_values() {
        let state = FlockState {
            dim: 3,
            positions: vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)],
            velocities: vec![Vector3::new(10.0, 0.0, 0.0), Vector3::new(0.0, 10.0, 0.0)],
            time: 0.0,
        };
        let params = FlockParams::uniform(10.0, 10.0, 0.05, 0.1, 2);
        let (next, _) = step_flock(&state, None, &params).unwrap();
        let raw: Vector3<f64> = Vector3::new(12.5, 2.5, 0.0);
        let expected = raw * (10.0 / raw.norm());
        assert!((next.velocities[0] - expected).norm() <= 1e-12);
        assert!((next.velocities[0].x - 9.8058).abs() <= 1e-4);
        assert!((next.velocities[0].y - 1.9612).abs() <= 1e-4);
        // symmetric roles: agent 1 sees the mirrored mean
        let raw1: Vector3<f64> = Vector3::new(2.5, 12.5, 0.0);
        let expected1 = raw1 * (10.0 / raw1.norm());
        assert!((next.velocities[1] - expected1).norm() <= 1e-12);
    }

    #[test]
    fn integrator_with_zero_forces_is_free_motion() {
        let state = FlockState {
            dim: 2,
            positions: vec![Vector3::new(1.0, 2.0, 0.0)],
            velocities: vec![Vector3::new(3.0, -4.0, 0.0)],
            time: 0.0,
        };
        let mut params = FlockParams::uniform(1.0, 5.0, 0.5, 1.0, 1);
        params.renormalize_speed = false;
        let zero = vec![Vector3::zeros()];
        let next = advance(&state, &zero, &zero, &params).unwrap();
        assert_eq!(next.velocities[0], state.velocities[0]);
        assert_eq!(
            next.positions[0],
            Vector3::new(1.0 + 0.5 * 3.0, 2.0 - 0.5 * 4.0, 0.0)
        );
    }

    #[test]
    fn renormalizing_a_cancelled_velocity_fails() {
        // Escape force exactly opposes the consensus force contribution so
        // the raw updated velocity is the zero vector.
        let state = FlockState {
            dim: 1,
            positions: vec![Vector3::new(1.0, 0.0, 0.0)],
            velocities: vec![Vector3::new(1.0, 0.0, 0.0)],
            time: 0.0,
        };
        let p = PredatorND {
            position: Vector3::new(2.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
            rho_p: 5.0,
            s: 2.0,
        };
        let params = FlockParams {
            rho: 0.0,
            v0: 1.0,
            dt: 1.0,
            masses: vec![1.0],
            renormalize_speed: true,
        };
        // f1 = v, f2 = -2x: raw = v + (f1 + f2) = (1,0,0) + (1,0,0) - (2,0,0) = 0
        let err = step_flock(&state, Some(&p), &params).unwrap_err();
        assert_eq!(err, FlockError::ZeroSpeed { agent: 0 });
    }

    #[test]
    fn initial_distance_records_match_geometry() {
        let state = single_agent(Vector3::new(10.0, 0.0, 0.0));
        let params = FlockParams::uniform(1.0, 10.0, 0.05, 0.1, 1);
        let (_, series) = simulate_flock(state, paper_predator(), &params, 1.0, 100).unwrap();
        let expected = f64::sqrt(1800.0);
        assert!((series.mean[0] - expected).abs() <= 1e-12);
        assert!((series.min[0] - expected).abs() <= 1e-12);
        assert!((series.mean[0] - 42.4264).abs() <= 1e-4);
        assert_eq!(series.min_index[0], 0);
    }

    #[test]
    fn predator_crosses_the_origin_region_after_four_seconds() {
        let state = single_agent(Vector3::new(0.0, 10.0, 0.0));
        let params = FlockParams::uniform(1.0, 10.0, 0.05, 0.1, 1);
        let (snapshots, _) = simulate_flock(state, paper_predator(), &params, 4.0, 80).unwrap();
        let last = snapshots.last().unwrap();
        assert_eq!(last.step, 80);
        assert!((last.predator.position - Vector3::new(10.0, 10.0, 0.0)).norm() <= 1e-9);
    }

    #[test]
    fn empty_flock_is_rejected() {
        let state = FlockState {
            dim: 2,
            positions: vec![],
            velocities: vec![],
            time: 0.0,
        };
        let params = FlockParams::uniform(1.0, 10.0, 0.05, 0.1, 0);
        assert!(matches!(
            simulate_flock(state, paper_predator(), &params, 1.0, 1),
            Err(FlockError::InvalidInput(_))
        ));
    }

    #[test]
    fn speeds_stay_renormalized_and_min_never_exceeds_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let state = FlockState {
            dim: 2,
            positions: (0..n)
                .map(|_| Vector3::new(rng.random::<f64>() * 40.0, rng.random::<f64>() * 40.0, 0.0))
                .collect(),
            velocities: (0..n)
                .map(|_| {
                    let theta = rng.random::<f64>() * std::f64::consts::TAU;
                    Vector3::new(10.0 * theta.cos(), 10.0 * theta.sin(), 0.0)
                })
                .collect(),
            time: 0.0,
        };
        let params = FlockParams::uniform(15.0, 10.0, 0.05, 0.1, n);
        let (snapshots, series) =
            simulate_flock(state, paper_predator(), &params, 6.0, 20).unwrap();
        for snap in &snapshots {
            for v in &snap.state.velocities {
                assert!((v.norm() - 10.0).abs() <= 1e-9);
            }
        }
        for (lo, hi) in series.min.iter().zip(&series.mean) {
            assert!(lo <= hi);
            assert!(*lo >= 0.0);
        }
        assert_eq!(series.mean.len(), 121);
        assert!(series.capture.is_none());
    }

    #[test]
    fn stepped_predator_tracks_the_closed_form() {
        let mut p = paper_predator();
        let dt = 0.05;
        for k in 1..=240usize {
            p = p.advanced(dt);
            let exact = paper_predator().position + (k as f64 * dt) * paper_predator().velocity;
            let err = (p.position - exact).norm();
            assert!(
                err <= 1e-9 * exact.norm().max(1.0),
                "step {k}: drift {err}"
            );
        }
    }

    #[test]
    fn zero_range_decouples_agents_bitwise() {
        let full = FlockState {
            dim: 2,
            positions: vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(5.0, 1.0, 0.0),
                Vector3::new(-3.0, 2.0, 0.0),
            ],
            velocities: vec![
                Vector3::new(10.0, 0.0, 0.0),
                Vector3::new(0.0, -10.0, 0.0),
                Vector3::new(6.0, 8.0, 0.0),
            ],
            time: 0.0,
        };
        let keep = [0usize, 2];
        let sub = FlockState {
            dim: 2,
            positions: keep.iter().map(|&i| full.positions[i]).collect(),
            velocities: keep.iter().map(|&i| full.velocities[i]).collect(),
            time: 0.0,
        };
        let params_full = FlockParams::uniform(0.0, 10.0, 0.05, 0.1, 3);
        let params_sub = FlockParams::uniform(0.0, 10.0, 0.05, 0.1, 2);
        let (snap_full, _) =
            simulate_flock(full, paper_predator(), &params_full, 2.0, 1).unwrap();
        let (snap_sub, _) = simulate_flock(sub, paper_predator(), &params_sub, 2.0, 1).unwrap();
        for (a, b) in snap_full.iter().zip(&snap_sub) {
            for (k, &i) in keep.iter().enumerate() {
                assert_eq!(a.state.positions[i], b.state.positions[k]);
                assert_eq!(a.state.velocities[i], b.state.velocities[k]);
            }
        }
    }

    #[test]
    fn rigid_motions_commute_with_the_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 8;
        let base = FlockState {
            dim: 2,
            positions: (0..n)
                .map(|_| Vector3::new(rng.random::<f64>() * 30.0, rng.random::<f64>() * 30.0, 0.0))
                .collect(),
            velocities: (0..n)
                .map(|_| {
                    let theta = rng.random::<f64>() * std::f64::consts::TAU;
                    Vector3::new(10.0 * theta.cos(), 10.0 * theta.sin(), 0.0)
                })
                .collect(),
            time: 0.0,
        };
        let rotation = Rotation3::from_axis_angle(&Vector3::z_axis(), 0.7);
        let shift = Vector3::new(-12.0, 4.0, 0.0);
        let moved = FlockState {
            dim: 2,
            positions: base.positions.iter().map(|r| rotation * r + shift).collect(),
            velocities: base.velocities.iter().map(|v| rotation * v).collect(),
            time: 0.0,
        };
        let predator = paper_predator();
        let moved_predator = PredatorND {
            position: rotation * predator.position + shift,
            velocity: rotation * predator.velocity,
            ..predator.clone()
        };
        let params = FlockParams::uniform(12.0, 10.0, 0.05, 0.1, n);
        let (snap_a, _) = simulate_flock(base, predator, &params, 3.0, 10).unwrap();
        let (snap_b, _) = simulate_flock(moved, moved_predator, &params, 3.0, 10).unwrap();
        for (a, b) in snap_a.iter().zip(&snap_b) {
            for i in 0..n {
                let r_err = (rotation * a.state.positions[i] + shift - b.state.positions[i]).norm();
                let v_err = (rotation * a.state.velocities[i] - b.state.velocities[i]).norm();
                assert!(r_err <= 1e-9, "position drift {r_err} at step {}", a.step);
                assert!(v_err <= 1e-9, "velocity drift {v_err} at step {}", a.step);
            }
        }
    }

    #[test]
    fn connected_headings_tighten_toward_agreement() {
        // Symmetric pair of headings on a complete graph: the angular spread
        // between the two velocities must not grow once averaging starts.
        let state = FlockState {
            dim: 2,
            positions: vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)],
            velocities: vec![Vector3::new(10.0, 0.0, 0.0), Vector3::new(0.0, 10.0, 0.0)],
            time: 0.0,
        };
        let params = FlockParams::uniform(100.0, 10.0, 0.05, 0.1, 2);
        let mut current = state;
        let mut spread = f64::INFINITY;
        for _ in 0..40 {
            let (next, _) = step_flock(&current, None, &params).unwrap();
            let angle = next.velocities[0].angle(&next.velocities[1]);
            assert!(angle <= spread + 1e-12);
            spread = angle;
            current = next;
        }
        assert!(spread < 0.05, "headings still {spread} rad apart");
    }

    #[test]
    fn capture_is_flagged_in_the_series() {
        // Agent heading straight at a stationary predator placed on its path.
        let state = FlockState {
            dim: 1,
            positions: vec![Vector3::new(0.0, 0.0, 0.0)],
            velocities: vec![Vector3::new(1.0, 0.0, 0.0)],
            time: 0.0,
        };
        let p = PredatorND {
            position: Vector3::new(1.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
            rho_p: 0.0, // never pushes back, so the agent runs it over
            s: 1.0,
        };
        let params = FlockParams::uniform(0.0, 1.0, 1.0, 1.0, 1);
        let (_, series) = simulate_flock(state, p, &params, 5.0, 1).unwrap();
        let capture = series.capture.expect("capture expected");
        assert_eq!(capture.step, 1);
        assert_eq!(capture.agent, 0);
        assert_eq!(series.mean.len(), 2);
        assert_eq!(series.min[1], 0.0);
    }
}
