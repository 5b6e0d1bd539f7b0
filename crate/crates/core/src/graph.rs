//! Radius-based interaction graphs over agent states.
//!
//! Two agents are neighbors when their states lie within the interaction
//! range `rho` of each other. The relation is symmetric, inclusive at the
//! boundary (distance exactly `rho` is an edge), and always contains the
//! self-loop: an agent is at distance zero from itself. Degrees therefore
//! never drop below one, which keeps the averaging operator well defined.
//!
//! The dense degree/Laplacian/averaging matrices are diagnostic artifacts;
//! simulations use [`InteractionGraph::neighbor_average`] directly.

use nalgebra::{DMatrix, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("interaction range must be non-negative, got {rho}")]
    InvalidRange { rho: f64 },
}

/// Distance notion used by the neighbor rule.
///
/// Only the Euclidean norm is implemented. For one-dimensional states it is
/// evaluated as the absolute difference, so boundary comparisons stay exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Norm {
    #[default]
    Euclidean,
}

/// Undirected interaction graph with self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    rho: f64,
    /// Sorted neighbor list per agent; `neighbors[i]` always contains `i`.
    neighbors: Vec<Vec<usize>>,
}

/// Connected-component labels; component ids are assigned in order of the
/// smallest agent index they contain, so labeling is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ComponentLabeling {
    /// Number of agents in each component, indexed by component id.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count];
        for &label in &self.labels {
            sizes[label] += 1;
        }
        sizes
    }
}

/// Dense matrices of one averaging step: the diagonal degree matrix, the
/// Laplacian `L = degree - adjacency` (adjacency carries self-loops), and the
/// row-stochastic averaging matrix `P = I - degree^-1 L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMatrices {
    pub degree: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub perron: DMatrix<f64>,
}

/// Builds the interaction graph over `positions` with range `rho`.
///
/// All points must share the same dimension. Distance is the Euclidean norm
/// (absolute difference for one-dimensional points) and the comparison is
/// inclusive: `distance <= rho` is an edge.
pub fn build_graph(
    positions: &[Vec<f64>],
    rho: f64,
    _norm: Norm,
) -> Result<InteractionGraph, GraphError> {
    check_range(rho)?;
    let dim = positions.first().map_or(0, Vec::len);
    for (index, p) in positions.iter().enumerate() {
        if p.len() != dim {
            return Err(GraphError::DimensionMismatch {
                index,
                expected: dim,
                found: p.len(),
            });
        }
    }
    Ok(build_with(positions.len(), rho, |i, j| {
        slice_distance(&positions[i], &positions[j]) <= rho
    }))
}

/// [`build_graph`] specialized to scalar states.
pub fn build_graph_1d(values: &[f64], rho: f64) -> Result<InteractionGraph, GraphError> {
    check_range(rho)?;
    Ok(build_with(values.len(), rho, |i, j| {
        (values[i] - values[j]).abs() <= rho
    }))
}

/// [`build_graph`] specialized to 3-vector positions (unused coordinates zero).
pub fn build_graph_points(
    points: &[Vector3<f64>],
    rho: f64,
) -> Result<InteractionGraph, GraphError> {
    check_range(rho)?;
    Ok(build_with(points.len(), rho, |i, j| {
        (points[i] - points[j]).norm() <= rho
    }))
}

fn check_range(rho: f64) -> Result<(), GraphError> {
    // NaN fails the comparison as well.
    if rho >= 0.0 {
        Ok(())
    } else {
        Err(GraphError::InvalidRange { rho })
    }
}

fn slice_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        (a[0] - b[0]).abs()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

fn build_with(n: usize, rho: f64, mut close: impl FnMut(usize, usize) -> bool) -> InteractionGraph {
    let mut neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if close(i, j) {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    InteractionGraph { rho, neighbors }
}

impl InteractionGraph {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Sorted neighbor indices of agent `i`, self included.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// |N_i| per agent; at least 1 everywhere because of the self-loop.
    pub fn neighbor_counts(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Replaces each entry with the mean of its neighbors' entries (self
    /// included). This is the direct per-agent averaging rule; it must agree
    /// with applying [`consensus_matrices`]' averaging matrix to `state`.
    pub fn neighbor_average(&self, state: &[f64]) -> Vec<f64> {
        assert_eq!(state.len(), self.n(), "state length must match agent count");
        self.neighbors
            .iter()
            .map(|list| list.iter().map(|&j| state[j]).sum::<f64>() / list.len() as f64)
            .collect()
    }

    /// Component-wise neighbor mean for vector-valued states.
    pub fn neighbor_average_vectors(&self, state: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        assert_eq!(state.len(), self.n(), "state length must match agent count");
        self.neighbors
            .iter()
            .map(|list| {
                let sum = list
                    .iter()
                    .fold(Vector3::zeros(), |acc, &j| acc + state[j]);
                sum / list.len() as f64
            })
            .collect()
    }

    /// Labels connected components by breadth-first traversal.
    pub fn components(&self) -> ComponentLabeling {
        let n = self.n();
        let mut labels = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = Vec::new();
        for start in 0..n {
            if labels[start] != usize::MAX {
                continue;
            }
            labels[start] = count;
            queue.push(start);
            while let Some(i) = queue.pop() {
                for &j in &self.neighbors[i] {
                    if labels[j] == usize::MAX {
                        labels[j] = count;
                        queue.push(j);
                    }
                }
            }
            count += 1;
        }
        ComponentLabeling { labels, count }
    }
}

/// Assembles the dense degree, Laplacian, and averaging matrices of `graph`.
///
/// The averaging matrix is computed literally as `I - degree^-1 Laplacian`;
/// on the self-looped convention this equals `degree^-1 adjacency`, so every
/// row is non-negative and sums to one.
pub fn consensus_matrices(graph: &InteractionGraph) -> ConsensusMatrices {
    let n = graph.n();
    let mut degree = DMatrix::zeros(n, n);
    let mut adjacency = DMatrix::zeros(n, n);
    for i in 0..n {
        degree[(i, i)] = graph.neighbors(i).len() as f64;
        for &j in graph.neighbors(i) {
            adjacency[(i, j)] = 1.0;
        }
    }
    let laplacian = &degree - &adjacency;
    let mut perron = DMatrix::identity(n, n);
    for i in 0..n {
        let deg = degree[(i, i)];
        for j in 0..n {
            perron[(i, j)] -= laplacian[(i, j)] / deg;
        }
    }
    ConsensusMatrices {
        degree,
        laplacian,
        perron,
    }
}
