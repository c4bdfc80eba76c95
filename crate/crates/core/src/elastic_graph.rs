//! Elastic principal graphs whose data term is a PQSQ potential.
//!
//! The embedding minimizes `U = U_A + U_G`, where `U_G` sums edge stretching
//! `λ‖φ(a) − φ(b)‖²` and star bending `μ‖Σ leaves − k·center‖²` and `U_A` is
//! the PQSQ error of every point to its node. With the partition and the
//! interval assignments frozen, `U` is quadratic and separable per
//! coordinate, so each node update is one sparse-ish linear solve per
//! coordinate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::approximators::{l2_leading_direction, pqsq_error, DataMatrix};
use crate::error::{PqsqError, Result};
use crate::linalg;
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub nodes: [usize; 2],
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticGraph {
    /// Embedding of every vertex.
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<Edge>,
    pub stars: Vec<Star>,
}

impl ElasticGraph {
    /// Validates indices and moduli. Zero moduli are accepted so that a graph
    /// without elasticity reduces to k-means.
    pub fn new(vertices: Vec<Vec<f64>>, edges: Vec<Edge>, stars: Vec<Star>) -> Result<Self> {
        let n = vertices.len();
        if n == 0 {
            return Err(PqsqError::Empty("graph vertices"));
        }
        let m = vertices[0].len();
        if let Some(v) = vertices.iter().find(|v| v.len() != m) {
            return Err(PqsqError::DimensionMismatch { expected: m, found: v.len() });
        }
        for e in &edges {
            if e.nodes.iter().any(|&i| i >= n) || e.nodes[0] == e.nodes[1] {
                return Err(PqsqError::InvalidParameter(format!("bad edge {:?}", e.nodes)));
            }
            if !(e.lambda >= 0.0 && e.lambda.is_finite()) {
                return Err(PqsqError::InvalidParameter(format!("edge modulus {} must be >= 0", e.lambda)));
            }
        }
        for s in &stars {
            if s.leaves.len() < 2 {
                return Err(PqsqError::InvalidParameter("a star needs at least two leaves".into()));
            }
            if s.center >= n || s.leaves.iter().any(|&l| l >= n || l == s.center) {
                return Err(PqsqError::InvalidParameter(format!("bad star centered at {}", s.center)));
            }
            if !(s.mu >= 0.0 && s.mu.is_finite()) {
                return Err(PqsqError::InvalidParameter(format!("star modulus {} must be >= 0", s.mu)));
            }
        }
        Ok(ElasticGraph { vertices, edges, stars })
    }

    /// Path through `positions` with a 2-star at every interior node.
    pub fn chain(positions: Vec<Vec<f64>>, lambda: f64, mu: f64) -> Result<Self> {
        let n = positions.len();
        let edges = (1..n).map(|i| Edge { nodes: [i - 1, i], lambda }).collect();
        let stars = (1..n.saturating_sub(1))
            .map(|i| Star { center: i, leaves: vec![i - 1, i + 1], mu })
            .collect();
        Self::new(positions, edges, stars)
    }

    /// Vertex 0 at `center` joined to every leaf, with one star over all of
    /// them.
    pub fn star(center: Vec<f64>, leaves: Vec<Vec<f64>>, lambda: f64, mu: f64) -> Result<Self> {
        let k = leaves.len();
        let mut vertices = vec![center];
        vertices.extend(leaves);
        let edges = (1..=k).map(|i| Edge { nodes: [0, i], lambda }).collect();
        let stars = if k >= 2 { vec![Star { center: 0, leaves: (1..=k).collect(), mu }] } else { vec![] };
        Self::new(vertices, edges, stars)
    }

    /// `nodes` equispaced points along the L2 first principal component,
    /// spanning the range of the data projections.
    pub fn chain_along_pc1(data: &DataMatrix, nodes: usize, lambda: f64, mu: f64) -> Result<Self> {
        if nodes < 2 {
            return Err(PqsqError::InvalidParameter("a chain needs at least two nodes".into()));
        }
        let mean = data.arithmetic_mean();
        let v = l2_leading_direction(data, &mean);
        let proj: Vec<f64> = (0..data.rows())
            .map(|i| data.row(i).iter().zip(&mean).zip(&v).map(|((x, c), d)| (x - c) * d).sum())
            .collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let positions = (0..nodes)
            .map(|j| {
                let t = lo + (hi - lo) * j as f64 / (nodes - 1) as f64;
                mean.iter().zip(&v).map(|(c, d)| c + t * d).collect()
            })
            .collect();
        Self::chain(positions, lambda, mu)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }
}

/// Nearest-node assignment of data points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// Node of every data point.
    pub assignment: Vec<usize>,
}

impl Partition {
    /// Point indices belonging to node `y`.
    pub fn neighborhood(&self, y: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == y).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMetric {
    #[default]
    L2,
    Pqsq,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn partition(graph: &ElasticGraph, data: &DataMatrix, metric: PartitionMetric, spec: &PotentialSpec) -> Partition {
    let assignment = (0..data.rows())
        .map(|i| {
            let x = data.row(i);
            graph
                .vertices
                .iter()
                .enumerate()
                .map(|(y, p)| match metric {
                    PartitionMetric::L2 => (y, squared_distance(x, p)),
                    PartitionMetric::Pqsq => (y, pqsq_error(x, p, spec)),
                })
                .fold((0, f64::INFINITY), |acc, (y, d)| if d < acc.1 { (y, d) } else { acc })
                .0
        })
        .collect();
    Partition { assignment }
}

pub fn graph_energy(graph: &ElasticGraph) -> f64 {
    let phi = &graph.vertices;
    let edges: f64 = graph
        .edges
        .iter()
        .map(|e| e.lambda * squared_distance(&phi[e.nodes[0]], &phi[e.nodes[1]]))
        .sum();
    let stars: f64 = graph
        .stars
        .iter()
        .map(|s| {
            let k = s.leaves.len() as f64;
            let dev: f64 = (0..graph.dim())
                .map(|c| {
                    let d = s.leaves.iter().map(|&l| phi[l][c]).sum::<f64>() - k * phi[s.center][c];
                    d * d
                })
                .sum();
            s.mu * dev
        })
        .sum();
    edges + stars
}

/// `Σ_y Σ_{x ∈ K^y} w(x) Σ_k u(x^k − φ(y)^k)`.
pub fn approximation_energy(graph: &ElasticGraph, data: &DataMatrix, partition: &Partition, spec: &PotentialSpec) -> f64 {
    partition
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &y)| data.weight(i) * pqsq_error(data.row(i), &graph.vertices[y], spec))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFitOptions {
    pub metric: PartitionMetric,
    pub tol: f64,
    /// Cap on repartitioning rounds.
    pub max_iter: usize,
    /// Cap on node updates per partition.
    pub max_inner: usize,
}

impl Default for GraphFitOptions {
    fn default() -> Self {
        GraphFitOptions { metric: PartitionMetric::L2, tol: 1e-10, max_iter: 500, max_inner: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFit {
    pub graph: ElasticGraph,
    pub partition: Partition,
    /// Total energy at the start and after every node update.
    pub trace: Vec<f64>,
    /// Repartitioning rounds.
    pub iterations: usize,
}

impl GraphFit {
    pub fn energy(&self) -> f64 {
        *self.trace.last().expect("nonempty")
    }
}

/// Graph part of the frozen quadratic, shared by every coordinate.
fn graph_matrix(graph: &ElasticGraph) -> Vec<f64> {
    let n = graph.len();
    let mut g = vec![0.0; n * n];
    for e in &graph.edges {
        let [a, b] = e.nodes;
        g[a * n + a] += e.lambda;
        g[b * n + b] += e.lambda;
        g[a * n + b] -= e.lambda;
        g[b * n + a] -= e.lambda;
    }
    for s in &graph.stars {
        // μ c cᵀ with c = Σ e_leaf − k e_center
        let k = s.leaves.len() as f64;
        let mut idx: Vec<(usize, f64)> = s.leaves.iter().map(|&l| (l, 1.0)).collect();
        idx.push((s.center, -k));
        for &(i, ci) in &idx {
            for &(j, cj) in &idx {
                g[i * n + j] += s.mu * ci * cj;
            }
        }
    }
    g
}

fn assign_intervals(graph: &ElasticGraph, data: &DataMatrix, part: &Partition, spec: &PotentialSpec, out: &mut [usize]) {
    let m = data.cols();
    for i in 0..data.rows() {
        let y = &graph.vertices[part.assignment[i]];
        for k in 0..m {
            out[i * m + k] = spec.interval_index(k, data.get(i, k) - y[k]);
        }
    }
}

fn total_energy(graph: &ElasticGraph, data: &DataMatrix, part: &Partition, spec: &PotentialSpec) -> f64 {
    approximation_energy(graph, data, part, spec) + graph_energy(graph)
}

/// Splitting fit of the embedding: for a fixed partition, alternate interval
/// assignment and the joint node solve until the assignment repeats, then
/// repartition; stop when the partition is unchanged.
///
/// With [`PartitionMetric::Pqsq`] (or a quadratic potential) the total
/// energy never increases. Under L2 partitioning with a non-quadratic
/// potential a repartition step is not guaranteed to lower the PQSQ energy.
pub fn fit_elastic_graph(
    graph: &ElasticGraph,
    data: &DataMatrix,
    spec: &PotentialSpec,
    opts: &GraphFitOptions,
) -> Result<GraphFit> {
    let (n, m) = (data.rows(), data.cols());
    if graph.dim() != m || spec.dim() != m {
        return Err(PqsqError::DimensionMismatch { expected: m, found: if graph.dim() != m { graph.dim() } else { spec.dim() } });
    }
    let nodes = graph.len();
    let mut g = graph.clone();
    let elastic = graph_matrix(&g);
    let mut part = partition(&g, data, opts.metric, spec);
    let mut trace = vec![total_energy(&g, data, &part, spec)];
    let mut intervals = vec![0usize; n * m];
    let mut next_intervals = vec![0usize; n * m];

    for round in 1..=opts.max_iter {
        assign_intervals(&g, data, &part, spec, &mut intervals);
        let mut settled = false;
        for _ in 0..opts.max_inner {
            let mut shift = 0.0f64;
            let update: Vec<Vec<f64>> = (0..m)
                .map(|k| {
                    let a = spec.coordinate(k).a();
                    let mut mat = elastic.clone();
                    let mut rhs = vec![0.0; nodes];
                    for i in 0..n {
                        let y = part.assignment[i];
                        let wa = data.weight(i) * a[intervals[i * m + k]];
                        mat[y * nodes + y] += wa;
                        rhs[y] += wa * data.get(i, k);
                    }
                    // a node with no weighted points and no coupling stays put
                    for y in 0..nodes {
                        if mat[y * nodes + y] == 0.0 {
                            mat[y * nodes + y] = 1.0;
                            rhs[y] = g.vertices[y][k];
                        }
                    }
                    linalg::solve_spd(&mat, nodes, &rhs).ok_or_else(|| {
                        PqsqError::SingularSystem(format!("node update for coordinate {k}"))
                    })
                })
                .collect::<Result<_>>()?;
            for (k, column) in update.iter().enumerate() {
                for (y, value) in column.iter().enumerate() {
                    shift = shift.max(libm::fabs(g.vertices[y][k] - value));
                    g.vertices[y][k] = *value;
                }
            }
            trace.push(total_energy(&g, data, &part, spec));
            assign_intervals(&g, data, &part, spec, &mut next_intervals);
            if next_intervals == intervals || shift < opts.tol {
                settled = true;
                break;
            }
            core::mem::swap(&mut intervals, &mut next_intervals);
        }
        if !settled {
            return Err(PqsqError::MaxIterations { context: "elastic graph node update", iterations: opts.max_inner });
        }
        let next = partition(&g, data, opts.metric, spec);
        if next == part {
            return Ok(GraphFit { graph: g, partition: part, trace, iterations: round });
        }
        part = next;
        trace.push(total_energy(&g, data, &part, spec));
    }
    Err(PqsqError::MaxIterations { context: "elastic graph fit", iterations: opts.max_iter })
}
