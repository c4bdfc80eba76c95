use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, pqsq_error, pqsq_mean, DataMatrix, MeanOptions};
use crate::error::{PqsqError, Result};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub k: usize,
    /// Centroids for the first restart; random data points when `None`.
    pub init: Option<Vec<Vec<f64>>>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Settings for the centroid updates.
    pub mean: MeanOptions,
}

impl KMeansOptions {
    pub fn new(k: usize) -> Self {
        KMeansOptions { k, init: None, restarts: 1, seed: 0, max_iter: 500, mean: MeanOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    /// 0-based cluster of each point.
    pub labels: Vec<usize>,
    pub total_error: f64,
    pub iterations: usize,
    /// Total error after the first assignment and after every centroid update.
    pub trace: Vec<f64>,
    /// Restart that produced this model.
    pub restart: usize,
    pub seed: u64,
}

fn assign(data: &DataMatrix, spec: &PotentialSpec, centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    (0..data.rows())
        .map(|i| {
            centroids
                .iter()
                .enumerate()
                .map(|(c, y)| (c, pqsq_error(data.row(i), y, spec)))
                .fold((0, f64::INFINITY), |acc, (c, e)| if e < acc.1 { (c, e) } else { acc })
        })
        .unzip()
}

/// Moves the worst-fitted point of a multi-point cluster into every empty
/// cluster and recenters that cluster on it.
fn repair_empty(data: &DataMatrix, labels: &mut [usize], errors: &mut [f64], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let donor = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if errors[b] >= errors[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a cluster with two points");
        labels[donor] = empty;
        errors[donor] = 0.0;
        centroids[empty] = data.row(donor).to_vec();
    }
}

fn weighted_total(data: &DataMatrix, errors: &[f64]) -> f64 {
    errors.iter().enumerate().map(|(i, e)| data.weight(i) * e).sum()
}

fn run_once(
    data: &DataMatrix,
    spec: &PotentialSpec,
    mut centroids: Vec<Vec<f64>>,
    opts: &KMeansOptions,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, f64, usize, Vec<f64>)> {
    let (mut labels, mut errors) = assign(data, spec, &centroids);
    repair_empty(data, &mut labels, &mut errors, &mut centroids);
    let mut trace = vec![weighted_total(data, &errors)];
    for iteration in 1..=opts.max_iter {
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            let subset = data.select_rows(&members)?;
            let mean_opts = MeanOptions { init: Some(centroid.clone()), ..opts.mean.clone() };
            *centroid = pqsq_mean(&subset, spec, &mean_opts)?.center;
        }
        let errors_now: Vec<f64> =
            (0..data.rows()).map(|i| pqsq_error(data.row(i), &centroids[labels[i]], spec)).collect();
        trace.push(weighted_total(data, &errors_now));
        let (mut next, mut next_errors) = assign(data, spec, &centroids);
        repair_empty(data, &mut next, &mut next_errors, &mut centroids);
        if next == labels {
            let total = weighted_total(data, &next_errors);
            return Ok((centroids, labels, total, iteration, trace));
        }
        labels = next;
    }
    Err(PqsqError::MaxIterations { context: "PQSQ k-means", iterations: opts.max_iter })
}

/// PQSQ k-means: alternate nearest-centroid assignment under the PQSQ error
/// with PQSQ-mean centroid updates, keeping the best of `restarts` runs.
pub fn pqsq_kmeans(data: &DataMatrix, spec: &PotentialSpec, opts: &KMeansOptions) -> Result<ClusterModel> {
    check_dims(data, spec)?;
    let n = data.rows();
    if opts.k == 0 || opts.k > n {
        return Err(PqsqError::InvalidParameter(alloc::format!(
            "k must be in 1..={n}, got {}",
            opts.k
        )));
    }
    if let Some(init) = &opts.init {
        if init.len() != opts.k {
            return Err(PqsqError::DimensionMismatch { expected: opts.k, found: init.len() });
        }
        if let Some(c) = init.iter().find(|c| c.len() != data.cols()) {
            return Err(PqsqError::DimensionMismatch { expected: data.cols(), found: c.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<ClusterModel> = None;
    for restart in 0..opts.restarts.max(1) {
        let start = match (&opts.init, restart) {
            (Some(init), 0) => init.clone(),
            _ => rand::seq::index::sample(&mut rng, n, opts.k)
                .into_iter()
                .map(|i| data.row(i).to_vec())
                .collect(),
        };
        let (centroids, labels, total_error, iterations, trace) = run_once(data, spec, start, opts)?;
        if best.as_ref().is_none_or(|b| total_error < b.total_error) {
            best = Some(ClusterModel { centroids, labels, total_error, iterations, trace, restart, seed: opts.seed });
        }
    }
    Ok(best.expect("at least one restart"))
}
