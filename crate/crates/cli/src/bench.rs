//! Synthetic benchmark protocols: replicates are generated from a master
//! seed, fitted independently on the rayon pool and summarized as tables.

use std::collections::BTreeMap;
use std::time::Instant;

use pqsq::approximators::{fit_l2_pca, fit_pca, IntervalPolicy, PcaModel, PcaOptions};
use pqsq::datagen::{
    gen_outlier_benchmark, gen_sparse_regression, gen_two_cluster, replicate_seed, separation_tstat, sigma_metric,
    BimodalConfig, OutlierBenchConfig, SparseRegressionConfig,
};
use pqsq::regression::{lambda_path, penalty_spec, LambdaPath, Penalty, RegressionProblem};
use pqsq::{IntervalConfig, Majorant, PotentialSpec, Result};
use rayon::prelude::*;

use crate::io::{num, Table};

/// Thresholds shared by every coordinate in the two-cluster protocol.
pub const BIMODAL_THRESHOLDS: [f64; 5] = [0.0, 0.01, 0.1, 0.5, 1.0];

/// Sample mean and standard deviation (`n − 1` denominator, 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BimodalDim {
    /// First component's abscissa weight in the plane.
    Two,
    /// Cluster t-statistic in the span of two components in 100 dimensions.
    Hundred,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BimodalBench {
    pub levels: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub dim: BimodalDim,
    pub restarts: usize,
}

impl BimodalBench {
    pub fn new(dim: BimodalDim) -> Self {
        let levels = match dim {
            BimodalDim::Two => vec![0, 10, 20, 30, 60],
            BimodalDim::Hundred => vec![40],
        };
        let replicates = match dim {
            BimodalDim::Two => 100,
            BimodalDim::Hundred => 50,
        };
        BimodalBench { levels, replicates, seed: 0, dim, restarts: 5 }
    }

    fn data_config(&self, k: usize) -> BimodalConfig {
        match self.dim {
            BimodalDim::Two => BimodalConfig::two_dimensional(k),
            BimodalDim::Hundred => BimodalConfig::high_dimensional(k),
        }
    }

    fn components(&self) -> usize {
        match self.dim {
            BimodalDim::Two => 1,
            BimodalDim::Hundred => 2,
        }
    }
}

/// Per-replicate scores at one contamination level.
#[derive(Debug, Clone, PartialEq)]
pub struct BimodalLevel {
    pub noise_points: usize,
    pub pqsq: Vec<f64>,
    pub l2: Vec<f64>,
}

fn bimodal_score(model: &PcaModel, dim: BimodalDim, labels: &[pqsq::datagen::ClusterLabel]) -> Result<f64> {
    match dim {
        BimodalDim::Two => Ok(model.components[0][0].abs()),
        BimodalDim::Hundred => {
            let proj: Vec<[f64; 2]> =
                (0..labels.len()).map(|i| [model.projections[0][i], model.projections[1][i]]).collect();
            Ok(separation_tstat(&proj, labels)?.abs())
        }
    }
}

pub fn run_bimodal(bench: &BimodalBench) -> Result<Vec<BimodalLevel>> {
    bench
        .levels
        .iter()
        .map(|&k| {
            let cfg = bench.data_config(k);
            let spec = PotentialSpec::uniform(Majorant::Absolute, &BIMODAL_THRESHOLDS, cfg.dim())?;
            let level_seed = replicate_seed(bench.seed, k as u64);
            let scores = (0..bench.replicates)
                .into_par_iter()
                .map(|r| {
                    let seed = replicate_seed(level_seed, r as u64);
                    let (data, labels) = gen_two_cluster(&cfg, seed)?;
                    let mut opts = PcaOptions::new(bench.components(), IntervalPolicy::Fixed(spec.clone()));
                    opts.restarts = bench.restarts;
                    opts.seed = seed;
                    let pqsq = bimodal_score(&fit_pca(&data, &opts)?, bench.dim, &labels)?;
                    let l2 = bimodal_score(&fit_l2_pca(&data, bench.components())?, bench.dim, &labels)?;
                    Ok((pqsq, l2))
                })
                .collect::<Result<Vec<_>>>()?;
            let (pqsq, l2) = scores.into_iter().unzip();
            Ok(BimodalLevel { noise_points: k, pqsq, l2 })
        })
        .collect()
}

pub fn bimodal_table(levels: &[BimodalLevel], dim: BimodalDim) -> Table {
    let metric = match dim {
        BimodalDim::Two => "mean_abs_pc1_x",
        BimodalDim::Hundred => "mean_abs_tstat",
    };
    let mut t = Table::new(&["noise_points", "method", metric, "sd", "replicates"]);
    for level in levels {
        for (method, values) in [("pqsq_l1", &level.pqsq), ("l2", &level.l2)] {
            let (m, sd) = mean_sd(values);
            t.push(vec![level.noise_points.to_string(), method.into(), num(m), num(sd), values.len().to_string()]);
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierBench {
    /// One entry per (μ, p, φ) combination.
    pub configs: Vec<OutlierBenchConfig>,
    pub sets: usize,
    pub seed: u64,
    pub intervals: usize,
    pub restarts: usize,
    pub timing: bool,
}

impl OutlierBench {
    pub fn new(config: OutlierBenchConfig) -> Self {
        OutlierBench { configs: vec![config], sets: 50, seed: 0, intervals: 5, restarts: 1, timing: true }
    }

    /// Every combination of μ ∈ {1, 5, 10, 25} and p ∈ {1, 2, 3} at φ = 0.1.
    pub fn full_grid() -> Self {
        let configs = [1.0, 5.0, 10.0, 25.0]
            .iter()
            .flat_map(|&mu| (1..=3).map(move |p| OutlierBenchConfig::new(mu, p, 0.1)))
            .collect();
        OutlierBench { configs, sets: 100, ..Self::new(OutlierBenchConfig::default()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierResult {
    pub config: OutlierBenchConfig,
    pub pqsq_sigma: Vec<f64>,
    pub l2_sigma: Vec<f64>,
    pub pqsq_seconds: f64,
    pub l2_seconds: f64,
}

impl OutlierResult {
    /// Total PQSQ fitting time over total L2 fitting time.
    pub fn runtime_ratio(&self) -> f64 {
        self.pqsq_seconds / self.l2_seconds
    }
}

pub fn run_outlier(bench: &OutlierBench) -> Result<Vec<OutlierResult>> {
    bench
        .configs
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let config_seed = replicate_seed(bench.seed, c as u64);
            let policy = IntervalPolicy::Adaptive {
                majorant: Majorant::Absolute,
                config: IntervalConfig::amplitude(bench.intervals, 1.0),
                recompute_on_residuals: true,
            };
            let runs = (0..bench.sets)
                .into_par_iter()
                .map(|s| {
                    let seed = replicate_seed(config_seed, s as u64);
                    let data = gen_outlier_benchmark(cfg, seed)?;
                    let t = Instant::now();
                    let l2 = fit_l2_pca(&data, cfg.true_dims)?;
                    let l2_time = t.elapsed().as_secs_f64();
                    let mut opts = PcaOptions::new(cfg.true_dims, policy.clone());
                    opts.restarts = bench.restarts;
                    opts.seed = seed;
                    let t = Instant::now();
                    let model = fit_pca(&data, &opts)?;
                    let pqsq_time = t.elapsed().as_secs_f64();
                    Ok((sigma_metric(&model, &data)?, sigma_metric(&l2, &data)?, pqsq_time, l2_time))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OutlierResult {
                config: cfg.clone(),
                pqsq_sigma: runs.iter().map(|r| r.0).collect(),
                l2_sigma: runs.iter().map(|r| r.1).collect(),
                pqsq_seconds: runs.iter().map(|r| r.2).sum(),
                l2_seconds: runs.iter().map(|r| r.3).sum(),
            })
        })
        .collect()
}

/// `method, sigma_mean, sigma_sd, runtime_ratio`, led by the outlier
/// parameters when more than one combination was run.
pub fn outlier_table(results: &[OutlierResult], timing: bool) -> Table {
    let grid = results.len() > 1;
    let mut header = vec!["method", "sigma_mean", "sigma_sd", "runtime_ratio"];
    if grid {
        header.splice(0..0, ["mu", "p", "phi"]);
    }
    let mut t = Table::new(&header);
    for r in results {
        for (method, sigma, ratio) in [("pqsq_l1", &r.pqsq_sigma, r.runtime_ratio()), ("l2", &r.l2_sigma, 1.0)] {
            let (m, sd) = mean_sd(sigma);
            let mut row = vec![method.to_string(), num(m), num(sd), if timing { num(ratio) } else { "NA".into() }];
            if grid {
                let c = &r.config;
                row.splice(0..0, [num(c.outlier_mean), c.outlier_dims.to_string(), num(c.outlier_frequency)]);
            }
            t.push(row);
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressBench {
    pub data: SparseRegressionConfig,
    pub replicates: usize,
    pub seed: u64,
    pub lambdas: usize,
    pub penalty: Penalty,
    pub intervals: usize,
}

impl Default for RegressBench {
    fn default() -> Self {
        RegressBench {
            data: SparseRegressionConfig::default(),
            replicates: 10,
            seed: 0,
            lambdas: 30,
            penalty: Penalty::L1,
            intervals: pqsq::regression::DEFAULT_PENALTY_INTERVALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressReplicate {
    pub seed: u64,
    pub problem: RegressionProblem,
    pub beta_true: Vec<f64>,
    pub path: LambdaPath,
}

/// Smallest FVU found on the path for every support size it visits.
pub fn min_fvu_by_support(path: &LambdaPath) -> BTreeMap<usize, f64> {
    let mut best = BTreeMap::new();
    for m in &path.models {
        let e = best.entry(m.nonzeros()).or_insert(f64::INFINITY);
        *e = m.fvu.min(*e);
    }
    best
}

pub fn run_regress(bench: &RegressBench) -> Result<Vec<RegressReplicate>> {
    (0..bench.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(bench.seed, r as u64);
            let (x, y, beta_true) = gen_sparse_regression(&bench.data, seed)?;
            let problem = RegressionProblem::new(x, y, true)?;
            let spec = penalty_spec(&problem, bench.penalty, bench.intervals)?;
            let path = lambda_path(&problem, &spec, bench.lambdas)?;
            Ok(RegressReplicate { seed, problem, beta_true, path })
        })
        .collect()
}

pub fn regress_table(replicates: &[RegressReplicate]) -> Table {
    let mut t = Table::new(&["replicate", "nonzeros", "min_fvu", "max_iterations"]);
    for (r, rep) in replicates.iter().enumerate() {
        for (support, fvu) in min_fvu_by_support(&rep.path) {
            let iters = rep.path.models.iter().filter(|m| m.nonzeros() == support).map(|m| m.iterations).max();
            t.push(vec![r.to_string(), support.to_string(), num(fvu), iters.unwrap_or(0).to_string()]);
        }
    }
    t
}

/// `lambda, nonzeros, fvu` for every model on the path.
pub fn path_table(path: &LambdaPath) -> Table {
    let mut t = Table::new(&["lambda", "nonzeros", "fvu"]);
    for m in &path.models {
        t.push(vec![num(m.lambda), m.nonzeros().to_string(), num(m.fvu)]);
    }
    t
}
