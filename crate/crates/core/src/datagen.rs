//! Seeded synthetic data for the robustness benchmarks and their metrics.
//!
//! Every generator is a pure function of its configuration and seed. The
//! generator state is [`ChaCha8Rng`], which is portable across platforms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::approximators::{reconstruct, DataMatrix, PcaModel};
use crate::error::{PqsqError, Result};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent seed for replicate `index` of a run seeded with `master`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse Laplace CDF with location `mean` and scale `b`.
pub fn laplace_from_uniform(mean: f64, b: f64, u: f64) -> f64 {
    let c = u - 0.5;
    let sign = if c > 0.0 {
        1.0
    } else if c < 0.0 {
        -1.0
    } else {
        0.0
    };
    mean - b * sign * libm::log(1.0 - 2.0 * libm::fabs(c))
}

/// Laplace scale giving standard deviation `sd`.
pub fn laplace_scale(sd: f64) -> f64 {
    sd / core::f64::consts::SQRT_2
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `n` Laplace draws with scale parameter `b` (standard deviation `b·√2`).
pub fn sample_laplace<R: Rng + ?Sized>(mean: f64, b: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(PqsqError::InvalidParameter(format!("Laplace scale must be positive, got {b}")));
    }
    Ok((0..n).map(|_| laplace_from_uniform(mean, b, open_uniform(rng))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterLabel {
    First,
    Second,
    Noise,
}

impl ClusterLabel {
    pub fn code(self) -> u8 {
        match self {
            ClusterLabel::First => 0,
            ClusterLabel::Second => 1,
            ClusterLabel::Noise => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalConfig {
    pub points_per_cluster: usize,
    /// Contaminating noise points.
    pub noise_points: usize,
    /// Cluster centers are `±center_offset` on the first axis.
    pub center_offset: f64,
    pub cluster_sd: f64,
    /// Per-coordinate standard deviation of the Laplace noise; its length is
    /// the dimension.
    pub noise_sds: Vec<f64>,
}

impl BimodalConfig {
    pub fn two_dimensional(noise_points: usize) -> Self {
        BimodalConfig {
            points_per_cluster: 100,
            noise_points,
            center_offset: 1.0,
            cluster_sd: 0.1,
            noise_sds: vec![2.0, 4.0],
        }
    }

    /// 100 dimensions, unit noise except sd 2 and 4 in the third and fourth
    /// coordinates.
    pub fn high_dimensional(noise_points: usize) -> Self {
        let mut noise_sds = vec![1.0; 100];
        noise_sds[2] = 2.0;
        noise_sds[3] = 4.0;
        BimodalConfig { noise_sds, ..Self::two_dimensional(noise_points) }
    }

    pub fn dim(&self) -> usize {
        self.noise_sds.len()
    }

    fn validate(&self) -> Result<()> {
        if self.points_per_cluster < 2 {
            return Err(PqsqError::InvalidParameter("each cluster needs at least two points".into()));
        }
        if self.dim() == 0 {
            return Err(PqsqError::Empty("noise standard deviations"));
        }
        if !(self.cluster_sd > 0.0) || self.noise_sds.iter().any(|s| !(*s > 0.0)) {
            return Err(PqsqError::InvalidParameter("standard deviations must be positive".into()));
        }
        Ok(())
    }
}

/// Two normal clusters followed by the noise rows, drawn from a product of
/// zero-mean Laplace distributions with the configured standard deviations.
pub fn gen_two_cluster(cfg: &BimodalConfig, seed: u64) -> Result<(DataMatrix, Vec<ClusterLabel>)> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let m = cfg.dim();
    let n = 2 * cfg.points_per_cluster + cfg.noise_points;
    let mut values = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    let cluster = Normal::new(0.0, cfg.cluster_sd).expect("validated sd");
    for (label, sign) in [(ClusterLabel::First, -1.0), (ClusterLabel::Second, 1.0)] {
        for _ in 0..cfg.points_per_cluster {
            for k in 0..m {
                let c = if k == 0 { sign * cfg.center_offset } else { 0.0 };
                values.push(c + cluster.sample(&mut rng));
            }
            labels.push(label);
        }
    }
    let scales: Vec<f64> = cfg.noise_sds.iter().map(|s| laplace_scale(*s)).collect();
    for _ in 0..cfg.noise_points {
        for b in &scales {
            values.push(laplace_from_uniform(0.0, *b, open_uniform(&mut rng)));
        }
        labels.push(ClusterLabel::Noise);
    }
    Ok((DataMatrix::new(n, m, values)?, labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierBenchConfig {
    pub n: usize,
    /// Dimensions carrying the uniform signal; the same number of noise
    /// dimensions follows.
    pub true_dims: usize,
    pub uniform_half_width: f64,
    /// Standard deviation of the background and outlier Laplace noise.
    pub noise_sd: f64,
    pub outlier_mean: f64,
    /// Leading noise dimensions that receive outliers.
    pub outlier_dims: usize,
    /// Probability that a row is an outlier.
    pub outlier_frequency: f64,
}

impl Default for OutlierBenchConfig {
    fn default() -> Self {
        OutlierBenchConfig {
            n: 1000,
            true_dims: 5,
            uniform_half_width: 10.0,
            noise_sd: 0.1,
            outlier_mean: 10.0,
            outlier_dims: 2,
            outlier_frequency: 0.1,
        }
    }
}

impl OutlierBenchConfig {
    pub fn new(outlier_mean: f64, outlier_dims: usize, outlier_frequency: f64) -> Self {
        OutlierBenchConfig { outlier_mean, outlier_dims, outlier_frequency, ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        2 * self.true_dims
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.true_dims == 0 {
            return Err(PqsqError::InvalidParameter("benchmark needs points and dimensions".into()));
        }
        if self.outlier_dims > self.true_dims {
            return Err(PqsqError::InvalidParameter(format!(
                "outlier dimension count {} exceeds {}",
                self.outlier_dims, self.true_dims
            )));
        }
        if !(0.0..=1.0).contains(&self.outlier_frequency) {
            return Err(PqsqError::InvalidParameter("outlier frequency must lie in [0, 1]".into()));
        }
        if !(self.noise_sd > 0.0 && self.uniform_half_width > 0.0) {
            return Err(PqsqError::InvalidParameter("noise sd and uniform width must be positive".into()));
        }
        Ok(())
    }
}

pub fn gen_outlier_benchmark(cfg: &OutlierBenchConfig, seed: u64) -> Result<DataMatrix> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let (t, m) = (cfg.true_dims, cfg.dim());
    let b = laplace_scale(cfg.noise_sd);
    let w = cfg.uniform_half_width;
    let mut values = Vec::with_capacity(cfg.n * m);
    for _ in 0..cfg.n {
        for _ in 0..t {
            values.push(rng.random_range(-w..w));
        }
        for _ in 0..t {
            values.push(laplace_from_uniform(0.0, b, open_uniform(&mut rng)));
        }
        if rng.random_bool(cfg.outlier_frequency) {
            let row = values.len() - m;
            for k in 0..cfg.outlier_dims {
                values[row + t + k] = laplace_from_uniform(cfg.outlier_mean, b, open_uniform(&mut rng));
            }
        }
    }
    DataMatrix::new(cfg.n, m, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRegressionConfig {
    pub n: usize,
    pub m: usize,
    /// Nonzero true coefficients, placed on randomly chosen predictors.
    pub coefficients: Vec<f64>,
    pub noise_sd: f64,
}

impl Default for SparseRegressionConfig {
    fn default() -> Self {
        SparseRegressionConfig { n: 100, m: 20, coefficients: vec![2.0, -1.5, 1.0, -0.75, 0.5], noise_sd: 0.1 }
    }
}

/// Standard normal predictors and `y = Xβ + N(0, noise_sd²)`. Returns the
/// predictors, the response and the true coefficient vector.
pub fn gen_sparse_regression(cfg: &SparseRegressionConfig, seed: u64) -> Result<(DataMatrix, Vec<f64>, Vec<f64>)> {
    if cfg.coefficients.len() > cfg.m || cfg.n < 2 {
        return Err(PqsqError::InvalidParameter("need n >= 2 and at most m nonzero coefficients".into()));
    }
    if !(cfg.noise_sd >= 0.0) {
        return Err(PqsqError::InvalidParameter("noise sd must be >= 0".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut beta = vec![0.0; cfg.m];
    let support = rand::seq::index::sample(&mut rng, cfg.m, cfg.coefficients.len());
    for (j, c) in support.iter().zip(&cfg.coefficients) {
        beta[j] = *c;
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let values: Vec<f64> = (0..cfg.n * cfg.m).map(|_| normal.sample(&mut rng)).collect();
    let x = DataMatrix::new(cfg.n, cfg.m, values)?;
    let y = (0..cfg.n)
        .map(|i| {
            let signal: f64 = x.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
            signal + cfg.noise_sd * normal.sample(&mut rng)
        })
        .collect();
    Ok((x, y, beta))
}

/// Mean L1 norm of the restored points in the noise dimensions:
/// `(1/N) Σ_i Σ_{k=6..10} |P^k(x_i)|` for a five-component model of
/// ten-dimensional data.
pub fn sigma_metric(model: &PcaModel, data: &DataMatrix) -> Result<f64> {
    if model.n_components() != 5 {
        return Err(PqsqError::InvalidParameter(format!(
            "sigma needs exactly 5 components, got {}",
            model.n_components()
        )));
    }
    if data.cols() != 10 || model.center.len() != 10 {
        return Err(PqsqError::DimensionMismatch { expected: 10, found: data.cols() });
    }
    let restored = reconstruct(model, &model.center)?;
    if restored.rows() != data.rows() {
        return Err(PqsqError::DimensionMismatch { expected: data.rows(), found: restored.rows() });
    }
    Ok(sigma_from_restored(&restored))
}

/// σ of an already restored matrix, summing over the last five columns.
pub fn sigma_from_restored(restored: &DataMatrix) -> f64 {
    let m = restored.cols();
    let total: f64 = (0..restored.rows())
        .map(|i| restored.row(i)[m.saturating_sub(5)..].iter().map(|v| libm::fabs(*v)).sum::<f64>())
        .sum();
    total / restored.rows() as f64
}

/// Pooled two-sample t statistic of the two clusters projected on the line
/// through their 2D centroids. Noise rows are ignored. The line is oriented
/// so that its first nonzero coordinate is positive, which makes the
/// statistic change sign when the labels are swapped.
pub fn separation_tstat(projections: &[[f64; 2]], labels: &[ClusterLabel]) -> Result<f64> {
    if projections.len() != labels.len() {
        return Err(PqsqError::DimensionMismatch { expected: projections.len(), found: labels.len() });
    }
    let group = |l: ClusterLabel| -> Vec<[f64; 2]> {
        projections.iter().zip(labels).filter(|(_, g)| **g == l).map(|(p, _)| *p).collect()
    };
    let (a, b) = (group(ClusterLabel::First), group(ClusterLabel::Second));
    if a.len() < 2 || b.len() < 2 {
        return Err(PqsqError::InvalidParameter("each group needs at least two points".into()));
    }
    let centroid = |g: &[[f64; 2]]| {
        let n = g.len() as f64;
        [g.iter().map(|p| p[0]).sum::<f64>() / n, g.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let (ca, cb) = (centroid(&a), centroid(&b));
    let mut dir = [cb[0] - ca[0], cb[1] - ca[1]];
    let len = libm::hypot(dir[0], dir[1]);
    if len == 0.0 {
        return Ok(0.0);
    }
    dir = [dir[0] / len, dir[1] / len];
    if dir[0] < 0.0 || (dir[0] == 0.0 && dir[1] < 0.0) {
        dir = [-dir[0], -dir[1]];
    }
    let scalar = |g: &[[f64; 2]]| -> Vec<f64> { g.iter().map(|p| p[0] * dir[0] + p[1] * dir[1]).collect() };
    Ok(pooled_t(&scalar(&a), &scalar(&b)))
}

/// `(mean(b) − mean(a)) / (s_p √(1/n_a + 1/n_b))`.
pub fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let ss = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() + b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>();
    let sp = libm::sqrt(ss / (na + nb - 2.0));
    let diff = mb - ma;
    if sp == 0.0 {
        return if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
    }
    diff / (sp * libm::sqrt(1.0 / na + 1.0 / nb))
}
