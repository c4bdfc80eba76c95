//! Linear regression regularized by a PQSQ penalty on the coefficients.
//!
//! The fitted objective is
//! `(1/N) Σ_i (y_i − Σ_k β^k x_i^k)² + λ Σ_k u(β^k)`. Freezing the interval of
//! every coefficient turns the penalty into a diagonal ridge term, so each
//! iteration solves `((1/N) XᵀX + λ diag(a_I(β))) β = (1/N) Xᵀy`. The black
//! hole variant permanently zeroes coefficients that fall below a radius ε,
//! which makes the solutions sparse.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::approximators::DataMatrix;
use crate::error::{PqsqError, Result};
use crate::linalg;
use crate::potential::{default_intervals, CoordinatePotential, Majorant, PotentialSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionProblem {
    pub x: DataMatrix,
    pub y: Vec<f64>,
    /// Scale predictors to unit variance before fitting. Predictors and
    /// response are always centered, so the intercept is never penalized.
    pub standardize: bool,
}

impl RegressionProblem {
    pub fn new(x: DataMatrix, y: Vec<f64>, standardize: bool) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(PqsqError::DimensionMismatch { expected: x.rows(), found: y.len() });
        }
        if x.rows() < 2 {
            return Err(PqsqError::InvalidParameter("regression needs at least two observations".into()));
        }
        if x.cols() == 0 {
            return Err(PqsqError::Empty("predictors"));
        }
        let p = RegressionProblem { x, y, standardize };
        Design::new(&p)?;
        Ok(p)
    }

    pub fn observations(&self) -> usize {
        self.x.rows()
    }

    pub fn predictors(&self) -> usize {
        self.x.cols()
    }
}

/// Normal-equation summary of a (possibly standardized) problem.
#[derive(Debug, Clone)]
struct Design {
    m: usize,
    /// `(1/N) XᵀX`, row-major.
    gram: Vec<f64>,
    /// `(1/N) Xᵀy`.
    xty: Vec<f64>,
    /// `(1/N) yᵀy`.
    yty: f64,
    means: Vec<f64>,
    scales: Vec<f64>,
    y_mean: f64,
}

impl Design {
    fn new(p: &RegressionProblem) -> Result<Self> {
        let (n, m) = (p.x.rows(), p.x.cols());
        let nf = n as f64;
        let mut means = vec![0.0; m];
        let mut scales = vec![1.0; m];
        for k in 0..m {
            let col = p.x.column(k);
            let mean = col.iter().sum::<f64>() / nf;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            if !(var > 0.0) {
                return Err(PqsqError::DegenerateCoordinate(k));
            }
            means[k] = mean;
            if p.standardize {
                scales[k] = libm::sqrt(var);
            }
        }
        let y_mean = p.y.iter().sum::<f64>() / nf;
        let z = |i: usize, k: usize| (p.x.get(i, k) - means[k]) / scales[k];
        let mut gram = vec![0.0; m * m];
        let mut xty = vec![0.0; m];
        let mut yty = 0.0;
        let mut row = vec![0.0; m];
        for i in 0..n {
            for (k, r) in row.iter_mut().enumerate() {
                *r = z(i, k);
            }
            let yi = p.y[i] - y_mean;
            yty += yi * yi;
            for j in 0..m {
                xty[j] += row[j] * yi;
                for k in j..m {
                    gram[j * m + k] += row[j] * row[k];
                }
            }
        }
        for j in 0..m {
            xty[j] /= nf;
            for k in j..m {
                gram[j * m + k] /= nf;
                gram[k * m + j] = gram[j * m + k];
            }
        }
        Ok(Design { m, gram, xty, yty: yty / nf, means, scales, y_mean })
    }

    fn mse(&self, beta: &[f64]) -> f64 {
        let m = self.m;
        let mut quad = 0.0;
        for j in 0..m {
            if beta[j] == 0.0 {
                continue;
            }
            quad += beta[j] * linalg::dot(&self.gram[j * m..(j + 1) * m], beta);
        }
        (self.yty - 2.0 * linalg::dot(beta, &self.xty) + quad).max(0.0)
    }

    /// Solve the frozen system restricted to `active`; `ridge[j]` is added to
    /// the diagonal entry of predictor `active[j]`.
    fn solve(&self, active: &[usize], ridge: &[f64]) -> Option<Vec<f64>> {
        let s = active.len();
        let mut a = vec![0.0; s * s];
        let mut b = vec![0.0; s];
        for (r, &j) in active.iter().enumerate() {
            b[r] = self.xty[j];
            for (c, &k) in active.iter().enumerate() {
                a[r * s + c] = self.gram[j * self.m + k];
            }
            a[r * s + r] += ridge[r];
        }
        let x = linalg::solve_spd(&a, s, &b)?;
        let mut beta = vec![0.0; self.m];
        for (r, &j) in active.iter().enumerate() {
            beta[j] = x[r];
        }
        Some(beta)
    }

    fn ols(&self) -> Option<Vec<f64>> {
        let all: Vec<usize> = (0..self.m).collect();
        self.solve(&all, &vec![0.0; self.m])
    }

    /// OLS, ridge-regularized when the Gram matrix is singular.
    fn ols_or_ridge(&self) -> Result<Vec<f64>> {
        if let Some(b) = self.ols() {
            return Ok(b);
        }
        let all: Vec<usize> = (0..self.m).collect();
        let diag = (0..self.m).map(|j| self.gram[j * self.m + j]).fold(0.0, f64::max);
        let ridge = vec![1e-6 * diag.max(1e-300); self.m];
        self.solve(&all, &ridge)
            .ok_or_else(|| PqsqError::SingularSystem("ridge-regularized normal equations".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionOptions {
    pub lambda: f64,
    /// Black hole radius ε on the coefficient scale; `None` disables it.
    pub black_hole: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl RegressionOptions {
    pub fn new(lambda: f64) -> Self {
        RegressionOptions { lambda, black_hole: None, tol: 1e-10, max_iter: 200 }
    }

    pub fn with_black_hole(mut self, epsilon: f64) -> Self {
        self.black_hole = Some(epsilon);
        self
    }
}

/// Per-iteration record of a fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionTrace {
    /// Objective at the warm start.
    pub initial: f64,
    /// Objective right after each linear solve.
    pub solved: Vec<f64>,
    /// Objective after the black hole step of each iteration.
    pub objective: Vec<f64>,
    /// Coefficients zeroed by the black hole in each iteration.
    pub absorbed: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqsqRegressionModel {
    /// Coefficients on the fitting scale (standardized when requested).
    pub beta_std: Vec<f64>,
    /// Coefficients on the original predictor scale.
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// False for coefficients absorbed by the black hole.
    pub active: Vec<bool>,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub fvu: f64,
    pub trace: RegressionTrace,
}

impl PqsqRegressionModel {
    pub fn nonzeros(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + linalg::dot(&self.beta, x)
    }
}

fn validate_penalty(spec: &PotentialSpec) -> Result<&CoordinatePotential> {
    if spec.dim() != 1 {
        return Err(PqsqError::DimensionMismatch { expected: 1, found: spec.dim() });
    }
    Ok(spec.coordinate(0))
}

fn objective(design: &Design, u: &CoordinatePotential, lambda: f64, beta: &[f64]) -> f64 {
    let penalty: f64 = if lambda == 0.0 { 0.0 } else { beta.iter().map(|b| u.evaluate(*b)).sum() };
    design.mse(beta) + lambda * penalty
}

fn fit_design(
    problem: &RegressionProblem,
    design: &Design,
    u: &CoordinatePotential,
    opts: &RegressionOptions,
) -> Result<PqsqRegressionModel> {
    let lambda = opts.lambda;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(PqsqError::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if let Some(eps) = opts.black_hole {
        if !(eps >= 0.0) {
            return Err(PqsqError::InvalidParameter(format!("black hole radius must be >= 0, got {eps}")));
        }
    }
    let m = design.m;
    let a = u.a();
    let mut beta = if lambda == 0.0 {
        design
            .ols()
            .ok_or_else(|| PqsqError::SingularSystem("normal equations with lambda = 0".into()))?
    } else {
        design.ols_or_ridge()?
    };
    let mut active: Vec<usize> = (0..m).collect();
    let mut trace = RegressionTrace { initial: objective(design, u, lambda, &beta), ..Default::default() };
    let mut intervals: Vec<usize> = beta.iter().map(|b| u.interval_index(*b)).collect();

    for iteration in 1..=opts.max_iter {
        let ridge: Vec<f64> = active.iter().map(|&j| lambda * a[intervals[j]]).collect();
        let next = design.solve(&active, &ridge).ok_or_else(|| {
            PqsqError::SingularSystem(format!("normal equations on {} active predictors", active.len()))
        })?;
        let mut next = next;
        trace.solved.push(objective(design, u, lambda, &next));
        let mut absorbed = Vec::new();
        if let Some(eps) = opts.black_hole {
            for &j in &active {
                if libm::fabs(next[j]) < eps {
                    next[j] = 0.0;
                    absorbed.push(j);
                }
            }
            active.retain(|j| !absorbed.contains(j));
        }
        trace.objective.push(objective(design, u, lambda, &next));
        let next_intervals: Vec<usize> = next.iter().map(|b| u.interval_index(*b)).collect();
        let scale = beta.iter().fold(0.0f64, |acc, b| acc.max(libm::fabs(*b)));
        let change = linalg::max_abs_diff(&beta, &next) / scale.max(f64::MIN_POSITIVE);
        let stable = absorbed.is_empty() && next_intervals == intervals;
        trace.absorbed.push(absorbed);
        beta = next;
        intervals = next_intervals;
        if active.is_empty() || (stable && change < opts.tol) {
            return Ok(finish(problem, design, beta, lambda, opts.black_hole, iteration, trace));
        }
    }
    Err(PqsqError::MaxIterations { context: "PQSQ regression", iterations: opts.max_iter })
}

fn finish(
    problem: &RegressionProblem,
    design: &Design,
    beta_std: Vec<f64>,
    lambda: f64,
    epsilon: Option<f64>,
    iterations: usize,
    trace: RegressionTrace,
) -> PqsqRegressionModel {
    let beta: Vec<f64> = beta_std.iter().zip(&design.scales).map(|(b, s)| b / s).collect();
    let intercept = design.y_mean - linalg::dot(&beta, &design.means);
    let active = beta_std.iter().map(|b| *b != 0.0 || epsilon.is_none()).collect();
    let mut model = PqsqRegressionModel {
        beta_std,
        beta,
        intercept,
        lambda,
        active,
        epsilon,
        iterations,
        fvu: f64::NAN,
        trace,
    };
    model.fvu = fvu(&model, &problem.x, &problem.y).unwrap_or(f64::NAN);
    model
}

/// Iterates the frozen-interval linear system from the OLS warm start until
/// the interval assignment repeats and the relative coefficient change is
/// below `tol`.
///
/// The black hole check runs after every iteration, the first included.
pub fn fit_pqsq_regression(
    problem: &RegressionProblem,
    penalty: &PotentialSpec,
    opts: &RegressionOptions,
) -> Result<PqsqRegressionModel> {
    let u = validate_penalty(penalty)?;
    let design = Design::new(problem)?;
    let model = fit_design(problem, &design, u, opts)?;
    if opts.lambda == 0.0 && model.nonzeros() == 0 {
        return Err(PqsqError::AllCoefficientsAbsorbed);
    }
    Ok(model)
}

/// Starts at `r_1 / 2` and halves until the `λ = 0` black hole fit keeps at
/// least half of the coefficients.
pub fn black_hole_radius(problem: &RegressionProblem, penalty: &PotentialSpec) -> Result<f64> {
    let u = validate_penalty(penalty)?;
    let r1 = *u.thresholds().get(1).ok_or_else(|| {
        PqsqError::InvalidParameter("penalty needs at least one positive threshold".into())
    })?;
    if !(r1 > 0.0) {
        return Err(PqsqError::InvalidParameter("penalty r_1 must be positive".into()));
    }
    let design = Design::new(problem)?;
    let m = design.m;
    let mut eps = r1 / 2.0;
    loop {
        let model = fit_design(problem, &design, u, &RegressionOptions::new(0.0).with_black_hole(eps))?;
        if 2 * model.nonzeros() >= m {
            return Ok(eps);
        }
        eps /= 2.0;
        if eps < 1e-300 {
            return Err(PqsqError::RadiusUnderflow);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPath {
    pub epsilon: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ascending in λ.
    pub models: Vec<PqsqRegressionModel>,
}

/// Log-spaced path between `λ_min`, the largest halving of `λ_max` that keeps
/// as many coefficients as the `λ = 0` black hole fit, and `λ_max`, the
/// smallest λ found by doubling then bisection that leaves at most one
/// nonzero coefficient.
pub fn lambda_path(problem: &RegressionProblem, penalty: &PotentialSpec, n_lambdas: usize) -> Result<LambdaPath> {
    if n_lambdas < 2 {
        return Err(PqsqError::InvalidParameter("a lambda path needs at least two values".into()));
    }
    let u = validate_penalty(penalty)?;
    let epsilon = black_hole_radius(problem, penalty)?;
    let design = Design::new(problem)?;
    let fit = |lambda: f64| fit_design(problem, &design, u, &RegressionOptions::new(lambda).with_black_hole(epsilon));
    let survivors = fit(0.0)?.nonzeros();
    let sparse = |lambda: f64| -> Result<bool> { Ok(fit(lambda)?.nonzeros() <= 1) };

    const MAX_STEPS: usize = 60;
    let (mut lo, mut hi) = (1e-3, 1e-3);
    if sparse(hi)? {
        let mut steps = 0;
        while sparse(lo)? {
            lo /= 2.0;
            steps += 1;
            if steps > MAX_STEPS {
                break;
            }
        }
        hi = 2.0 * lo;
    } else {
        let mut steps = 0;
        while !sparse(hi)? {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_STEPS {
                return Err(PqsqError::LambdaSearchFailed(MAX_STEPS));
            }
        }
    }
    for _ in 0..MAX_STEPS {
        if hi / lo - 1.0 < 1e-4 {
            break;
        }
        let mid = libm::sqrt(lo * hi);
        if sparse(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda_max = hi;

    let mut lambda_min = lambda_max;
    let mut steps = 0;
    while fit(lambda_min)?.nonzeros() != survivors {
        lambda_min /= 2.0;
        steps += 1;
        if steps > 4 * MAX_STEPS {
            return Err(PqsqError::LambdaSearchFailed(steps));
        }
    }

    let ratio = lambda_max / lambda_min;
    let models = (0..n_lambdas)
        .map(|i| {
            let lambda = if i + 1 == n_lambdas {
                lambda_max
            } else {
                lambda_min * libm::pow(ratio, i as f64 / (n_lambdas - 1) as f64)
            };
            fit(lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LambdaPath { epsilon, lambda_min, lambda_max, models })
}

/// `Σ(y − ŷ)² / Σ(y − ȳ)²`.
pub fn fvu(model: &PqsqRegressionModel, x: &DataMatrix, y: &[f64]) -> Result<f64> {
    if y.len() != x.rows() {
        return Err(PqsqError::DimensionMismatch { expected: x.rows(), found: y.len() });
    }
    let predictions: Vec<f64> = (0..x.rows()).map(|i| model.predict(x.row(i))).collect();
    fvu_from_predictions(y, &predictions)
}

pub fn fvu_from_predictions(y: &[f64], predictions: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(PqsqError::Empty("response"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let total: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if !(total > 0.0) {
        return Err(PqsqError::ZeroVariance);
    }
    let residual: f64 = y.iter().zip(predictions).map(|(v, p)| (v - p) * (v - p)).sum();
    Ok(residual / total)
}

/// Imitated penalty function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Penalty {
    L1,
    /// `((1 − α)/α) x² + α |x|`.
    ElasticNet { alpha: f64 },
}

impl Penalty {
    pub fn majorant(self) -> Majorant {
        match self {
            Penalty::L1 => Majorant::Absolute,
            Penalty::ElasticNet { alpha } => Majorant::PenaltyMixture { alpha },
        }
    }
}

pub const DEFAULT_PENALTY_INTERVALS: usize = 5;

/// Penalty potential with `p` intervals spanning `[0, max_k |β_OLS,k|]` on
/// the fitting scale.
pub fn penalty_spec(problem: &RegressionProblem, penalty: Penalty, p: usize) -> Result<PotentialSpec> {
    let design = Design::new(problem)?;
    let ols = design.ols_or_ridge()?;
    let d = ols.iter().fold(0.0f64, |acc, b| acc.max(libm::fabs(*b)));
    if !(d > 0.0) {
        return Err(PqsqError::InvalidParameter("all least-squares coefficients are zero".into()));
    }
    let r = default_intervals(d, p)?;
    PotentialSpec::uniform(penalty.majorant(), &r, 1)
}
