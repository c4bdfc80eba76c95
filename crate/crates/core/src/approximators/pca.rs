use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mean::weighted_error;
use super::{check_dims, pqsq_mean, DataMatrix, MeanOptions};
use crate::error::{PqsqError, Result};
use crate::linalg;
use crate::potential::{IntervalConfig, Majorant, PotentialSpec};

/// Order of the projection and direction updates inside one iteration of
/// [`fit_pc1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pc1Update {
    /// New projections first, then the direction from the new projections;
    /// the direction is renormalized with the projections rescaled so the
    /// fitted line is unchanged. Never increases the objective.
    #[default]
    Sequential,
    /// Projections and direction both computed from the previous iterate,
    /// then the direction is normalized on its own.
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pc1Options {
    /// Bound on the sup-norm direction change.
    pub tol: f64,
    /// Relative objective decrease below which an iteration with a repeated
    /// interval assignment counts as converged.
    pub objective_tol: f64,
    pub max_iter: usize,
    pub update: Pc1Update,
}

impl Default for Pc1Options {
    fn default() -> Self {
        Pc1Options { tol: 1e-6, objective_tol: 1e-8, max_iter: 10_000, update: Pc1Update::Sequential }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pc1Fit {
    /// Unit direction.
    pub v: Vec<f64>,
    /// Projection of every point onto `v`.
    pub nu: Vec<f64>,
    pub error: f64,
    pub iterations: usize,
    /// Objective at the start and after every iteration.
    pub trace: Vec<f64>,
}

/// Residuals of the centered data around the line `v·ν`: refreshes the
/// interval of every entry and its quadratic coefficient, and returns the
/// weighted objective.
fn refresh_line(
    xc: &[f64],
    data: &DataMatrix,
    spec: &PotentialSpec,
    v: &[f64],
    nu: &[f64],
    intervals: &mut [u16],
    coeff: &mut [f64],
) -> f64 {
    let m = v.len();
    let coords: Vec<(&[f64], &[f64], &[f64])> =
        spec.coordinates().iter().map(|c| (&c.thresholds()[1..], c.a(), c.b())).collect();
    let mut total = 0.0;
    for (i, row) in xc.chunks_exact(m).enumerate() {
        let w = data.weight(i);
        let mut e = 0.0;
        for (k, (r_up, a, b)) in coords.iter().enumerate() {
            let r = row[k] - v[k] * nu[i];
            let ar = libm::fabs(r);
            let s = r_up.iter().map(|t| (*t <= ar) as usize).sum::<usize>();
            intervals[i * m + k] = s as u16;
            coeff[i * m + k] = a[s];
            e += b[s] + a[s] * r * r;
        }
        if w != 0.0 {
            total += w * e;
        }
    }
    total
}

fn direction_change(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| libm::fabs(x + y)).fold(0.0, f64::max);
    plus.min(minus)
}

/// First principal component of `data` around a fixed `center` under the
/// PQSQ potential, by splitting: freeze the interval of every residual
/// coordinate, then solve for projections and direction in closed form.
///
/// Converges when the direction moves less than `tol` (sup norm), or when
/// the interval assignment repeats and the objective has stopped moving.
pub fn fit_pc1(
    data: &DataMatrix,
    spec: &PotentialSpec,
    center: &[f64],
    init_v: &[f64],
    opts: &Pc1Options,
) -> Result<Pc1Fit> {
    check_dims(data, spec)?;
    let (n, m) = (data.rows(), data.cols());
    if center.len() != m || init_v.len() != m {
        return Err(PqsqError::DimensionMismatch { expected: m, found: center.len().min(init_v.len()) });
    }
    if spec.coordinates().iter().any(|c| c.intervals() >= u16::MAX as usize) {
        return Err(PqsqError::InvalidParameter("too many intervals".into()));
    }
    let xc: Vec<f64> = data.values().iter().enumerate().map(|(idx, x)| x - center[idx % m]).collect();
    let mut v = init_v.to_vec();
    let vv = linalg::dot(&v, &v);
    if !(vv > 0.0) {
        return Err(PqsqError::DirectionCollapsed);
    }
    let mut nu: Vec<f64> = xc.chunks_exact(m).map(|row| linalg::dot(row, &v) / vv).collect();
    let mut intervals = vec![0u16; n * m];
    let mut previous = vec![0u16; n * m];
    let mut coeff = vec![0.0; n * m];
    let mut trace = vec![refresh_line(&xc, data, spec, &v, &nu, &mut intervals, &mut coeff)];
    let mut nu_next = vec![0.0; n];
    let (mut num, mut den) = (vec![0.0; m], vec![0.0; m]);

    for iteration in 1..=opts.max_iter {
        // `intervals` and `coeff` describe the residuals around the current line
        let norm = linalg::norm(&v);
        if !(norm > 0.0) {
            return Err(PqsqError::DirectionCollapsed);
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if opts.update == Pc1Update::Sequential {
            nu.iter_mut().for_each(|x| *x *= norm);
        }
        let v_start = v.clone();

        num.iter_mut().for_each(|x| *x = 0.0);
        den.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in xc.chunks_exact(m).enumerate() {
            let a = &coeff[i * m..(i + 1) * m];
            let (mut pn, mut pd) = (0.0, 0.0);
            for k in 0..m {
                let av = a[k] * v[k];
                pn += av * row[k];
                pd += av * v[k];
            }
            nu_next[i] = if pd > 0.0 { pn / pd } else { 0.0 };
            let t = match opts.update {
                Pc1Update::Sequential => nu_next[i],
                Pc1Update::Simultaneous => nu[i],
            };
            let w = data.weight(i);
            for k in 0..m {
                let wa = w * a[k];
                num[k] += wa * row[k] * t;
                den[k] += wa * t * t;
            }
        }
        for k in 0..m {
            if den[k] > 0.0 {
                v[k] = num[k] / den[k];
            }
        }
        core::mem::swap(&mut nu, &mut nu_next);

        let new_norm = linalg::norm(&v);
        if !(new_norm > 0.0) {
            return Err(PqsqError::DirectionCollapsed);
        }
        let unit: Vec<f64> = v.iter().map(|x| x / new_norm).collect();
        if opts.update == Pc1Update::Simultaneous {
            // the next iteration starts from the normalized direction
            v.copy_from_slice(&unit);
        }
        core::mem::swap(&mut intervals, &mut previous);
        let error = refresh_line(&xc, data, spec, &v, &nu, &mut intervals, &mut coeff);
        let prev_error = *trace.last().expect("nonempty");
        trace.push(error);

        let moved = direction_change(&unit, &v_start);
        let repeated = iteration > 1 && intervals == previous;
        let stalled = libm::fabs(prev_error - error) <= opts.objective_tol * libm::fmax(1.0, libm::fabs(error));
        if moved < opts.tol || (repeated && stalled) {
            if opts.update == Pc1Update::Sequential {
                nu.iter_mut().for_each(|x| *x *= new_norm);
            }
            return Ok(Pc1Fit { v: unit, nu, error, iterations: iteration, trace });
        }
    }
    Err(PqsqError::MaxIterations { context: "PQSQ first principal component", iterations: opts.max_iter })
}

/// Leading eigenvector of `Σ_i w_i (x_i − c)(x_i − c)ᵀ`.
pub fn l2_leading_direction(data: &DataMatrix, center: &[f64]) -> Vec<f64> {
    let (_, vectors) = linalg::symmetric_eigen(&scatter(data, center), data.cols());
    vectors[..data.cols()].to_vec()
}

fn scatter(data: &DataMatrix, center: &[f64]) -> Vec<f64> {
    let m = data.cols();
    let mut s = vec![0.0; m * m];
    let mut d = vec![0.0; m];
    for i in 0..data.rows() {
        let w = data.weight(i);
        for k in 0..m {
            d[k] = data.get(i, k) - center[k];
        }
        for a in 0..m {
            for b in a..m {
                s[a * m + b] += w * d[a] * d[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            s[a * m + b] = s[b * m + a];
        }
    }
    s
}

/// Where the interval thresholds of a PCA fit come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalPolicy {
    /// One potential for the center and every component.
    Fixed(PotentialSpec),
    /// Thresholds placed from the data. With `recompute_on_residuals` they are
    /// placed again from the residuals before every component after the
    /// first; a coordinate whose residual spread vanishes keeps its previous
    /// thresholds.
    Adaptive { majorant: Majorant, config: IntervalConfig, recompute_on_residuals: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaOptions {
    pub n_components: usize,
    /// Starts per component: the L2 leading direction, then `restarts − 1`
    /// random residual rows.
    pub restarts: usize,
    pub seed: u64,
    pub policy: IntervalPolicy,
    pub pc1: Pc1Options,
    pub mean: MeanOptions,
}

impl PcaOptions {
    pub fn new(n_components: usize, policy: IntervalPolicy) -> Self {
        PcaOptions {
            n_components,
            restarts: 5,
            seed: 0,
            policy,
            pc1: Pc1Options::default(),
            mean: MeanOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFit {
    /// Residual error before this component, under its potential.
    pub error_before: f64,
    /// Residual error after subtracting this component.
    pub error: f64,
    pub iterations: usize,
    /// Index of the winning start (0 is the L2 start).
    pub restart: usize,
    /// Objective trace of the winning start.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Unit component directions.
    pub components: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    /// `projections[j][i]`: coordinate of point `i` along component `j`.
    pub projections: Vec<Vec<f64>>,
    pub fits: Vec<ComponentFit>,
    pub seed: u64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.error).collect()
    }
}

fn initial_spec(data: &DataMatrix, policy: &IntervalPolicy) -> Result<PotentialSpec> {
    match policy {
        IntervalPolicy::Fixed(spec) => {
            check_dims(data, spec)?;
            Ok(spec.clone())
        }
        IntervalPolicy::Adaptive { majorant, config, .. } => {
            PotentialSpec::from_columns(*majorant, &data.columns(), config)
        }
    }
}

fn residual_spec(residual: &DataMatrix, previous: &PotentialSpec, policy: &IntervalPolicy) -> Result<PotentialSpec> {
    let IntervalPolicy::Adaptive { majorant, config, recompute_on_residuals: true } = policy else {
        return Ok(previous.clone());
    };
    let mut spec = previous.clone();
    for k in 0..residual.cols() {
        let single = PotentialSpec::from_columns(*majorant, &[residual.column(k)], config);
        if let Ok(s) = single {
            spec.replace_coordinate(k, s.coordinate(0).clone());
        }
    }
    Ok(spec)
}

/// PQSQ principal components by deflation: the center is the PQSQ mean, then
/// each component is the best of several [`fit_pc1`] starts on the current
/// residuals, and its projections are subtracted before the next one.
///
/// Components are unit length but need not be orthogonal.
pub fn fit_pca(data: &DataMatrix, opts: &PcaOptions) -> Result<PcaModel> {
    let (n, m) = (data.rows(), data.cols());
    if opts.n_components == 0 || opts.n_components > m {
        return Err(PqsqError::InvalidParameter(alloc::format!(
            "component count must be in 1..={m}, got {}",
            opts.n_components
        )));
    }
    let mut spec = initial_spec(data, &opts.policy)?;
    let center = pqsq_mean(data, &spec, &opts.mean)?.center;
    let mut values = data.values().to_vec();
    for i in 0..n {
        for k in 0..m {
            values[i * m + k] -= center[k];
        }
    }
    let mut residual = rebuild(data, values)?;
    let zero = vec![0.0; m];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut components = Vec::with_capacity(opts.n_components);
    let mut projections = Vec::with_capacity(opts.n_components);
    let mut fits = Vec::with_capacity(opts.n_components);

    for j in 0..opts.n_components {
        if j > 0 {
            spec = residual_spec(&residual, &spec, &opts.policy)?;
        }
        let error_before = weighted_error(&residual, &spec, &zero);
        let mut best: Option<(usize, Pc1Fit)> = None;
        for restart in 0..opts.restarts.max(1) {
            let init = if restart == 0 {
                l2_leading_direction(&residual, &zero)
            } else {
                let row = rng.random_range(0..n);
                residual.row(row).to_vec()
            };
            let fit = match fit_pc1(&residual, &spec, &zero, &init, &opts.pc1) {
                Ok(f) => f,
                Err(e) if restart == 0 => return Err(e),
                // a random start on a (near-)zero residual row; try the next
                Err(_) => continue,
            };
            if best.as_ref().is_none_or(|(_, b)| fit.error < b.error) {
                best = Some((restart, fit));
            }
        }
        let (restart, fit) = best.expect("the L2 start either succeeds or returns early");
        let mut values = residual.values().to_vec();
        for i in 0..n {
            for k in 0..m {
                values[i * m + k] -= fit.v[k] * fit.nu[i];
            }
        }
        residual = rebuild(data, values)?;
        fits.push(ComponentFit { error_before, error: fit.error, iterations: fit.iterations, restart, trace: fit.trace });
        components.push(fit.v);
        projections.push(fit.nu);
    }
    Ok(PcaModel { components, center, projections, fits, seed: opts.seed })
}

fn rebuild(template: &DataMatrix, values: Vec<f64>) -> Result<DataMatrix> {
    let d = DataMatrix::new(template.rows(), template.cols(), values)?;
    match template.weights() {
        Some(w) => d.with_weights(w.to_vec()),
        None => Ok(d),
    }
}

/// Standard L2 principal components from the eigen-decomposition of the
/// covariance around the (weighted) arithmetic mean.
pub fn fit_l2_pca(data: &DataMatrix, n_components: usize) -> Result<PcaModel> {
    let (n, m) = (data.rows(), data.cols());
    if n_components == 0 || n_components > m {
        return Err(PqsqError::InvalidParameter(alloc::format!(
            "component count must be in 1..={m}, got {n_components}"
        )));
    }
    let center = data.arithmetic_mean();
    let (_, vectors) = linalg::symmetric_eigen(&scatter(data, &center), m);
    let mut residual: Vec<f64> = (0..n * m).map(|idx| data.values()[idx] - center[idx % m]).collect();
    let mut components = Vec::with_capacity(n_components);
    let mut projections = Vec::with_capacity(n_components);
    let mut fits = Vec::with_capacity(n_components);
    let sq = |r: &[f64]| -> f64 { (0..n).map(|i| data.weight(i) * linalg::dot(&r[i * m..(i + 1) * m], &r[i * m..(i + 1) * m])).sum() };
    for j in 0..n_components {
        let v = vectors[j * m..(j + 1) * m].to_vec();
        let error_before = sq(&residual);
        let nu: Vec<f64> = (0..n).map(|i| linalg::dot(&residual[i * m..(i + 1) * m], &v)).collect();
        for i in 0..n {
            for k in 0..m {
                residual[i * m + k] -= v[k] * nu[i];
            }
        }
        let error = sq(&residual);
        fits.push(ComponentFit { error_before, error, iterations: 1, restart: 0, trace: vec![error_before, error] });
        components.push(v);
        projections.push(nu);
    }
    Ok(PcaModel { components, center, projections, fits, seed: 0 })
}

/// Restored points `P(x_i) = Σ_j ν_ij V_j + center`.
pub fn reconstruct(model: &PcaModel, center: &[f64]) -> Result<DataMatrix> {
    let m = center.len();
    let n = match model.projections.first() {
        Some(p) => p.len(),
        None => return Err(PqsqError::Empty("model without components has no points")),
    };
    let mut values = Vec::with_capacity(n * m);
    for i in 0..n {
        for k in 0..m {
            let s: f64 = model.components.iter().zip(&model.projections).map(|(v, nu)| v[k] * nu[i]).sum();
            values.push(s + center[k]);
        }
    }
    DataMatrix::new(n, m, values)
}

/// Like [`reconstruct`] but for a known point count, so a model with zero
/// components restores every point to `center`.
pub fn reconstruct_n(model: &PcaModel, center: &[f64], n: usize) -> Result<DataMatrix> {
    if model.components.is_empty() {
        return DataMatrix::new(n, center.len(), center.repeat(n));
    }
    reconstruct(model, center)
}
