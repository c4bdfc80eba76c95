//! Minorant functions: pointwise minima of finitely many positive-definite
//! quadratic forms, and the splitting optimizer that finds their local minima.
//!
//! Every PQSQ functional in this crate is a minorant of this kind with
//! diagonal forms; the specialized fitters exploit that structure directly,
//! while this module keeps the general dense version and serves as a
//! reference for their convergence behaviour.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{PqsqError, Result};
use crate::linalg;

/// `q(x) = q0 + (q1, x) + (x, Q2 x)` with symmetric positive-definite `Q2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q0: f64,
    q1: Vec<f64>,
    q2: Vec<f64>,
    minimizer: Vec<f64>,
}

impl QuadraticForm {
    /// `q2` is row-major `n × n`. Fails with [`PqsqError::SingularForm`]
    /// (index 0) when `q2` is not symmetric positive definite.
    pub fn new(q0: f64, q1: Vec<f64>, q2: Vec<f64>) -> Result<Self> {
        let n = q1.len();
        if n == 0 {
            return Err(PqsqError::Empty("quadratic form"));
        }
        if q2.len() != n * n {
            return Err(PqsqError::DimensionMismatch { expected: n * n, found: q2.len() });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (q2[i * n + j], q2[j * n + i]);
                if libm::fabs(x - y) > 1e-12 * libm::fmax(1.0, libm::fmax(libm::fabs(x), libm::fabs(y))) {
                    return Err(PqsqError::SingularForm(0));
                }
            }
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || q2[i * n + j] == 0.0));
        if diagonal {
            if (0..n).any(|i| !(q2[i * n + i] > 0.0)) {
                return Err(PqsqError::SingularForm(0));
            }
            let minimizer = (0..n).map(|i| -q1[i] / (2.0 * q2[i * n + i])).collect();
            return Ok(QuadraticForm { q0, q1, q2, minimizer });
        }
        // argmin solves 2 Q2 x = -q1
        let h: Vec<f64> = q2.iter().map(|v| 2.0 * v).collect();
        let rhs: Vec<f64> = q1.iter().map(|v| -v).collect();
        let minimizer = linalg::solve_spd(&h, n, &rhs).ok_or(PqsqError::SingularForm(0))?;
        Ok(QuadraticForm { q0, q1, q2, minimizer })
    }

    pub fn diagonal(q0: f64, q1: Vec<f64>, diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut q2 = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            q2[i * n + i] = *d;
        }
        Self::new(q0, q1, q2)
    }

    /// `c + w·‖x − center‖²`.
    pub fn centered(c: f64, center: &[f64], w: f64) -> Result<Self> {
        let q0 = c + w * linalg::dot(center, center);
        let q1 = center.iter().map(|v| -2.0 * w * v).collect();
        Self::diagonal(q0, q1, &vec![w; center.len()])
    }

    pub fn dim(&self) -> usize {
        self.q1.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let quad: f64 = (0..n)
            .map(|i| x[i] * linalg::dot(&self.q2[i * n..(i + 1) * n], x))
            .sum();
        self.q0 + linalg::dot(&self.q1, x) + quad
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    fn combine(&self, alpha: f64, other: &QuadraticForm, beta: f64) -> Result<Self> {
        let q1 = self.q1.iter().zip(&other.q1).map(|(a, b)| alpha * a + beta * b).collect();
        let q2 = self.q2.iter().zip(&other.q2).map(|(a, b)| alpha * a + beta * b).collect();
        Self::new(alpha * self.q0 + beta * other.q0, q1, q2)
    }
}

/// `u(x) = min_i q_i(x)` over a nonempty family of forms of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorantFunction {
    forms: Vec<QuadraticForm>,
}

impl MinorantFunction {
    pub fn new(forms: Vec<QuadraticForm>) -> Result<Self> {
        let first = forms.first().ok_or(PqsqError::Empty("minorant forms"))?;
        let n = first.dim();
        if let Some(f) = forms.iter().find(|f| f.dim() != n) {
            return Err(PqsqError::DimensionMismatch { expected: n, found: f.dim() });
        }
        Ok(MinorantFunction { forms })
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    pub fn dim(&self) -> usize {
        self.forms[0].dim()
    }

    /// `α·self + β·other`, represented by every pairwise combination
    /// `α q_i + β p_j`.
    pub fn conic_combination(&self, alpha: f64, other: &MinorantFunction, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(PqsqError::InvalidParameter("conic weights must be nonnegative".into()));
        }
        if other.dim() != self.dim() {
            return Err(PqsqError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let mut forms = Vec::with_capacity(self.forms.len() * other.forms.len());
        for (i, q) in self.forms.iter().enumerate() {
            for p in &other.forms {
                forms.push(q.combine(alpha, p, beta).map_err(|_| PqsqError::SingularForm(i))?);
            }
        }
        Ok(MinorantFunction { forms })
    }
}

pub fn evaluate_minorant(u: &MinorantFunction, x: &[f64]) -> f64 {
    u.forms.iter().map(|q| q.evaluate(x)).fold(f64::INFINITY, f64::min)
}

/// Default tie tolerance for [`multiindex`] at minorant value `value`.
pub fn default_tie_tolerance(value: f64) -> f64 {
    1e-12 * (1.0 + libm::fabs(value))
}

/// Indices (0-based) of the forms attaining the minorant value within `tol`.
pub fn multiindex(u: &MinorantFunction, x: &[f64], tol: f64) -> Vec<usize> {
    let values: Vec<f64> = u.forms.iter().map(|q| q.evaluate(x)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + tol)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Minorant value at the start point followed by the value after each
    /// iteration.
    pub trace: Vec<f64>,
    /// Multiindex at the returned point.
    pub multiindex: Vec<usize>,
}

/// Splitting minimization: jump to the minimizer of the best active form
/// until neither the multiindex nor the value changes.
pub fn splitting_minimize(
    u: &MinorantFunction,
    x0: &[f64],
    max_iter: usize,
) -> Result<SplittingResult> {
    if x0.len() != u.dim() {
        return Err(PqsqError::DimensionMismatch { expected: u.dim(), found: x0.len() });
    }
    let mut x = x0.to_vec();
    let mut value = evaluate_minorant(u, &x);
    let mut index = multiindex(u, &x, default_tie_tolerance(value));
    let mut trace = vec![value];
    for iteration in 1..=max_iter {
        // deepest candidate minimizer; first index wins ties
        let (best, best_value) = index
            .iter()
            .map(|&i| {
                let xi = u.forms[i].minimizer();
                (i, evaluate_minorant(u, xi))
            })
            .fold((usize::MAX, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let next = u.forms[best].minimizer().to_vec();
        let next_index = multiindex(u, &next, default_tie_tolerance(best_value));
        trace.push(best_value);
        let settled = libm::fabs(value - best_value) < 1e-14 * libm::fmax(1.0, libm::fabs(value));
        let stable = next_index == index;
        x = next;
        value = best_value;
        index = next_index;
        if stable && settled {
            return Ok(SplittingResult { x, value, iterations: iteration, trace, multiindex: index });
        }
    }
    Err(PqsqError::MaxIterations { context: "splitting minimization", iterations: max_iter })
}
