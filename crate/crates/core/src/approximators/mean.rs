use alloc::vec;
use alloc::vec::Vec;

use super::{check_dims, pqsq_error, DataMatrix};
use crate::error::{PqsqError, Result};
use crate::potential::PotentialSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct MeanOptions {
    /// Starting point; the arithmetic mean when `None`.
    pub init: Option<Vec<f64>>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MeanOptions {
    fn default() -> Self {
        MeanOptions { init: None, tol: 1e-10, max_iter: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFit {
    pub center: Vec<f64>,
    pub iterations: usize,
    /// Weighted PQSQ error at the start point and after every update.
    pub trace: Vec<f64>,
    /// Coordinates where every point fell on a flat parabola at some update;
    /// their previous value was kept.
    pub flagged: Vec<usize>,
}

impl MeanFit {
    pub fn error(&self) -> f64 {
        *self.trace.last().expect("trace starts with the initial error")
    }
}

pub(crate) fn weighted_error(data: &DataMatrix, spec: &PotentialSpec, center: &[f64]) -> f64 {
    (0..data.rows()).map(|i| data.weight(i) * pqsq_error(data.row(i), center, spec)).sum()
}

fn assign(data: &DataMatrix, spec: &PotentialSpec, center: &[f64], out: &mut [usize]) {
    let m = data.cols();
    for i in 0..data.rows() {
        for k in 0..m {
            out[i * m + k] = spec.interval_index(k, data.get(i, k) - center[k]);
        }
    }
}

/// PQSQ mean value by iterated reweighting: each coordinate moves to the
/// `a_s`-weighted average of the points, `s` being the interval of each
/// point's current deviation.
///
/// Stops when the interval assignment is unchanged by an update (an exact
/// fixed point) or the largest coordinate change is below `tol`.
pub fn pqsq_mean(data: &DataMatrix, spec: &PotentialSpec, opts: &MeanOptions) -> Result<MeanFit> {
    check_dims(data, spec)?;
    let (n, m) = (data.rows(), data.cols());
    let mut center = match &opts.init {
        Some(c) if c.len() != m => return Err(PqsqError::DimensionMismatch { expected: m, found: c.len() }),
        Some(c) if c.iter().any(|v| !v.is_finite()) => {
            return Err(PqsqError::InvalidParameter("initial center is not finite".into()))
        }
        Some(c) => c.clone(),
        None => data.arithmetic_mean(),
    };
    let mut trace = vec![weighted_error(data, spec, &center)];
    let mut flagged = Vec::new();
    let mut current = vec![0usize; n * m];
    let mut next = vec![0usize; n * m];
    assign(data, spec, &center, &mut current);
    for iteration in 1..=opts.max_iter {
        let mut shift = 0.0f64;
        for k in 0..m {
            let coord = spec.coordinate(k);
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..n {
                let wa = data.weight(i) * coord.a()[current[i * m + k]];
                num += wa * data.get(i, k);
                den += wa;
            }
            if den > 0.0 {
                let value = num / den;
                shift = shift.max(libm::fabs(value - center[k]));
                center[k] = value;
            } else if !flagged.contains(&k) {
                flagged.push(k);
            }
        }
        trace.push(weighted_error(data, spec, &center));
        assign(data, spec, &center, &mut next);
        if next == current || shift < opts.tol {
            return Ok(MeanFit { center, iterations: iteration, trace, flagged });
        }
        core::mem::swap(&mut current, &mut next);
    }
    Err(PqsqError::MaxIterations { context: "PQSQ mean", iterations: opts.max_iter })
}
