//! Data approximators measured in a PQSQ potential: mean value, k-means
//! clustering and principal components.

mod kmeans;
mod mean;
mod pca;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{PqsqError, Result};
use crate::potential::PotentialSpec;

pub use kmeans::{pqsq_kmeans, ClusterModel, KMeansOptions};
pub use mean::{pqsq_mean, MeanFit, MeanOptions};
pub use pca::{
    fit_l2_pca, fit_pc1, fit_pca, l2_leading_direction, reconstruct, reconstruct_n, ComponentFit, IntervalPolicy, Pc1Fit,
    Pc1Options, Pc1Update, PcaModel, PcaOptions,
};

/// `N × m` observations in row-major order with optional point weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(PqsqError::Empty("data matrix"));
        }
        if values.len() != rows * cols {
            return Err(PqsqError::DimensionMismatch { expected: rows * cols, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PqsqError::InvalidParameter("data contains non-finite values".into()));
        }
        Ok(DataMatrix { rows, cols, values, weights: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(PqsqError::DimensionMismatch { expected: cols, found: r.len() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows {
            return Err(PqsqError::DimensionMismatch { expected: self.rows, found: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(PqsqError::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.cols + k]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, k)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|k| self.column(k)).collect()
    }

    /// Rows selected by `indices`, carrying their weights along.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let m = Self::new(indices.len(), self.cols, values)?;
        match &self.weights {
            Some(w) => m.with_weights(indices.iter().map(|&i| w[i]).collect()),
            None => Ok(m),
        }
    }

    pub fn arithmetic_mean(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.cols];
        let mut total = 0.0;
        for i in 0..self.rows {
            let w = self.weight(i);
            total += w;
            for (m, x) in mean.iter_mut().zip(self.row(i)) {
                *m += w * x;
            }
        }
        if total > 0.0 {
            mean.iter_mut().for_each(|m| *m /= total);
        }
        mean
    }
}

/// `Σ_k u(x^k − y^k)`.
pub fn pqsq_error(x: &[f64], y: &[f64], spec: &PotentialSpec) -> f64 {
    debug_assert_eq!(x.len(), spec.dim());
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(k, (a, b))| spec.evaluate(k, a - b))
        .sum()
}

pub(crate) fn check_dims(data: &DataMatrix, spec: &PotentialSpec) -> Result<()> {
    if spec.dim() != data.cols() {
        return Err(PqsqError::DimensionMismatch { expected: data.cols(), found: spec.dim() });
    }
    Ok(())
}
