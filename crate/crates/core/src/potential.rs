//! PQSQ potentials: construction from a majorant and interval thresholds,
//! evaluation, and the heuristics that place the thresholds.
//!
//! For thresholds `0 = r_0 < r_1 < … < r_p` the potential is
//! `u(x) = b_s + a_s x²` on `r_s ≤ |x| < r_{s+1}` (with `r_{p+1} = ∞`), where
//! the coefficients make every parabola pass through the majorant at both
//! ends of its interval. The last parabola is flat, so `u` saturates at
//! `f(r_p)` beyond the last threshold.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{PqsqError, Result};

const GROWTH_SLACK: f64 = 1e-12;
const CONTINUITY_TOL: f64 = 1e-10;

/// The error function imitated by a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Majorant {
    /// `|x|`
    Absolute,
    /// `|x|^q`, `0 < q ≤ 2`
    Power { q: f64 },
    /// `ln(1 + |x|)`
    Log1p,
    /// `x²`
    Square,
    /// `((1 − α)/α) x² + α|x|`, the elastic-net penalty, `0 < α ≤ 1`
    PenaltyMixture { alpha: f64 },
}

impl Majorant {
    pub fn eval(&self, x: f64) -> f64 {
        let ax = libm::fabs(x);
        match *self {
            Majorant::Absolute => ax,
            Majorant::Power { q } => libm::pow(ax, q),
            Majorant::Log1p => libm::log1p(ax),
            Majorant::Square => x * x,
            Majorant::PenaltyMixture { alpha } => (1.0 - alpha) / alpha * x * x + alpha * ax,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Majorant::Power { q } if !(q > 0.0 && q <= 2.0) => Err(PqsqError::InvalidParameter(
                format!("power majorant needs 0 < q <= 2, got {q}"),
            )),
            Majorant::PenaltyMixture { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                Err(PqsqError::InvalidParameter(format!(
                    "penalty mixture needs 0 < alpha <= 1, got {alpha}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Thresholds and parabola coefficients for one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatePotential {
    thresholds: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl CoordinatePotential {
    /// Computes the parabola coefficients interpolating `f` at `thresholds`.
    ///
    /// Only the thresholds and `f(0) = 0` are checked; use
    /// [`CoordinatePotential::is_subquadratic`] to test the growth condition.
    pub fn from_fn(f: impl Fn(f64) -> f64, thresholds: &[f64]) -> Result<Self> {
        check_thresholds(thresholds)?;
        let f0 = f(0.0);
        if f0 != 0.0 {
            return Err(PqsqError::MajorantNotZeroAtOrigin(f0));
        }
        let values: Vec<f64> = thresholds.iter().map(|&r| f(r)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PqsqError::InvalidParameter(
                "majorant is not finite at a threshold".into(),
            ));
        }
        let p = thresholds.len() - 1;
        let mut a = Vec::with_capacity(p + 1);
        let mut b = Vec::with_capacity(p + 1);
        for k in 0..p {
            let (r0, r1) = (thresholds[k], thresholds[k + 1]);
            let (f0, f1) = (values[k], values[k + 1]);
            let denom = r0 * r0 - r1 * r1;
            a.push((f0 - f1) / denom);
            b.push((f1 * r0 * r0 - f0 * r1 * r1) / denom);
        }
        a.push(0.0);
        b.push(values[p]);
        Ok(CoordinatePotential { thresholds: thresholds.to_vec(), a, b })
    }

    /// Assembles a coordinate from stored coefficients, checking structure and
    /// continuity at every knot.
    pub fn from_parts(thresholds: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_thresholds(&thresholds)?;
        let n = thresholds.len();
        if a.len() != n || b.len() != n {
            return Err(PqsqError::DimensionMismatch {
                expected: n,
                found: if a.len() != n { a.len() } else { b.len() },
            });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(PqsqError::InvalidParameter("non-finite coefficient".into()));
        }
        if b[0] != 0.0 || a[n - 1] != 0.0 {
            return Err(PqsqError::InvalidParameter(
                "expected b_0 = 0 and a_p = 0".into(),
            ));
        }
        for k in 0..n - 1 {
            let r = thresholds[k + 1];
            let left = b[k] + a[k] * r * r;
            let right = b[k + 1] + a[k + 1] * r * r;
            let scale = libm::fmax(1.0, libm::fmax(libm::fabs(left), libm::fabs(right)));
            if libm::fabs(left - right) > CONTINUITY_TOL * scale {
                return Err(PqsqError::InvalidParameter(format!(
                    "potential is discontinuous at knot {}",
                    k + 1
                )));
            }
        }
        Ok(CoordinatePotential { thresholds, a, b })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of finite thresholds after zero, `p`.
    pub fn intervals(&self) -> usize {
        self.thresholds.len() - 1
    }

    /// The interval `s` with `r_s ≤ |x| < r_{s+1}`. A value exactly at a knot
    /// belongs to the upper interval.
    #[inline]
    pub fn interval_index(&self, x: f64) -> usize {
        let ax = libm::fabs(x);
        self.thresholds
            .partition_point(|&r| r <= ax)
            .saturating_sub(1)
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        let s = self.interval_index(x);
        self.b[s] + self.a[s] * x * x
    }

    /// Quadratic coefficient of the parabola active at `x`.
    #[inline]
    pub fn slope_coefficient(&self, x: f64) -> f64 {
        self.a[self.interval_index(x)]
    }

    /// `a` nonincreasing and `b` nondecreasing.
    pub fn is_subquadratic(&self) -> bool {
        self.first_growth_violation().is_none()
    }

    fn first_growth_violation(&self) -> Option<usize> {
        (0..self.a.len() - 1).find(|&k| {
            let (a0, a1) = (self.a[k], self.a[k + 1]);
            let (b0, b1) = (self.b[k], self.b[k + 1]);
            let a_slack = GROWTH_SLACK * libm::fmax(1.0, libm::fabs(a0));
            let r1 = self.thresholds[k + 1];
            let b_slack = GROWTH_SLACK * libm::fmax(1.0, libm::fmax(libm::fabs(b1), libm::fabs(a0) * r1 * r1));
            a1 > a0 + a_slack || b1 < b0 - b_slack
        })
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.len() < 2 {
        return Err(PqsqError::InvalidThresholds(
            "need at least one threshold after zero".into(),
        ));
    }
    if thresholds[0] != 0.0 {
        return Err(PqsqError::InvalidThresholds(format!(
            "first threshold must be 0, got {}",
            thresholds[0]
        )));
    }
    if thresholds.iter().any(|r| !r.is_finite()) {
        return Err(PqsqError::InvalidThresholds("non-finite threshold".into()));
    }
    if let Some(w) = thresholds.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(PqsqError::InvalidThresholds(format!(
            "thresholds must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// A PQSQ potential over `m` coordinates sharing one majorant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpecRepr", into = "PotentialSpecRepr")]
pub struct PotentialSpec {
    majorant: Majorant,
    coordinates: Vec<CoordinatePotential>,
    trimmed: bool,
}

/// Builds a potential with one threshold list per coordinate.
///
/// Fails when the thresholds are not strictly increasing from zero, when
/// `f(0) ≠ 0`, or when the coefficients break subquadratic growth.
pub fn build_potential(majorant: Majorant, thresholds: &[Vec<f64>]) -> Result<PotentialSpec> {
    majorant.validate()?;
    if thresholds.is_empty() {
        return Err(PqsqError::Empty("threshold lists"));
    }
    let coordinates = thresholds
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let c = CoordinatePotential::from_fn(|x| majorant.eval(x), r)?;
            match c.first_growth_violation() {
                Some(interval) => Err(PqsqError::NotSubquadratic { coordinate: k, interval }),
                None => Ok(c),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PotentialSpec { majorant, coordinates, trimmed: false })
}

impl PotentialSpec {
    /// Same thresholds for each of `dim` coordinates.
    pub fn uniform(majorant: Majorant, thresholds: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(PqsqError::Empty("coordinates"));
        }
        let first = build_potential(majorant, &[thresholds.to_vec()])?;
        let coord = first.coordinates.into_iter().next().expect("one coordinate");
        Ok(PotentialSpec {
            majorant,
            coordinates: alloc::vec![coord; dim],
            trimmed: false,
        })
    }

    /// Places thresholds per coordinate from the data columns using `cfg`.
    ///
    /// A coordinate whose characteristic distance is zero is rejected with
    /// [`PqsqError::DegenerateCoordinate`].
    pub fn from_columns(majorant: Majorant, columns: &[Vec<f64>], cfg: &IntervalConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = match &cfg.explicit {
            Some(r) => PotentialSpec::uniform(majorant, r, columns.len())?,
            None => {
                let thresholds = columns
                    .iter()
                    .enumerate()
                    .map(|(k, col)| {
                        let d = characteristic_distance(col, cfg).map_err(|e| match e {
                            PqsqError::DegenerateMad => PqsqError::DegenerateCoordinate(k),
                            other => other,
                        })?;
                        if !(d > 0.0) {
                            return Err(PqsqError::DegenerateCoordinate(k));
                        }
                        default_intervals(d, cfg.count)
                    })
                    .collect::<Result<Vec<_>>>()?;
                build_potential(majorant, &thresholds)?
            }
        };
        Ok(spec.with_trimmed(cfg.is_trimming()))
    }

    pub fn with_trimmed(mut self, trimmed: bool) -> Self {
        self.trimmed = trimmed;
        self
    }

    /// Replaces one coordinate, keeping the rest.
    pub fn replace_coordinate(&mut self, k: usize, coord: CoordinatePotential) {
        self.coordinates[k] = coord;
    }

    pub fn majorant(&self) -> Majorant {
        self.majorant
    }

    pub fn trimmed(&self) -> bool {
        self.trimmed
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinate(&self, k: usize) -> &CoordinatePotential {
        &self.coordinates[k]
    }

    pub fn coordinates(&self) -> &[CoordinatePotential] {
        &self.coordinates
    }

    #[inline]
    pub fn evaluate(&self, k: usize, x: f64) -> f64 {
        self.coordinates[k].evaluate(x)
    }

    #[inline]
    pub fn interval_index(&self, k: usize, x: f64) -> usize {
        self.coordinates[k].interval_index(x)
    }
}

/// `true` iff every coordinate has `a` nonincreasing and `b` nondecreasing.
pub fn check_subquadratic(spec: &PotentialSpec) -> bool {
    spec.coordinates.iter().all(CoordinatePotential::is_subquadratic)
}

#[derive(Serialize, Deserialize)]
struct PotentialSpecRepr {
    majorant: Majorant,
    thresholds: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    trimmed: bool,
}

impl From<PotentialSpec> for PotentialSpecRepr {
    fn from(spec: PotentialSpec) -> Self {
        let mut thresholds = Vec::with_capacity(spec.dim());
        let mut a = Vec::with_capacity(spec.dim());
        let mut b = Vec::with_capacity(spec.dim());
        for c in spec.coordinates {
            thresholds.push(c.thresholds);
            a.push(c.a);
            b.push(c.b);
        }
        PotentialSpecRepr { majorant: spec.majorant, thresholds, a, b, trimmed: spec.trimmed }
    }
}

impl TryFrom<PotentialSpecRepr> for PotentialSpec {
    type Error = PqsqError;

    fn try_from(repr: PotentialSpecRepr) -> Result<Self> {
        repr.majorant.validate()?;
        let m = repr.thresholds.len();
        if m == 0 {
            return Err(PqsqError::Empty("threshold lists"));
        }
        if repr.a.len() != m || repr.b.len() != m {
            return Err(PqsqError::DimensionMismatch { expected: m, found: repr.a.len().min(repr.b.len()) });
        }
        let coordinates = repr
            .thresholds
            .into_iter()
            .zip(repr.a)
            .zip(repr.b)
            .map(|((r, a), b)| CoordinatePotential::from_parts(r, a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(PotentialSpec { majorant: repr.majorant, coordinates, trimmed: repr.trimmed })
    }
}

/// How the characteristic distance of a coordinate is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// `max − min`
    Amplitude,
    /// median absolute deviation
    Mad,
}

/// Interval placement: `p` intervals on `[0, D]` with `D` from the data, or
/// explicit thresholds shared by every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalConfig {
    pub count: usize,
    pub scale: f64,
    pub mode: DistanceMode,
    pub explicit: Option<Vec<f64>>,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        IntervalConfig { count: 5, scale: 1.0, mode: DistanceMode::Amplitude, explicit: None }
    }
}

impl IntervalConfig {
    pub fn amplitude(count: usize, scale: f64) -> Self {
        IntervalConfig { count, scale, mode: DistanceMode::Amplitude, explicit: None }
    }

    pub fn mad(count: usize, scale: f64) -> Self {
        IntervalConfig { count, scale, mode: DistanceMode::Mad, explicit: None }
    }

    pub fn explicit(thresholds: Vec<f64>) -> Self {
        IntervalConfig {
            count: thresholds.len().saturating_sub(1),
            scale: 1.0,
            mode: DistanceMode::Amplitude,
            explicit: Some(thresholds),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = &self.explicit {
            return check_thresholds(r);
        }
        if self.count == 0 {
            return Err(PqsqError::InvalidParameter("interval count must be positive".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(PqsqError::InvalidParameter(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Whether the last threshold is meant to cap the potential. Explicit
    /// thresholds are assumed to trim; heuristic placement trims when the
    /// scale is below the no-trimming values (1 for amplitude, 10 for MAD).
    pub fn is_trimming(&self) -> bool {
        match (&self.explicit, self.mode) {
            (Some(_), _) => true,
            (None, DistanceMode::Amplitude) => self.scale < 1.0,
            (None, DistanceMode::Mad) => self.scale < 10.0,
        }
    }
}

/// `r_j = D·j²/p²` for `j = 0..=p`.
pub fn default_intervals(d: f64, p: usize) -> Result<Vec<f64>> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(PqsqError::InvalidParameter(format!(
            "characteristic distance must be positive, got {d}"
        )));
    }
    if p == 0 {
        return Err(PqsqError::InvalidParameter("interval count must be positive".into()));
    }
    let p2 = (p * p) as f64;
    Ok((0..=p).map(|j| d * (j * j) as f64 / p2).collect())
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Characteristic difference `D` of one data column.
pub fn characteristic_distance(column: &[f64], cfg: &IntervalConfig) -> Result<f64> {
    if column.is_empty() {
        return Err(PqsqError::Empty("column"));
    }
    match cfg.mode {
        DistanceMode::Amplitude => {
            let (lo, hi) = column
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            Ok(cfg.scale * (hi - lo))
        }
        DistanceMode::Mad => {
            let mut v = column.to_vec();
            let med = median(&mut v);
            let mut dev: Vec<f64> = column.iter().map(|x| libm::fabs(x - med)).collect();
            let mad = median(&mut dev);
            if mad == 0.0 {
                return Err(PqsqError::DegenerateMad);
            }
            Ok(cfg.scale * mad)
        }
    }
}
