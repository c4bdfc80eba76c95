//! Objective traces recorded by the iterative fitters.

/// Relative slack used when checking that an objective trace never goes up.
/// Consecutive values are compared as `next <= prev + slack * max(1, |prev|)`.
pub const DESCENT_SLACK: f64 = 1e-10;

/// Index of the first step where the trace increases beyond `slack`.
pub fn first_increase(values: &[f64], slack: f64) -> Option<usize> {
    values.windows(2).position(|w| {
        let scale = if libm::fabs(w[0]) > 1.0 { libm::fabs(w[0]) } else { 1.0 };
        w[1] > w[0] + slack * scale
    })
}

pub fn is_nonincreasing(values: &[f64], slack: f64) -> bool {
    first_increase(values, slack).is_none()
}
