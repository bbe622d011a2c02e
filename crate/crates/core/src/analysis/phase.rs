// SPDX-License-Identifier: MIT OR Apache-2.0

//! Turning point of a metric curve by two-segment least squares.

use serde::{Deserialize, Serialize};

use super::metrics::smooth;
use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 5;
/// First-segment slope must be at least this many times the second.
pub const SLOPE_RATIO: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseShift {
    /// Index of the shared point between the two segments.
    pub breakpoint: usize,
    pub slope_before: f64,
    pub slope_after: f64,
    pub sse: f64,
    /// `|slope_before| >= 2 |slope_after|`.
    pub shift: bool,
}

impl PhaseShift {
    pub fn slope_ratio(&self) -> f64 {
        self.slope_before.abs() / self.slope_after.abs()
    }
}

/// Least-squares line through `(x0 + i, y[i])`: `(slope, sse)`.
fn fit(x0: usize, y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let xs: Vec<f64> = (0..y.len()).map(|i| (x0 + i) as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(y).map(|(x, v)| (x - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let sse = xs
        .iter()
        .zip(y)
        .map(|(x, v)| {
            let r = v - (my + slope * (x - mx));
            r * r
        })
        .sum();
    (slope, sse)
}

/// Best two-segment fit of an unsmoothed series. Segments share the breakpoint
/// and each has at least two points; ties go to the earliest breakpoint.
pub fn two_segment_fit(values: &[f64]) -> Result<PhaseShift> {
    if values.len() < MIN_POINTS {
        return Err(Error::Contract(format!(
            "phase-shift detection needs at least {MIN_POINTS} points, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite value in phase-shift series".into()));
    }
    let mut best: Option<PhaseShift> = None;
    for b in 1..values.len() - 1 {
        let (s1, e1) = fit(0, &values[..=b]);
        let (s2, e2) = fit(b, &values[b..]);
        let sse = e1 + e2;
        if best.as_ref().map_or(true, |p| sse < p.sse - 1e-12) {
            best = Some(PhaseShift {
                breakpoint: b,
                slope_before: s1,
                slope_after: s2,
                sse,
                shift: false,
            });
        }
    }
    let mut p = best.expect("at least one split");
    p.shift = p.slope_before.abs() >= SLOPE_RATIO * p.slope_after.abs() && p.slope_before != 0.0;
    Ok(p)
}

/// Smooth with a centered window, then fit.
pub fn detect_phase_shift(values: &[f64], window: usize) -> Result<PhaseShift> {
    if values.len() < MIN_POINTS {
        return Err(Error::Contract(format!(
            "phase-shift detection needs at least {MIN_POINTS} points, got {}",
            values.len()
        )));
    }
    two_segment_fit(&smooth(values, window))
}
