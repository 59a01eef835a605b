use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flow regime of a single value. `Peak` is not a fourth band but a flag on
/// top of `High`; see [`FlowBands::is_peak`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    Low,
    Middle,
    High,
}

impl Band {
    pub fn label(&self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Middle => "middle",
            Band::High => "high",
        }
    }
}

/// Empirical 25th/75th/95th percentile thresholds of observed flow, used to
/// score models separately on low, middle, high and peak flows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowBands {
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
}

impl FlowBands {
    /// Fits the thresholds to an observed record by linear-interpolation
    /// percentiles.
    pub fn fit(flow: &[f64]) -> Result<FlowBands> {
        if flow.is_empty() {
            return Err(Error::Config(
                "cannot fit flow bands to an empty series".into(),
            ));
        }
        if let Some(bad) = flow.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("flow series contains {bad}")));
        }
        let mut sorted = flow.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        FlowBands::new(
            percentile(&sorted, 0.25),
            percentile(&sorted, 0.75),
            percentile(&sorted, 0.95),
        )
    }

    pub fn new(q25: f64, q75: f64, q95: f64) -> Result<FlowBands> {
        if !(q25 <= q75 && q75 <= q95) {
            return Err(Error::Config(format!(
                "band thresholds must be ordered: q25 {q25}, q75 {q75}, q95 {q95}"
            )));
        }
        Ok(FlowBands { q25, q75, q95 })
    }

    /// Every value lands in exactly one band; boundaries go to the upper one.
    pub fn band_of(&self, value: f64) -> Band {
        if value < self.q25 {
            Band::Low
        } else if value < self.q75 {
            Band::Middle
        } else {
            Band::High
        }
    }

    /// Values at or above the 95th percentile; always a subset of `High`.
    pub fn is_peak(&self, value: f64) -> bool {
        value >= self.q95
    }
}

/// Linear-interpolation percentile of an ascending slice: index h = (n-1)p,
/// value interpolated between the neighbors of h.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
