//! Summary statistics over normalized MLU series.

use std::collections::BTreeMap;

use serde::Serialize;

pub const PERCENTILES: [u32; 6] = [25, 50, 75, 90, 99, 100];

/// Normalized MLU above this counts as severe congestion.
pub const SEVERE_THRESHOLD: f64 = 2.0;

/// Linear-interpolation percentile of sorted data (`q` in [0, 100]).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub percentiles: BTreeMap<String, f64>,
    pub severe_fraction: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let percentiles = PERCENTILES.iter().map(|&q| (format!("p{q}"), percentile(&sorted, q as f64))).collect();
        let severe = values.iter().filter(|&&v| v > SEVERE_THRESHOLD).count();
        Self {
            count: values.len(),
            mean: mean(values),
            percentiles,
            severe_fraction: if values.is_empty() { 0.0 } else { severe as f64 / values.len() as f64 },
        }
    }

    pub fn p(&self, q: u32) -> f64 {
        self.percentiles[&format!("p{q}")]
    }
}
