//! Unfolding algorithms: time-domain finite differences and Fourier-domain
//! spike estimation.

pub mod fourier;
pub mod time;

use serde::{Deserialize, Serialize};

/// Outcome of an unfolding attempt. `recovered` carries the raw samples with
/// their 2λZ offset ambiguity; `offset_multiple` is resolved against ground
/// truth when available and `mse` is measured after removing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub recovered: Vec<f64>,
    pub offset_multiple: i64,
    pub order_used: u32,
    pub success: bool,
    pub mse: Option<f64>,
    pub warnings: Vec<String>,
}

impl RecoveryReport {
    pub(crate) fn attach_ground_truth(&mut self, truth: &[f64], offset_grid: f64) {
        if truth.len() != self.recovered.len() || truth.is_empty() {
            return;
        }
        let fixed = crate::harness::fix_offset(&self.recovered, truth, offset_grid);
        let mean: f64 =
            self.recovered.iter().zip(truth).map(|(r, t)| r - t).sum::<f64>() / truth.len() as f64;
        self.offset_multiple = (mean / (2.0 * offset_grid)).round() as i64;
        self.mse = crate::harness::mse(&fixed, truth).ok();
    }
}
