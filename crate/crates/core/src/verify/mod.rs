//! Statistical and numerical checks tying samplers to densities and
//! identities to quadrature.

pub mod identities;
pub mod limits;
pub mod stats;
pub mod suite;
pub mod theorems;

use serde::{Deserialize, Serialize};

pub use stats::{chi2_binned, ks_test, moment_compare};

/// Outcome of one check. `passed` follows from `statistic`, `p_value` and
/// `threshold`: p-value tests pass when `p_value > threshold`, tolerance tests
/// when `statistic ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_id: String,
    pub statistic_name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
    pub sample_size: usize,
    pub seed: Option<u64>,
    pub runtime_secs: f64,
    pub detail: String,
}

impl TestReport {
    pub fn p_value_test(
        id: &str,
        name: &str,
        statistic: f64,
        p: f64,
        alpha: f64,
        n: usize,
    ) -> Self {
        Self {
            test_id: id.into(),
            statistic_name: name.into(),
            statistic,
            p_value: Some(p),
            threshold: alpha,
            passed: p > alpha,
            sample_size: n,
            seed: None,
            runtime_secs: 0.0,
            detail: String::new(),
        }
    }

    pub fn tolerance_test(id: &str, name: &str, statistic: f64, tolerance: f64, n: usize) -> Self {
        Self {
            test_id: id.into(),
            statistic_name: name.into(),
            statistic,
            p_value: None,
            threshold: tolerance,
            passed: statistic <= tolerance,
            sample_size: n,
            seed: None,
            runtime_secs: 0.0,
            detail: String::new(),
        }
    }

    /// p-value, NaN for tolerance tests.
    pub fn p(&self) -> f64 {
        self.p_value.unwrap_or(f64::NAN)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.test_id = id.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match self.p_value {
            Some(p) => format!(
                "{verdict} {} {}={:.4e} p={:.4e} (alpha {:.2e}, n={})",
                self.test_id,
                self.statistic_name,
                self.statistic,
                p,
                self.threshold,
                self.sample_size
            ),
            None => format!(
                "{verdict} {} {}={:.4e} (tol {:.2e}, n={})",
                self.test_id, self.statistic_name, self.statistic, self.threshold, self.sample_size
            ),
        }
    }
}
