use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

/// A nonnegative quantity stored as its logarithm; `-∞` is the zero state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    pub fn from_log(log: f64) -> Self {
        LogValue(log)
    }

    /// Panics on negative input.
    pub fn from_value(x: f64) -> Self {
        assert!(x >= 0.0, "LogValue of negative number {x}");
        LogValue(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `x^p`, with `0^0 = 1`.
    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            LogValue::ONE
        } else {
            LogValue(self.0 * p)
        }
    }

    /// Log-sum-exp over an iterator.
    pub fn sum<I: IntoIterator<Item = LogValue>>(iter: I) -> Self {
        let mut acc = crate::quad::LogSumExp::new();
        for v in iter {
            acc.add(v.0);
        }
        LogValue(acc.value())
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            LogValue::ZERO
        } else {
            LogValue(self.0 + rhs.0)
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 - rhs.0)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "-inf")
        } else {
            write!(f, "{:.16e}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = LogValue::from_value(2.0);
        let b = LogValue::from_value(8.0);
        assert!(((a * b).value() - 16.0).abs() < 1e-13);
        assert!(((b / a).value() - 4.0).abs() < 1e-14);
        assert!((a * LogValue::ZERO).is_zero());
        assert_eq!(LogValue::ZERO.powf(0.0), LogValue::ONE);
        assert!((LogValue::sum([a, b, LogValue::ZERO]).value() - 10.0).abs() < 1e-13);
        assert_eq!(LogValue::ZERO.to_string(), "-inf");
    }
}
