use serde::{Deserialize, Serialize};

/// Both sides of one identity evaluated at one point.
///
/// `tolerance` and `pass` are `None` for report-only identities, which are
/// evaluated and published but never asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: String,
    pub point: Option<[f64; 2]>,
    pub seed: Option<u64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Max-norm of `lhs − rhs` unless stated otherwise by the producer.
    pub residual_norm: f64,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::NAN;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |m: f64, d| if d.is_nan() || m.is_nan() { f64::NAN } else { m.max(d) })
}

impl IdentityReport {
    /// Asserting report: passes when the max-norm residual is within `tolerance`.
    pub fn check(id: impl Into<String>, lhs: Vec<f64>, rhs: Vec<f64>, tolerance: f64) -> Self {
        let residual = max_abs_diff(&lhs, &rhs);
        Self::with_residual(id, lhs, rhs, residual, tolerance)
    }

    /// Asserting report with a caller-defined residual (e.g. standard-error units).
    pub fn with_residual(
        id: impl Into<String>,
        lhs: Vec<f64>,
        rhs: Vec<f64>,
        residual_norm: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            identity_id: id.into(),
            point: None,
            seed: None,
            lhs,
            rhs,
            residual_norm,
            tolerance: Some(tolerance),
            // NaN residuals compare false and therefore fail.
            pass: Some(residual_norm <= tolerance),
        }
    }

    pub fn report_only(id: impl Into<String>, lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        let residual_norm = max_abs_diff(&lhs, &rhs);
        Self {
            identity_id: id.into(),
            point: None,
            seed: None,
            lhs,
            rhs,
            residual_norm,
            tolerance: None,
            pass: None,
        }
    }

    pub fn at(mut self, p: [f64; 2]) -> Self {
        self.point = Some(p);
        self
    }

    pub fn seeded(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_asserting(&self) -> bool {
        self.tolerance.is_some()
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_and_fail() {
        assert_eq!(IdentityReport::check("a", vec![1.0, 2.0], vec![1.0, 2.0 + 1e-9], 1e-8).pass, Some(true));
        let r = IdentityReport::check("a", vec![1.0], vec![1.1], 1e-8);
        assert!(r.failed());
        assert!((r.residual_norm - 0.1).abs() < 1e-12);
    }

    #[test]
    fn nan_fails() {
        assert!(IdentityReport::check("a", vec![f64::NAN], vec![0.0], 1.0).failed());
        assert!(IdentityReport::check("a", vec![0.0, f64::NAN], vec![0.0, 0.0], 1.0).failed());
        assert!(IdentityReport::check("a", vec![0.0], vec![0.0, 0.0], 1.0).failed());
    }

    #[test]
    fn report_only_is_neutral() {
        let r = IdentityReport::report_only("b", vec![1.0], vec![3.0]).at([0.1, 0.2]).seeded(Some(5));
        assert_eq!((r.pass, r.tolerance, r.residual_norm), (None, None, 2.0));
        assert!(!r.failed() && !r.is_asserting());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"pass\":null"));
        assert_eq!(serde_json::from_str::<IdentityReport>(&json).unwrap(), r);
    }
}
