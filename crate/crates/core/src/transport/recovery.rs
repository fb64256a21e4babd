use serde::Serialize;

use super::parallel::{transport_between, TransportKind};
use crate::error::{Error, Result};
use crate::geom::{christoffel_at, CurvePath, Manifold, Tangent, VectorFieldExpr};
use crate::report::IdentityReport;

/// Below this every residual counts as rounding noise and no rate is fitted.
pub const RECOVERY_FLOOR: f64 = 1e-9;
/// Allowed deviation of the fitted log-log slope from 1.
pub const RECOVERY_SLOPE_TOL: f64 = 0.15;

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub dts: Vec<f64>,
    /// `‖a D_{γ′}X + b X − a (P X(t+Δt) − X(t))/Δt‖` per step.
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log Δt`.
    pub slope: f64,
    pub report: IdentityReport,
}

fn fitted_slope(dts: &[f64], residuals: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Compares `a D_{γ′}X + b X` (with `(a, b)` the weights of `kind`) with the
/// difference quotient of the transported field, `P` carrying `X(γ(t+Δt))`
/// back to `γ(t)`.
pub fn recovery_limit_check(
    m: &dyn Manifold,
    kind: &TransportKind,
    curve: &CurvePath,
    x: &VectorFieldExpr,
    t: f64,
    dts: &[f64],
) -> Result<RecoveryReport> {
    if dts.len() < 2 || dts.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("recovery check needs at least two positive steps".into()));
    }
    let p = curve.position(t);
    let v = curve.velocity(t);
    let (a, b) = kind.weights(&p, &v)?;
    let xp = x.value(&p);
    let dx = x.jacobian(&p) * v + christoffel_at(m, &p)?.contract(&v, &xp);
    let lhs = dx * a + xp * b;

    let mut residuals = Vec::with_capacity(dts.len());
    let mut last = Tangent::zeros();
    for &dt in dts {
        let h = dt.min(1e-3);
        let back = transport_between(m, curve, kind, &x.value(&curve.position(t + dt)), t + dt, t, h)?;
        last = (back - xp) * (a / dt);
        residuals.push((lhs - last).norm());
    }
    let slope = fitted_slope(dts, &residuals);
    let worst = residuals.iter().fold(0.0_f64, |m, r| m.max(*r));
    let (lhs_v, rhs_v) = (vec![lhs[0], lhs[1]], vec![last[0], last[1]]);
    let report = if worst <= RECOVERY_FLOOR {
        IdentityReport::with_residual("transport.recovery-limit", lhs_v, rhs_v, worst, RECOVERY_FLOOR)
    } else {
        IdentityReport::with_residual("transport.recovery-limit", lhs_v, rhs_v, (slope - 1.0).abs(), RECOVERY_SLOPE_TOL)
    };
    Ok(RecoveryReport {
        dts: dts.to_vec(),
        residuals,
        slope,
        report: report.at([p[0], p[1]]),
    })
}
