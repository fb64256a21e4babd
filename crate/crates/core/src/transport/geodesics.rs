use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{integrate_damped_geodesic, CurvePath, Manifold, Point, Tangent};
use crate::random_field::{FieldRealization, FieldSpec};
use crate::stoch_connection::stochastic_christoffel;

/// `α (x″ + Γ(x′, x′)) + β x′ = 0` with `α, β` taken at the current state.
pub fn expected_geodesic(
    m: &dyn Manifold,
    spec: &Arc<FieldSpec>,
    p0: &Point,
    v0: &Tangent,
    duration: f64,
    h: f64,
) -> Result<CurvePath> {
    spec.check_point(p0)?;
    integrate_damped_geodesic(m, p0, v0, duration, h, |p, v| {
        spec.check_point(p)?;
        let (a, b) = spec.alpha_beta(p, v);
        Ok(b / a)
    })
}

/// `x″ + Γ(x′, x′) + (d ln ε/dt) x′ = 0` for one realization. Hitting the
/// positivity floor stops the path with a degenerate termination flag.
pub fn realized_geodesic(
    m: &dyn Manifold,
    r: &FieldRealization,
    p0: &Point,
    v0: &Tangent,
    duration: f64,
    h: f64,
) -> Result<CurvePath> {
    r.eval_positive(p0)?;
    integrate_damped_geodesic(m, p0, v0, duration, h, |p, v| {
        let e = r.eval_positive(p)?;
        Ok(e.grad.dot(v) / e.value)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicResidual {
    pub t: f64,
    /// `‖ε² x″ + Γ̃(x′, x′)‖` with `x″` from a 5-point stencil on the velocity.
    pub residual: f64,
    /// `max(1, ‖x″‖)`.
    pub scale: f64,
}

/// Residual of `ε² x″ᵏ + Γ̃ᵏᵢⱼ x′ⁱ x′ʲ = 0` along an integrated path.
///
/// Needs uniformly spaced samples; the two samples at each end are skipped.
pub fn realized_geodesic_residuals(m: &dyn Manifold, r: &FieldRealization, curve: &CurvePath) -> Result<Vec<GeodesicResidual>> {
    let s = curve.samples();
    if s.len() < 5 {
        return Err(Error::InvalidArgument("geodesic residual needs at least 5 samples".into()));
    }
    let mut out = Vec::with_capacity(s.len() - 4);
    for k in 2..s.len() - 2 {
        let h = s[k + 1].t - s[k].t;
        let accel = (s[k - 2].velocity - s[k - 1].velocity * 8.0 + s[k + 1].velocity * 8.0 - s[k + 2].velocity) / (12.0 * h);
        let p = s[k].position;
        let v = s[k].velocity;
        let eps = r.eval_positive(&p)?.value;
        let gamma = stochastic_christoffel(m, r, &p)?;
        out.push(GeodesicResidual {
            t: s[k].t,
            residual: (accel * (eps * eps) + gamma.contract(&v, &v)).norm(),
            scale: accel.norm().max(1.0),
        });
    }
    Ok(out)
}

/// Largest `residual / scale` along the path.
pub fn max_relative_residual(rs: &[GeodesicResidual]) -> f64 {
    rs.iter().fold(0.0, |m, r| m.max(r.residual / r.scale))
}
