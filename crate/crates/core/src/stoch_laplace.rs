//! Stochastic gradient `∇̃f = ε∇f`, divergence `diṽX = div(εX)`, Laplacian
//! `Δ̃ = diṽ ∘ ∇̃ = ε²Δ + 2ε⟨∇·, ∇ε⟩`, and the divergence theorem on bands.
//!
//! `Δ = div ∘ grad`, so `Δ cos θ = −2 cos θ` on the unit sphere (the basis
//! module reports eigenvalues of `−Δ`).

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{
    christoffel_at, inner, metric_and_inverse, AxisRule, Manifold, Point, ScalarFieldExpr, Tangent, VectorFieldExpr, DIM,
};
use crate::quadrature::{quadrature_integrate_with, AxisNodes};
use crate::random_field::FieldRealization;
use crate::stoch_connection::{Method, RandomizedField};

/// `∂ᵢ ln √det g = ½ tr(g⁻¹ ∂ᵢg)`.
fn log_volume_gradient(m: &dyn Manifold, ginv: &Matrix2<f64>, p: &Point) -> Tangent {
    let dg = m.metric_partials(p);
    Tangent::new(0.5 * (ginv * dg[0]).trace(), 0.5 * (ginv * dg[1]).trace())
}

/// Coordinate divergence `(1/√g) ∂ᵢ(√g Yⁱ)` from `Y` and its Jacobian.
fn coordinate_divergence(m: &dyn Manifold, p: &Point, y: &Tangent, jy: &Matrix2<f64>) -> Result<f64> {
    let (_, ginv) = metric_and_inverse(m, p)?;
    Ok(jy.trace() + y.dot(&log_volume_gradient(m, &ginv, p)))
}

/// `gⁱʲ ∂ⱼf`.
pub fn gradient(m: &dyn Manifold, f: &ScalarFieldExpr, p: &Point) -> Result<Tangent> {
    let (_, ginv) = metric_and_inverse(m, p)?;
    Ok(ginv * f.gradient(p))
}

/// `∇̃f = ε gⁱʲ ∂ⱼf ∂ᵢ`.
pub fn stochastic_gradient(m: &dyn Manifold, r: &FieldRealization, f: &ScalarFieldExpr, p: &Point) -> Result<Tangent> {
    Ok(gradient(m, f, p)? * r.eps(p)?)
}

/// `⟨X, ∇̃f⟩ − X̃(f)` at `p`.
pub fn gradient_defining_residual(
    m: &dyn Manifold,
    r: &FieldRealization,
    f: &ScalarFieldExpr,
    x: &Tangent,
    p: &Point,
) -> Result<f64> {
    let g = m.metric(p);
    Ok(inner(&g, x, &stochastic_gradient(m, r, f, p)?) - r.eps(p)? * f.gradient(p).dot(x))
}

/// Classical divergence.
pub fn divergence(m: &dyn Manifold, x: &VectorFieldExpr, p: &Point) -> Result<f64> {
    m.check_point(p)?;
    coordinate_divergence(m, p, &x.value(p), &x.jacobian(p))
}

/// `diṽX`: `ε divX + X(ε)` (formula) or the coordinate divergence of `εX`
/// (direct).
pub fn stochastic_divergence(m: &dyn Manifold, r: &FieldRealization, x: &VectorFieldExpr, p: &Point, method: Method) -> Result<f64> {
    match method {
        Method::Formula => {
            let e = r.eval(p)?;
            Ok(e.value * divergence(m, x, p)? + e.grad.dot(&x.value(p)))
        }
        Method::Direct => {
            let xt = RandomizedField::new(x, r);
            coordinate_divergence(m, p, &xt.value(p)?, &xt.jacobian(p)?)
        }
    }
}

/// `Δf = gⁱʲ(∂ᵢⱼf − Γᵏᵢⱼ ∂ₖf)`.
pub fn laplacian(m: &dyn Manifold, f: &ScalarFieldExpr, p: &Point) -> Result<f64> {
    let (_, ginv) = metric_and_inverse(m, p)?;
    let gamma = christoffel_at(m, p)?;
    let (df, hf) = (f.gradient(p), f.hessian(p));
    let mut out = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            let mut c = hf[(i, j)];
            for k in 0..DIM {
                c -= gamma.get(k, i, j) * df[k];
            }
            out += ginv[(i, j)] * c;
        }
    }
    Ok(out)
}

/// `Δ̃f`: `ε²Δf + 2ε⟨∇f, ∇ε⟩` (formula) or `diṽ(∇̃f)`, the coordinate
/// divergence of `ε² g⁻¹∇f` (direct).
pub fn stochastic_laplacian(m: &dyn Manifold, r: &FieldRealization, f: &ScalarFieldExpr, p: &Point, method: Method) -> Result<f64> {
    let e = r.eval(p)?;
    let (_, ginv) = metric_and_inverse(m, p)?;
    match method {
        Method::Formula => {
            let cross = f.gradient(p).dot(&(ginv * e.grad));
            Ok(e.value * e.value * laplacian(m, f, p)? + 2.0 * e.value * cross)
        }
        Method::Direct => {
            let df = f.gradient(p);
            let hf = f.hessian(p);
            let e2 = e.value * e.value;
            let y = ginv * df * e2;
            let dg = m.metric_partials(p);
            let mut jy = Matrix2::zeros();
            for a in 0..DIM {
                let dginv = -ginv * dg[a] * ginv;
                let col = ginv * df * (2.0 * e.value * e.grad[a]) + dginv * df * e2 + ginv * hf.column(a) * e2;
                jy.set_column(a, &col);
            }
            coordinate_divergence(m, p, &y, &jy)
        }
    }
}

/// One boundary circle `x⁰ = level`, parametrized by `x¹` over a full period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryComponent {
    pub level: f64,
    /// `+1` when the region lies at larger `x⁰`.
    pub inward: f64,
}

/// Region `lo ≤ x⁰ ≤ hi` with `x¹` periodic; its boundary is two circles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPatch {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub components: [BoundaryComponent; 2],
}

impl BoundaryPatch {
    pub fn band(m: &dyn Manifold, lo: f64, hi: f64) -> Result<Self> {
        let d = m.domain();
        if !d.periodic[1] || !(hi > lo) || !d.contains(&Point::new(lo, d.lo[1])) || !d.contains(&Point::new(hi, d.lo[1])) {
            return Err(Error::InvalidArgument(format!(
                "band [{lo}, {hi}] must lie in the chart of {} and the second axis must be periodic",
                m.name()
            )));
        }
        Ok(Self {
            name: format!("{}-band", m.name()),
            lo,
            hi,
            components: [
                BoundaryComponent { level: lo, inward: 1.0 },
                BoundaryComponent { level: hi, inward: -1.0 },
            ],
        })
    }

    pub fn contains(&self, m: &dyn Manifold, p: &Point) -> bool {
        m.domain().contains(p) && p[0] >= self.lo && p[0] <= self.hi
    }

    pub fn position(&self, c: &BoundaryComponent, s: f64) -> Point {
        Point::new(c.level, s)
    }

    /// g-unit inward normal `± g⁻¹dx⁰ / √g⁰⁰`.
    pub fn inward_normal(&self, m: &dyn Manifold, c: &BoundaryComponent, s: f64) -> Result<Tangent> {
        let (_, ginv) = metric_and_inverse(m, &self.position(c, s))?;
        Ok(ginv.column(0) * (c.inward / ginv[(0, 0)].sqrt()))
    }

    /// Line element `√g₁₁` along the circle.
    pub fn line_element(&self, m: &dyn Manifold, c: &BoundaryComponent, s: f64) -> f64 {
        m.metric(&self.position(c, s))[(1, 1)].sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceCheck {
    /// `∫_M diṽX dV`.
    pub lhs: f64,
    /// `−∫_{∂M} ⟨n, X̃⟩ ds` with `n` the inward normal.
    pub rhs: f64,
    pub residual: f64,
    /// Residual with every grid halved.
    pub residual_coarse: f64,
    pub volume_delta: f64,
    pub grid: [usize; 2],
    pub boundary_nodes: usize,
    pub seed: Option<u64>,
}

fn boundary_flux(m: &dyn Manifold, r: &FieldRealization, x: &VectorFieldExpr, patch: &BoundaryPatch, n: usize) -> Result<f64> {
    let d = m.domain();
    let nodes = AxisNodes::new(AxisRule::Trapezoid, d.lo[1], d.hi[1], n)?;
    let mut total = 0.0;
    for c in &patch.components {
        for (s, w) in nodes.nodes.iter().zip(&nodes.weights) {
            let p = patch.position(c, *s);
            let xt = x.value(&p) * r.eps(&p)?;
            total += w * inner(&m.metric(&p), &patch.inward_normal(m, c, *s)?, &xt) * patch.line_element(m, c, *s);
        }
    }
    Ok(-total)
}

fn volume_integral(m: &dyn Manifold, r: &FieldRealization, x: &VectorFieldExpr, patch: &BoundaryPatch, grid: [usize; 2]) -> Result<(f64, f64)> {
    let d = m.domain();
    let mut rules = m.axis_rules();
    if rules[0] == AxisRule::Trapezoid {
        rules[0] = AxisRule::GaussLegendre;
    }
    let q = quadrature_integrate_with(
        m,
        rules,
        |p| stochastic_divergence(m, r, x, p, Method::Formula).unwrap_or(f64::NAN),
        [patch.lo, d.lo[1]],
        [patch.hi, d.hi[1]],
        grid,
    )?;
    Ok((q.value, q.refinement_delta))
}

/// `∫_M diṽX dV = −∫_{∂M} ⟨n, X̃⟩ ds` on a band, with the volume integral on
/// `grid` and `boundary_nodes` trapezoid nodes per boundary circle.
pub fn divergence_theorem_check(
    m: &dyn Manifold,
    r: &FieldRealization,
    x: &VectorFieldExpr,
    patch: &BoundaryPatch,
    grid: [usize; 2],
    boundary_nodes: usize,
) -> Result<DivergenceCheck> {
    r.ensure_nondegenerate()?;
    let (lhs, volume_delta) = volume_integral(m, r, x, patch, grid)?;
    if !lhs.is_finite() {
        return Err(Error::InvalidArgument("divergence integrand is not finite on the band".into()));
    }
    let rhs = boundary_flux(m, r, x, patch, boundary_nodes)?;
    let half = [grid[0].div_ceil(2), grid[1].div_ceil(2)];
    let (lhs_c, _) = volume_integral(m, r, x, patch, half)?;
    let rhs_c = boundary_flux(m, r, x, patch, boundary_nodes.div_ceil(2))?;
    Ok(DivergenceCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        residual_coarse: (lhs_c - rhs_c).abs(),
        volume_delta,
        grid,
        boundary_nodes,
        seed: r.seed(),
    })
}
