//! Curvature of the stochastic connection: `R̃ = ε³R`, `R̃ᵢⱼₖₗ = ε⁴Rᵢⱼₖₗ`,
//! `K̃ = K`, `Ric̃ = ε³Ric`, `S̃ = ε³S`, and the Gauss–Bonnet deviation.
//!
//! `𝓡̃(X,Y,Z,W) = ⟨R̃(Z,W)X, Ỹ⟩` with `Ỹ = εY`, so lowering multiplies
//! `R̃ˡₖᵢⱼ` by `ε g`. Scalar curvature traces `Ric̃` with the deterministic `g`.

mod gauss_bonnet;

pub use gauss_bonnet::{gauss_bonnet_deviation, GaussBonnetResult, MonteCarloEstimate};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::Result;
use crate::geom::curvature::{apply, gram_determinant, lower, max_abs_diff, ricci, scale};
use crate::geom::{
    christoffel_at, christoffel_partials, covariant_derivative_of_map, curvature_at, inner, Manifold, Point, RiemannUp,
    SymmetryResiduals, Tangent, VectorFieldExpr, DIM,
};
use crate::random_field::FieldRealization;
use crate::report::IdentityReport;

/// Step for the outer finite-difference layer on curvature tensors.
pub const H_TENSOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureMethod {
    /// `ε³ Rˡₖᵢⱼ`.
    Scaled,
    /// `D_{X̃}D_{Ỹ}Z̃ − D_{Ỹ}D_{X̃}Z̃ − D_{[X̃,Ỹ]}Z̃` on coordinate fields,
    /// expanded with `∂ε`, `∂²ε`, `Γ` and `∂Γ`.
    Direct,
}

/// `R̃ˡₖᵢⱼ` stored as `[l][k][i][j]`.
pub fn stochastic_curvature_at(m: &dyn Manifold, r: &FieldRealization, p: &Point, method: CurvatureMethod) -> Result<RiemannUp> {
    let e = r.eval(p)?;
    match method {
        CurvatureMethod::Scaled => Ok(scale(&curvature_at(m, p)?.up, e.value.powi(3))),
        CurvatureMethod::Direct => {
            let gamma = christoffel_at(m, p)?;
            let dgamma = christoffel_partials(m, p)?;
            let (eps, de, dde) = (e.value, e.grad, e.hess);
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            // W = D_{ε∂_b}(ε∂_k), Wᵐ = ε ∂_bε δᵐₖ + ε² Γᵐ_bk.
            let w = |b: usize, k: usize, mm: usize| eps * de[b] * delta(mm, k) + eps * eps * gamma.get(mm, b, k);
            let dw = |a: usize, b: usize, k: usize, l: usize| {
                (de[a] * de[b] + eps * dde[(a, b)]) * delta(l, k)
                    + 2.0 * eps * de[a] * gamma.get(l, b, k)
                    + eps * eps * dgamma[a].get(l, b, k)
            };
            // D_{ε∂_a} W.
            let nested = |a: usize, b: usize, k: usize, l: usize| {
                eps * (dw(a, b, k, l) + (0..DIM).map(|mm| gamma.get(l, a, mm) * w(b, k, mm)).sum::<f64>())
            };
            let mut out = [[[[0.0; DIM]; DIM]; DIM]; DIM];
            for (l, out_l) in out.iter_mut().enumerate() {
                for (k, out_lk) in out_l.iter_mut().enumerate() {
                    for i in 0..DIM {
                        for j in 0..DIM {
                            // [ε∂_i, ε∂_j] = ε ∂_iε ∂_j − ε ∂_jε ∂_i.
                            let mut bracket = Tangent::zeros();
                            bracket[j] += eps * de[i];
                            bracket[i] -= eps * de[j];
                            let b_eps = bracket.dot(&de);
                            let d_bracket = b_eps * delta(l, k)
                                + eps * (0..DIM).map(|a| bracket[a] * gamma.get(l, a, k)).sum::<f64>();
                            out_lk[i][j] = nested(i, j, k, l) - nested(j, i, k, l) - d_bracket;
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// `R̃ᵢⱼₖₗ = ε g_jm R̃ᵐᵢₖₗ` and its symmetry residuals.
pub fn stochastic_riemann_4tensor(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<(RiemannUp, SymmetryResiduals)> {
    let c = curvature_at(m, p)?;
    let eps = r.eval(p)?.value;
    let lowered = lower(&scale(&c.up, eps.powi(3)), &c.metric, eps);
    Ok((lowered, SymmetryResiduals::of(&lowered)))
}

/// `𝓡̃(X,Y,Z,W) = ⟨R̃(Z,W)X, εY⟩` from the stochastic tensor.
pub fn stochastic_form4(
    m: &dyn Manifold,
    r: &FieldRealization,
    p: &Point,
    x: &Tangent,
    y: &Tangent,
    z: &Tangent,
    w: &Tangent,
) -> Result<f64> {
    let up = stochastic_curvature_at(m, r, p, CurvatureMethod::Direct)?;
    let eps = r.eval(p)?.value;
    Ok(inner(&m.metric(p), &apply(&up, z, w, x), &(y * eps)))
}

/// `(K̃, K)` for the plane spanned by `u, v`; `K̃` divides `𝓡̃(u,v,v,u)` by the
/// Gram determinant of `g̃ = ε²g`.
pub fn stochastic_sectional(m: &dyn Manifold, r: &FieldRealization, p: &Point, u: &Tangent, v: &Tangent) -> Result<(f64, f64)> {
    let c = curvature_at(m, p)?;
    let k = c.sectional(u, v)?;
    let eps = r.eval(p)?.value;
    let g_tilde = c.metric * (eps * eps);
    let gram = gram_determinant(&g_tilde, u, v)?;
    let numerator = inner(&c.metric, &apply(&scale(&c.up, eps.powi(3)), v, u, u), &(v * eps));
    Ok((numerator / gram, k))
}

/// `(Ric̃ᵢⱼ, S̃)` with `Ric̃ᵢⱼ = R̃ᵏᵢₖⱼ` and `S̃ = gⁱʲ Ric̃ᵢⱼ`.
pub fn stochastic_ricci_scalar(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<(Matrix2<f64>, f64)> {
    let up = stochastic_curvature_at(m, r, p, CurvatureMethod::Direct)?;
    let ric = ricci(&up);
    let ginv = m.metric(p).try_inverse().unwrap_or_else(Matrix2::zeros);
    Ok((ric, (ginv * ric).trace()))
}

/// `(Ω, Ω̃)` as densities on `dx¹∧dx²`: `Ω = K √det g / 2π`, `Ω̃ = ε² Ω`.
pub fn curvature_form(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<(f64, f64)> {
    let c = curvature_at(m, p)?;
    let k = c.sectional(&Tangent::new(1.0, 0.0), &Tangent::new(0.0, 1.0))?;
    let omega = k * c.metric.determinant().sqrt() / TAU;
    let eps = r.eval(p)?.value;
    Ok((omega, eps * eps * omega))
}

fn tensor_add(a: &mut RiemannUp, b: &RiemannUp, w: f64) {
    for (x, y) in a.iter_mut().flatten().flatten().flatten().zip(b.iter().flatten().flatten().flatten()) {
        *x += w * y;
    }
}

/// `T^l_kij,h = ∂_h T^l_kij + Γ^l_hm T^m_kij − Γ^m_hk T^l_mij − Γ^m_hi T^l_kmj − Γ^m_hj T^l_kim`
/// for a `(1,3)` tensor field, `∂_h` by a 4th-order central stencil.
pub fn tensor_covariant_derivative<F>(m: &dyn Manifold, p: &Point, h: usize, field: F) -> Result<RiemannUp>
where
    F: Fn(&Point) -> Result<RiemannUp>,
{
    let mut e = Point::zeros();
    e[h] = H_TENSOR;
    let mut d = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    tensor_add(&mut d, &field(&(p - e * 2.0))?, 1.0);
    tensor_add(&mut d, &field(&(p - e))?, -8.0);
    tensor_add(&mut d, &field(&(p + e))?, 8.0);
    tensor_add(&mut d, &field(&(p + e * 2.0))?, -1.0);
    let mut d = scale(&d, 1.0 / (12.0 * H_TENSOR));
    let t = field(p)?;
    let g = christoffel_at(m, p)?;
    for l in 0..DIM {
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    let mut c = 0.0;
                    for mm in 0..DIM {
                        c += g.get(l, h, mm) * t[mm][k][i][j]
                            - g.get(mm, h, k) * t[l][mm][i][j]
                            - g.get(mm, h, i) * t[l][k][mm][j]
                            - g.get(mm, h, j) * t[l][k][i][mm];
                    }
                    d[l][k][i][j] += c;
                }
            }
        }
    }
    Ok(d)
}

/// Both sides of `R̃ˡₖᵢⱼ,ₕ = ε⁴ Rˡₖᵢⱼ,ₕ + 3ε³ ∂ₕε Rˡₖᵢⱼ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RtildeDerivative {
    /// `ε (∇ₕ(ε³R))`, the tensor `ε³R` differentiated along `ε∂ₕ`.
    pub direct: RiemannUp,
    pub formula: RiemannUp,
}

impl RtildeDerivative {
    pub fn residual(&self) -> f64 {
        max_abs_diff(&self.direct, &self.formula)
    }
}

pub fn covariant_derivative_rtilde(m: &dyn Manifold, r: &FieldRealization, p: &Point, h: usize) -> Result<RtildeDerivative> {
    let e = r.eval(p)?;
    let classical = tensor_covariant_derivative(m, p, h, |q| Ok(curvature_at(m, q)?.up))?;
    let mut formula = scale(&classical, e.value.powi(4));
    tensor_add(&mut formula, &curvature_at(m, p)?.up, 3.0 * e.value.powi(3) * e.grad[h]);
    let scaled = tensor_covariant_derivative(m, p, h, |q| Ok(scale(&curvature_at(m, q)?.up, r.eval(q)?.value.powi(3))))?;
    Ok(RtildeDerivative { direct: scale(&scaled, e.value), formula })
}

/// Cyclic sum `D_{X̃}(ε³R(Y,Z)W) + …` against `3ε³(X(ε) ε³R(Y,Z)W + …)`.
///
/// The identity is not expected to hold; both sides are reported.
pub fn bianchi2_residual(
    m: &dyn Manifold,
    r: &FieldRealization,
    p: &Point,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    z: &VectorFieldExpr,
    w: &VectorFieldExpr,
) -> Result<IdentityReport> {
    let e = r.eval(p)?;
    let field = |a: &VectorFieldExpr, b: &VectorFieldExpr| {
        let (a, b) = (a.clone(), b.clone());
        move |q: &Point| -> Result<Tangent> {
            let c = curvature_at(m, q)?;
            Ok(c.apply(&a.value(q), &b.value(q), &w.value(q)) * r.eval(q)?.value.powi(3))
        }
    };
    let triples = [(x, y, z), (y, z, x), (z, x, y)];
    let mut lhs = Tangent::zeros();
    let mut rhs = Tangent::zeros();
    for (a, b, c) in triples {
        let f = field(b, c);
        lhs += covariant_derivative_of_map(m, &(a.value(p) * e.value), &f, p, 1e-4)?;
        rhs += f(p)? * (3.0 * e.value.powi(3) * e.grad.dot(&a.value(p)));
    }
    Ok(IdentityReport::report_only("curvature.bianchi2", vec![lhs[0], lhs[1]], vec![rhs[0], rhs[1]])
        .at([p[0], p[1]])
        .seeded(r.seed()))
}

/// Everything curvature-related at one point for one realization.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub point: [f64; 2],
    pub seed: Option<u64>,
    pub eps: f64,
    pub direct: RiemannUp,
    pub scaled: RiemannUp,
    pub direct_vs_scaled: f64,
    pub lowered: RiemannUp,
    pub lowered_vs_scaled: f64,
    pub sectional_stochastic: f64,
    pub sectional: f64,
    pub ricci_stochastic: Matrix2<f64>,
    pub scalar_stochastic: f64,
    pub symmetry: SymmetryResiduals,
}

pub fn curvature_report(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<CurvatureReport> {
    let direct = stochastic_curvature_at(m, r, p, CurvatureMethod::Direct)?;
    let scaled = stochastic_curvature_at(m, r, p, CurvatureMethod::Scaled)?;
    let (lowered, symmetry) = stochastic_riemann_4tensor(m, r, p)?;
    let c = curvature_at(m, p)?;
    let eps = r.eval(p)?.value;
    let (ks, k) = stochastic_sectional(m, r, p, &Tangent::new(1.0, 0.0), &Tangent::new(0.0, 1.0))?;
    let (ric, s) = stochastic_ricci_scalar(m, r, p)?;
    Ok(CurvatureReport {
        point: [p[0], p[1]],
        seed: r.seed(),
        eps,
        direct,
        scaled,
        direct_vs_scaled: max_abs_diff(&direct, &scaled),
        lowered,
        lowered_vs_scaled: max_abs_diff(&lowered, &scale(&c.lowered(), eps.powi(4))),
        sectional_stochastic: ks,
        sectional: k,
        ricci_stochastic: ric,
        scalar_stochastic: s,
        symmetry,
    })
}
