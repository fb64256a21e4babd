//! Riemann curvature in coordinates.
//!
//! Sign convention, used everywhere in the crate:
//!
//! * `R(X,Y)Z = D_X D_Y Z − D_Y D_X Z − D_[X,Y] Z`, with components
//!   `R(∂_i, ∂_j) ∂_k = R^l_kij ∂_l`, stored as `up[l][k][i][j]`.
//! * The 4-tensor is `𝓡(X,Y,Z,W) = ⟨R(Z,W)X, Y⟩`, so
//!   `R_ijkl = 𝓡(∂_i,∂_j,∂_k,∂_l) = g_jm R^m_ikl`.
//! * Sectional curvature is extracted as `K(u,v) = 𝓡(u,v,v,u) / (|u|²|v|² − ⟨u,v⟩²)`,
//!   which makes the unit sphere `K = +1`. Note `𝓡(u,v,u,v)` carries the
//!   opposite sign under this convention.
//! * `Ric_ij = R^k_ikj`, `S = g^ij Ric_ij` (unit sphere: `Ric = g`, `S = 2`).

use nalgebra::Matrix2;
use serde::Serialize;

use super::{christoffel_at, christoffel_partials, inner, metric_and_inverse, Manifold, Point, Tangent, DIM};
use crate::error::{Error, Result};

/// `R^l_kij` stored as `[l][k][i][j]`.
pub type RiemannUp = [[[[f64; DIM]; DIM]; DIM]; DIM];

/// Classical curvature at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub up: RiemannUp,
    pub metric: Matrix2<f64>,
}

/// Worst violations of the algebraic symmetries of a lowered 4-tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SymmetryResiduals {
    pub skew_first_pair: f64,
    pub skew_second_pair: f64,
    pub exchange: f64,
    pub first_bianchi: f64,
}

impl SymmetryResiduals {
    pub fn of(t: &RiemannUp) -> Self {
        let mut out = Self::default();
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let v = t[i][j][k][l];
                        out.skew_first_pair = out.skew_first_pair.max((v + t[j][i][k][l]).abs());
                        out.skew_second_pair = out.skew_second_pair.max((v + t[i][j][l][k]).abs());
                        out.exchange = out.exchange.max((v - t[k][l][i][j]).abs());
                        out.first_bianchi =
                            out.first_bianchi.max((v + t[k][j][l][i] + t[l][j][i][k]).abs());
                    }
                }
            }
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.skew_first_pair
            .max(self.skew_second_pair)
            .max(self.exchange)
            .max(self.first_bianchi)
    }
}

/// `R_ijkl = w · g_jm R^m_ikl`; `w = 1` for the classical tensor.
pub fn lower(up: &RiemannUp, g: &Matrix2<f64>, weight: f64) -> RiemannUp {
    let mut out = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    out[i][j][k][l] =
                        weight * (0..DIM).map(|m| g[(j, m)] * up[m][i][k][l]).sum::<f64>();
                }
            }
        }
    }
    out
}

/// `R(X,Y)Z` from the `[l][k][i][j]` array.
pub fn apply(up: &RiemannUp, x: &Tangent, y: &Tangent, z: &Tangent) -> Tangent {
    let mut out = Tangent::zeros();
    for l in 0..DIM {
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    out[l] += up[l][k][i][j] * x[i] * y[j] * z[k];
                }
            }
        }
    }
    out
}

pub fn max_abs(t: &RiemannUp) -> f64 {
    t.iter().flatten().flatten().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &RiemannUp, b: &RiemannUp) -> f64 {
    a.iter()
        .flatten()
        .flatten()
        .flatten()
        .zip(b.iter().flatten().flatten().flatten())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn scale(t: &RiemannUp, s: f64) -> RiemannUp {
    let mut out = *t;
    out.iter_mut()
        .flatten()
        .flatten()
        .flatten()
        .for_each(|v| *v *= s);
    out
}

pub fn flatten(t: &RiemannUp) -> Vec<f64> {
    t.iter().flatten().flatten().flatten().copied().collect()
}

/// Ricci contraction `Ric_ij = R^k_ikj`.
pub fn ricci(up: &RiemannUp) -> Matrix2<f64> {
    Matrix2::from_fn(|i, j| (0..DIM).map(|k| up[k][i][k][j]).sum())
}

/// Gram determinant `|u|²|v|² − ⟨u,v⟩²`, rejecting (near-)parallel pairs.
pub fn gram_determinant(g: &Matrix2<f64>, u: &Tangent, v: &Tangent) -> Result<f64> {
    let (uu, vv, uv) = (inner(g, u, u), inner(g, v, v), inner(g, u, v));
    let gram = uu * vv - uv * uv;
    if !(gram > 1e-12 * uu * vv) {
        return Err(Error::DegenerateSpan { gram });
    }
    Ok(gram)
}

impl Curvature {
    /// `R_ijkl` (see module docs for the index convention).
    pub fn lowered(&self) -> RiemannUp {
        lower(&self.up, &self.metric, 1.0)
    }

    /// `R(X,Y)Z`.
    pub fn apply(&self, x: &Tangent, y: &Tangent, z: &Tangent) -> Tangent {
        apply(&self.up, x, y, z)
    }

    /// `𝓡(X,Y,Z,W) = ⟨R(Z,W)X, Y⟩`.
    pub fn form4(&self, x: &Tangent, y: &Tangent, z: &Tangent, w: &Tangent) -> f64 {
        inner(&self.metric, &self.apply(z, w, x), y)
    }

    pub fn sectional(&self, u: &Tangent, v: &Tangent) -> Result<f64> {
        let gram = gram_determinant(&self.metric, u, v)?;
        Ok(self.form4(u, v, v, u) / gram)
    }

    pub fn ricci(&self) -> Matrix2<f64> {
        ricci(&self.up)
    }

    pub fn scalar(&self) -> f64 {
        let ginv = self.metric.try_inverse().unwrap_or_else(Matrix2::zeros);
        (ginv * self.ricci()).trace()
    }

    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        SymmetryResiduals::of(&self.lowered())
    }
}

/// `R^l_kij = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`,
/// with `∂Γ` from central differences.
pub fn curvature_at(m: &dyn Manifold, p: &Point) -> Result<Curvature> {
    let gamma = christoffel_at(m, p)?;
    let (g, _) = metric_and_inverse(m, p)?;
    let dgamma = christoffel_partials(m, p)?;
    let mut up = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for (l, up_l) in up.iter_mut().enumerate() {
        for (k, up_lk) in up_l.iter_mut().enumerate() {
            for i in 0..DIM {
                for j in 0..DIM {
                    let mut v = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                    for mm in 0..DIM {
                        v += gamma.get(l, i, mm) * gamma.get(mm, j, k)
                            - gamma.get(l, j, mm) * gamma.get(mm, i, k);
                    }
                    up_lk[i][j] = v;
                }
            }
        }
    }
    Ok(Curvature { up, metric: g })
}
