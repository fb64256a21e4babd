//! The random function `ε = 1 + Σᵢ Xᵢ ψᵢ`, `Xᵢ ~ N(0, σᵢ²)`, `σᵢ² = c · i^(−α)`.

mod basis;
mod realization;

pub use basis::{
    sphere_harmonics, torus_modes, Basis, BasisKind, Harmonic, TorusMode, TrigKind, SPHERE_MAX_DEGREE,
};
pub use realization::{FieldRealization, RealizationRecord, EPS_FLOOR, VALIDATION_GRID};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{CurvePath, Point, Tangent};

/// Law of the random function: basis, truncation and variance decay.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    basis: Basis,
    alpha_exp: f64,
    c: f64,
    sigma2: Vec<f64>,
}

/// Serializable summary of a [`FieldSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct FieldSpecSummary {
    pub basis: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha_exp: f64,
    pub c: f64,
}

impl FieldSpec {
    /// Rejects `α ≤ 2` (the truncated series would not converge to an a.s.
    /// `C²` field), negative `c` and `N = 0`.
    pub fn new(kind: BasisKind, n: usize, alpha_exp: f64, c: f64) -> Result<Self> {
        if !(alpha_exp > 2.0 && alpha_exp.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "decay exponent must exceed 2 for an almost surely C² field, got {alpha_exp}"
            )));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidSpec(format!("amplitude c must be >= 0, got {c}")));
        }
        let basis = Basis::new(kind, n)?;
        let sigma2 = (1..=n).map(|i| c * (i as f64).powf(-alpha_exp)).collect();
        Ok(Self { basis, alpha_exp, c, sigma2 })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn alpha_exp(&self) -> f64 {
        self.alpha_exp
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `σᵢ²`, `i = 1..=N`.
    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn total_variance(&self) -> f64 {
        self.sigma2.iter().sum()
    }

    pub fn summary(&self) -> FieldSpecSummary {
        FieldSpecSummary {
            basis: self.basis.kind().name().to_string(),
            n: self.n(),
            alpha_exp: self.alpha_exp,
            c: self.c,
        }
    }

    /// `V(p) = Σ σᵢ² ψᵢ(p)² = Var ε(p)`.
    pub fn variance(&self, p: &Point) -> f64 {
        self.basis
            .values(p)
            .iter()
            .zip(&self.sigma2)
            .map(|(v, s)| s * v * v)
            .sum()
    }

    /// `(E ε, E ε², E ε³, E ε⁴) = (1, 1 + V, 1 + 3V, 1 + 6V + 3V²)`.
    pub fn moments(&self, p: &Point) -> [f64; 4] {
        let v = self.variance(p);
        [1.0, 1.0 + v, 1.0 + 3.0 * v, 1.0 + 6.0 * v + 3.0 * v * v]
    }

    /// `α = E[ε²] = 1 + Σσᵢ²ψᵢ²` and `β = E[ε dε/dt] = Σσᵢ²ψᵢ ∂ₖψᵢ vᵏ` at
    /// position `p` moving with velocity `v`.
    pub fn alpha_beta(&self, p: &Point, v: &Tangent) -> (f64, f64) {
        let (mut a, mut b) = (1.0, 0.0);
        for (j, s) in self.basis.jets(p).iter().zip(&self.sigma2) {
            a += s * j.value * j.value;
            b += s * j.value * j.grad.dot(v);
        }
        (a, b)
    }

    /// `(α(t), β(t))` along a curve.
    pub fn alpha_beta_along(&self, curve: &CurvePath, t: f64) -> Result<(f64, f64)> {
        let p = curve.position(t);
        self.check_point(&p)?;
        Ok(self.alpha_beta(&p, &curve.velocity(t)))
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if self.basis.domain().contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                chart: self.basis.kind().name().to_string(),
                x: p[0],
                y: p[1],
            })
        }
    }
}
