use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BasisKind, FieldSpec};
use crate::error::{Error, Result};
use crate::geom::{Point, ScalarJet};

/// Realizations whose minimum on the validation grid is at or below this
/// value are flagged degenerate.
pub const EPS_FLOOR: f64 = 0.05;

/// Points per axis of the grid on which `min ε` is evaluated.
pub const VALIDATION_GRID: usize = 64;

/// One sample of `ε`: a fixed coefficient vector.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    spec: Arc<FieldSpec>,
    coefficients: Arc<[f64]>,
    seed: Option<u64>,
    min_eps: OnceLock<f64>,
}

/// JSON form of a realization, sufficient for exact replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub basis: BasisKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha_exp: f64,
    pub c: f64,
    pub seed: Option<u64>,
    pub coefficients: Vec<f64>,
    pub min_eps: f64,
    pub degenerate: bool,
}

impl PartialEq for BasisKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::TorusFourier, Self::TorusFourier) => true,
            (Self::SphereHarmonics { radius: a }, Self::SphereHarmonics { radius: b }) => a == b,
            (
                Self::Bumps { centers: c1, width: w1, domain: d1 },
                Self::Bumps { centers: c2, width: w2, domain: d2 },
            ) => c1 == c2 && w1 == w2 && d1 == d2,
            _ => false,
        }
    }
}

impl FieldRealization {
    /// Draws `Xᵢ = σᵢ Zᵢ`, `Zᵢ` standard normal from ChaCha8 seeded with
    /// `seed`, in index order. Always succeeds; check [`Self::is_degenerate`].
    pub fn sample(spec: &Arc<FieldSpec>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients: Vec<f64> = spec
            .sigma2()
            .iter()
            .map(|s2| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if *s2 == 0.0 {
                    0.0
                } else {
                    s2.sqrt() * z
                }
            })
            .collect();
        Self::build(spec.clone(), coefficients, Some(seed))
    }

    /// `ε ≡ 1`.
    pub fn noiseless(spec: &Arc<FieldSpec>) -> Self {
        Self::build(spec.clone(), vec![0.0; spec.n()], None)
    }

    pub fn from_coefficients(spec: &Arc<FieldSpec>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != spec.n() {
            return Err(Error::InvalidSpec(format!(
                "expected {} coefficients, got {}",
                spec.n(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("coefficients must be finite".into()));
        }
        Ok(Self::build(spec.clone(), coefficients, None))
    }

    fn build(spec: Arc<FieldSpec>, coefficients: Vec<f64>, seed: Option<u64>) -> Self {
        Self {
            spec,
            coefficients: coefficients.into(),
            seed,
            min_eps: OnceLock::new(),
        }
    }

    pub fn spec(&self) -> &Arc<FieldSpec> {
        &self.spec
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Minimum of `ε` over the validation grid, computed on first use.
    pub fn min_eps(&self) -> f64 {
        *self.min_eps.get_or_init(|| {
            self.spec
                .basis()
                .domain()
                .grid(VALIDATION_GRID)
                .iter()
                .map(|p| self.eps_unchecked(p))
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.min_eps() > EPS_FLOOR)
    }

    pub fn ensure_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateRealization { eps: self.min_eps(), floor: EPS_FLOOR })
        } else {
            Ok(())
        }
    }

    /// `(ε, ∂ᵢε, ∂ᵢ∂ⱼε)` at `p`, from analytic basis derivatives.
    pub fn eval(&self, p: &Point) -> Result<ScalarJet> {
        self.spec.check_point(p)?;
        Ok(self.eval_unchecked(p))
    }

    /// As [`Self::eval`] without the chart check (for stencils and off-chart quadrature).
    pub fn eval_unchecked(&self, p: &Point) -> ScalarJet {
        let mut out = ScalarJet::constant(1.0);
        if self.coefficients.iter().all(|c| *c == 0.0) {
            return out;
        }
        for (j, x) in self.spec.basis().jets(p).iter().zip(self.coefficients.iter()) {
            out.value += x * j.value;
            out.grad += j.grad * *x;
            out.hess += j.hess * *x;
        }
        out
    }

    pub fn eps(&self, p: &Point) -> Result<f64> {
        self.spec.check_point(p)?;
        Ok(self.eps_unchecked(p))
    }

    pub fn eps_unchecked(&self, p: &Point) -> f64 {
        1.0 + self
            .spec
            .basis()
            .values(p)
            .iter()
            .zip(self.coefficients.iter())
            .map(|(v, x)| v * x)
            .sum::<f64>()
    }

    /// [`Self::eval`], refusing points where `ε ≤ EPS_FLOOR`.
    pub fn eval_positive(&self, p: &Point) -> Result<ScalarJet> {
        let j = self.eval(p)?;
        if !(j.value > EPS_FLOOR) {
            return Err(Error::DegenerateRealization { eps: j.value, floor: EPS_FLOOR });
        }
        Ok(j)
    }

    pub fn record(&self) -> RealizationRecord {
        RealizationRecord {
            basis: self.spec.basis().kind().clone(),
            n: self.spec.n(),
            alpha_exp: self.spec.alpha_exp(),
            c: self.spec.c(),
            seed: self.seed,
            coefficients: self.coefficients.to_vec(),
            min_eps: self.min_eps(),
            degenerate: self.is_degenerate(),
        }
    }

    pub fn from_record(record: &RealizationRecord) -> Result<Self> {
        let spec = Arc::new(FieldSpec::new(record.basis.clone(), record.n, record.alpha_exp, record.c)?);
        let mut r = Self::from_coefficients(&spec, record.coefficients.clone())?;
        r.seed = record.seed;
        Ok(r)
    }
}
