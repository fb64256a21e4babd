use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{curvature_at, Manifold, Point, Tangent};
use crate::quadrature::integrate_closed_surface;
use crate::random_field::{BasisKind, FieldRealization, FieldSpec};
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussBonnetResult {
    pub manifold: String,
    pub chi: i32,
    pub grid: [usize; 2],
    /// `∫ Ω` with `Ω = K dA / 2π`.
    pub integral_omega: f64,
    /// `∫ E[ε²] Ω` with `E[ε²] = 1 + V`.
    pub integral_expected: f64,
    /// `(1/2π) ∫ V K dA`, integrated directly.
    pub deviation: f64,
    /// `(K/2π) Σ σᵢ²` when `K` is constant and the basis is orthonormal on
    /// the whole surface.
    pub deviation_closed_form: Option<f64>,
    /// Sum of the fine-vs-half-grid differences of the quadratures above.
    pub refinement_delta: f64,
    /// `(|K|/2π) Σ σᵢ² sup ψᵢ² · cap area`: a priori bound on the share of
    /// the deviation carried by the regions outside the chart.
    pub cap_bound: f64,
    /// Mean of `∫ ε² Ω − ∫ Ω` over sampled realizations.
    pub monte_carlo: Option<MonteCarloEstimate>,
}

/// Gauss–Bonnet integrals for a closed surface. The excluded polar caps of
/// the sphere chart are integrated on their own coordinate boxes with the
/// constant curvature of the surface.
pub fn gauss_bonnet_deviation(
    m: &dyn Manifold,
    spec: &Arc<FieldSpec>,
    grid: [usize; 2],
    monte_carlo: Option<(usize, u64)>,
) -> Result<GaussBonnetResult> {
    let chi = m.euler_characteristic().ok_or_else(|| Error::NotClosedSurface(m.name().to_string()))?;
    let constant_k = m.constant_curvature();
    if !m.cap_boxes().is_empty() && constant_k.is_none() {
        return Err(Error::InvalidArgument(format!(
            "{} leaves regions outside its chart and has no constant curvature to fill them",
            m.name()
        )));
    }
    let domain = m.domain();
    let curvature = |p: &Point| -> f64 {
        if let Some(k) = constant_k {
            return k;
        }
        if !domain.contains(p) {
            return f64::NAN;
        }
        curvature_at(m, p)
            .and_then(|c| c.sectional(&Tangent::new(1.0, 0.0), &Tangent::new(0.0, 1.0)))
            .unwrap_or(f64::NAN)
    };

    let omega = integrate_closed_surface(m, |p| curvature(p) / TAU, grid)?;
    let expected = integrate_closed_surface(m, |p| (1.0 + spec.variance(p)) * curvature(p) / TAU, grid)?;
    let deviation = integrate_closed_surface(m, |p| spec.variance(p) * curvature(p) / TAU, grid)?;

    let cap_area: f64 = {
        let total = integrate_closed_surface(m, |_| 1.0, grid)?.value;
        let chart = crate::quadrature::integrate_chart(m, |_| 1.0, grid)?.value;
        total - chart
    };
    let basis = spec.basis();
    let sup_v: f64 = spec.sigma2().iter().enumerate().map(|(i, s)| s * basis.sup_squared(i)).sum();
    let k_abs = constant_k.unwrap_or(0.0).abs();

    let deviation_closed_form = constant_k.and_then(|k| {
        let orthonormal = match basis.kind() {
            BasisKind::TorusFourier => m.name() == "flat-torus",
            BasisKind::SphereHarmonics { radius } => m.name() == "sphere" && (k * radius * radius - 1.0).abs() < 1e-12,
            _ => false,
        };
        orthonormal.then(|| k / TAU * spec.total_variance())
    });

    let monte_carlo = match monte_carlo {
        None => None,
        Some((n, seed)) => {
            if n < 2 {
                return Err(Error::InvalidArgument("Monte Carlo needs at least two realizations".into()));
            }
            let values: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let r = FieldRealization::sample(spec, mix_seed(seed, i as u64));
                    integrate_closed_surface(m, |p| (r.eps_unchecked(p).powi(2) - 1.0) * curvature(p) / TAU, grid)
                        .map(|q| q.value)
                })
                .collect::<Result<_>>()?;
            let nf = n as f64;
            let mean = values.iter().sum::<f64>() / nf;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            Some(MonteCarloEstimate { mean, stderr: (var / nf).sqrt(), n, seed })
        }
    };

    Ok(GaussBonnetResult {
        manifold: m.name().to_string(),
        chi,
        grid,
        integral_omega: omega.value,
        integral_expected: expected.value,
        deviation: deviation.value,
        deviation_closed_form,
        refinement_delta: omega.refinement_delta + expected.refinement_delta + deviation.refinement_delta,
        cap_bound: k_abs / TAU * sup_v * cap_area,
        monte_carlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{FlatTorus, HalfPlane, Sphere};

    fn spec(kind: BasisKind, n: usize, c: f64) -> Arc<FieldSpec> {
        Arc::new(FieldSpec::new(kind, n, 3.0, c).unwrap())
    }

    #[test]
    fn noiseless_sphere_integrates_to_two() {
        for radius in [1.0, 2.5] {
            let m = Sphere::new(radius).unwrap();
            let g = gauss_bonnet_deviation(&m, &spec(BasisKind::SphereHarmonics { radius }, 16, 0.0), [64, 128], None).unwrap();
            assert!((g.integral_omega - 2.0).abs() <= 1e-6);
            assert_eq!(g.deviation, 0.0);
            assert_eq!(g.chi, 2);
        }
    }

    #[test]
    fn sphere_deviation_matches_closed_form_and_monte_carlo() {
        let m = Sphere::unit();
        let s = spec(BasisKind::SphereHarmonics { radius: 1.0 }, 16, 0.1);
        let g = gauss_bonnet_deviation(&m, &s, [64, 128], Some((200, 42))).unwrap();
        let closed = g.deviation_closed_form.unwrap();
        assert!(closed > 0.0);
        assert!((g.deviation - closed).abs() <= g.refinement_delta.max(1e-10));
        assert!((g.integral_expected - g.integral_omega - g.deviation).abs() <= 1e-12);
        let mc = g.monte_carlo.unwrap();
        assert!((mc.mean - closed).abs() <= 3.0 * mc.stderr, "{} vs {closed} ± {}", mc.mean, mc.stderr);
        assert!(g.cap_bound > 0.0 && g.cap_bound < closed);
    }

    #[test]
    fn flat_torus_has_no_deviation() {
        let s = spec(BasisKind::TorusFourier, 32, 0.1);
        let g = gauss_bonnet_deviation(&FlatTorus, &s, [32, 32], Some((10, 1))).unwrap();
        assert_eq!(g.integral_omega, 0.0);
        assert_eq!(g.deviation, 0.0);
        assert_eq!(g.monte_carlo.unwrap().mean, 0.0);
        assert_eq!(g.deviation_closed_form, Some(0.0));
    }

    #[test]
    fn half_plane_is_rejected() {
        let s = spec(BasisKind::TorusFourier, 4, 0.1);
        assert!(matches!(
            gauss_bonnet_deviation(&HalfPlane, &s, [8, 8], None),
            Err(Error::NotClosedSurface(_))
        ));
    }
}
