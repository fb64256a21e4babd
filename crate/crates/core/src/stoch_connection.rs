//! Randomized fields `X̃ = εX` and the stochastic connection `D̃_X Y = D_{X̃} Ỹ`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::{
    christoffel_at, covariant_derivative_raw, inner, lie_bracket, metric_and_inverse, Christoffel, Manifold, Point,
    ScalarFieldExpr, ScalarJet, Tangent, VectorFieldExpr, DIM,
};
use crate::random_field::FieldRealization;
use crate::report::IdentityReport;

/// Which of the two independent evaluation paths to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed-form expansion in `ε`, its derivatives and classical quantities.
    Formula,
    /// Classical calculus applied to the product fields `εX`.
    Direct,
}

/// `X̃ = εX` for one realization.
#[derive(Debug, Clone)]
pub struct RandomizedField {
    pub base: VectorFieldExpr,
    pub realization: FieldRealization,
}

impl RandomizedField {
    pub fn new(base: &VectorFieldExpr, realization: &FieldRealization) -> Self {
        Self {
            base: base.clone(),
            realization: realization.clone(),
        }
    }

    pub fn value(&self, p: &Point) -> Result<Tangent> {
        Ok(self.base.value(p) * self.realization.eps(p)?)
    }

    /// `∂ⱼ(εXⁱ) = ε ∂ⱼXⁱ + Xⁱ ∂ⱼε`.
    pub fn jacobian(&self, p: &Point) -> Result<Matrix2<f64>> {
        let e = self.realization.eval(p)?;
        Ok(product_jacobian(&e, &self.base.value(p), &self.base.jacobian(p)))
    }

    /// The product field as a plain expression (no chart checks).
    pub fn expr(&self) -> VectorFieldExpr {
        let r = self.realization.clone();
        let eps = ScalarFieldExpr::new(
            {
                let r = r.clone();
                move |p| r.eps_unchecked(p)
            },
            {
                let r = r.clone();
                move |p| r.eval_unchecked(p).grad
            },
            move |p| r.eval_unchecked(p).hess,
        );
        self.base.multiplied_by(&eps)
    }
}

fn product_jacobian(e: &ScalarJet, x: &Tangent, jx: &Matrix2<f64>) -> Matrix2<f64> {
    jx * e.value + x * e.grad.transpose()
}

/// `g̃ᵢⱼ = ε² gᵢⱼ`.
pub fn stochastic_metric(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<Matrix2<f64>> {
    let (g, _) = metric_and_inverse(m, p)?;
    let e = r.eps(p)?;
    Ok(g * (e * e))
}

/// `Γ̃ᵏᵢⱼ = ε² Γᵏᵢⱼ + ε ∂ᵢε δⱼₖ`, with the literal Kronecker delta of the
/// chart. Not symmetric in `(i, j)` in general.
pub fn stochastic_christoffel(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<Christoffel> {
    let gamma = christoffel_at(m, p)?;
    let e = r.eval(p)?;
    Ok(stochastic_christoffel_from(&gamma, &e))
}

pub(crate) fn stochastic_christoffel_from(gamma: &Christoffel, e: &ScalarJet) -> Christoffel {
    let mut out = Christoffel::default();
    for k in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                let delta = if j == k { e.value * e.grad[i] } else { 0.0 };
                out.0[k][i][j] = e.value * e.value * gamma.0[k][i][j] + delta;
            }
        }
    }
    out
}

/// `Γ̃ᵏᵢⱼ` read off as the components of `D̃_{∂ᵢ} ∂ⱼ` evaluated directly.
pub fn stochastic_christoffel_direct(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<Christoffel> {
    let mut out = Christoffel::default();
    for i in 0..DIM {
        for j in 0..DIM {
            let d = stochastic_covariant_derivative(
                m,
                r,
                &VectorFieldExpr::coordinate(i),
                &VectorFieldExpr::coordinate(j),
                p,
                Method::Direct,
            )?;
            for k in 0..DIM {
                out.0[k][i][j] = d[k];
            }
        }
    }
    Ok(out)
}

/// `D̃_X Y`. Formula: `ε² D_X Y + ε X(ε) Y`. Direct: `D_{εX}(εY)`.
pub fn stochastic_covariant_derivative(
    m: &dyn Manifold,
    r: &FieldRealization,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    p: &Point,
    method: Method,
) -> Result<Tangent> {
    let gamma = christoffel_at(m, p)?;
    let e = r.eval(p)?;
    let (xv, yv) = (x.value(p), y.value(p));
    Ok(match method {
        Method::Formula => {
            let dxy = covariant_derivative_raw(&gamma, &xv, &yv, &y.jacobian(p));
            dxy * (e.value * e.value) + yv * (e.value * e.grad.dot(&xv))
        }
        Method::Direct => {
            let xt = xv * e.value;
            let yt = yv * e.value;
            let jyt = product_jacobian(&e, &yv, &y.jacobian(p));
            covariant_derivative_raw(&gamma, &xt, &yt, &jyt)
        }
    })
}

/// Torsion of the stochastic connection at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorsionReport {
    /// `T̃ = D̃_X Y − D̃_Y X − [X̃, Ỹ]`; vanishes.
    pub stochastic: Tangent,
    /// `T_det = D̃_X Y − D̃_Y X − [X, Y]`.
    pub deterministic: Tangent,
    /// `(ε² − 1)[X, Y] + ε X(ε) Y − ε Y(ε) X`.
    pub deterministic_predicted: Tangent,
}

pub fn stochastic_torsion(
    m: &dyn Manifold,
    r: &FieldRealization,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    p: &Point,
) -> Result<TorsionReport> {
    let dxy = stochastic_covariant_derivative(m, r, x, y, p, Method::Direct)?;
    let dyx = stochastic_covariant_derivative(m, r, y, x, p, Method::Direct)?;
    let xt = RandomizedField::new(x, r);
    let yt = RandomizedField::new(y, r);
    let bracket_tilde = yt.jacobian(p)? * xt.value(p)? - xt.jacobian(p)? * yt.value(p)?;
    let bracket = lie_bracket(x, y, p);
    let e = r.eval(p)?;
    let (xv, yv) = (x.value(p), y.value(p));
    let predicted =
        bracket * (e.value * e.value - 1.0) + yv * (e.value * e.grad.dot(&xv)) - xv * (e.value * e.grad.dot(&yv));
    Ok(TorsionReport {
        stochastic: dxy - dyx - bracket_tilde,
        deterministic: dxy - dyx - bracket,
        deterministic_predicted: predicted,
    })
}

fn to_vec(v: &Tangent) -> Vec<f64> {
    vec![v[0], v[1]]
}

/// Residuals of the three connection axioms:
/// `D̃_{fX+Y} Z = f D̃_X Z + D̃_Y Z`, `D̃_X(aY + Z) = a D̃_X Y + D̃_X Z`,
/// `D̃_X(fY) = f D̃_X Y + X̃(f) Ỹ`.
#[allow(clippy::too_many_arguments)]
pub fn connection_axiom_residuals(
    m: &dyn Manifold,
    r: &FieldRealization,
    f: &ScalarFieldExpr,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    z: &VectorFieldExpr,
    a: f64,
    p: &Point,
    tolerance: f64,
) -> Result<[IdentityReport; 3]> {
    let d = |u: &VectorFieldExpr, v: &VectorFieldExpr| stochastic_covariant_derivative(m, r, u, v, p, Method::Direct);
    let fp = f.value(p);
    let e = r.eval(p)?;
    let pt = [p[0], p[1]];

    let lhs1 = d(&x.multiplied_by(f).plus(y), z)?;
    let rhs1 = d(x, z)? * fp + d(y, z)?;

    let lhs2 = d(x, &y.scaled(a).plus(z))?;
    let rhs2 = d(x, y)? * a + d(x, z)?;

    let lhs3 = d(x, &y.multiplied_by(f))?;
    let xt_f = e.value * f.gradient(p).dot(&x.value(p));
    let rhs3 = d(x, y)? * fp + y.value(p) * (e.value * xt_f);

    let seed = r.seed();
    Ok([
        IdentityReport::check("connection.axiom-1", to_vec(&lhs1), to_vec(&rhs1), tolerance).at(pt).seeded(seed),
        IdentityReport::check("connection.axiom-2", to_vec(&lhs2), to_vec(&rhs2), tolerance).at(pt).seeded(seed),
        IdentityReport::check("connection.axiom-3", to_vec(&lhs3), to_vec(&rhs3), tolerance).at(pt).seeded(seed),
    ])
}

/// `X(⟨Y, Z⟩)` from analytic partials.
fn directional_of_inner(
    g: &Matrix2<f64>,
    dg: &[Matrix2<f64>; 2],
    x: &Tangent,
    y: &Tangent,
    jy: &Matrix2<f64>,
    z: &Tangent,
    jz: &Matrix2<f64>,
) -> f64 {
    (0..DIM)
        .map(|i| {
            let dy = jy.column(i).into_owned();
            let dz = jz.column(i).into_owned();
            x[i] * (inner(&dg[i], y, z) + inner(g, &dy, z) + inner(g, y, &dz))
        })
        .sum()
}

/// Metric compatibility of `D̃` with `g̃`, and its failure against `g`.
///
/// * `connection.metric-compatibility`: `⟨D̃_X Y, Z̃⟩ + ⟨Ỹ, D̃_X Z⟩` vs `X̃(⟨Ỹ, Z̃⟩)`.
/// * `connection.metric-incompatibility-deterministic`: the deviation
///   `⟨D̃_X Y, Z⟩ + ⟨Y, D̃_X Z⟩ − X(⟨Y, Z⟩)` vs its prediction
///   `(ε² − 1) X(⟨Y, Z⟩) + 2ε X(ε) ⟨Y, Z⟩`.
pub fn metric_compatibility_residuals(
    m: &dyn Manifold,
    r: &FieldRealization,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    z: &VectorFieldExpr,
    p: &Point,
    tolerance: f64,
) -> Result<[IdentityReport; 2]> {
    let (g, _) = metric_and_inverse(m, p)?;
    let dg = m.metric_partials(p);
    let e = r.eval(p)?;
    let (xv, yv, zv) = (x.value(p), y.value(p), z.value(p));
    let (jy, jz) = (y.jacobian(p), z.jacobian(p));
    let dxy = stochastic_covariant_derivative(m, r, x, y, p, Method::Direct)?;
    let dxz = stochastic_covariant_derivative(m, r, x, z, p, Method::Direct)?;

    let (yt, zt) = (yv * e.value, zv * e.value);
    let lhs_a = inner(&g, &dxy, &zt) + inner(&g, &yt, &dxz);
    let jyt = product_jacobian(&e, &yv, &jy);
    let jzt = product_jacobian(&e, &zv, &jz);
    let rhs_a = directional_of_inner(&g, &dg, &(xv * e.value), &yt, &jyt, &zt, &jzt);

    let x_yz = directional_of_inner(&g, &dg, &xv, &yv, &jy, &zv, &jz);
    let deviation = inner(&g, &dxy, &zv) + inner(&g, &yv, &dxz) - x_yz;
    let predicted = (e.value * e.value - 1.0) * x_yz + 2.0 * e.value * e.grad.dot(&xv) * inner(&g, &yv, &zv);

    let pt = [p[0], p[1]];
    Ok([
        IdentityReport::check("connection.metric-compatibility", vec![lhs_a], vec![rhs_a], tolerance)
            .at(pt)
            .seeded(r.seed()),
        IdentityReport::check(
            "connection.metric-incompatibility-deterministic",
            vec![deviation],
            vec![predicted],
            tolerance,
        )
        .at(pt)
        .seeded(r.seed()),
    ])
}

/// Both sides of `∂ₖ(ε² gᵢⱼ) = g_lj Γ̃ˡᵢₖ + gᵢₗ Γ̃ˡⱼₖ`, evaluated as written,
/// stored `[k][i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChristoffelMetricIdentity {
    pub lhs: [[[f64; DIM]; DIM]; DIM],
    pub rhs: [[[f64; DIM]; DIM]; DIM],
    /// Closed form of `lhs − rhs`: `2ε ∂ₖε gᵢⱼ − ε ∂ᵢε g_kj − ε ∂ⱼε g_ik`.
    pub predicted_gap: [[[f64; DIM]; DIM]; DIM],
}

impl ChristoffelMetricIdentity {
    pub fn gap(&self) -> [[[f64; DIM]; DIM]; DIM] {
        let mut out = self.lhs;
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    out[k][i][j] -= self.rhs[k][i][j];
                }
            }
        }
        out
    }

    pub fn flat(t: &[[[f64; DIM]; DIM]; DIM]) -> Vec<f64> {
        t.iter().flatten().flatten().copied().collect()
    }
}

pub fn christoffel_metric_identity(m: &dyn Manifold, r: &FieldRealization, p: &Point) -> Result<ChristoffelMetricIdentity> {
    let (g, _) = metric_and_inverse(m, p)?;
    let dg = m.metric_partials(p);
    let e = r.eval(p)?;
    let gt = stochastic_christoffel(m, r, p)?;
    let mut lhs = [[[0.0; DIM]; DIM]; DIM];
    let mut rhs = [[[0.0; DIM]; DIM]; DIM];
    let mut predicted_gap = [[[0.0; DIM]; DIM]; DIM];
    for k in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                lhs[k][i][j] = 2.0 * e.value * e.grad[k] * g[(i, j)] + e.value * e.value * dg[k][(i, j)];
                rhs[k][i][j] = (0..DIM).map(|l| g[(l, j)] * gt.0[l][i][k] + g[(i, l)] * gt.0[l][j][k]).sum();
                predicted_gap[k][i][j] = 2.0 * e.value * e.grad[k] * g[(i, j)]
                    - e.value * e.grad[i] * g[(k, j)]
                    - e.value * e.grad[j] * g[(i, k)];
            }
        }
    }
    Ok(ChristoffelMetricIdentity { lhs, rhs, predicted_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{FlatTorus, Sphere, TrigPolynomial};
    use crate::random_field::{BasisKind, FieldSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_3;
    use std::sync::Arc;

    fn realization(kind: BasisKind, c: f64, seed: u64) -> FieldRealization {
        FieldRealization::sample(&Arc::new(FieldSpec::new(kind, 64, 3.0, c).unwrap()), seed)
    }

    #[test]
    fn noiseless_christoffel_is_classical() {
        let r = realization(BasisKind::SphereHarmonics { radius: 1.0 }, 0.0, 1);
        let p = Point::new(1.0, 2.0);
        let s = Sphere::unit();
        assert_eq!(stochastic_christoffel(&s, &r, &p).unwrap(), christoffel_at(&s, &p).unwrap());
    }

    #[test]
    fn flat_torus_christoffel_is_the_delta_term() {
        let r = realization(BasisKind::TorusFourier, 0.1, 2);
        let p = Point::new(0.5, 3.0);
        let e = r.eval(&p).unwrap();
        let gt = stochastic_christoffel(&FlatTorus, &r, &p).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if j == k { e.value * e.grad[i] } else { 0.0 };
                    assert_eq!(gt.get(k, i, j), expect);
                }
            }
        }
    }

    #[test]
    fn christoffel_formula_matches_direct_on_sphere() {
        let r = realization(BasisKind::SphereHarmonics { radius: 1.0 }, 0.1, 3);
        let p = Point::new(FRAC_PI_3, 1.0);
        let s = Sphere::unit();
        let a = stochastic_christoffel(&s, &r, &p).unwrap();
        let b = stochastic_christoffel_direct(&s, &r, &p).unwrap();
        assert!(a.sub(&b).max_abs() <= 1e-14);
    }

    #[test]
    fn covariant_derivative_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = Sphere::unit();
        let r = realization(BasisKind::SphereHarmonics { radius: 1.0 }, 0.1, 4);
        for _ in 0..50 {
            let p = s.domain().sample(&mut rng);
            let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let y = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let a = stochastic_covariant_derivative(&s, &r, &x, &y, &p, Method::Formula).unwrap();
            let b = stochastic_covariant_derivative(&s, &r, &x, &y, &p, Method::Direct).unwrap();
            assert!((a - b).amax() <= 1e-8 * (1.0 + a.amax()));
        }
    }

    #[test]
    fn coordinate_fields_on_torus() {
        let r = realization(BasisKind::TorusFourier, 0.1, 5);
        let p = Point::new(2.0, 1.0);
        let e = r.eval(&p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let d = stochastic_covariant_derivative(
                    &FlatTorus,
                    &r,
                    &VectorFieldExpr::coordinate(i),
                    &VectorFieldExpr::coordinate(j),
                    &p,
                    Method::Direct,
                )
                .unwrap();
                let mut expect = Tangent::zeros();
                expect[j] = e.value * e.grad[i];
                assert!((d - expect).amax() < 1e-15);
            }
        }
        let t = stochastic_torsion(
            &FlatTorus,
            &r,
            &VectorFieldExpr::coordinate(0),
            &VectorFieldExpr::coordinate(1),
            &p,
        )
        .unwrap();
        assert!(t.stochastic.amax() <= 1e-8);
        let expect = Tangent::new(0.0, 1.0) * (e.value * e.grad[0]) - Tangent::new(1.0, 0.0) * (e.value * e.grad[1]);
        assert!((t.deterministic - expect).amax() <= 1e-8);
    }

    #[test]
    fn torsion_of_equal_fields_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
        let r = realization(BasisKind::TorusFourier, 0.1, 6);
        let t = stochastic_torsion(&FlatTorus, &r, &x, &x, &Point::new(1.0, 1.0)).unwrap();
        assert_eq!(t.stochastic.amax(), 0.0);
        assert_eq!(t.deterministic.amax(), 0.0);
    }

    #[test]
    fn noiseless_axioms_and_compatibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = Sphere::unit();
        let r = realization(BasisKind::SphereHarmonics { radius: 1.0 }, 0.0, 7);
        let f = ScalarFieldExpr::from(TrigPolynomial::random(&mut rng, 1.0));
        let [x, y, z] = [0; 3].map(|_| VectorFieldExpr::random_trig(&mut rng, 1.0));
        let p = Point::new(1.2, 0.3);
        for rep in connection_axiom_residuals(&s, &r, &f, &x, &y, &z, 2.5, &p, 1e-10).unwrap() {
            assert_eq!(rep.pass, Some(true), "{rep:?}");
        }
        for rep in metric_compatibility_residuals(&s, &r, &x, &y, &z, &p, 1e-10).unwrap() {
            assert_eq!(rep.pass, Some(true), "{rep:?}");
            assert!(rep.residual_norm <= 1e-10);
        }
    }

    #[test]
    fn unit_function_reduces_axiom_one_to_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = realization(BasisKind::TorusFourier, 0.1, 8);
        let one = ScalarFieldExpr::constant(1.0);
        let [x, y, z] = [0; 3].map(|_| VectorFieldExpr::random_trig(&mut rng, 1.0));
        let reps = connection_axiom_residuals(&FlatTorus, &r, &one, &x, &y, &z, 1.0, &Point::new(0.3, 0.9), 1e-8).unwrap();
        assert!(reps[0].residual_norm <= 1e-13 && reps[1].residual_norm <= 1e-13);
    }

    #[test]
    fn christoffel_metric_identity_gap_matches_closed_form() {
        let s = Sphere::unit();
        let r = realization(BasisKind::SphereHarmonics { radius: 1.0 }, 0.1, 9);
        let id = christoffel_metric_identity(&s, &r, &Point::new(1.0, 0.4)).unwrap();
        let gap = ChristoffelMetricIdentity::flat(&id.gap());
        let pred = ChristoffelMetricIdentity::flat(&id.predicted_gap);
        for (a, b) in gap.iter().zip(&pred) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(gap.iter().any(|v| v.abs() > 1e-6));

        let r0 = realization(BasisKind::SphereHarmonics { radius: 1.0 }, 0.0, 9);
        let id0 = christoffel_metric_identity(&s, &r0, &Point::new(1.0, 0.4)).unwrap();
        assert!(ChristoffelMetricIdentity::flat(&id0.gap()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn stochastic_metric_is_conformal() {
        let s = Sphere::new(2.0).unwrap();
        let r = realization(BasisKind::SphereHarmonics { radius: 2.0 }, 0.1, 10);
        let p = Point::new(0.7, 5.0);
        let e = r.eps(&p).unwrap();
        let gt = stochastic_metric(&s, &r, &p).unwrap();
        assert_eq!(gt, s.metric(&p) * (e * e));
    }

    #[test]
    fn randomization_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r = realization(BasisKind::TorusFourier, 0.1, 12);
        let f = ScalarFieldExpr::from(TrigPolynomial::random(&mut rng, 1.0));
        let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
        let y = VectorFieldExpr::random_trig(&mut rng, 1.0);
        let p = Point::new(4.0, 2.0);
        let lhs = RandomizedField::new(&x.multiplied_by(&f).plus(&y), &r).value(&p).unwrap();
        let rhs = RandomizedField::new(&x, &r).value(&p).unwrap() * f.value(&p) + RandomizedField::new(&y, &r).value(&p).unwrap();
        assert!((lhs - rhs).amax() < 1e-14);
        // The expression form agrees with the checked accessors.
        let xt = RandomizedField::new(&x, &r);
        assert!((xt.expr().jacobian(&p) - xt.jacobian(&p).unwrap()).amax() < 1e-14);
    }
}
