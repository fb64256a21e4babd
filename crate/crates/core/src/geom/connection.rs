use nalgebra::Matrix2;

use super::{metric_and_inverse, Manifold, Point, Tangent, VectorFieldExpr, DIM};
use crate::error::Result;

/// Finite-difference step (chart units) for derivatives of Christoffel
/// symbols on charts without closed-form second metric partials.
pub const H_FD: f64 = 1e-4;

/// Connection coefficients stored as `[k][i][j]`, i.e. `D_{∂_i} ∂_j = Γ^k_ij ∂_k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel(pub [[[f64; DIM]; DIM]; DIM]);

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.0[k][i][j]
    }

    /// `Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &Tangent, v: &Tangent) -> Tangent {
        let mut out = Tangent::zeros();
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    out[k] += self.0[k][i][j] * u[i] * v[j];
                }
            }
        }
        out
    }

    /// Matrix `A^k_j = Γ^k_ij u^i`, so that `contract(u, v) = A v`.
    pub fn along(&self, u: &Tangent) -> Matrix2<f64> {
        let mut a = Matrix2::zeros();
        for k in 0..DIM {
            for j in 0..DIM {
                for i in 0..DIM {
                    a[(k, j)] += self.0[k][i][j] * u[i];
                }
            }
        }
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    out.0[k][i][j] -= other.0[k][i][j];
                }
            }
        }
        out
    }
}

/// Levi-Civita symbols `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel_at(m: &dyn Manifold, p: &Point) -> Result<Christoffel> {
    m.check_point(p)?;
    christoffel_unchecked(m, p)
}

/// As [`christoffel_at`] without the chart-domain check; finite-difference
/// stencils near the chart edge step slightly outside it.
pub fn christoffel_unchecked(m: &dyn Manifold, p: &Point) -> Result<Christoffel> {
    let (_, ginv) = metric_and_inverse(m, p)?;
    let dg = m.metric_partials(p);
    let mut lowered = [[[0.0; DIM]; DIM]; DIM]; // [l][i][j] = Γ_{l,ij}
    for (l, row) in lowered.iter_mut().enumerate() {
        for i in 0..DIM {
            for j in 0..DIM {
                row[i][j] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
            }
        }
    }
    let mut out = Christoffel::default();
    for k in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                out.0[k][i][j] = (0..DIM).map(|l| ginv[(k, l)] * lowered[l][i][j]).sum();
            }
        }
    }
    Ok(out)
}

/// `[∂_1 Γ, ∂_2 Γ]`, in closed form when the manifold supplies second metric
/// partials and by a fourth-order central stencil with step [`H_FD`] otherwise.
pub fn christoffel_partials(m: &dyn Manifold, p: &Point) -> Result<[Christoffel; DIM]> {
    match m.metric_second_partials(p) {
        Some(ddg) => christoffel_partials_exact(m, p, &ddg),
        None => christoffel_partials_fd(m, p),
    }
}

fn christoffel_partials_exact(m: &dyn Manifold, p: &Point, ddg: &[[Matrix2<f64>; DIM]; DIM]) -> Result<[Christoffel; DIM]> {
    let (_, ginv) = metric_and_inverse(m, p)?;
    let dg = m.metric_partials(p);
    // Γ_{l,ij} and its partials, stored [l][i][j].
    let first = |d: &[Matrix2<f64>; DIM], l: usize, i: usize, j: usize| 0.5 * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]);
    let mut out = [Christoffel::default(); DIM];
    for (h, slot) in out.iter_mut().enumerate() {
        let dginv = -(ginv * dg[h] * ginv);
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    slot.0[k][i][j] = (0..DIM)
                        .map(|l| dginv[(k, l)] * first(&dg, l, i, j) + ginv[(k, l)] * first(&ddg[h], l, i, j))
                        .sum();
                }
            }
        }
    }
    Ok(out)
}

fn christoffel_partials_fd(m: &dyn Manifold, p: &Point) -> Result<[Christoffel; DIM]> {
    let mut out = [Christoffel::default(); DIM];
    for (h, slot) in out.iter_mut().enumerate() {
        let mut e = Point::zeros();
        e[h] = H_FD;
        let at = |s: f64| christoffel_unchecked(m, &(p + e * s));
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    let f = |c: &Christoffel| c.0[k][i][j];
                    slot.0[k][i][j] = (f(&m2) - 8.0 * f(&m1) + 8.0 * f(&p1) - f(&p2)) / (12.0 * H_FD);
                }
            }
        }
    }
    Ok(out)
}

/// `(D_X Y)^k = X^i ∂_i Y^k + Γ^k_ij X^i Y^j` from pointwise data.
/// `dy[(k, i)] = ∂_i Y^k`.
pub fn covariant_derivative_raw(
    gamma: &Christoffel,
    x: &Tangent,
    y: &Tangent,
    dy: &Matrix2<f64>,
) -> Tangent {
    dy * x + gamma.contract(x, y)
}

/// Levi-Civita covariant derivative `D_X Y` at `p`.
pub fn covariant_derivative(
    m: &dyn Manifold,
    x: &VectorFieldExpr,
    y: &VectorFieldExpr,
    p: &Point,
) -> Result<Tangent> {
    let gamma = christoffel_at(m, p)?;
    Ok(covariant_derivative_raw(
        &gamma,
        &x.value(p),
        &y.value(p),
        &y.jacobian(p),
    ))
}

/// `D_v F` for a vector-valued map `F` that has no analytic partials; the
/// coordinate derivative is a central difference with step `h`.
pub fn covariant_derivative_of_map<F>(
    m: &dyn Manifold,
    direction: &Tangent,
    field: F,
    p: &Point,
    h: f64,
) -> Result<Tangent>
where
    F: Fn(&Point) -> Result<Tangent>,
{
    let gamma = christoffel_unchecked(m, p)?;
    let mut jac = Matrix2::zeros();
    for a in 0..DIM {
        let mut e = Point::zeros();
        e[a] = h;
        let d = (field(&(p + e))? - field(&(p - e))?) / (2.0 * h);
        jac.set_column(a, &d);
    }
    Ok(covariant_derivative_raw(&gamma, direction, &field(p)?, &jac))
}

/// `[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn lie_bracket(x: &VectorFieldExpr, y: &VectorFieldExpr, p: &Point) -> Tangent {
    y.jacobian(p) * x.value(p) - x.jacobian(p) * y.value(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{inner, FlatTorus, HalfPlane, ScalarFieldExpr, Sphere, TrigPolynomial};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn exact_and_stencil_christoffel_partials_agree() {
        for (m, p) in [
            (&Sphere::unit() as &dyn Manifold, Point::new(0.4, 1.0)),
            (&Sphere::new(2.0).unwrap(), Point::new(2.2, 5.0)),
            (&HalfPlane, Point::new(0.3, 0.6)),
        ] {
            let ddg = m.metric_second_partials(&p).unwrap();
            let exact = christoffel_partials_exact(m, &p, &ddg).unwrap();
            let fd = christoffel_partials_fd(m, &p).unwrap();
            for h in 0..DIM {
                assert!(exact[h].sub(&fd[h]).max_abs() < 1e-9, "{} axis {h}", m.name());
            }
        }
    }

    #[test]
    fn flat_torus_christoffel_vanishes() {
        let g = christoffel_at(&FlatTorus, &Point::new(1.3, 4.0)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn sphere_christoffel_at_equator() {
        let g = christoffel_at(&Sphere::unit(), &Point::new(FRAC_PI_2, 0.0)).unwrap();
        assert_abs_diff_eq!(g.get(0, 1, 1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(1, 0, 1), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_christoffel_hand_values() {
        // Γ^θ_φφ = −sinθ cosθ, Γ^φ_θφ = cotθ at θ = π/4.
        let g = christoffel_at(&Sphere::unit(), &Point::new(FRAC_PI_4, 1.0)).unwrap();
        assert_abs_diff_eq!(g.get(0, 1, 1), -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 0, 1), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 1, 0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(0, 0, 0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ms: [&dyn Manifold; 3] = [&FlatTorus, &Sphere::unit(), &HalfPlane];
        for m in ms {
            for _ in 0..50 {
                let p = m.domain().sample(&mut rng);
                let g = christoffel_at(m, &p).unwrap();
                for k in 0..DIM {
                    assert_eq!(g.get(k, 0, 1), g.get(k, 1, 0));
                }
            }
        }
    }

    #[test]
    fn outside_domain_is_error() {
        assert!(christoffel_at(&Sphere::unit(), &Point::new(0.01, 0.0)).is_err());
    }

    #[test]
    fn covariant_derivative_examples() {
        let torus = FlatTorus;
        let p = Point::new(0.4, 2.0);
        let d = covariant_derivative(
            &torus,
            &VectorFieldExpr::coordinate(0),
            &VectorFieldExpr::coordinate(1),
            &p,
        )
        .unwrap();
        assert_eq!(d, Tangent::zeros());

        let sphere = Sphere::unit();
        let dphi = VectorFieldExpr::coordinate(1);
        let d = covariant_derivative(&sphere, &dphi, &dphi, &Point::new(FRAC_PI_4, 0.0)).unwrap();
        assert_abs_diff_eq!(d[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-14);

        let zero = VectorFieldExpr::zero();
        let d = covariant_derivative(&sphere, &zero, &dphi, &Point::new(1.0, 1.0)).unwrap();
        assert_eq!(d, Tangent::zeros());
    }

    #[test]
    fn lie_bracket_examples() {
        let p = Point::new(0.7, 1.9);
        let x = VectorFieldExpr::new(|p: &Point| Tangent::new(p[1], 0.0), |_: &Point| {
            Matrix2::new(0.0, 1.0, 0.0, 0.0)
        });
        let y = VectorFieldExpr::coordinate(1);
        assert_eq!(lie_bracket(&x, &y, &p), Tangent::new(-1.0, 0.0));
        assert_eq!(lie_bracket(&x, &x, &p), Tangent::zeros());
        assert_eq!(
            lie_bracket(&VectorFieldExpr::coordinate(0), &y, &p),
            Tangent::zeros()
        );
    }

    #[test]
    fn torsion_free_and_leibniz_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ms: [&dyn Manifold; 3] = [&FlatTorus, &Sphere::unit(), &HalfPlane];
        for m in ms {
            for _ in 0..30 {
                let p = m.domain().shrink(0.01).sample(&mut rng);
                let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
                let y = VectorFieldExpr::random_trig(&mut rng, 1.0);
                let f = ScalarFieldExpr::from(TrigPolynomial::random(&mut rng, 1.0));
                let dxy = covariant_derivative(m, &x, &y, &p).unwrap();
                let dyx = covariant_derivative(m, &y, &x, &p).unwrap();
                let br = lie_bracket(&x, &y, &p);
                assert!((dxy - dyx - br).amax() < 1e-12 * (1.0 + br.amax()));
                assert!((lie_bracket(&x, &y, &p) + lie_bracket(&y, &x, &p)).amax() == 0.0);

                // D_X(fY) = X(f) Y + f D_X Y
                let fy = y.multiplied_by(&f);
                let lhs = covariant_derivative(m, &x, &fy, &p).unwrap();
                let jet = f.jet(&p);
                let rhs = y.value(&p) * jet.grad.dot(&x.value(&p)) + dxy * jet.value;
                assert!((lhs - rhs).amax() < 1e-11 * (1.0 + rhs.amax()));
            }
        }
    }

    #[test]
    fn metric_compatibility_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ms: [&dyn Manifold; 3] = [&FlatTorus, &Sphere::unit(), &HalfPlane];
        let h = 1e-5;
        for m in ms {
            for _ in 0..30 {
                let p = m.domain().shrink(0.05).sample(&mut rng);
                let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
                let y = VectorFieldExpr::random_trig(&mut rng, 1.0);
                let z = VectorFieldExpr::random_trig(&mut rng, 1.0);
                let yz = |q: &Point| inner(&m.metric(q), &y.value(q), &z.value(q));
                let dir = x.value(&p);
                let fd = (yz(&(p + dir * h)) - yz(&(p - dir * h))) / (2.0 * h);
                let g = m.metric(&p);
                let lhs = inner(&g, &covariant_derivative(m, &x, &y, &p).unwrap(), &z.value(&p))
                    + inner(&g, &y.value(&p), &covariant_derivative(m, &x, &z, &p).unwrap());
                assert!(
                    (fd - lhs).abs() < 1e-6 * (1.0 + lhs.abs()),
                    "{}: {fd} vs {lhs}",
                    m.name()
                );
            }
        }
    }

    #[test]
    fn map_derivative_matches_analytic() {
        let m = Sphere::unit();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
        let y = VectorFieldExpr::random_trig(&mut rng, 1.0);
        let p = Point::new(1.1, 0.3);
        let exact = covariant_derivative(&m, &x, &y, &p).unwrap();
        let fd = covariant_derivative_of_map(&m, &x.value(&p), |q| Ok(y.value(q)), &p, 1e-4)
            .unwrap();
        assert!((exact - fd).amax() < 1e-7);
    }
}
