use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::ode::{rk4_step, uniform_steps};
use crate::geom::{christoffel_unchecked, CurvePath, Manifold, Point, Tangent, Termination};
use crate::random_field::{FieldRealization, FieldSpec, EPS_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Standard,
    Expected,
    Realized,
    BrownianSample,
    BrownianMean,
}

/// Which smooth transport equation to solve.
#[derive(Debug, Clone)]
pub enum TransportKind {
    /// `X′ + Γ(γ′)X = 0`.
    Standard,
    /// `α X′ + α Γ(γ′)X + β X = 0` with `α = E[ε²]`, `β = E[ε dε/dt]`.
    Expected(Arc<FieldSpec>),
    /// `ε² X′ + ε² Γ(γ′)X + ε (dε/dt) X = 0` for one realization.
    Realized(FieldRealization),
}

impl TransportKind {
    pub fn regime(&self) -> Regime {
        match self {
            Self::Standard => Regime::Standard,
            Self::Expected(_) => Regime::Expected,
            Self::Realized(_) => Regime::Realized,
        }
    }

    /// Scalar damping `κ` in `X′ = −Γ(γ′)X − κX`.
    pub fn damping(&self, p: &Point, v: &Tangent) -> Result<f64> {
        match self {
            Self::Standard => Ok(0.0),
            Self::Expected(spec) => {
                spec.check_point(p)?;
                let (a, b) = spec.alpha_beta(p, v);
                Ok(b / a)
            }
            Self::Realized(r) => {
                let e = r.eval_positive(p)?;
                Ok(e.grad.dot(v) / e.value)
            }
        }
    }

    /// `(a, b)` with the transport equation written `a (X′ + Γ(γ′)X) + b X = 0`:
    /// `(1, 0)`, `(α, β)` or `(ε², ε dε/dt)`.
    pub fn weights(&self, p: &Point, v: &Tangent) -> Result<(f64, f64)> {
        match self {
            Self::Standard => Ok((1.0, 0.0)),
            Self::Expected(spec) => {
                spec.check_point(p)?;
                Ok(spec.alpha_beta(p, v))
            }
            Self::Realized(r) => {
                let e = r.eval_positive(p)?;
                Ok((e.value * e.value, e.value * e.grad.dot(v)))
            }
        }
    }

    fn eps(&self, p: &Point) -> Option<f64> {
        match self {
            Self::Realized(r) => Some(r.eps_unchecked(p)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportSample {
    pub t: f64,
    pub position: Point,
    pub velocity: Tangent,
    pub frame: Tangent,
    /// `ε(γ(t))` for realized transport.
    pub eps: Option<f64>,
}

/// Transported vector along a curve, plus the fundamental matrix `Ψ` with
/// `X(t) = Ψ(t) X(t₀)` when the regime has one.
#[derive(Debug, Clone, Serialize)]
pub struct TransportSolution {
    pub regime: Regime,
    pub h: f64,
    pub seed: Option<u64>,
    pub samples: Vec<TransportSample>,
    pub fundamental: Option<Matrix2<f64>>,
    pub termination: Termination,
}

impl TransportSolution {
    pub fn end(&self) -> &TransportSample {
        self.samples.last().expect("transport solutions hold at least one sample")
    }

    pub fn is_truncated(&self) -> bool {
        self.termination != Termination::Completed
    }
}

fn mat_of(y: &Vector4<f64>) -> Matrix2<f64> {
    Matrix2::new(y[0], y[2], y[1], y[3])
}

fn vec_of(m: &Matrix2<f64>) -> Vector4<f64> {
    Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

/// Fundamental matrix of `X′ = −(Γ(γ′) + κ) X` from `t_from` to `t_to`
/// (either direction), with a sample at every step when `record` is set.
#[allow(clippy::too_many_arguments)]
pub(crate) fn propagate(
    m: &dyn Manifold,
    curve: &CurvePath,
    kind: &TransportKind,
    t_from: f64,
    t_to: f64,
    h: f64,
    v0: &Tangent,
    record: bool,
) -> Result<(Vec<TransportSample>, Matrix2<f64>, Termination)> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("transport step must be positive, got {h}")));
    }
    let p0 = curve.position(t_from);
    m.check_point(&p0)?;
    kind.damping(&p0, &curve.velocity(t_from))?;

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut rhs = |t: f64, y: &Vector4<f64>| -> Vector4<f64> {
        let p = curve.position(t);
        let v = curve.velocity(t);
        let a = christoffel_unchecked(m, &p).and_then(|g| Ok(g.along(&v) + Matrix2::identity() * kind.damping(&p, &v)?));
        match a {
            Ok(a) => vec_of(&(-a * mat_of(y))),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Vector4::repeat(f64::NAN)
            }
        }
    };

    let sample = |t: f64, psi: &Matrix2<f64>| {
        let p = curve.position(t);
        TransportSample {
            t,
            position: p,
            velocity: curve.velocity(t),
            frame: psi * v0,
            eps: kind.eps(&p),
        }
    };

    let (n, step) = uniform_steps(t_to - t_from, h);
    let mut y = vec_of(&Matrix2::identity());
    let mut samples = Vec::with_capacity(if record { n + 1 } else { 1 });
    samples.push(sample(t_from, &Matrix2::identity()));
    let mut termination = Termination::Completed;
    for k in 0..n {
        let t = t_from + k as f64 * step;
        let next = rk4_step(&mut rhs, t, &y, step);
        if let Some(err) = failure.borrow_mut().take() {
            termination = match err {
                Error::DegenerateRealization { eps, .. } => Termination::Degenerate { t, eps },
                Error::OutsideDomain { .. } | Error::SingularMetric { .. } => Termination::ChartExit { t },
                other => return Err(other),
            };
            break;
        }
        let t_next = if k + 1 == n { t_to } else { t + step };
        if !m.domain().contains(&curve.position(t_next)) {
            termination = Termination::ChartExit { t };
            break;
        }
        y = next;
        if record || k + 1 == n {
            samples.push(sample(t_next, &mat_of(&y)));
        }
    }
    Ok((samples, mat_of(&y), termination))
}

/// Transport `v0` along the whole curve, sampling every step.
pub fn transport(m: &dyn Manifold, curve: &CurvePath, kind: &TransportKind, v0: &Tangent, h: f64) -> Result<TransportSolution> {
    let (t0, t1) = curve.t_span();
    let (samples, fundamental, termination) = propagate(m, curve, kind, t0, t1, h, v0, true)?;
    Ok(TransportSolution {
        regime: kind.regime(),
        h,
        seed: match kind {
            TransportKind::Realized(r) => r.seed(),
            _ => None,
        },
        samples,
        fundamental: Some(fundamental),
        termination,
    })
}

/// Fundamental matrix from parameter `t_from` to `t_to` (either direction).
/// Stopping early is an error here.
pub fn fundamental_matrix(
    m: &dyn Manifold,
    curve: &CurvePath,
    kind: &TransportKind,
    t_from: f64,
    t_to: f64,
    h: f64,
) -> Result<Matrix2<f64>> {
    let (_, psi, termination) = propagate(m, curve, kind, t_from, t_to, h, &Tangent::zeros(), false)?;
    match termination {
        Termination::Completed => Ok(psi),
        Termination::Degenerate { eps, .. } => Err(Error::DegenerateRealization { eps, floor: EPS_FLOOR }),
        Termination::ChartExit { t } => {
            let p = curve.position(t);
            Err(Error::OutsideDomain { chart: m.name().to_string(), x: p[0], y: p[1] })
        }
    }
}

/// Transport a vector from parameter `t_from` to `t_to` (either direction).
pub fn transport_between(
    m: &dyn Manifold,
    curve: &CurvePath,
    kind: &TransportKind,
    v: &Tangent,
    t_from: f64,
    t_to: f64,
    h: f64,
) -> Result<Tangent> {
    Ok(fundamental_matrix(m, curve, kind, t_from, t_to, h)? * v)
}

pub fn standard_transport(m: &dyn Manifold, curve: &CurvePath, v0: &Tangent, h: f64) -> Result<TransportSolution> {
    transport(m, curve, &TransportKind::Standard, v0, h)
}

pub fn expected_transport(
    m: &dyn Manifold,
    spec: &Arc<FieldSpec>,
    curve: &CurvePath,
    v0: &Tangent,
    h: f64,
) -> Result<TransportSolution> {
    transport(m, curve, &TransportKind::Expected(spec.clone()), v0, h)
}

pub fn realized_transport(
    m: &dyn Manifold,
    r: &FieldRealization,
    curve: &CurvePath,
    v0: &Tangent,
    h: f64,
) -> Result<TransportSolution> {
    transport(m, curve, &TransportKind::Realized(r.clone()), v0, h)
}

/// `exp(−∫ₛᵗ β/α)` by composite Simpson along the curve.
pub fn expected_magnitude_factor(spec: &FieldSpec, curve: &CurvePath, s: f64, t: f64, n: usize) -> Result<f64> {
    let n = n.max(2).next_multiple_of(2);
    let dt = (t - s) / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let tk = s + k as f64 * dt;
        let (a, b) = spec.alpha_beta_along(curve, tk)?;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * b / a;
    }
    Ok((-acc * dt / 3.0).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{inner, FlatTorus, Sphere};
    use crate::random_field::BasisKind;
    use std::f64::consts::{FRAC_PI_3, TAU};

    fn sphere_spec(c: f64) -> Arc<FieldSpec> {
        Arc::new(FieldSpec::new(BasisKind::SphereHarmonics { radius: 1.0 }, 64, 3.0, c).unwrap())
    }

    #[test]
    fn torus_transport_is_trivial() {
        let curve = CurvePath::line(Point::new(0.0, 0.0), Tangent::new(1.0, 0.5), (0.0, 3.0));
        let s = standard_transport(&FlatTorus, &curve, &Tangent::new(0.3, -1.0), 0.01).unwrap();
        assert!((s.end().frame - Tangent::new(0.3, -1.0)).amax() < 1e-15);
        assert!((s.fundamental.unwrap() - Matrix2::identity()).amax() < 1e-15);
    }

    #[test]
    fn standard_transport_preserves_length() {
        let m = Sphere::unit();
        let curve = CurvePath::latitude(FRAC_PI_3);
        let v0 = Tangent::new(0.4, 1.0);
        let s = standard_transport(&m, &curve, &v0, 1e-3).unwrap();
        let n0 = inner(&m.metric(&curve.position(0.0)), &v0, &v0);
        for smp in s.samples.iter().step_by(500) {
            let n = inner(&m.metric(&smp.position), &smp.frame, &smp.frame);
            assert!((n - n0).abs() < 1e-12);
        }
        assert_eq!(s.samples.len(), (TAU / 1e-3).ceil() as usize + 1);
    }

    #[test]
    fn noiseless_regimes_collapse_to_standard() {
        let m = Sphere::unit();
        let curve = CurvePath::latitude(1.0);
        let v0 = Tangent::new(1.0, 0.2);
        let std = standard_transport(&m, &curve, &v0, 1e-3).unwrap();
        let spec = sphere_spec(0.0);
        let e = expected_transport(&m, &spec, &curve, &v0, 1e-3).unwrap();
        let r = realized_transport(&m, &FieldRealization::sample(&spec, 1), &curve, &v0, 1e-3).unwrap();
        assert!((e.end().frame - std.end().frame).amax() <= 1e-10);
        assert!((r.end().frame - std.end().frame).amax() <= 1e-10);
    }

    #[test]
    fn realized_transport_scaling_law() {
        let m = Sphere::unit();
        let spec = sphere_spec(0.1);
        let r = FieldRealization::sample(&spec, 21);
        let curve = CurvePath::latitude(1.1);
        let v0 = Tangent::new(0.5, 0.8);
        let std = standard_transport(&m, &curve, &v0, 1e-3).unwrap();
        let real = realized_transport(&m, &r, &curve, &v0, 1e-3).unwrap();
        let e0 = r.eps(&curve.position(0.0)).unwrap();
        let mut worst: f64 = 0.0;
        for (a, b) in real.samples.iter().zip(&std.samples) {
            let predicted = b.frame * (e0 / a.eps.unwrap());
            worst = worst.max((a.frame - predicted).amax());
            // Same direction: zero cross product.
            let cross = a.frame[0] * b.frame[1] - a.frame[1] * b.frame[0];
            assert!(cross.abs() / (a.frame.norm() * b.frame.norm()) <= 1e-8);
        }
        assert!(worst <= 1e-6, "{worst:e}");
    }

    #[test]
    fn expected_magnitude_factor_matches_closed_form() {
        let m = Sphere::unit();
        let spec = sphere_spec(0.1);
        let curve = CurvePath::analytic(
            |t| Point::new(1.2 + 0.3 * t.sin(), t),
            |t| Tangent::new(0.3 * t.cos(), 1.0),
            (0.0, 4.0),
        );
        let v0 = Tangent::new(0.0, 1.0);
        let std = standard_transport(&m, &curve, &v0, 1e-3).unwrap();
        let exp = expected_transport(&m, &spec, &curve, &v0, 1e-3).unwrap();
        for (k, (a, b)) in exp.samples.iter().zip(&std.samples).enumerate().step_by(400) {
            if k == 0 {
                continue;
            }
            let factor = expected_magnitude_factor(&spec, &curve, 0.0, a.t, 400).unwrap();
            assert!((a.frame - b.frame * factor).amax() <= 1e-6);
            // β = ½ α′ integrates in closed form.
            let (a0, _) = spec.alpha_beta_along(&curve, 0.0).unwrap();
            let (at, _) = spec.alpha_beta_along(&curve, a.t).unwrap();
            assert!((factor - (a0 / at).sqrt()).abs() <= 1e-9);
        }
    }

    #[test]
    fn linearity_by_superposition() {
        let m = Sphere::unit();
        let spec = sphere_spec(0.1);
        let kind = TransportKind::Realized(FieldRealization::sample(&spec, 5));
        let curve = CurvePath::latitude(0.9);
        let (u, w, a) = (Tangent::new(1.0, 0.0), Tangent::new(0.0, 1.0), -2.5);
        let xu = transport(&m, &curve, &kind, &u, 1e-2).unwrap().end().frame;
        let xw = transport(&m, &curve, &kind, &w, 1e-2).unwrap().end().frame;
        let xs = transport(&m, &curve, &kind, &(u * a + w), 1e-2).unwrap().end().frame;
        assert!((xs - (xu * a + xw)).amax() < 1e-12);
    }

    #[test]
    fn backward_transport_inverts_forward() {
        let m = Sphere::unit();
        let kind = TransportKind::Expected(sphere_spec(0.1));
        let curve = CurvePath::latitude(0.7);
        let v = Tangent::new(0.2, 0.9);
        let fwd = transport_between(&m, &curve, &kind, &v, 0.5, 1.5, 1e-3).unwrap();
        let back = transport_between(&m, &curve, &kind, &fwd, 1.5, 0.5, 1e-3).unwrap();
        assert!((back - v).amax() < 1e-12);
    }

    #[test]
    fn degenerate_realization_aborts_with_flag() {
        let spec = Arc::new(FieldSpec::new(BasisKind::TorusFourier, 4, 3.0, 0.1).unwrap());
        let r = FieldRealization::from_coefficients(&spec, vec![-5.0, 0.0, 0.0, 0.0]).unwrap();
        // ε = 1 − 5cos(y)/(π√2) crosses the floor near y = 0.57.
        let curve = CurvePath::line(Point::new(0.0, 2.0), Tangent::new(0.0, -1.0), (0.0, 2.0));
        let s = realized_transport(&FlatTorus, &r, &curve, &Tangent::new(1.0, 0.0), 1e-3).unwrap();
        assert!(matches!(s.termination, Termination::Degenerate { .. }));
        assert!(s.samples.iter().all(|x| x.eps.unwrap() > EPS_FLOOR));
        assert!(transport_between(&FlatTorus, &curve, &TransportKind::Realized(r), &Tangent::new(1.0, 0.0), 0.0, 2.0, 1e-3).is_err());
    }
}
