use std::cell::RefCell;

use nalgebra::Vector4;

use super::ode::{rk4_step, uniform_steps};
use super::{christoffel_unchecked, inner, CurvePath, CurveSample, Manifold, Point, Tangent, Termination};
use crate::error::{Error, Result};

/// `g(v, v)` at `p`.
pub fn speed_squared(m: &dyn Manifold, p: &Point, v: &Tangent) -> f64 {
    inner(&m.metric(p), v, v)
}

/// Integrates `x″ + Γ(x′, x′) + κ(x, x′) x′ = 0` with fixed-step RK4.
///
/// `damping` returns `κ`; returning [`Error::DegenerateRealization`] stops the
/// path with [`Termination::Degenerate`] instead of failing. Leaving the chart
/// stops it with [`Termination::ChartExit`].
pub fn integrate_damped_geodesic<F>(
    m: &dyn Manifold,
    p0: &Point,
    v0: &Tangent,
    duration: f64,
    h: f64,
    damping: F,
) -> Result<CurvePath>
where
    F: Fn(&Point, &Tangent) -> Result<f64>,
{
    m.check_point(p0)?;
    if !(h > 0.0) || !(duration >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "integrator needs h > 0 and T >= 0, got h = {h}, T = {duration}"
        )));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut rhs = |_t: f64, y: &Vector4<f64>| -> Vector4<f64> {
        let p = Point::new(y[0], y[1]);
        let v = Tangent::new(y[2], y[3]);
        let accel = christoffel_unchecked(m, &p)
            .and_then(|gamma| Ok(-gamma.contract(&v, &v) - v * damping(&p, &v)?))
            .unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                Tangent::repeat(f64::NAN)
            });
        Vector4::new(v[0], v[1], accel[0], accel[1])
    };

    let (n, step) = uniform_steps(duration, h);
    let mut y = Vector4::new(p0[0], p0[1], v0[0], v0[1]);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(CurveSample { t: 0.0, position: *p0, velocity: *v0 });
    let mut termination = Termination::Completed;
    for k in 0..n {
        let t = k as f64 * step;
        let next = rk4_step(&mut rhs, t, &y, step);
        if let Some(err) = failure.borrow_mut().take() {
            match err {
                Error::DegenerateRealization { eps, .. } => {
                    termination = Termination::Degenerate { t, eps };
                    break;
                }
                Error::OutsideDomain { .. } | Error::SingularMetric { .. } => {
                    termination = Termination::ChartExit { t };
                    break;
                }
                other => return Err(other),
            }
        }
        let p = Point::new(next[0], next[1]);
        if !m.domain().contains(&p) {
            termination = Termination::ChartExit { t };
            break;
        }
        y = next;
        samples.push(CurveSample {
            t: t + step,
            position: p,
            velocity: Tangent::new(y[2], y[3]),
        });
    }
    CurvePath::from_samples(samples, termination)
}

/// Levi-Civita geodesic `x″ᵏ + Γᵏᵢⱼ x′ⁱ x′ʲ = 0`.
pub fn geodesic_standard(m: &dyn Manifold, p0: &Point, v0: &Tangent, duration: f64, h: f64) -> Result<CurvePath> {
    integrate_damped_geodesic(m, p0, v0, duration, h, |_, _| Ok(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{FlatTorus, HalfPlane, Sphere};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn flat_torus_geodesic_is_a_straight_line() {
        let c = geodesic_standard(&FlatTorus, &Point::zeros(), &Tangent::new(1.0, 0.0), 1.0, 0.01).unwrap();
        let (p, v) = c.end();
        assert!((p - Point::new(1.0, 0.0)).amax() < 1e-14);
        assert!((v - Tangent::new(1.0, 0.0)).amax() < 1e-14);
        assert_eq!(c.termination(), Termination::Completed);
    }

    #[test]
    fn equator_is_a_geodesic() {
        let c = geodesic_standard(&Sphere::unit(), &Point::new(FRAC_PI_2, 0.0), &Tangent::new(0.0, 1.0), PI, 1e-3).unwrap();
        for s in c.samples() {
            assert!((s.position[0] - FRAC_PI_2).abs() < 1e-12);
        }
        assert!((c.end().0[1] - PI).abs() < 1e-10);
    }

    #[test]
    fn unit_speed_geodesic_has_arc_length_t() {
        let sphere = Sphere::unit();
        let p0 = Point::new(1.2, 0.3);
        // g-unit initial velocity: θ̇ = cos a, φ̇ = sin a / sin θ.
        let a: f64 = 0.7;
        let v0 = Tangent::new(a.cos(), a.sin() / p0[0].sin());
        let t_end = 1.5;
        let c = geodesic_standard(&sphere, &p0, &v0, t_end, 1e-3).unwrap();
        let s = c.samples();
        // Arc length by Simpson on |γ′|_g sampled at every step.
        let speeds: Vec<f64> = s.iter().map(|x| speed_squared(&sphere, &x.position, &x.velocity).sqrt()).collect();
        let dt = s[1].t - s[0].t;
        let n = speeds.len() - 1;
        assert_eq!(n % 2, 0);
        let mut len = speeds[0] + speeds[n];
        for (i, v) in speeds.iter().enumerate().take(n).skip(1) {
            len += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        len *= dt / 3.0;
        assert!((len - t_end).abs() < 1e-8, "{len}");

        // Independent check: great-circle distance between endpoints.
        let to_xyz = |p: &Point| nalgebra::Vector3::new(p[0].sin() * p[1].cos(), p[0].sin() * p[1].sin(), p[0].cos());
        let chord = to_xyz(&p0).dot(&to_xyz(&c.end().0)).acos();
        assert!((chord - t_end).abs() < 1e-9);
    }

    #[test]
    fn speed_drift_is_fourth_order() {
        let m = HalfPlane;
        let drift = |h: f64| {
            let p0 = Point::new(0.0, 1.0);
            let v0 = Tangent::new(0.8, 0.6);
            let c = geodesic_standard(&m, &p0, &v0, 2.0, h).unwrap();
            let (p, v) = c.end();
            (speed_squared(&m, &p, &v) - speed_squared(&m, &p0, &v0)).abs()
        };
        let ratio = drift(0.025) / drift(0.0125);
        assert!((ratio.log2() - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn leaving_the_chart_truncates() {
        let c = geodesic_standard(&Sphere::unit(), &Point::new(0.5, 0.0), &Tangent::new(-1.0, 0.0), 2.0, 1e-3).unwrap();
        assert!(matches!(c.termination(), Termination::ChartExit { .. }));
        assert!(c.samples().iter().all(|s| Sphere::unit().domain().contains(&s.position)));
        assert!(c.t_span().1 < 0.36);
    }

    #[test]
    fn degenerate_damping_stops_path() {
        let c = integrate_damped_geodesic(&FlatTorus, &Point::zeros(), &Tangent::new(1.0, 0.0), 1.0, 0.01, |p, _| {
            if p[0] > 0.5 {
                Err(Error::DegenerateRealization { eps: 0.01, floor: 0.05 })
            } else {
                Ok(0.0)
            }
        })
        .unwrap();
        assert!(matches!(c.termination(), Termination::Degenerate { eps, .. } if eps == 0.01));
        assert!(c.t_span().1 <= 0.51);
    }

    #[test]
    fn start_outside_chart_is_an_error() {
        let err = geodesic_standard(&Sphere::unit(), &Point::new(0.05, 0.0), &Tangent::new(0.0, 1.0), 1.0, 0.1);
        assert!(matches!(err, Err(Error::OutsideDomain { .. })));
    }
}
