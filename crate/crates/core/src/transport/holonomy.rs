use nalgebra::Matrix2;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use super::parallel::{fundamental_matrix, Regime, TransportKind};
use crate::error::{Error, Result};
use crate::geom::{metric_and_inverse, sym_sqrt, CurvePath, Manifold};

/// Endpoint gap (chart units, modulo periods) below which a curve counts as closed.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Holonomy {
    pub regime: Regime,
    /// End-to-start linear map in coordinate components.
    pub map: Matrix2<f64>,
    /// The same map in the `g^{1/2}` orthonormal frame at the base point.
    pub orthonormal_map: Matrix2<f64>,
    /// Rotation angle in `(−π, π]`.
    pub angle: f64,
    /// `½ ln det` of the orthonormal map.
    pub log_scale: f64,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * (a / TAU).round();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// `a − b` wrapped into `(−π, π]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

pub fn holonomy(m: &dyn Manifold, curve: &CurvePath, kind: &TransportKind, h: f64) -> Result<Holonomy> {
    let (t0, t1) = curve.t_span();
    let (start, end) = (curve.position(t0), curve.position(t1));
    let gap = m.domain().gap(&start, &end);
    if !(gap <= CLOSURE_TOL) {
        return Err(Error::NotClosed { gap });
    }
    let map = fundamental_matrix(m, curve, kind, t0, t1, h)?;
    let (g, _) = metric_and_inverse(m, &start)?;
    let e = sym_sqrt(&g);
    let e_inv = e.try_inverse().ok_or(Error::SingularMetric {
        x: start[0],
        y: start[1],
        det: g.determinant(),
        condition: f64::INFINITY,
    })?;
    let o = e * map * e_inv;
    let angle = wrap_angle((o[(1, 0)] - o[(0, 1)]).atan2(o[(0, 0)] + o[(1, 1)]));
    Ok(Holonomy {
        regime: kind.regime(),
        map,
        orthonormal_map: o,
        angle,
        log_scale: 0.5 * o.determinant().ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{FlatTorus, Point, Sphere, Tangent};
    use crate::random_field::{BasisKind, FieldRealization, FieldSpec};
    use std::f64::consts::FRAC_PI_3;
    use std::sync::Arc;

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!(angle_difference(PI - 1e-9, -PI + 1e-9).abs() < 1e-8);
    }

    #[test]
    fn flat_torus_loop_is_identity() {
        let curve = CurvePath::line(Point::new(0.5, 0.5), Tangent::new(1.0, 0.0), (0.0, TAU));
        let hol = holonomy(&FlatTorus, &curve, &TransportKind::Standard, 1e-2).unwrap();
        assert!((hol.map - Matrix2::identity()).amax() < 1e-14);
        assert_eq!(hol.angle, 0.0);
    }

    #[test]
    fn sphere_latitude_angle_matches_cone_formula() {
        let m = Sphere::unit();
        for theta in [0.4, FRAC_PI_3, 1.0, 1.3, 2.0] {
            let hol = holonomy(&m, &CurvePath::latitude(theta), &TransportKind::Standard, 1e-3).unwrap();
            let expected = TAU * (1.0 - f64::cos(theta));
            assert!(angle_difference(hol.angle, expected).abs() <= 1e-9, "{theta}: {}", hol.angle);
            assert!(hol.log_scale.abs() <= 1e-12);
        }
    }

    #[test]
    fn realized_loop_has_standard_angle_and_unit_scale() {
        let m = Sphere::unit();
        let spec = Arc::new(FieldSpec::new(BasisKind::SphereHarmonics { radius: 1.0 }, 64, 3.0, 0.1).unwrap());
        let curve = CurvePath::latitude(1.2);
        let std = holonomy(&m, &curve, &TransportKind::Standard, 1e-3).unwrap();
        let real = holonomy(&m, &curve, &TransportKind::Realized(FieldRealization::sample(&spec, 17)), 1e-3).unwrap();
        let exp = holonomy(&m, &curve, &TransportKind::Expected(spec), 1e-3).unwrap();
        for h in [real, exp] {
            assert!(angle_difference(h.angle, std.angle).abs() <= 1e-9);
            assert!(h.log_scale.abs() <= 1e-9);
        }
    }

    #[test]
    fn open_curve_is_rejected() {
        let curve = CurvePath::latitude_arc(1.0, 3.0);
        assert!(matches!(
            holonomy(&Sphere::unit(), &curve, &TransportKind::Standard, 1e-2),
            Err(Error::NotClosed { .. })
        ));
    }
}
