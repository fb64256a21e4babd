//! Deterministic Riemannian machinery in a single 2-D coordinate chart.
//!
//! Everything downstream (the randomized connection, transport, curvature,
//! Laplacian) is expressed through the [`Manifold`] trait: a chart domain, the
//! metric `g_ij(p)` and its analytic first partials `∂_k g_ij(p)`.

mod builtins;
mod connection;
pub mod curvature;
mod curve;
mod fields;
mod geodesic;
pub mod ode;

pub use builtins::{builtin, FlatTorus, HalfPlane, Sphere, SPHERE_POLE_MARGIN};
pub use connection::{
    christoffel_at, christoffel_partials, christoffel_unchecked, covariant_derivative,
    covariant_derivative_of_map, covariant_derivative_raw, lie_bracket, Christoffel, H_FD,
};
pub use curvature::{curvature_at, Curvature, RiemannUp, SymmetryResiduals};
pub use curve::{CurvePath, CurveSample, Termination};
pub use fields::{ScalarFieldExpr, ScalarJet, TrigPolynomial, VectorFieldExpr};
pub use geodesic::{geodesic_standard, integrate_damped_geodesic, speed_squared};

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Chart coordinates of a point.
pub type Point = Vector2<f64>;
/// Tangent vector components in the coordinate basis `∂_1, ∂_2`.
pub type Tangent = Vector2<f64>;

pub const DIM: usize = 2;

/// Quadrature rule used along one chart axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisRule {
    GaussLegendre,
    /// Gauss–Legendre nodes placed uniformly in `cos(coordinate)`.
    GaussLegendreCos,
    Trapezoid,
}

/// Rectangular coordinate box, with a periodic flag per axis.
///
/// Periodic axes accept any finite coordinate; `hi - lo` is the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub periodic: [bool; 2],
}

impl ChartDomain {
    pub fn new(lo: [f64; 2], hi: [f64; 2], periodic: [bool; 2]) -> Self {
        Self { lo, hi, periodic }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..DIM).all(|a| {
            p[a].is_finite() && (self.periodic[a] || (p[a] >= self.lo[a] && p[a] <= self.hi[a]))
        })
    }

    pub fn period(&self, axis: usize) -> Option<f64> {
        self.periodic[axis].then(|| self.hi[axis] - self.lo[axis])
    }

    /// Gap between two points, measured modulo the period on periodic axes.
    pub fn gap(&self, a: &Point, b: &Point) -> f64 {
        let mut sq = 0.0;
        for axis in 0..DIM {
            let mut d = b[axis] - a[axis];
            if let Some(period) = self.period(axis) {
                d -= period * (d / period).round();
            }
            sq += d * d;
        }
        sq.sqrt()
    }

    /// Same box with `margin` trimmed from both ends of every non-periodic axis.
    pub fn shrink(&self, margin: f64) -> Self {
        let mut out = *self;
        for a in 0..DIM {
            if !self.periodic[a] {
                out.lo[a] += margin;
                out.hi[a] -= margin;
            }
        }
        out
    }

    /// `n × n` validation grid: endpoints included on bounded axes, the
    /// duplicate endpoint dropped on periodic ones.
    pub fn grid(&self, n: usize) -> Vec<Point> {
        let axis_nodes = |a: usize| -> Vec<f64> {
            let span = self.hi[a] - self.lo[a];
            (0..n)
                .map(|i| {
                    let frac = if self.periodic[a] {
                        i as f64 / n as f64
                    } else if n == 1 {
                        0.5
                    } else {
                        i as f64 / (n - 1) as f64
                    };
                    self.lo[a] + span * frac
                })
                .collect()
        };
        let xs = axis_nodes(0);
        let ys = axis_nodes(1);
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| Point::new(x, y)))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            rng.random_range(self.lo[0]..self.hi[0]),
            rng.random_range(self.lo[1]..self.hi[1]),
        )
    }
}

/// A Riemannian metric on a single 2-D chart.
pub trait Manifold: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn domain(&self) -> ChartDomain;

    /// `g_ij(p)`.
    fn metric(&self, p: &Point) -> Matrix2<f64>;

    /// `[∂_1 g, ∂_2 g]` at `p`.
    fn metric_partials(&self, p: &Point) -> [Matrix2<f64>; 2];

    /// `[a][b] = ∂_a ∂_b g` when known in closed form. With `None`, derivatives
    /// of the Christoffel symbols fall back to finite differences.
    fn metric_second_partials(&self, _p: &Point) -> Option<[[Matrix2<f64>; 2]; 2]> {
        None
    }

    /// Gaussian curvature when it is known to be constant.
    fn constant_curvature(&self) -> Option<f64> {
        None
    }

    /// Euler characteristic for closed surfaces, `None` otherwise.
    fn euler_characteristic(&self) -> Option<i32> {
        None
    }

    /// Coordinate boxes outside the chart domain which, together with it,
    /// cover a closed surface. The metric formula must stay valid there
    /// (quadrature nodes avoid the box edges where the chart degenerates).
    fn cap_boxes(&self) -> Vec<([f64; 2], [f64; 2])> {
        Vec::new()
    }

    fn axis_rules(&self) -> [AxisRule; 2] {
        let d = self.domain();
        d.periodic.map(|p| {
            if p {
                AxisRule::Trapezoid
            } else {
                AxisRule::GaussLegendre
            }
        })
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if self.domain().contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                chart: self.name().to_string(),
                x: p[0],
                y: p[1],
            })
        }
    }
}

/// Metric and its inverse, with a conditioning check.
pub fn metric_and_inverse(m: &dyn Manifold, p: &Point) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let g = m.metric(p);
    let det = g.determinant();
    let eig = g.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(det > 0.0) || lo <= 0.0 || condition > 1e12 {
        return Err(Error::SingularMetric {
            x: p[0],
            y: p[1],
            det,
            condition,
        });
    }
    let inv = g.try_inverse().ok_or(Error::SingularMetric {
        x: p[0],
        y: p[1],
        det,
        condition,
    })?;
    Ok((g, inv))
}

pub fn inner(g: &Matrix2<f64>, u: &Tangent, v: &Tangent) -> f64 {
    u.dot(&(g * v))
}

/// Symmetric square root of a positive definite 2×2 matrix.
pub fn sym_sqrt(g: &Matrix2<f64>) -> Matrix2<f64> {
    let eig = g.symmetric_eigen();
    let d = Matrix2::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}
