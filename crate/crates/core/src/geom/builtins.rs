use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::Matrix2;

use super::{AxisRule, ChartDomain, Manifold, Point};
use crate::error::{Error, Result};

/// Polar margin kept out of the sphere chart `(θ, φ)`.
pub const SPHERE_POLE_MARGIN: f64 = 0.15;

/// Flat torus `[0, 2π)²` with the identity metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatTorus;

impl Manifold for FlatTorus {
    fn name(&self) -> &str {
        "flat-torus"
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::new([0.0, 0.0], [TAU, TAU], [true, true])
    }

    fn metric(&self, _p: &Point) -> Matrix2<f64> {
        Matrix2::identity()
    }

    fn metric_partials(&self, _p: &Point) -> [Matrix2<f64>; 2] {
        [Matrix2::zeros(); 2]
    }

    fn metric_second_partials(&self, _p: &Point) -> Option<[[Matrix2<f64>; 2]; 2]> {
        Some([[Matrix2::zeros(); 2]; 2])
    }

    fn constant_curvature(&self) -> Option<f64> {
        Some(0.0)
    }

    fn euler_characteristic(&self) -> Option<i32> {
        Some(0)
    }
}

/// Round sphere of radius `radius` in colatitude/longitude `(θ, φ)`,
/// `g = diag(r², r² sin²θ)`. The chart stops short of both poles.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub radius: f64,
}

impl Sphere {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn unit() -> Self {
        Self { radius: 1.0 }
    }
}

impl Manifold for Sphere {
    fn name(&self) -> &str {
        "sphere"
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::new(
            [SPHERE_POLE_MARGIN, 0.0],
            [PI - SPHERE_POLE_MARGIN, TAU],
            [false, true],
        )
    }

    fn metric(&self, p: &Point) -> Matrix2<f64> {
        let r2 = self.radius * self.radius;
        let s = p[0].sin();
        Matrix2::new(r2, 0.0, 0.0, r2 * s * s)
    }

    fn metric_partials(&self, p: &Point) -> [Matrix2<f64>; 2] {
        let r2 = self.radius * self.radius;
        let d_theta = r2 * (2.0 * p[0]).sin();
        [Matrix2::new(0.0, 0.0, 0.0, d_theta), Matrix2::zeros()]
    }

    fn metric_second_partials(&self, p: &Point) -> Option<[[Matrix2<f64>; 2]; 2]> {
        let dd = 2.0 * self.radius * self.radius * (2.0 * p[0]).cos();
        let z = Matrix2::zeros();
        Some([[Matrix2::new(0.0, 0.0, 0.0, dd), z], [z, z]])
    }

    fn constant_curvature(&self) -> Option<f64> {
        Some(1.0 / (self.radius * self.radius))
    }

    fn euler_characteristic(&self) -> Option<i32> {
        Some(2)
    }

    fn cap_boxes(&self) -> Vec<([f64; 2], [f64; 2])> {
        vec![
            ([0.0, 0.0], [SPHERE_POLE_MARGIN, TAU]),
            ([PI - SPHERE_POLE_MARGIN, 0.0], [PI, TAU]),
        ]
    }

    fn axis_rules(&self) -> [AxisRule; 2] {
        [AxisRule::GaussLegendreCos, AxisRule::Trapezoid]
    }
}

/// Poincaré half-plane `g = diag(1/y², 1/y²)` on `x ∈ [-10, 10]`, `y ∈ [0.1, 10]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfPlane;

impl Manifold for HalfPlane {
    fn name(&self) -> &str {
        "half-plane"
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain::new([-10.0, 0.1], [10.0, 10.0], [false, false])
    }

    fn metric(&self, p: &Point) -> Matrix2<f64> {
        let w = 1.0 / (p[1] * p[1]);
        Matrix2::new(w, 0.0, 0.0, w)
    }

    fn metric_partials(&self, p: &Point) -> [Matrix2<f64>; 2] {
        let dw = -2.0 / (p[1] * p[1] * p[1]);
        [Matrix2::zeros(), Matrix2::new(dw, 0.0, 0.0, dw)]
    }

    fn metric_second_partials(&self, p: &Point) -> Option<[[Matrix2<f64>; 2]; 2]> {
        let dd = 6.0 / p[1].powi(4);
        let z = Matrix2::zeros();
        Some([[z, z], [z, Matrix2::new(dd, 0.0, 0.0, dd)]])
    }

    fn constant_curvature(&self) -> Option<f64> {
        Some(-1.0)
    }
}

/// Look up a built-in manifold by name. `radius` applies to the sphere only.
pub fn builtin(name: &str, radius: Option<f64>) -> Result<Arc<dyn Manifold>> {
    match name {
        "flat-torus" | "torus" => Ok(Arc::new(FlatTorus)),
        "sphere" => Ok(Arc::new(Sphere::new(radius.unwrap_or(1.0))?)),
        "half-plane" => Ok(Arc::new(HalfPlane)),
        other => Err(Error::InvalidArgument(format!(
            "unknown manifold {other:?} (expected flat-torus, sphere or half-plane)"
        ))),
    }
}
