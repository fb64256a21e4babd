use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Point, Tangent};

/// Value, gradient and Hessian of a scalar function in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Tangent,
    pub hess: Matrix2<f64>,
}

impl ScalarJet {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: Tangent::zeros(),
            hess: Matrix2::zeros(),
        }
    }
}

type ValueFn = dyn Fn(&Point) -> f64 + Send + Sync;
type VecFn = dyn Fn(&Point) -> Tangent + Send + Sync;
type MatFn = dyn Fn(&Point) -> Matrix2<f64> + Send + Sync;

/// Smooth scalar field with analytic first and second partials.
#[derive(Clone)]
pub struct ScalarFieldExpr {
    value: Arc<ValueFn>,
    gradient: Arc<VecFn>,
    hessian: Arc<MatFn>,
}

impl fmt::Debug for ScalarFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarFieldExpr")
    }
}

impl ScalarFieldExpr {
    pub fn new(
        value: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Point) -> Tangent + Send + Sync + 'static,
        hessian: impl Fn(&Point) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(
            move |_| c,
            |_| Tangent::zeros(),
            |_| Matrix2::zeros(),
        )
    }

    pub fn value(&self, p: &Point) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: &Point) -> Tangent {
        (self.gradient)(p)
    }

    pub fn hessian(&self, p: &Point) -> Matrix2<f64> {
        (self.hessian)(p)
    }

    pub fn jet(&self, p: &Point) -> ScalarJet {
        ScalarJet {
            value: self.value(p),
            grad: self.gradient(p),
            hess: self.hessian(p),
        }
    }
}

impl From<TrigPolynomial> for ScalarFieldExpr {
    fn from(t: TrigPolynomial) -> Self {
        let (a, b, c) = (t.clone(), t.clone(), t);
        Self::new(
            move |p| a.jet(p).value,
            move |p| b.jet(p).grad,
            move |p| c.jet(p).hess,
        )
    }
}

/// `c + Σ amp · sin(kx·x + ky·y + phase)` with integer wave numbers, so the
/// function is periodic on the torus and in longitude on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub constant: f64,
    /// `(amplitude, kx, ky, phase)`.
    pub terms: Vec<(f64, i32, i32, f64)>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Self {
        let terms = (0..3)
            .map(|_| {
                (
                    scale * rng.random_range(-1.0..1.0),
                    rng.random_range(-2..=2),
                    rng.random_range(-2..=2),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        Self {
            constant: scale * rng.random_range(-1.0..1.0),
            terms,
        }
    }

    pub fn jet(&self, p: &Point) -> ScalarJet {
        let mut jet = ScalarJet::constant(self.constant);
        for &(amp, kx, ky, phase) in &self.terms {
            let (kx, ky) = (kx as f64, ky as f64);
            let arg = kx * p[0] + ky * p[1] + phase;
            let (s, c) = arg.sin_cos();
            jet.value += amp * s;
            jet.grad += Tangent::new(kx, ky) * (amp * c);
            jet.hess -= Matrix2::new(kx * kx, kx * ky, kx * ky, ky * ky) * (amp * s);
        }
        jet
    }
}

/// Smooth vector field given by components and their analytic partials.
///
/// `jacobian(p)[(i, j)] = ∂_j X^i`.
#[derive(Clone)]
pub struct VectorFieldExpr {
    components: Arc<VecFn>,
    partials: Arc<MatFn>,
}

impl fmt::Debug for VectorFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorFieldExpr")
    }
}

impl VectorFieldExpr {
    pub fn new(
        components: impl Fn(&Point) -> Tangent + Send + Sync + 'static,
        partials: impl Fn(&Point) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            components: Arc::new(components),
            partials: Arc::new(partials),
        }
    }

    pub fn zero() -> Self {
        Self::constant(Tangent::zeros())
    }

    pub fn constant(v: Tangent) -> Self {
        Self::new(move |_| v, |_| Matrix2::zeros())
    }

    /// Coordinate field `∂_axis`.
    pub fn coordinate(axis: usize) -> Self {
        let mut v = Tangent::zeros();
        v[axis] = 1.0;
        Self::constant(v)
    }

    pub fn from_components(x: TrigPolynomial, y: TrigPolynomial) -> Self {
        let (x2, y2) = (x.clone(), y.clone());
        Self::new(
            move |p| Tangent::new(x.jet(p).value, y.jet(p).value),
            move |p| {
                let (gx, gy) = (x2.jet(p).grad, y2.jet(p).grad);
                Matrix2::new(gx[0], gx[1], gy[0], gy[1])
            },
        )
    }

    pub fn random_trig<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Self {
        Self::from_components(
            TrigPolynomial::random(rng, scale),
            TrigPolynomial::random(rng, scale),
        )
    }

    pub fn value(&self, p: &Point) -> Tangent {
        (self.components)(p)
    }

    pub fn jacobian(&self, p: &Point) -> Matrix2<f64> {
        (self.partials)(p)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let (s1, s2) = (self.clone(), self.clone());
        Self::new(move |p| s1.value(p) * a, move |p| s2.jacobian(p) * a)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let (a1, b1) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Self::new(
            move |p| a1.value(p) + b1.value(p),
            move |p| a2.jacobian(p) + b2.jacobian(p),
        )
    }

    /// Pointwise product `f X`.
    pub fn multiplied_by(&self, f: &ScalarFieldExpr) -> Self {
        let (x1, f1) = (self.clone(), f.clone());
        let (x2, f2) = (self.clone(), f.clone());
        Self::new(
            move |p| x1.value(p) * f1.value(p),
            move |p| x2.jacobian(p) * f2.value(p) + x2.value(p) * f2.gradient(p).transpose(),
        )
    }
}
