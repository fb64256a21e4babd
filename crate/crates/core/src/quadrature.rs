//! Tensor-product quadrature on chart boxes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{AxisRule, Manifold, Point};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Nodes and coordinate weights (`dx`, Jacobians included) along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisNodes {
    pub fn new(rule: AxisRule, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "quadrature axis needs n > 0 and lo < hi, got n = {n}, [{lo}, {hi}]"
            )));
        }
        let (nodes, weights) = match rule {
            AxisRule::Trapezoid => {
                // Periodic trapezoid: n equally spaced nodes, endpoint dropped.
                let dx = (hi - lo) / n as f64;
                ((0..n).map(|i| lo + dx * i as f64).collect(), vec![dx; n])
            }
            AxisRule::GaussLegendre => {
                let (x, w) = gauss_legendre(n);
                let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
                (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|w| w * half).collect())
            }
            AxisRule::GaussLegendreCos => {
                // Uniform in u = cos θ; dθ = du / sin θ.
                let (x, w) = gauss_legendre(n);
                let (u_lo, u_hi) = (hi.cos(), lo.cos());
                let (mid, half) = (0.5 * (u_hi + u_lo), 0.5 * (u_hi - u_lo));
                let mut nodes = Vec::with_capacity(n);
                let mut weights = Vec::with_capacity(n);
                for (t, wt) in x.iter().zip(&w).rev() {
                    let theta = (mid + half * t).acos();
                    nodes.push(theta);
                    weights.push(wt * half / theta.sin());
                }
                (nodes, weights)
            }
        };
        Ok(Self { nodes, weights })
    }
}

/// A tensor grid over a coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    pub axes: [AxisNodes; 2],
}

impl QuadGrid {
    pub fn new(rules: [AxisRule; 2], lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Ok(Self {
            axes: [
                AxisNodes::new(rules[0], lo[0], hi[0], n[0])?,
                AxisNodes::new(rules[1], lo[1], hi[1], n[1])?,
            ],
        })
    }

    /// `∫ f dx¹dx²` in coordinate measure. Rows are summed in parallel and
    /// reduced in index order.
    pub fn integrate_coordinate<F>(&self, f: F) -> f64
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let [a, b] = &self.axes;
        let rows: Vec<f64> = (0..a.nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..b.nodes.len() {
                    s += b.weights[j] * f(&Point::new(a.nodes[i], b.nodes[j]));
                }
                a.weights[i] * s
            })
            .collect();
        rows.iter().sum()
    }

    /// `∫ f dV` with the Riemannian volume weight `√det g`.
    pub fn integrate<F>(&self, m: &dyn Manifold, f: F) -> f64
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        self.integrate_coordinate(|p| f(p) * m.metric(p).determinant().sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// `|value(grid) − value(grid / 2)|`.
    pub refinement_delta: f64,
    pub grid: [usize; 2],
}

/// `∫ f dV` over the box `[lo, hi]` with the manifold's axis rules, plus the
/// change observed when both grid sizes are halved.
pub fn quadrature_integrate<F>(
    m: &dyn Manifold,
    f: F,
    lo: [f64; 2],
    hi: [f64; 2],
    grid: [usize; 2],
) -> Result<QuadratureResult>
where
    F: Fn(&Point) -> f64 + Sync,
{
    quadrature_integrate_with(m, m.axis_rules(), f, lo, hi, grid)
}

/// [`quadrature_integrate`] with explicit per-axis rules.
pub fn quadrature_integrate_with<F>(
    m: &dyn Manifold,
    rules: [AxisRule; 2],
    f: F,
    lo: [f64; 2],
    hi: [f64; 2],
    grid: [usize; 2],
) -> Result<QuadratureResult>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let fine = QuadGrid::new(rules, lo, hi, grid)?.integrate(m, &f);
    let coarse_n = [grid[0].div_ceil(2), grid[1].div_ceil(2)];
    let coarse = QuadGrid::new(rules, lo, hi, coarse_n)?.integrate(m, &f);
    Ok(QuadratureResult {
        value: fine,
        refinement_delta: (fine - coarse).abs(),
        grid,
    })
}

/// [`quadrature_integrate`] over the whole chart domain.
pub fn integrate_chart<F>(m: &dyn Manifold, f: F, grid: [usize; 2]) -> Result<QuadratureResult>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let d = m.domain();
    quadrature_integrate(m, f, d.lo, d.hi, grid)
}

/// Integral over a closed surface: the chart plus the coordinate boxes the
/// chart leaves out (see [`Manifold::cap_boxes`]), each with the given grid.
/// `f` is evaluated outside the chart domain on those boxes.
pub fn integrate_closed_surface<F>(m: &dyn Manifold, f: F, grid: [usize; 2]) -> Result<QuadratureResult>
where
    F: Fn(&Point) -> f64 + Sync,
{
    if m.euler_characteristic().is_none() {
        return Err(Error::NotClosedSurface(m.name().to_string()));
    }
    let mut total = integrate_chart(m, &f, grid)?;
    for (lo, hi) in m.cap_boxes() {
        let cap = quadrature_integrate(m, &f, lo, hi, grid)?;
        total.value += cap.value;
        total.refinement_delta += cap.refinement_delta;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{FlatTorus, Sphere, SPHERE_POLE_MARGIN};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn gauss_legendre_small_orders() {
        let (x, w) = gauss_legendre(2);
        assert_abs_diff_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_abs_diff_eq!(x[2], 0.6f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in [5usize, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let d = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            assert_abs_diff_eq!(q, 2.0 / (d as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn torus_area() {
        let r = integrate_chart(&FlatTorus, |_| 1.0, [8, 8]).unwrap();
        assert_abs_diff_eq!(r.value, TAU * TAU, epsilon = 1e-12);
    }

    #[test]
    fn sphere_band_area() {
        let r = integrate_chart(&Sphere::unit(), |_| 1.0, [64, 128]).unwrap();
        assert_abs_diff_eq!(r.value, 4.0 * PI * SPHERE_POLE_MARGIN.cos(), epsilon = 1e-12);
        let big = Sphere::new(3.0).unwrap();
        let r = integrate_chart(&big, |_| 1.0, [64, 128]).unwrap();
        assert_abs_diff_eq!(r.value, 36.0 * PI * SPHERE_POLE_MARGIN.cos(), epsilon = 1e-10);
    }

    #[test]
    fn closed_surface_area() {
        let r = integrate_closed_surface(&Sphere::new(2.0).unwrap(), |_| 1.0, [32, 16]).unwrap();
        assert_abs_diff_eq!(r.value, 16.0 * PI, epsilon = 1e-11);
        // cos²θ over the whole unit sphere.
        let r = integrate_closed_surface(&Sphere::unit(), |p| p[0].cos().powi(2), [32, 8]).unwrap();
        assert_abs_diff_eq!(r.value, 4.0 * PI / 3.0, epsilon = 1e-12);
        assert!(integrate_closed_surface(&crate::geom::HalfPlane, |_| 1.0, [8, 8]).is_err());
    }

    #[test]
    fn refinement_delta_shrinks_for_smooth_integrands() {
        // Non-polynomial in cos θ and non-trigonometric in φ.
        let f = |p: &Point| (p[0] * p[0]).exp() / (2.0 + p[1].sin());
        let s = Sphere::unit();
        let d1 = integrate_chart(&s, f, [8, 16]).unwrap().refinement_delta;
        let d2 = integrate_chart(&s, f, [16, 32]).unwrap().refinement_delta;
        assert!(d1 / d2 >= 4.0, "{d1:e} {d2:e}");
        let g = |p: &Point| 1.0 / (1.5 + p[0].cos() * p[1].cos());
        let d1 = integrate_chart(&FlatTorus, g, [8, 8]).unwrap().refinement_delta;
        let d2 = integrate_chart(&FlatTorus, g, [16, 16]).unwrap().refinement_delta;
        assert!(d1 / d2 >= 4.0, "{d1:e} {d2:e}");
    }

    #[test]
    fn rejects_empty_grids() {
        assert!(QuadGrid::new([AxisRule::GaussLegendre; 2], [0.0, 0.0], [1.0, 1.0], [0, 3]).is_err());
        assert!(AxisNodes::new(AxisRule::Trapezoid, 1.0, 1.0, 4).is_err());
    }
}
