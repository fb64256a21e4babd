//! Enumerated function bases `ψ₁, ψ₂, …` with analytic derivatives.
//!
//! The enumeration order is part of the wire format: it decides which
//! variance `σᵢ²` each function receives.
//!
//! * Torus: real Fourier products `A(kx)·B(ly)`, `A, B ∈ {cos, sin}`, ordered by
//!   `λ = k² + l²`, then `(k, l)` lexicographically, then by type
//!   `cos·cos, cos·sin, sin·cos, sin·sin`. Identically-zero products and the
//!   constant are skipped. L²-normalized on `[0, 2π)²`.
//! * Sphere: real spherical harmonics ordered by `ℓ = 1, 2, …` and, within a
//!   degree, `m = −ℓ, …, ℓ`; `m < 0` uses `sin(|m|φ)`. Normalized on the sphere
//!   of the given radius (so scaled by `1/R`). No Condon–Shortley phase.
//!
//! Eigenvalues are those of `−Δ`, so they are non-negative.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisRule, ChartDomain, FlatTorus, Manifold, Point, ScalarFieldExpr, ScalarJet, Sphere, Tangent};
use crate::quadrature::QuadGrid;

/// Highest spherical-harmonic degree supported.
pub const SPHERE_MAX_DEGREE: usize = 40;

/// Which family of functions a field spec draws from.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasisKind {
    TorusFourier,
    SphereHarmonics {
        radius: f64,
    },
    /// Gaussian bumps `exp(−|p − c|² / 2w²)` in chart coordinates; not orthonormal.
    Bumps {
        centers: Vec<[f64; 2]>,
        width: f64,
        domain: ChartDomain,
    },
    /// Caller-supplied functions; cannot be serialized.
    #[serde(skip)]
    User {
        functions: Vec<ScalarFieldExpr>,
        domain: ChartDomain,
    },
}

impl fmt::Debug for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TorusFourier => f.write_str("TorusFourier"),
            Self::SphereHarmonics { radius } => write!(f, "SphereHarmonics {{ radius: {radius} }}"),
            Self::Bumps { centers, width, .. } => write!(f, "Bumps {{ n: {}, width: {width} }}", centers.len()),
            Self::User { functions, .. } => write!(f, "User {{ n: {} }}", functions.len()),
        }
    }
}

impl BasisKind {
    /// Natural basis of a built-in manifold.
    pub fn for_builtin(name: &str, radius: Option<f64>) -> Result<Self> {
        match name {
            "flat-torus" | "torus" => Ok(Self::TorusFourier),
            "sphere" => Ok(Self::SphereHarmonics { radius: radius.unwrap_or(1.0) }),
            other => Err(Error::InvalidSpec(format!(
                "no eigenbasis for {other:?}; supply a bump or user basis"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TorusFourier => "torus-fourier",
            Self::SphereHarmonics { .. } => "sphere-harmonics",
            Self::Bumps { .. } => "bumps",
            Self::User { .. } => "user",
        }
    }

    pub fn domain(&self) -> ChartDomain {
        match self {
            Self::TorusFourier => FlatTorus.domain(),
            Self::SphereHarmonics { .. } => Sphere::unit().domain(),
            Self::Bumps { domain, .. } | Self::User { domain, .. } => *domain,
        }
    }

    /// Largest supported truncation, if bounded.
    pub fn capacity(&self) -> Option<usize> {
        match self {
            Self::TorusFourier => None,
            Self::SphereHarmonics { .. } => Some(SPHERE_MAX_DEGREE * (SPHERE_MAX_DEGREE + 2)),
            Self::Bumps { centers, .. } => Some(centers.len()),
            Self::User { functions, .. } => Some(functions.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrigKind {
    Cos,
    Sin,
}

impl TrigKind {
    /// `(f, f′, f″)` of `cos(kx)` or `sin(kx)`.
    fn eval(self, k: f64, c: f64, s: f64) -> (f64, f64, f64) {
        match self {
            Self::Cos => (c, -k * s, -k * k * c),
            Self::Sin => (s, k * c, -k * k * s),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Self::Cos => "cos",
            Self::Sin => "sin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusMode {
    pub k: usize,
    pub l: usize,
    pub x: TrigKind,
    pub y: TrigKind,
    pub norm: f64,
}

/// Spherical harmonic `(ℓ, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Harmonic {
    pub l: usize,
    pub m: i64,
}

#[derive(Debug)]
enum Table {
    Torus { modes: Vec<TorusMode>, kmax: usize },
    Sphere { radius: f64, harmonics: Vec<Harmonic>, lmax: usize },
    Bumps { centers: Vec<Point>, width: f64 },
    User(Vec<ScalarFieldExpr>),
}

/// The first `n` functions of a [`BasisKind`], ready to evaluate.
#[derive(Debug, Clone)]
pub struct Basis {
    kind: BasisKind,
    n: usize,
    table: Arc<Table>,
}

pub fn torus_modes(n: usize) -> Vec<TorusMode> {
    use TrigKind::{Cos, Sin};
    let kmax = (n as f64).sqrt().ceil() as usize + 2;
    let lam_max = kmax * kmax;
    let mut pairs: Vec<(usize, usize)> = (0..=kmax)
        .flat_map(|k| (0..=kmax).map(move |l| (k, l)))
        .filter(|&(k, l)| (k, l) != (0, 0) && k * k + l * l <= lam_max)
        .collect();
    pairs.sort_by_key(|&(k, l)| (k * k + l * l, k, l));
    let mut out = Vec::with_capacity(n);
    for (k, l) in pairs {
        for (x, y) in [(Cos, Cos), (Cos, Sin), (Sin, Cos), (Sin, Sin)] {
            if (k == 0 && x == Sin) || (l == 0 && y == Sin) {
                continue;
            }
            let norm = if k == 0 || l == 0 { 1.0 / (PI * 2f64.sqrt()) } else { 1.0 / PI };
            out.push(TorusMode { k, l, x, y, norm });
            if out.len() == n {
                return out;
            }
        }
    }
    unreachable!("mode enumeration too short for n = {n}")
}

pub fn sphere_harmonics(n: usize) -> Vec<Harmonic> {
    (1..)
        .flat_map(|l: usize| (-(l as i64)..=l as i64).map(move |m| Harmonic { l, m }))
        .take(n)
        .collect()
}

/// Fully normalized associated Legendre functions `P̄_ℓ^m(cos θ)` with
/// `∫₀^π P̄² sin θ dθ = 1/(2π)`, and their first two θ-derivatives.
/// Indexed `[ℓ][m]`, `m ≤ ℓ ≤ lmax`.
fn legendre_table(lmax: usize, theta: f64) -> [Vec<Vec<f64>>; 3] {
    let (s, x) = theta.sin_cos();
    let mut p = vec![vec![0.0; lmax + 1]; lmax + 1];
    p[0][0] = (0.25 / PI).sqrt();
    for m in 1..=lmax {
        p[m][m] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..lmax {
        p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * x * p[m][m];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    let mut dp = vec![vec![0.0; lmax + 1]; lmax + 1];
    let mut ddp = vec![vec![0.0; lmax + 1]; lmax + 1];
    let cot = x / s;
    for l in 0..=lmax {
        for m in 0..=l {
            let (lf, mf) = (l as f64, m as f64);
            let prev = if l > m {
                ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt() * p[l - 1][m]
            } else {
                0.0
            };
            dp[l][m] = (lf * x * p[l][m] - prev) / s;
            ddp[l][m] = -cot * dp[l][m] - (lf * (lf + 1.0) - mf * mf / (s * s)) * p[l][m];
        }
    }
    [p, dp, ddp]
}

fn trig_table(kmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    (0..=kmax).map(|k| (k as f64 * x).sin_cos()).map(|(s, c)| (c, s)).unzip()
}

impl Basis {
    pub fn new(kind: BasisKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("truncation N must be positive".into()));
        }
        if let Some(cap) = kind.capacity() {
            if n > cap {
                return Err(Error::InvalidSpec(format!(
                    "{} basis supports at most {cap} functions, N = {n} requested",
                    kind.name()
                )));
            }
        }
        let table = match &kind {
            BasisKind::TorusFourier => {
                let modes = torus_modes(n);
                let kmax = modes.iter().map(|m| m.k.max(m.l)).max().unwrap_or(0);
                Table::Torus { modes, kmax }
            }
            BasisKind::SphereHarmonics { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidSpec(format!("sphere radius must be positive, got {radius}")));
                }
                let harmonics = sphere_harmonics(n);
                let lmax = harmonics.last().map_or(0, |h| h.l);
                Table::Sphere { radius: *radius, harmonics, lmax }
            }
            BasisKind::Bumps { centers, width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidSpec(format!("bump width must be positive, got {width}")));
                }
                Table::Bumps {
                    centers: centers.iter().take(n).map(|c| Point::new(c[0], c[1])).collect(),
                    width: *width,
                }
            }
            BasisKind::User { functions, .. } => Table::User(functions[..n].to_vec()),
        };
        Ok(Self { kind, n, table: Arc::new(table) })
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn domain(&self) -> ChartDomain {
        self.kind.domain()
    }

    /// Eigenvalue of `−Δ` for the `i`-th function (0-based), when known.
    pub fn eigenvalue(&self, i: usize) -> Option<f64> {
        match &*self.table {
            Table::Torus { modes, .. } => modes.get(i).map(|m| (m.k * m.k + m.l * m.l) as f64),
            Table::Sphere { radius, harmonics, .. } => harmonics
                .get(i)
                .map(|h| (h.l * (h.l + 1)) as f64 / (radius * radius)),
            _ => None,
        }
    }

    /// Upper bound on `sup |ψᵢ|²` (0-based `i`).
    pub fn sup_squared(&self, i: usize) -> f64 {
        match &*self.table {
            Table::Torus { modes, .. } => modes[i].norm * modes[i].norm,
            // Σ_m Y_ℓm² = (2ℓ+1)/(4πR²) bounds each term.
            Table::Sphere { radius, harmonics, .. } => {
                (2 * harmonics[i].l + 1) as f64 / (4.0 * PI * radius * radius)
            }
            Table::Bumps { .. } => 1.0,
            Table::User(_) => f64::INFINITY,
        }
    }

    /// Human-readable name of the `i`-th function (0-based).
    pub fn label(&self, i: usize) -> String {
        match &*self.table {
            Table::Torus { modes, .. } => {
                let m = modes[i];
                format!("{}({}x)·{}({}y)", m.x.symbol(), m.k, m.y.symbol(), m.l)
            }
            Table::Sphere { harmonics, .. } => format!("Y({},{})", harmonics[i].l, harmonics[i].m),
            Table::Bumps { centers, .. } => format!("bump({}, {})", centers[i][0], centers[i][1]),
            Table::User(_) => format!("user[{i}]"),
        }
    }

    /// Jets of all `n` functions at `p`. No chart-domain check.
    pub fn jets(&self, p: &Point) -> Vec<ScalarJet> {
        match &*self.table {
            Table::Torus { modes, kmax } => {
                let (cx, sx) = trig_table(*kmax, p[0]);
                let (cy, sy) = trig_table(*kmax, p[1]);
                modes
                    .iter()
                    .map(|m| {
                        let (a, da, dda) = m.x.eval(m.k as f64, cx[m.k], sx[m.k]);
                        let (b, db, ddb) = m.y.eval(m.l as f64, cy[m.l], sy[m.l]);
                        ScalarJet {
                            value: m.norm * a * b,
                            grad: Tangent::new(da * b, a * db) * m.norm,
                            hess: Matrix2::new(dda * b, da * db, da * db, a * ddb) * m.norm,
                        }
                    })
                    .collect()
            }
            Table::Sphere { radius, harmonics, lmax } => {
                let [pl, dpl, ddpl] = legendre_table(*lmax, p[0]);
                let (cphi, sphi) = trig_table(*lmax, p[1]);
                harmonics
                    .iter()
                    .map(|h| {
                        let am = h.m.unsigned_abs() as usize;
                        let kind = if h.m < 0 { TrigKind::Sin } else { TrigKind::Cos };
                        let (t, dt, ddt) = kind.eval(am as f64, cphi[am], sphi[am]);
                        let scale = if h.m == 0 { 1.0 } else { 2f64.sqrt() } / radius;
                        let (a, da, dda) = (pl[h.l][am], dpl[h.l][am], ddpl[h.l][am]);
                        ScalarJet {
                            value: scale * a * t,
                            grad: Tangent::new(da * t, a * dt) * scale,
                            hess: Matrix2::new(dda * t, da * dt, da * dt, a * ddt) * scale,
                        }
                    })
                    .collect()
            }
            Table::Bumps { centers, width } => {
                let w2 = width * width;
                centers
                    .iter()
                    .map(|c| {
                        let d = p - c;
                        let v = (-0.5 * d.norm_squared() / w2).exp();
                        ScalarJet {
                            value: v,
                            grad: -d * (v / w2),
                            hess: (d * d.transpose() / w2 - Matrix2::identity()) * (v / w2),
                        }
                    })
                    .collect()
            }
            Table::User(fs) => fs.iter().map(|f| f.jet(p)).collect(),
        }
    }

    /// Values of all `n` functions at `p`.
    pub fn values(&self, p: &Point) -> Vec<f64> {
        match &*self.table {
            Table::Torus { modes, kmax } => {
                let (cx, sx) = trig_table(*kmax, p[0]);
                let (cy, sy) = trig_table(*kmax, p[1]);
                let pick = |t: TrigKind, c: &[f64], s: &[f64], k: usize| match t {
                    TrigKind::Cos => c[k],
                    TrigKind::Sin => s[k],
                };
                modes
                    .iter()
                    .map(|m| m.norm * pick(m.x, &cx, &sx, m.k) * pick(m.y, &cy, &sy, m.l))
                    .collect()
            }
            _ => self.jets(p).iter().map(|j| j.value).collect(),
        }
    }

    /// Gram matrix `∫ψᵢψⱼ dV` over the whole closed surface, when the basis
    /// is an eigenbasis.
    pub fn gram_matrix(&self) -> Option<DMatrix<f64>> {
        type Weight = Box<dyn Fn(&Point) -> f64>;
        let (grid, weight): (QuadGrid, Weight) = match &*self.table {
            Table::Torus { kmax, .. } => {
                let n = 4 * kmax + 4;
                let grid = QuadGrid::new([AxisRule::Trapezoid; 2], [0.0, 0.0], [TAU, TAU], [n, n]).ok()?;
                (grid, Box::new(|_| 1.0))
            }
            Table::Sphere { radius, lmax, .. } => {
                let r2 = radius * radius;
                let grid = QuadGrid::new(
                    [AxisRule::GaussLegendreCos, AxisRule::Trapezoid],
                    [0.0, 0.0],
                    [PI, TAU],
                    [2 * lmax + 8, 4 * lmax + 8],
                )
                .ok()?;
                (grid, Box::new(move |p: &Point| r2 * p[0].sin()))
            }
            _ => return None,
        };
        let mut gram = DMatrix::zeros(self.n, self.n);
        let [a, b] = &grid.axes;
        for (x, wx) in a.nodes.iter().zip(&a.weights) {
            for (y, wy) in b.nodes.iter().zip(&b.weights) {
                let p = Point::new(*x, *y);
                let v = nalgebra::DVector::from_vec(self.values(&p));
                gram += v.clone() * v.transpose() * (wx * wy * weight(&p));
            }
        }
        Some(gram)
    }

    /// `max |G − I|`, when the Gram matrix is available.
    pub fn gram_residual(&self) -> Option<f64> {
        let g = self.gram_matrix()?;
        Some((g - DMatrix::identity(self.n, self.n)).amax())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn torus_enumeration_prefix() {
        use TrigKind::{Cos, Sin};
        let m = torus_modes(12);
        let head: Vec<_> = m.iter().map(|m| (m.k, m.l, m.x, m.y)).collect();
        assert_eq!(
            head,
            vec![
                (0, 1, Cos, Cos),
                (0, 1, Cos, Sin),
                (1, 0, Cos, Cos),
                (1, 0, Sin, Cos),
                (1, 1, Cos, Cos),
                (1, 1, Cos, Sin),
                (1, 1, Sin, Cos),
                (1, 1, Sin, Sin),
                (0, 2, Cos, Cos),
                (0, 2, Cos, Sin),
                (2, 0, Cos, Cos),
                (2, 0, Sin, Cos),
            ]
        );
        let b = Basis::new(BasisKind::TorusFourier, 12).unwrap();
        let lams: Vec<f64> = (0..12).map(|i| b.eigenvalue(i).unwrap()).collect();
        assert!(lams.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn torus_enumeration_is_prefix_stable() {
        let long = torus_modes(500);
        for n in [1, 7, 64, 200] {
            assert_eq!(torus_modes(n)[..], long[..n]);
        }
    }

    #[test]
    fn sphere_enumeration_prefix() {
        let h = sphere_harmonics(9);
        let lm: Vec<_> = h.iter().map(|h| (h.l, h.m)).collect();
        assert_eq!(lm, vec![(1, -1), (1, 0), (1, 1), (2, -2), (2, -1), (2, 0), (2, 1), (2, 2), (3, -3)]);
    }

    #[test]
    fn low_degree_harmonics_match_closed_forms() {
        let b = Basis::new(BasisKind::SphereHarmonics { radius: 1.0 }, 8).unwrap();
        let p = Point::new(0.9, 2.1);
        let v = b.values(&p);
        let (st, ct) = p[0].sin_cos();
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert_abs_diff_eq!(v[1], c1 * ct, epsilon = 1e-14);
        assert_abs_diff_eq!(v[2], c1 * st * p[1].cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(v[0], c1 * st * p[1].sin(), epsilon = 1e-14);
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        assert_abs_diff_eq!(v[5], c20 * (3.0 * ct * ct - 1.0), epsilon = 1e-14);
        let c22 = (15.0 / (16.0 * PI)).sqrt();
        assert_abs_diff_eq!(v[7], c22 * st * st * (2.0 * p[1]).cos(), epsilon = 1e-14);
    }

    #[test]
    fn harmonics_are_eigenfunctions() {
        // Δ = ∂θθ + cot θ ∂θ + ∂φφ / sin²θ on the unit sphere.
        let b = Basis::new(BasisKind::SphereHarmonics { radius: 1.0 }, 120).unwrap();
        let p = Point::new(1.1, 0.4);
        let (s, c) = p[0].sin_cos();
        for (i, j) in b.jets(&p).iter().enumerate() {
            let lap = j.hess[(0, 0)] + c / s * j.grad[0] + j.hess[(1, 1)] / (s * s);
            let lam = b.eigenvalue(i).unwrap();
            assert_abs_diff_eq!(lap, -lam * j.value, epsilon = 1e-9 * (1.0 + lam));
        }
    }

    fn check_jets_against_fd(b: &Basis, p: &Point) {
        let h = 1e-5;
        let jets = b.jets(p);
        for a in 0..2 {
            let mut e = Point::zeros();
            e[a] = h;
            let (jp, jm) = (b.jets(&(p + e)), b.jets(&(p - e)));
            for i in 0..b.len() {
                let scale = 1.0 + jets[i].hess.amax();
                let d1 = (jp[i].value - jm[i].value) / (2.0 * h);
                assert!((d1 - jets[i].grad[a]).abs() < 1e-7 * scale, "{} grad {a}", b.label(i));
                let d2 = (jp[i].grad - jm[i].grad) / (2.0 * h);
                assert!((d2 - jets[i].hess.column(a)).amax() < 1e-6 * scale, "{} hess {a}", b.label(i));
            }
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bases = [
            Basis::new(BasisKind::TorusFourier, 64).unwrap(),
            Basis::new(BasisKind::SphereHarmonics { radius: 1.7 }, 64).unwrap(),
            Basis::new(
                BasisKind::Bumps {
                    centers: vec![[0.0, 1.0], [1.0, 2.0]],
                    width: 0.7,
                    domain: crate::geom::HalfPlane.domain(),
                },
                2,
            )
            .unwrap(),
        ];
        for b in &bases {
            for _ in 0..10 {
                let p = b.domain().shrink(0.01).sample(&mut rng);
                check_jets_against_fd(b, &p);
            }
        }
    }

    #[test]
    fn values_agree_with_jets() {
        let b = Basis::new(BasisKind::TorusFourier, 40).unwrap();
        let p = Point::new(0.3, 5.0);
        let v = b.values(&p);
        for (x, j) in v.iter().zip(b.jets(&p)) {
            assert_eq!(*x, j.value);
        }
    }

    #[test]
    fn eigenbases_are_orthonormal() {
        for kind in [BasisKind::TorusFourier, BasisKind::SphereHarmonics { radius: 1.0 }, BasisKind::SphereHarmonics { radius: 2.5 }] {
            let b = Basis::new(kind, 64).unwrap();
            let r = b.gram_residual().unwrap();
            assert!(r < 1e-10, "{:?}: {r:e}", b.kind());
        }
    }

    #[test]
    fn capacity_limits() {
        assert!(Basis::new(BasisKind::SphereHarmonics { radius: 1.0 }, 1680).is_ok());
        assert!(Basis::new(BasisKind::SphereHarmonics { radius: 1.0 }, 1681).is_err());
        assert!(Basis::new(BasisKind::TorusFourier, 0).is_err());
        assert!(Basis::new(BasisKind::SphereHarmonics { radius: -1.0 }, 3).is_err());
    }

    #[test]
    fn sup_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in [BasisKind::TorusFourier, BasisKind::SphereHarmonics { radius: 1.3 }] {
            let b = Basis::new(kind, 100).unwrap();
            for _ in 0..50 {
                let p = b.domain().sample(&mut rng);
                for (i, v) in b.values(&p).iter().enumerate() {
                    assert!(v * v <= b.sup_squared(i) * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn kind_serialization_roundtrip() {
        let k = BasisKind::SphereHarmonics { radius: 2.0 };
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"kind":"sphere-harmonics","radius":2.0}"#);
        let back: BasisKind = serde_json::from_str(&s).unwrap();
        assert_eq!(back.name(), "sphere-harmonics");
        assert_eq!(serde_json::to_string(&BasisKind::TorusFourier).unwrap(), r#"{"kind":"torus-fourier"}"#);
    }
}
