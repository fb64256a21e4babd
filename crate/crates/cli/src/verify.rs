//! The verification suite: every identity of the library evaluated at seeded
//! random samples, grouped, summarized and rendered as JSON and text.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use torsionfield_core::geom::curvature::{flatten, scale};
use torsionfield_core::geom::{
    curvature_at, inner, CurvePath, FlatTorus, HalfPlane, Manifold, Point, ScalarFieldExpr, Sphere, Tangent, Termination,
    TrigPolynomial, VectorFieldExpr,
};
use torsionfield_core::random_field::{BasisKind, FieldRealization, FieldSpec};
use torsionfield_core::seed::mix_seed;
use torsionfield_core::stoch_connection::{
    christoffel_metric_identity, connection_axiom_residuals, metric_compatibility_residuals, stochastic_christoffel,
    stochastic_christoffel_direct, stochastic_torsion, ChristoffelMetricIdentity, Method,
};
use torsionfield_core::stoch_curvature::{
    bianchi2_residual, covariant_derivative_rtilde, curvature_report, gauss_bonnet_deviation, stochastic_sectional,
};
use torsionfield_core::stoch_laplace::{
    divergence_theorem_check, stochastic_divergence, stochastic_gradient, stochastic_laplacian, BoundaryPatch,
};
use torsionfield_core::transport::{
    angle_difference, brownian_transport, expected_geodesic, expected_magnitude_factor, holonomy, max_relative_residual,
    realized_geodesic, realized_geodesic_residuals, recovery_limit_check, transport, transport_between, wrap_angle,
    BrownianParams, TransportKind,
};
use torsionfield_core::IdentityReport;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::{draw_realization, z_score};

/// One identity the suite evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: &'static str,
    pub group: &'static str,
    /// `false` for report-only identities: evaluated and published, never asserted.
    pub asserting: bool,
}

const fn entry(id: &'static str, group: &'static str) -> ManifestEntry {
    ManifestEntry { id, group, asserting: true }
}

const fn report_only(id: &'static str, group: &'static str) -> ManifestEntry {
    ManifestEntry { id, group, asserting: false }
}

pub const GROUP_FIELD: &str = "random field moments";
pub const GROUP_CONNECTION: &str = "connection axioms and metric";
pub const GROUP_TORSION: &str = "torsion";
pub const GROUP_TRANSPORT: &str = "transport and geodesics";
pub const GROUP_CURVATURE: &str = "curvature scaling";
pub const GROUP_SECTIONAL: &str = "sectional curvature";
pub const GROUP_LAPLACE: &str = "gradient, divergence, laplacian";
pub const GROUP_DIVERGENCE: &str = "divergence theorem";
pub const GROUP_GAUSS_BONNET: &str = "gauss-bonnet deviation";

/// Every identity the suite covers, in report order.
pub const MANIFEST: &[ManifestEntry] = &[
    entry("field.mean", GROUP_FIELD),
    entry("field.second-moment", GROUP_FIELD),
    entry("field.alpha-variance", GROUP_FIELD),
    entry("field.beta-derivative", GROUP_FIELD),
    entry("connection.axiom-1", GROUP_CONNECTION),
    entry("connection.axiom-2", GROUP_CONNECTION),
    entry("connection.axiom-3", GROUP_CONNECTION),
    entry("connection.metric-compatibility", GROUP_CONNECTION),
    entry("connection.metric-incompatibility-deterministic", GROUP_CONNECTION),
    entry("connection.christoffel-direct", GROUP_CONNECTION),
    report_only("connection.christoffel-metric-identity", GROUP_CONNECTION),
    entry("connection.torsion-free", GROUP_TORSION),
    entry("connection.torsion-deterministic", GROUP_TORSION),
    entry("transport.realized-scaling", GROUP_TRANSPORT),
    entry("transport.realized-direction", GROUP_TRANSPORT),
    entry("transport.expected-magnitude", GROUP_TRANSPORT),
    entry("transport.linearity", GROUP_TRANSPORT),
    entry("transport.holonomy-latitude", GROUP_TRANSPORT),
    entry("transport.geodesic-undivided", GROUP_TRANSPORT),
    entry("transport.brownian-mean", GROUP_TRANSPORT),
    entry("transport.brownian-log-variance", GROUP_TRANSPORT),
    entry("transport.ode-order-geodesic", GROUP_TRANSPORT),
    entry("transport.ode-order-transport", GROUP_TRANSPORT),
    entry("transport.recovery-limit", GROUP_TRANSPORT),
    entry("curvature.scaling", GROUP_CURVATURE),
    entry("curvature.four-tensor-scaling", GROUP_CURVATURE),
    entry("curvature.symmetries", GROUP_CURVATURE),
    entry("curvature.ricci-scaling", GROUP_CURVATURE),
    entry("curvature.scalar-scaling", GROUP_CURVATURE),
    entry("curvature.covariant-derivative", GROUP_CURVATURE),
    report_only("curvature.bianchi2", GROUP_CURVATURE),
    entry("curvature.sectional-invariance", GROUP_SECTIONAL),
    entry("laplace.gradient", GROUP_LAPLACE),
    entry("laplace.divergence", GROUP_LAPLACE),
    entry("laplace.laplacian", GROUP_LAPLACE),
    entry("laplace.divergence-theorem-sphere", GROUP_DIVERGENCE),
    entry("laplace.divergence-theorem-torus", GROUP_DIVERGENCE),
    entry("gauss-bonnet.classical", GROUP_GAUSS_BONNET),
    entry("gauss-bonnet.deviation", GROUP_GAUSS_BONNET),
    entry("gauss-bonnet.monte-carlo", GROUP_GAUSS_BONNET),
    entry("gauss-bonnet.flat-torus", GROUP_GAUSS_BONNET),
];

/// Tolerances of the asserting checks.
pub mod tol {
    pub const CONNECTION: f64 = 1e-8;
    pub const CHRISTOFFEL: f64 = 1e-10;
    pub const TORSION: f64 = 1e-6;
    pub const ALPHA_VARIANCE: f64 = 1e-10;
    pub const BETA_DERIVATIVE: f64 = 1e-8;
    pub const TRANSPORT_SCALING: f64 = 1e-6;
    pub const TRANSPORT_DIRECTION: f64 = 1e-8;
    pub const LINEARITY: f64 = 1e-10;
    pub const HOLONOMY: f64 = 1e-5;
    pub const GEODESIC_UNDIVIDED: f64 = 1e-6;
    /// Standard errors.
    pub const MONTE_CARLO_SE: f64 = 3.0;
    pub const ODE_ORDER: f64 = 0.3;
    pub const CURVATURE_DIRECT: f64 = 1e-6;
    pub const CURVATURE_ALGEBRAIC: f64 = 1e-8;
    pub const SECTIONAL: f64 = 1e-9;
    pub const COVARIANT_DERIVATIVE: f64 = 1e-5;
    pub const LAPLACE: f64 = 1e-8;
    pub const DIVERGENCE_THEOREM: f64 = 1e-5;
    pub const GAUSS_BONNET_CLASSICAL: f64 = 1e-6;
    pub const FLAT_TORUS: f64 = 1e-12;
}

/// Fixed numerical settings of the suite, independent of the experiment
/// integrator so the gate does not move with it.
pub const VERIFY_H: f64 = 1e-3;
pub const HOLONOMY_H: f64 = 1e-4;
pub const DIVERGENCE_GRID: [usize; 2] = [32, 64];
pub const DIVERGENCE_BOUNDARY_NODES: usize = 128;
/// Length of the latitude arc used for Brownian transport.
pub const BROWNIAN_ARC: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub asserting: bool,
    pub samples: usize,
    /// `None` for report-only checks.
    pub pass: Option<bool>,
    pub failed_samples: usize,
    pub max_residual: f64,
    pub tolerance: Option<f64>,
    pub reports: Vec<IdentityReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SuiteSummary {
    pub checks: usize,
    pub asserting: usize,
    pub passed: usize,
    pub failed: usize,
    pub report_only: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteMetadata {
    pub version: &'static str,
    pub master_seed: u64,
    pub samples: usize,
    pub monte_carlo_samples: usize,
    pub gauss_bonnet_realizations: usize,
    pub quadrature: [usize; 2],
    pub field: FieldMetadata,
    pub verify_h: f64,
    pub holonomy_h: f64,
    /// Degenerate draws replaced under `resample-and-report`.
    pub resamples: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldMetadata {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha_exp: f64,
    pub c: f64,
    pub sphere_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSuiteReport {
    pub metadata: SuiteMetadata,
    pub summary: SuiteSummary,
    pub groups: Vec<GroupReport>,
}

impl VerificationSuiteReport {
    pub fn failed(&self) -> usize {
        self.summary.failed
    }

    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.groups.iter().flat_map(|g| &g.checks).find(|c| c.id == id)
    }

    /// Plain-text rendering: one line per check, then the summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.metadata;
        let _ = writeln!(s, "torsionfield verification suite {}", m.version);
        let _ = writeln!(
            s,
            "seed {}  samples {}  monte carlo {}  field N={} alpha={} c={}",
            m.master_seed, m.samples, m.monte_carlo_samples, m.field.n, m.field.alpha_exp, m.field.c
        );
        for g in &self.groups {
            let _ = writeln!(s, "\n[{}]", g.name);
            for c in &g.checks {
                let status = match c.pass {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "INFO",
                };
                let tol = c.tolerance.map_or_else(|| "report-only".to_string(), |t| format!("tol {t:.1e}"));
                let _ = writeln!(
                    s,
                    "  {status}  {:<48} n={:<4} max residual {:.3e}  {tol}",
                    c.id, c.samples, c.max_residual
                );
            }
        }
        let x = &self.summary;
        let _ = writeln!(
            s,
            "\n{} checks: {} asserting ({} passed, {} failed), {} report-only; {} evaluations; {} resamples",
            x.checks, x.asserting, x.passed, x.failed, x.report_only, x.evaluations, m.resamples
        );
        s
    }
}

fn summarize(entry: &ManifestEntry, reports: Vec<IdentityReport>) -> CheckResult {
    let max_residual = reports.iter().fold(0.0_f64, |m, r| {
        if r.residual_norm.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(r.residual_norm)
        }
    });
    let failed_samples = reports.iter().filter(|r| r.failed()).count();
    let tolerance = reports.iter().filter_map(|r| r.tolerance).reduce(f64::max);
    let pass = entry.asserting.then(|| !reports.is_empty() && failed_samples == 0 && !max_residual.is_nan());
    CheckResult {
        id: entry.id.to_string(),
        asserting: entry.asserting,
        samples: reports.len(),
        pass,
        failed_samples,
        max_residual,
        tolerance,
        reports,
    }
}

fn relabel(mut r: IdentityReport, id: &str) -> IdentityReport {
    r.identity_id = id.to_string();
    r
}

fn v2(t: &Tangent) -> Vec<f64> {
    vec![t[0], t[1]]
}

/// Relative max-norm residual `‖a − b‖ / (1 + ‖b‖)`.
fn relative(id: &str, lhs: Vec<f64>, rhs: Vec<f64>, tolerance: f64) -> IdentityReport {
    let scale = 1.0 + rhs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let residual = torsionfield_core::report::max_abs_diff(&lhs, &rhs) / scale;
    IdentityReport::with_residual(id, lhs, rhs, residual, tolerance)
}

#[derive(Clone, Copy)]
enum Surface {
    Sphere,
    HalfPlane,
    Torus,
}

struct Suite<'a> {
    config: &'a ExperimentConfig,
    sphere: Sphere,
    sphere_spec: Arc<FieldSpec>,
    torus_spec: Arc<FieldSpec>,
    samples: usize,
    master: u64,
}

type Reports = Vec<(&'static str, IdentityReport)>;

impl<'a> Suite<'a> {
    fn new(config: &'a ExperimentConfig) -> CliResult<Self> {
        let radius = if config.manifold.name == "sphere" { config.manifold.params.radius } else { 1.0 };
        let fs = &config.field_spec;
        let spec = |kind| {
            FieldSpec::new(kind, fs.n, fs.alpha_exp, fs.c)
                .map(Arc::new)
                .map_err(|e| CliError::config("field_spec", e.to_string()))
        };
        Ok(Self {
            config,
            sphere: Sphere::new(radius).map_err(|e| CliError::config("manifold.params.radius", e.to_string()))?,
            sphere_spec: spec(BasisKind::SphereHarmonics { radius })?,
            torus_spec: spec(BasisKind::TorusFourier)?,
            samples: config.verify.samples,
            master: config.monte_carlo.master_seed,
        })
    }

    fn radius(&self) -> f64 {
        self.sphere.radius
    }

    /// Seed base of one check, so checks draw independent streams.
    fn stream(&self, id: &str) -> u64 {
        let tag = id.bytes().fold(0xCBF2_9CE4_8422_2325_u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3));
        mix_seed(self.master, tag)
    }

    fn rng(&self, id: &str, k: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(!self.stream(id), k as u64))
    }

    /// Realization `k` of a check, under the configured degenerate policy.
    fn realization(&self, spec: &Arc<FieldSpec>, id: &str, k: usize) -> CliResult<(FieldRealization, u64)> {
        let d = draw_realization(spec, mix_seed(self.stream(id), k as u64), self.config.monte_carlo.degenerate_policy)?;
        Ok((d.realization, d.resamples))
    }

    fn manifold(&self, s: Surface) -> &dyn Manifold {
        match s {
            Surface::Sphere => &self.sphere,
            Surface::HalfPlane => &HalfPlane,
            Surface::Torus => &FlatTorus,
        }
    }

    fn spec(&self, s: Surface) -> &Arc<FieldSpec> {
        match s {
            Surface::Sphere => &self.sphere_spec,
            _ => &self.torus_spec,
        }
    }

    fn point(&self, s: Surface, rng: &mut ChaCha8Rng) -> Point {
        match s {
            Surface::Sphere => Point::new(rng.random_range(0.3..PI - 0.3), rng.random_range(0.0..TAU)),
            Surface::HalfPlane => Point::new(rng.random_range(-2.0..2.0), rng.random_range(0.5..3.0)),
            Surface::Torus => Point::new(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)),
        }
    }

    /// Runs `f` for `n` samples in parallel; results keep sample order.
    fn sampled<F>(&self, n: usize, f: F) -> CliResult<(Reports, u64)>
    where
        F: Fn(usize) -> CliResult<(Reports, u64)> + Send + Sync,
    {
        let parts: Vec<CliResult<(Reports, u64)>> = (0..n).into_par_iter().map(f).collect();
        let mut out = Vec::new();
        let mut resamples = 0;
        for p in parts {
            let (r, k) = p?;
            out.extend(r);
            resamples += k;
        }
        Ok((out, resamples))
    }

    fn moments(&self) -> CliResult<Reports> {
        let n = self.config.monte_carlo.n_samples;
        let mut out = Vec::new();
        let cases = [
            (&self.sphere_spec, Point::new(1.0, 0.5)),
            (&self.torus_spec, Point::new(1.0, 2.0)),
        ];
        for (spec, p) in cases {
            let base = self.stream("field.moments");
            let eps: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| FieldRealization::sample(spec, mix_seed(base, i as u64)).eps_unchecked(&p))
                .collect();
            let nf = n as f64;
            let stats = |xs: &dyn Fn(f64) -> f64| {
                let mean = eps.iter().map(|e| xs(*e)).sum::<f64>() / nf;
                let var = eps.iter().map(|e| (xs(*e) - mean).powi(2)).sum::<f64>() / (nf - 1.0);
                (mean, (var / nf).sqrt())
            };
            let pt = [p[0], p[1]];
            let (m1, se1) = stats(&|e| e);
            out.push((
                "field.mean",
                IdentityReport::with_residual("field.mean", vec![m1], vec![1.0], (m1 - 1.0).abs(), tol::MONTE_CARLO_SE * se1)
                    .at(pt)
                    .seeded(Some(base)),
            ));
            let target = 1.0 + spec.variance(&p);
            let (m2, se2) = stats(&|e| e * e);
            out.push((
                "field.second-moment",
                IdentityReport::with_residual(
                    "field.second-moment",
                    vec![m2],
                    vec![target],
                    (m2 - target).abs(),
                    tol::MONTE_CARLO_SE * se2,
                )
                .at(pt)
                .seeded(Some(base)),
            ));
        }
        Ok(out)
    }

    fn alpha_beta(&self) -> CliResult<Reports> {
        let mut out = Vec::new();
        for k in 0..self.samples {
            let mut rng = self.rng("field.alpha-beta", k);
            let (spec, curve) = if k % 2 == 0 {
                (&self.sphere_spec, CurvePath::latitude(rng.random_range(0.4..PI - 0.4)))
            } else {
                let p0 = Point::new(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
                let v = Tangent::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (&self.torus_spec, CurvePath::line(p0, v, (0.0, TAU)))
            };
            let t = rng.random_range(0.1..TAU - 0.1);
            let p = curve.position(t);
            let pt = [p[0], p[1]];
            let (a, b) = spec.alpha_beta_along(&curve, t)?;
            out.push((
                "field.alpha-variance",
                IdentityReport::check("field.alpha-variance", vec![a - 1.0], vec![spec.variance(&p)], tol::ALPHA_VARIANCE).at(pt),
            ));
            // β = ½ dα/dt, differentiated by a 4th-order stencil.
            let h = 1e-3;
            let alpha = |s: f64| spec.alpha_beta_along(&curve, s).map(|(a, _)| a);
            let da = (alpha(t - 2.0 * h)? - 8.0 * alpha(t - h)? + 8.0 * alpha(t + h)? - alpha(t + 2.0 * h)?) / (12.0 * h);
            out.push((
                "field.beta-derivative",
                IdentityReport::check("field.beta-derivative", vec![b], vec![0.5 * da], tol::BETA_DERIVATIVE).at(pt),
            ));
        }
        Ok(out)
    }

    fn connection(&self) -> CliResult<(Reports, u64)> {
        let id = "connection";
        self.sampled(self.samples, |k| {
            let surface = [Surface::Sphere, Surface::HalfPlane, Surface::Torus][k % 3];
            let (m, spec) = (self.manifold(surface), self.spec(surface));
            let (r, resamples) = self.realization(spec, id, k)?;
            let mut rng = self.rng(id, k);
            let p = self.point(surface, &mut rng);
            let pt = [p[0], p[1]];
            let f = ScalarFieldExpr::from(TrigPolynomial::random(&mut rng, 1.0));
            let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let y = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let z = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let a = rng.random_range(-2.0..2.0);
            let mut out: Reports = Vec::new();
            let [a1, a2, a3] = connection_axiom_residuals(m, &r, &f, &x, &y, &z, a, &p, tol::CONNECTION)?;
            out.push(("connection.axiom-1", a1));
            out.push(("connection.axiom-2", a2));
            out.push(("connection.axiom-3", a3));
            let [mc, mi] = metric_compatibility_residuals(m, &r, &x, &y, &z, &p, tol::CONNECTION)?;
            out.push(("connection.metric-compatibility", mc));
            out.push(("connection.metric-incompatibility-deterministic", mi));
            let formula = stochastic_christoffel(m, &r, &p)?;
            let direct = stochastic_christoffel_direct(m, &r, &p)?;
            out.push((
                "connection.christoffel-direct",
                IdentityReport::check(
                    "connection.christoffel-direct",
                    ChristoffelMetricIdentity::flat(&formula.0),
                    ChristoffelMetricIdentity::flat(&direct.0),
                    tol::CHRISTOFFEL,
                )
                .at(pt)
                .seeded(r.seed()),
            ));
            let cm = christoffel_metric_identity(m, &r, &p)?;
            out.push((
                "connection.christoffel-metric-identity",
                IdentityReport::report_only(
                    "connection.christoffel-metric-identity",
                    ChristoffelMetricIdentity::flat(&cm.lhs),
                    ChristoffelMetricIdentity::flat(&cm.rhs),
                )
                .at(pt)
                .seeded(r.seed()),
            ));
            let t = stochastic_torsion(m, &r, &x, &y, &p)?;
            out.push((
                "connection.torsion-free",
                IdentityReport::check("connection.torsion-free", v2(&t.stochastic), vec![0.0, 0.0], tol::TORSION)
                    .at(pt)
                    .seeded(r.seed()),
            ));
            out.push((
                "connection.torsion-deterministic",
                IdentityReport::check(
                    "connection.torsion-deterministic",
                    v2(&t.deterministic),
                    v2(&t.deterministic_predicted),
                    tol::TORSION,
                )
                .at(pt)
                .seeded(r.seed()),
            ));
            Ok((out, resamples))
        })
    }

    /// A sphere latitude (even `k`) or a torus line (odd `k`).
    fn transport_case(&self, k: usize, rng: &mut ChaCha8Rng) -> (Surface, CurvePath) {
        if k.is_multiple_of(2) {
            (Surface::Sphere, CurvePath::latitude(rng.random_range(0.4..PI - 0.4)))
        } else {
            let p0 = Point::new(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            let a = rng.random_range(0.0..TAU);
            (Surface::Torus, CurvePath::line(p0, Tangent::new(a.cos(), a.sin()), (0.0, TAU)))
        }
    }

    fn transport_scaling(&self) -> CliResult<(Reports, u64)> {
        let id = "transport";
        let n = (self.samples / 10).max(2);
        self.sampled(n, |k| {
            let mut rng = self.rng(id, k);
            let (surface, curve) = self.transport_case(k, &mut rng);
            let (m, spec) = (self.manifold(surface), self.spec(surface));
            let (r, resamples) = self.realization(spec, id, k)?;
            let v0 = Tangent::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let std = transport(m, &curve, &TransportKind::Standard, &v0, VERIFY_H)?;
            let real = transport(m, &curve, &TransportKind::Realized(r.clone()), &v0, VERIFY_H)?;
            let e0 = r.eps(&curve.position(0.0))?;
            let complete = real.termination == Termination::Completed;
            let (mut scaling, mut direction) = (0.0_f64, 0.0_f64);
            for (a, b) in real.samples.iter().zip(&std.samples) {
                let e = a.eps.unwrap_or(f64::NAN);
                scaling = scaling.max((a.frame - b.frame * (e0 / e)).amax());
                let cross = a.frame[0] * b.frame[1] - a.frame[1] * b.frame[0];
                direction = direction.max(cross.abs() / (a.frame.norm() * b.frame.norm()));
            }
            if !complete {
                scaling = f64::NAN;
            }
            let (end_r, end_s) = (real.end(), std.end());
            let predicted = end_s.frame * (e0 / end_r.eps.unwrap_or(f64::NAN));
            let p = curve.position(0.0);
            let pt = [p[0], p[1]];
            let mut out: Reports = vec![
                (
                    "transport.realized-scaling",
                    IdentityReport::with_residual(
                        "transport.realized-scaling",
                        v2(&end_r.frame),
                        v2(&predicted),
                        scaling,
                        tol::TRANSPORT_SCALING,
                    )
                    .at(pt)
                    .seeded(r.seed()),
                ),
                (
                    "transport.realized-direction",
                    IdentityReport::with_residual(
                        "transport.realized-direction",
                        v2(&end_r.frame),
                        v2(&end_s.frame),
                        direction,
                        tol::TRANSPORT_DIRECTION,
                    )
                    .at(pt)
                    .seeded(r.seed()),
                ),
            ];

            let exp = transport(m, &curve, &TransportKind::Expected(spec.clone()), &v0, VERIFY_H)?;
            let mut worst = 0.0_f64;
            let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
            for j in (1..exp.samples.len()).step_by(exp.samples.len() / 8) {
                let (a, b) = (&exp.samples[j], &std.samples[j]);
                let factor = expected_magnitude_factor(spec, &curve, 0.0, a.t, 800)?;
                let pred = b.frame * factor;
                worst = worst.max((a.frame - pred).amax());
                (lhs, rhs) = (v2(&a.frame), v2(&pred));
            }
            out.push((
                "transport.expected-magnitude",
                IdentityReport::with_residual("transport.expected-magnitude", lhs, rhs, worst, tol::TRANSPORT_SCALING).at(pt),
            ));

            let kind = TransportKind::Realized(r.clone());
            let (u, w, a) = (v0, Tangent::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), rng.random_range(-3.0..3.0));
            let xu = transport(m, &curve, &kind, &u, 1e-2)?.end().frame;
            let xw = transport(m, &curve, &kind, &w, 1e-2)?.end().frame;
            let xs = transport(m, &curve, &kind, &(u * a + w), 1e-2)?.end().frame;
            out.push((
                "transport.linearity",
                relative("transport.linearity", v2(&xs), v2(&(xu * a + xw)), tol::LINEARITY).at(pt).seeded(r.seed()),
            ));
            Ok((out, resamples))
        })
    }

    fn holonomy(&self) -> CliResult<Reports> {
        let theta0 = FRAC_PI_3;
        let curve = CurvePath::latitude(theta0);
        let closed_form = wrap_angle(TAU * (1.0 - theta0.cos()));
        let fs = &self.config.field_spec;
        let noiseless = Arc::new(
            FieldSpec::new(BasisKind::SphereHarmonics { radius: self.radius() }, fs.n, fs.alpha_exp, 0.0)
                .map_err(|e| CliError::config("field_spec", e.to_string()))?,
        );
        let kinds = [TransportKind::Standard, TransportKind::Expected(noiseless)];
        let mut out = Vec::new();
        for kind in &kinds {
            let h = holonomy(&self.sphere, &curve, kind, HOLONOMY_H)?;
            out.push((
                "transport.holonomy-latitude",
                IdentityReport::with_residual(
                    "transport.holonomy-latitude",
                    vec![h.angle],
                    vec![closed_form],
                    angle_difference(h.angle, closed_form).abs(),
                    tol::HOLONOMY,
                )
                .at([theta0, 0.0]),
            ));
        }
        Ok(out)
    }

    fn geodesics(&self) -> CliResult<(Reports, u64)> {
        let id = "transport.geodesic-undivided";
        let n = (self.samples / 10).max(2);
        self.sampled(n, |k| {
            let mut rng = self.rng(id, k);
            let surface = if k % 2 == 0 { Surface::Sphere } else { Surface::HalfPlane };
            let (m, spec) = (self.manifold(surface), self.spec(surface));
            let (r, resamples) = self.realization(spec, id, k)?;
            let (p0, v0) = match surface {
                Surface::Sphere => (
                    Point::new(rng.random_range(1.2..PI - 1.2), rng.random_range(0.0..TAU)),
                    Tangent::new(rng.random_range(-0.3..0.3), rng.random_range(0.5..1.0)),
                ),
                _ => (
                    Point::new(rng.random_range(-1.0..1.0), rng.random_range(1.0..2.0)),
                    Tangent::new(rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.3)),
                ),
            };
            let c = realized_geodesic(m, &r, &p0, &v0, 2.0, VERIFY_H)?;
            let residual = if c.termination() == Termination::Completed {
                max_relative_residual(&realized_geodesic_residuals(m, &r, &c)?)
            } else {
                f64::NAN
            };
            let report = IdentityReport::with_residual(id, vec![residual], vec![0.0], residual, tol::GEODESIC_UNDIVIDED)
                .at([p0[0], p0[1]])
                .seeded(r.seed());
            Ok((vec![(id, report)], resamples))
        })
    }

    fn brownian(&self) -> CliResult<Reports> {
        let n = self.config.monte_carlo.n_samples;
        let cases: [(Surface, CurvePath); 2] = [
            (Surface::Sphere, CurvePath::latitude_arc(FRAC_PI_3, BROWNIAN_ARC)),
            (Surface::Torus, CurvePath::line(Point::new(0.5, 1.0), Tangent::new(1.0, 0.5), (0.0, BROWNIAN_ARC))),
        ];
        let mut out = Vec::new();
        for (surface, curve) in cases {
            let m = self.manifold(surface);
            let v0 = Tangent::new(1.0, 0.5);
            let seed = self.stream("transport.brownian");
            let mut params = BrownianParams::new(BROWNIAN_ARC, n, seed);
            params.h = VERIFY_H;
            let b = brownian_transport(m, &curve, &v0, &params)?;
            let std = transport(m, &curve, &TransportKind::Standard, &v0, VERIFY_H)?.end().frame;
            let s = b.summary();
            let z = (0..2).map(|i| z_score(s.mean[i], std[i], s.stderr[i])).fold(0.0_f64, f64::max);
            let p = curve.position(0.0);
            out.push((
                "transport.brownian-mean",
                IdentityReport::with_residual("transport.brownian-mean", s.mean.to_vec(), v2(&std), z, tol::MONTE_CARLO_SE)
                    .at([p[0], p[1]])
                    .seeded(Some(seed)),
            ));
            // log ‖X(T)‖ is Gaussian with variance T; the sample variance has
            // standard error T √(2/(n−1)).
            let se = BROWNIAN_ARC * (2.0 / (n as f64 - 1.0)).sqrt();
            out.push((
                "transport.brownian-log-variance",
                IdentityReport::with_residual(
                    "transport.brownian-log-variance",
                    vec![b.log_norm_variance],
                    vec![BROWNIAN_ARC],
                    (b.log_norm_variance - BROWNIAN_ARC).abs() / se,
                    tol::MONTE_CARLO_SE,
                )
                .at([p[0], p[1]])
                .seeded(Some(seed)),
            ));
        }
        Ok(out)
    }

    fn ode_order(&self) -> CliResult<Reports> {
        let m = &self.sphere;
        let order = |e1: f64, e2: f64| (e1 / e2).log2();
        let p0 = Point::new(1.1, 0.2);
        let v0 = Tangent::new(0.6, 0.9);
        let end = |h: f64| -> CliResult<Point> { Ok(expected_geodesic(m, &self.sphere_spec, &p0, &v0, 2.0, h)?.end().0) };
        let reference = end(1e-3)?;
        let (e1, e2) = ((end(0.1)? - reference).norm(), (end(0.05)? - reference).norm());
        let q_geo = order(e1, e2);

        let curve = CurvePath::analytic(
            |t| Point::new(1.2 + 0.3 * t.sin(), t),
            |t| Tangent::new(0.3 * t.cos(), 1.0),
            (0.0, 2.0),
        );
        let kind = TransportKind::Expected(self.sphere_spec.clone());
        let x = Tangent::new(0.4, 1.0);
        let end_t = |h: f64| -> CliResult<Tangent> { Ok(transport_between(m, &curve, &kind, &x, 0.0, 2.0, h)?) };
        let reference = end_t(1e-3)?;
        let (t1, t2) = ((end_t(0.1)? - reference).norm(), (end_t(0.05)? - reference).norm());
        let q_tr = order(t1, t2);
        Ok(vec![
            (
                "transport.ode-order-geodesic",
                IdentityReport::with_residual("transport.ode-order-geodesic", vec![q_geo], vec![4.0], (q_geo - 4.0).abs(), tol::ODE_ORDER)
                    .at([p0[0], p0[1]]),
            ),
            (
                "transport.ode-order-transport",
                IdentityReport::with_residual("transport.ode-order-transport", vec![q_tr], vec![4.0], (q_tr - 4.0).abs(), tol::ODE_ORDER)
                    .at([1.2, 0.0]),
            ),
        ])
    }

    fn recovery(&self) -> CliResult<(Reports, u64)> {
        let id = "transport.recovery-limit";
        let (r, resamples) = self.realization(&self.sphere_spec, id, 0)?;
        let curve = CurvePath::latitude(1.0);
        let mut rng = self.rng(id, 0);
        let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
        let dts = [0.08, 0.04, 0.02, 0.01];
        let kinds = [
            TransportKind::Standard,
            TransportKind::Expected(self.sphere_spec.clone()),
            TransportKind::Realized(r),
        ];
        let mut out = Vec::new();
        for kind in &kinds {
            let rep = recovery_limit_check(&self.sphere, kind, &curve, &x, 0.7, &dts)?;
            out.push((id, rep.report));
        }
        Ok((out, resamples))
    }

    fn curvature(&self) -> CliResult<(Reports, u64)> {
        let id = "curvature";
        self.sampled(self.samples, |k| {
            let surface = if k % 2 == 0 { Surface::Sphere } else { Surface::HalfPlane };
            let (m, spec) = (self.manifold(surface), self.spec(surface));
            let (r, resamples) = self.realization(spec, id, k)?;
            let mut rng = self.rng(id, k);
            let p = self.point(surface, &mut rng);
            let pt = [p[0], p[1]];
            let rep = curvature_report(m, &r, &p)?;
            let c = curvature_at(m, &p)?;
            let e = rep.eps;
            let seed = r.seed();
            let mut out: Reports = vec![
                (
                    "curvature.scaling",
                    IdentityReport::check("curvature.scaling", flatten(&rep.direct), flatten(&rep.scaled), tol::CURVATURE_DIRECT)
                        .at(pt)
                        .seeded(seed),
                ),
                (
                    "curvature.four-tensor-scaling",
                    IdentityReport::check(
                        "curvature.four-tensor-scaling",
                        flatten(&rep.lowered),
                        flatten(&scale(&c.lowered(), e.powi(4))),
                        tol::CURVATURE_ALGEBRAIC,
                    )
                    .at(pt)
                    .seeded(seed),
                ),
                (
                    "curvature.symmetries",
                    IdentityReport::with_residual(
                        "curvature.symmetries",
                        vec![rep.symmetry.max()],
                        vec![0.0],
                        rep.symmetry.max(),
                        tol::CURVATURE_ALGEBRAIC,
                    )
                    .at(pt)
                    .seeded(seed),
                ),
            ];
            let ric = c.ricci() * e.powi(3);
            out.push((
                "curvature.ricci-scaling",
                relative(
                    "curvature.ricci-scaling",
                    rep.ricci_stochastic.as_slice().to_vec(),
                    ric.as_slice().to_vec(),
                    tol::CURVATURE_ALGEBRAIC,
                )
                .at(pt)
                .seeded(seed),
            ));
            out.push((
                "curvature.scalar-scaling",
                relative(
                    "curvature.scalar-scaling",
                    vec![rep.scalar_stochastic],
                    vec![c.scalar() * e.powi(3)],
                    tol::CURVATURE_ALGEBRAIC,
                )
                .at(pt)
                .seeded(seed),
            ));

            let g = m.metric(&p);
            let (u, v) = loop {
                let u = Tangent::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let v = Tangent::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let gram = inner(&g, &u, &u) * inner(&g, &v, &v) - inner(&g, &u, &v).powi(2);
                if gram > 1e-2 * g.determinant() {
                    break (u, v);
                }
            };
            let (kt, kc) = stochastic_sectional(m, &r, &p, &u, &v)?;
            let kc = m.constant_curvature().unwrap_or(kc);
            out.push((
                "curvature.sectional-invariance",
                IdentityReport::check("curvature.sectional-invariance", vec![kt], vec![kc], tol::SECTIONAL).at(pt).seeded(seed),
            ));

            if k % 10 == 0 {
                let h = (k / 10) % 2;
                let d = covariant_derivative_rtilde(m, &r, &p, h)?;
                out.push((
                    "curvature.covariant-derivative",
                    IdentityReport::check(
                        "curvature.covariant-derivative",
                        flatten(&d.direct),
                        flatten(&d.formula),
                        tol::COVARIANT_DERIVATIVE,
                    )
                    .at(pt)
                    .seeded(seed),
                ));
                let fields: Vec<VectorFieldExpr> = (0..4).map(|_| VectorFieldExpr::random_trig(&mut rng, 1.0)).collect();
                let b = bianchi2_residual(m, &r, &p, &fields[0], &fields[1], &fields[2], &fields[3])?;
                out.push(("curvature.bianchi2", b));
            }
            Ok((out, resamples))
        })
    }

    fn laplace(&self) -> CliResult<(Reports, u64)> {
        let id = "laplace";
        self.sampled(self.samples, |k| {
            let surface = [Surface::Sphere, Surface::HalfPlane, Surface::Torus][k % 3];
            let (m, spec) = (self.manifold(surface), self.spec(surface));
            let (r, resamples) = self.realization(spec, id, k)?;
            let mut rng = self.rng(id, k);
            let p = self.point(surface, &mut rng);
            let pt = [p[0], p[1]];
            let f = ScalarFieldExpr::from(TrigPolynomial::random(&mut rng, 1.0));
            let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let xp = x.value(&p);
            let eps = r.eps(&p)?;
            let seed = r.seed();
            let lhs = inner(&m.metric(&p), &xp, &stochastic_gradient(m, &r, &f, &p)?);
            let rhs = eps * f.gradient(&p).dot(&xp);
            let div = [Method::Formula, Method::Direct].map(|method| stochastic_divergence(m, &r, &x, &p, method));
            let lap = [Method::Formula, Method::Direct].map(|method| stochastic_laplacian(m, &r, &f, &p, method));
            Ok((
                vec![
                    ("laplace.gradient", relative("laplace.gradient", vec![lhs], vec![rhs], tol::LAPLACE).at(pt).seeded(seed)),
                    (
                        "laplace.divergence",
                        relative("laplace.divergence", vec![div[0].clone()?], vec![div[1].clone()?], tol::LAPLACE)
                            .at(pt)
                            .seeded(seed),
                    ),
                    (
                        "laplace.laplacian",
                        relative("laplace.laplacian", vec![lap[0].clone()?], vec![lap[1].clone()?], tol::LAPLACE)
                            .at(pt)
                            .seeded(seed),
                    ),
                ],
                resamples,
            ))
        })
    }

    fn divergence_theorem(&self) -> CliResult<(Reports, u64)> {
        let cases: [(&'static str, Surface, [f64; 2]); 2] = [
            ("laplace.divergence-theorem-sphere", Surface::Sphere, [0.3, FRAC_PI_2]),
            ("laplace.divergence-theorem-torus", Surface::Torus, [1.0, 2.5]),
        ];
        let per_case = 3;
        self.sampled(cases.len() * per_case, |j| {
            let (id, surface, band) = cases[j / per_case];
            let k = j % per_case;
            let m = self.manifold(surface);
            let (r, resamples) = self.realization(self.spec(surface), id, k)?;
            let mut rng = self.rng(id, k);
            let x = VectorFieldExpr::random_trig(&mut rng, 1.0);
            let patch = BoundaryPatch::band(m, band[0], band[1])?;
            let c = divergence_theorem_check(m, &r, &x, &patch, DIVERGENCE_GRID, DIVERGENCE_BOUNDARY_NODES)?;
            let rep = IdentityReport::with_residual(id, vec![c.lhs], vec![c.rhs], c.residual, tol::DIVERGENCE_THEOREM)
                .at([band[0], band[1]])
                .seeded(r.seed());
            Ok((vec![(id, rep)], resamples))
        })
    }

    fn gauss_bonnet(&self) -> CliResult<Reports> {
        let q = &self.config.quadrature;
        let grid = [q.n_theta, q.n_phi];
        let fs = &self.config.field_spec;
        let noiseless = Arc::new(
            FieldSpec::new(BasisKind::SphereHarmonics { radius: self.radius() }, fs.n, fs.alpha_exp, 0.0)
                .map_err(|e| CliError::config("field_spec", e.to_string()))?,
        );
        let classical = gauss_bonnet_deviation(&self.sphere, &noiseless, grid, None)?;
        let seed = self.stream("gauss-bonnet.monte-carlo");
        let mc_n = self.config.monte_carlo.n_realizations;
        let g = gauss_bonnet_deviation(&self.sphere, &self.sphere_spec, grid, Some((mc_n, seed)))?;
        let closed = g.deviation_closed_form.unwrap_or(f64::NAN);
        let mc = g.monte_carlo.expect("monte carlo requested");
        let torus = gauss_bonnet_deviation(&FlatTorus, &self.torus_spec, [q.n_theta, q.n_theta], None)?;
        Ok(vec![
            (
                "gauss-bonnet.classical",
                IdentityReport::check(
                    "gauss-bonnet.classical",
                    vec![classical.integral_omega],
                    vec![f64::from(classical.chi)],
                    tol::GAUSS_BONNET_CLASSICAL,
                ),
            ),
            (
                "gauss-bonnet.deviation",
                IdentityReport::with_residual(
                    "gauss-bonnet.deviation",
                    vec![g.deviation],
                    vec![closed],
                    (g.deviation - closed).abs(),
                    g.refinement_delta.max(1e-10),
                ),
            ),
            (
                "gauss-bonnet.monte-carlo",
                IdentityReport::with_residual(
                    "gauss-bonnet.monte-carlo",
                    vec![mc.mean],
                    vec![closed],
                    (mc.mean - closed).abs(),
                    (tol::MONTE_CARLO_SE * mc.stderr).max(1e-12),
                )
                .seeded(Some(seed)),
            ),
            (
                "gauss-bonnet.flat-torus",
                IdentityReport::check(
                    "gauss-bonnet.flat-torus",
                    vec![torus.deviation, torus.integral_omega],
                    vec![0.0, 0.0],
                    tol::FLAT_TORUS,
                ),
            ),
        ])
    }
}

/// Runs the whole suite at the configured sample counts.
pub fn run_verify(config: &ExperimentConfig) -> CliResult<VerificationSuiteReport> {
    let suite = Suite::new(config)?;
    let mut all: Reports = Vec::new();
    let mut resamples = 0;
    let mut add = |(r, k): (Reports, u64)| {
        all.extend(r);
        resamples += k;
    };
    add((suite.moments()?, 0));
    add((suite.alpha_beta()?, 0));
    add(suite.connection()?);
    add(suite.transport_scaling()?);
    add((suite.holonomy()?, 0));
    add(suite.geodesics()?);
    add((suite.brownian()?, 0));
    add((suite.ode_order()?, 0));
    add(suite.recovery()?);
    add(suite.curvature()?);
    add(suite.laplace()?);
    add(suite.divergence_theorem()?);
    add((suite.gauss_bonnet()?, 0));

    let mut by_id: BTreeMap<&str, Vec<IdentityReport>> = BTreeMap::new();
    for (id, r) in all {
        by_id.entry(id).or_default().push(relabel(r, id));
    }
    let mut groups: Vec<GroupReport> = Vec::new();
    for e in MANIFEST {
        let check = summarize(e, by_id.remove(e.id).unwrap_or_default());
        match groups.last_mut() {
            Some(g) if g.name == e.group => g.checks.push(check),
            _ => groups.push(GroupReport { name: e.group.to_string(), checks: vec![check] }),
        }
    }
    debug_assert!(by_id.is_empty(), "checks outside the manifest: {:?}", by_id.keys().collect::<Vec<_>>());

    let checks: Vec<&CheckResult> = groups.iter().flat_map(|g| &g.checks).collect();
    let summary = SuiteSummary {
        checks: checks.len(),
        asserting: checks.iter().filter(|c| c.asserting).count(),
        passed: checks.iter().filter(|c| c.pass == Some(true)).count(),
        failed: checks.iter().filter(|c| c.pass == Some(false)).count(),
        report_only: checks.iter().filter(|c| !c.asserting).count(),
        evaluations: checks.iter().map(|c| c.samples).sum(),
    };
    let fs = &config.field_spec;
    let metadata = SuiteMetadata {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: config.monte_carlo.master_seed,
        samples: config.verify.samples,
        monte_carlo_samples: config.monte_carlo.n_samples,
        gauss_bonnet_realizations: config.monte_carlo.n_realizations,
        quadrature: [config.quadrature.n_theta, config.quadrature.n_phi],
        field: FieldMetadata { n: fs.n, alpha_exp: fs.alpha_exp, c: fs.c, sphere_radius: suite.radius() },
        verify_h: VERIFY_H,
        holonomy_h: HOLONOMY_H,
        resamples,
    };
    Ok(VerificationSuiteReport { metadata, summary, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn quick_config(c: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.field_spec.c = c;
        cfg.field_spec.n = 16;
        cfg.verify.samples = 6;
        cfg.monte_carlo.n_samples = 400;
        cfg.monte_carlo.n_realizations = 8;
        cfg.quadrature.n_theta = 32;
        cfg.quadrature.n_phi = 64;
        cfg
    }

    #[test]
    fn manifest_ids_are_unique_and_grouped_contiguously() {
        let ids: HashSet<&str> = MANIFEST.iter().map(|e| e.id).collect();
        assert_eq!(ids.len(), MANIFEST.len());
        let mut seen = Vec::new();
        for e in MANIFEST {
            if seen.last() != Some(&e.group) {
                assert!(!seen.contains(&e.group), "group {} split", e.group);
                seen.push(e.group);
            }
        }
        let report_only: Vec<&str> = MANIFEST.iter().filter(|e| !e.asserting).map(|e| e.id).collect();
        assert_eq!(report_only, ["connection.christoffel-metric-identity", "curvature.bianchi2"]);
    }

    #[test]
    fn report_lists_every_manifest_identity_exactly_once() {
        let report = run_verify(&quick_config(0.1)).unwrap();
        let listed: Vec<&str> = report.groups.iter().flat_map(|g| &g.checks).map(|c| c.id.as_str()).collect();
        let manifest: Vec<&str> = MANIFEST.iter().map(|e| e.id).collect();
        assert_eq!(listed, manifest);
        for c in report.groups.iter().flat_map(|g| &g.checks) {
            assert!(c.samples > 0, "{} was not evaluated", c.id);
            assert!(c.reports.iter().all(|r| r.identity_id == c.id));
            assert_eq!(c.pass.is_none(), !c.asserting);
            assert!(c.reports.iter().all(|r| r.is_asserting() == c.asserting), "{}", c.id);
        }
        assert_eq!(report.summary.report_only, 2);
        assert_eq!(report.summary.failed, 0, "{}", report.to_text());
    }

    #[test]
    fn noiseless_suite_passes() {
        let report = run_verify(&quick_config(0.0)).unwrap();
        assert_eq!(report.failed(), 0, "{}", report.to_text());
        assert_eq!(report.metadata.resamples, 0);
    }

    #[test]
    fn text_report_has_a_line_per_check() {
        let report = run_verify(&quick_config(0.1)).unwrap();
        let text = report.to_text();
        for e in MANIFEST {
            assert_eq!(text.lines().filter(|l| l.split_whitespace().nth(1) == Some(e.id)).count(), 1, "{}", e.id);
        }
    }
}
