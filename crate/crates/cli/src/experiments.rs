//! One function per subcommand. Each writes its artifacts through an
//! [`OutputSink`] and returns the lines to print on the terminal.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::sync::Arc;

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use torsionfield_core::geom::{
    geodesic_standard, inner, CurvePath, Manifold, Point, ScalarFieldExpr, Tangent, Termination,
    TrigPolynomial, VectorFieldExpr,
};
use torsionfield_core::random_field::{FieldRealization, FieldSpec, FieldSpecSummary, RealizationRecord};
use torsionfield_core::seed::mix_seed;
use torsionfield_core::stoch_connection::Method;
use torsionfield_core::stoch_curvature::{
    covariant_derivative_rtilde, curvature_form, curvature_report, gauss_bonnet_deviation, CurvatureReport, MonteCarloEstimate,
};
use torsionfield_core::stoch_laplace::{
    divergence, divergence_theorem_check, gradient, laplacian, stochastic_divergence, stochastic_gradient, stochastic_laplacian,
    BoundaryPatch, DivergenceCheck,
};
use torsionfield_core::transport::{
    brownian_transport, expected_geodesic, expected_magnitude_factor, holonomy, max_relative_residual, realized_geodesic,
    realized_geodesic_residuals, transport, wrap_angle, BrownianParams, MonteCarloSummary, TransportKind, TransportSolution,
    CLOSURE_TOL,
};

use crate::config::{DegeneratePolicy, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::OutputSink;

/// Replacement draws tried under `resample-and-report` before giving up.
pub const MAX_RESAMPLES: u64 = 1000;
/// Seed stream for the random test functions of `laplacian` and
/// `divergence-theorem`.
pub const TEST_FIELD_STREAM: u64 = 0x7E57_F1E1D;
/// Residual bound for the divergence-theorem subcommand.
pub const DIVERGENCE_TOL: f64 = 1e-5;

/// Standard-error floor below which a Monte Carlo spread is rounding noise.
pub const STDERR_FLOOR: f64 = 1e-12;

/// `|mean − target| / stderr`, with the standard error floored so that
/// components that are zero on every path do not divide rounding noise.
pub fn z_score(mean: f64, target: f64, stderr: f64) -> f64 {
    (mean - target).abs() / stderr.max(STDERR_FLOOR * (1.0 + target.abs()))
}

/// Resolved config with the objects it names.
pub struct Context {
    pub config: ExperimentConfig,
    pub manifold: Arc<dyn Manifold>,
    pub spec: Arc<FieldSpec>,
}

impl Context {
    pub fn new(config: ExperimentConfig) -> CliResult<Self> {
        let manifold = config.manifold()?;
        let spec = config.field_spec()?;
        Ok(Self { config, manifold, spec })
    }

    fn master_seed(&self) -> u64 {
        self.config.monte_carlo.master_seed
    }

    fn draw(&self) -> CliResult<Draw> {
        draw_realization(&self.spec, self.master_seed(), self.config.monte_carlo.degenerate_policy)
    }
}

/// What a subcommand prints and whether it found a failing check.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct Draw {
    pub realization: FieldRealization,
    pub seed: u64,
    /// Degenerate draws discarded before this one.
    pub resamples: u64,
}

/// Realization seeded `seed`. A degenerate draw is an error under `abort`;
/// under `resample-and-report` it is replaced by the draw seeded
/// `mix_seed(seed, j)` for `j = 1, 2, …` and the count is reported.
pub fn draw_realization(spec: &Arc<FieldSpec>, seed: u64, policy: DegeneratePolicy) -> CliResult<Draw> {
    let first = FieldRealization::sample(spec, seed);
    if !first.is_degenerate() {
        return Ok(Draw { realization: first, seed, resamples: 0 });
    }
    if policy == DegeneratePolicy::Abort {
        return Err(CliError::Degenerate(Box::new(first.record())));
    }
    let mut last = first;
    for j in 1..=MAX_RESAMPLES {
        let s = mix_seed(seed, j);
        let r = FieldRealization::sample(spec, s);
        if !r.is_degenerate() {
            return Ok(Draw { realization: r, seed: s, resamples: j });
        }
        last = r;
    }
    Err(CliError::Degenerate(Box::new(last.record())))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RealizationInfo {
    pub seed: u64,
    pub resamples: u64,
    pub min_eps: f64,
}

impl From<&Draw> for RealizationInfo {
    fn from(d: &Draw) -> Self {
        Self { seed: d.seed, resamples: d.resamples, min_eps: d.realization.min_eps() }
    }
}

/// Parses a number or a multiple of π: `1.0472`, `pi`, `pi/3`, `2*pi/3`, `-pi/4`.
pub fn parse_angle(raw: &str) -> Option<f64> {
    let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok()?),
        None => (s.as_str(), 1.0),
    };
    let coef = match num.strip_suffix("pi")?.trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let v = coef * PI / den;
    v.is_finite().then_some(v)
}

/// `"a,b"` with each entry a number or a multiple of π.
pub fn parse_pair(flag: &str, raw: &str) -> CliResult<[f64; 2]> {
    let parts: Vec<&str> = raw.split(',').collect();
    let bad = || CliError::Usage(format!("--{flag} expects two comma-separated numbers, got {raw:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    Ok([parse_angle(parts[0]).ok_or_else(bad)?, parse_angle(parts[1]).ok_or_else(bad)?])
}

fn parse_quad(flag: &str, raw: &str) -> CliResult<[f64; 4]> {
    let bad = || CliError::Usage(format!("--{flag} expects four comma-separated numbers, got {raw:?}"));
    let v: Vec<f64> = raw.split(',').map(parse_angle).collect::<Option<_>>().ok_or_else(bad)?;
    v.try_into().map_err(|_| bad())
}

fn pair_or(flag: &str, raw: Option<&str>, default: [f64; 2]) -> CliResult<[f64; 2]> {
    raw.map_or(Ok(default), |s| parse_pair(flag, s))
}

fn rows(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn arr(v: &Tangent) -> [f64; 2] {
    [v[0], v[1]]
}

fn default_point(m: &dyn Manifold) -> [f64; 2] {
    match m.name() {
        "sphere" => [FRAC_PI_3, 0.7],
        "half-plane" => [0.3, 1.2],
        _ => [1.0, 2.0],
    }
}

#[derive(Serialize)]
struct FieldOutput {
    spec: FieldSpecSummary,
    total_variance: f64,
    seed: u64,
    resamples: u64,
    realization: RealizationRecord,
}

pub fn sample_field(ctx: &Context, sink: &mut OutputSink) -> CliResult<Outcome> {
    let d = ctx.draw()?;
    let r = &d.realization;
    let out = FieldOutput {
        spec: ctx.spec.summary(),
        total_variance: ctx.spec.total_variance(),
        seed: d.seed,
        resamples: d.resamples,
        realization: r.record(),
    };
    sink.write_json("field.json", d.seed, &out)?;
    let grid = ctx.spec.basis().domain().grid(ctx.config.quadrature.n_theta);
    let table: Vec<Vec<f64>> =
        grid.iter().map(|p| vec![p[0], p[1], r.eps_unchecked(p), ctx.spec.variance(p)]).collect();
    sink.write_csv("field-grid.csv", d.seed, &["x0", "x1", "eps", "variance"], &table)?;
    Ok(Outcome {
        lines: vec![format!(
            "sample-field: seed {} ({} resamples), min eps {:.6}",
            d.seed,
            d.resamples,
            r.min_eps()
        )],
        failed: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicKind {
    Expected,
    Realized,
    Standard,
}

#[derive(Serialize)]
struct GeodesicOutput {
    kind: GeodesicKind,
    manifold: String,
    p0: [f64; 2],
    v0: [f64; 2],
    h: f64,
    duration: f64,
    samples: usize,
    end_position: [f64; 2],
    end_velocity: [f64; 2],
    termination: Termination,
    realization: Option<RealizationInfo>,
    /// Largest relative residual of `ε² x″ + Γ̃(x′, x′) = 0` (realized only).
    undivided_residual: Option<f64>,
}

fn default_geodesic_start(m: &dyn Manifold) -> ([f64; 2], [f64; 2]) {
    match m.name() {
        "sphere" => ([FRAC_PI_2, 0.0], [0.3, 1.0]),
        "half-plane" => ([0.0, 1.0], [1.0, 0.5]),
        _ => ([0.5, 0.5], [1.0, 0.5]),
    }
}

pub fn geodesic(ctx: &Context, sink: &mut OutputSink, kind: GeodesicKind, p0: Option<&str>, v0: Option<&str>) -> CliResult<Outcome> {
    let m = ctx.manifold.as_ref();
    let (dp, dv) = default_geodesic_start(m);
    let p0 = pair_or("p0", p0, dp)?;
    let v0 = pair_or("v0", v0, dv)?;
    let (p, v) = (Point::new(p0[0], p0[1]), Tangent::new(v0[0], v0[1]));
    let (h, duration) = (ctx.config.integrator.h, ctx.config.integrator.t);
    let mut draw = None;
    let curve = match kind {
        GeodesicKind::Standard => geodesic_standard(m, &p, &v, duration, h)?,
        GeodesicKind::Expected => expected_geodesic(m, &ctx.spec, &p, &v, duration, h)?,
        GeodesicKind::Realized => {
            let d = ctx.draw()?;
            let c = realized_geodesic(m, &d.realization, &p, &v, duration, h)?;
            draw = Some(d);
            c
        }
    };
    let undivided_residual = match &draw {
        Some(d) if curve.samples().len() >= 5 => {
            Some(max_relative_residual(&realized_geodesic_residuals(m, &d.realization, &curve)?))
        }
        _ => None,
    };
    let seed = draw.as_ref().map_or(ctx.master_seed(), |d| d.seed);
    let (end_p, end_v) = curve.end();
    let name = match kind {
        GeodesicKind::Expected => "expected",
        GeodesicKind::Realized => "realized",
        GeodesicKind::Standard => "standard",
    };
    let out = GeodesicOutput {
        kind,
        manifold: m.name().to_string(),
        p0,
        v0,
        h,
        duration,
        samples: curve.samples().len(),
        end_position: arr(&end_p),
        end_velocity: arr(&end_v),
        termination: curve.termination(),
        realization: draw.as_ref().map(RealizationInfo::from),
        undivided_residual,
    };
    sink.write_json(&format!("geodesic-{name}.json"), seed, &out)?;
    let mut header = vec!["t", "x0", "x1", "v0", "v1", "speed"];
    if draw.is_some() {
        header.push("eps");
    }
    let table: Vec<Vec<f64>> = curve
        .samples()
        .iter()
        .map(|s| {
            let mut row = vec![
                s.t,
                s.position[0],
                s.position[1],
                s.velocity[0],
                s.velocity[1],
                inner(&m.metric(&s.position), &s.velocity, &s.velocity).sqrt(),
            ];
            if let Some(d) = &draw {
                row.push(d.realization.eps_unchecked(&s.position));
            }
            row
        })
        .collect();
    sink.write_csv(&format!("geodesic-{name}.csv"), seed, &header, &table)?;
    let mut line = format!(
        "geodesic {name}: {} samples, end ({:.6}, {:.6}), termination {:?}",
        out.samples, end_p[0], end_p[1], out.termination
    );
    if let Some(r) = undivided_residual {
        line.push_str(&format!(", undivided residual {r:.3e}"));
    }
    Ok(Outcome { lines: vec![line], failed: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TransportChoice {
    Standard,
    Expected,
    Realized,
    Brownian,
}

impl TransportChoice {
    fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Expected => "expected",
            Self::Realized => "realized",
            Self::Brownian => "brownian",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveInfo {
    /// `θ = θ₀`, `φ = t` for `t ∈ [0, 2π]`.
    Latitude { theta0: f64 },
    Line { p0: [f64; 2], direction: [f64; 2], t_span: [f64; 2] },
}

#[derive(Debug, Default, Clone)]
pub struct CurveArgs {
    pub latitude: Option<String>,
    pub line: Option<String>,
    pub v0: Option<String>,
}

fn build_curve(ctx: &Context, args: &CurveArgs) -> CliResult<(CurvePath, CurveInfo)> {
    let m = ctx.manifold.as_ref();
    let duration = ctx.config.integrator.t;
    let line = |q: [f64; 4]| {
        let curve = CurvePath::line(Point::new(q[0], q[1]), Tangent::new(q[2], q[3]), (0.0, duration));
        (curve, CurveInfo::Line { p0: [q[0], q[1]], direction: [q[2], q[3]], t_span: [0.0, duration] })
    };
    match (&args.latitude, &args.line) {
        (Some(_), Some(_)) => Err(CliError::Usage("--latitude and --line are mutually exclusive".into())),
        (Some(raw), None) => {
            if m.name() != "sphere" {
                return Err(CliError::Usage(format!("--latitude needs the sphere, not {}", m.name())));
            }
            let theta0 = parse_angle(raw)
                .filter(|t| *t > 0.0 && *t < PI)
                .ok_or_else(|| CliError::Usage(format!("--latitude expects an angle in (0, π), got {raw:?}")))?;
            Ok((CurvePath::latitude(theta0), CurveInfo::Latitude { theta0 }))
        }
        (None, Some(raw)) => Ok(line(parse_quad("line", raw)?)),
        (None, None) => Ok(match m.name() {
            "sphere" => (CurvePath::latitude(FRAC_PI_3), CurveInfo::Latitude { theta0: FRAC_PI_3 }),
            "half-plane" => line([0.0, 1.0, 1.0, 0.0]),
            _ => line([0.5, 0.5, 1.0, 0.0]),
        }),
    }
}

#[derive(Serialize)]
struct HolonomyOutput {
    /// Rotation angle in `(−π, π]`, measured in the orthonormal frame at the base point.
    angle: f64,
    log_scale: f64,
    map: [[f64; 2]; 2],
    /// `2π(1 − cos θ₀)` wrapped into `(−π, π]`, for latitude circles.
    closed_form_angle: Option<f64>,
    angle_error: Option<f64>,
}

#[derive(Serialize)]
struct TransportOutput {
    kind: TransportChoice,
    manifold: String,
    curve: CurveInfo,
    v0: [f64; 2],
    h: f64,
    samples: usize,
    end_t: f64,
    end_frame: [f64; 2],
    termination: Termination,
    fundamental: Option<[[f64; 2]; 2]>,
    holonomy: Option<HolonomyOutput>,
    realization: Option<RealizationInfo>,
    /// `max |X_realized − (ε(start)/ε) X_standard|` over the samples.
    scaling_residual: Option<f64>,
    /// `exp(−∫ β/α)` over the whole curve.
    magnitude_factor: Option<f64>,
    /// `|X_expected − factor · X_standard|` at the end.
    magnitude_residual: Option<f64>,
}

#[derive(Serialize)]
struct BrownianOutput {
    kind: TransportChoice,
    manifold: String,
    curve: CurveInfo,
    v0: [f64; 2],
    h: f64,
    n_paths: usize,
    summary: MonteCarloSummary,
    standard_end: [f64; 2],
    /// `|mean − standard| / stderr` per component at the end.
    z_scores: [f64; 2],
    within_three_stderr: bool,
    log_norm_variance: f64,
    /// `Var log ‖X(T)‖ = T − t₀` for the exact process.
    log_norm_variance_expected: f64,
}

fn transport_rows(sol: &TransportSolution) -> Vec<Vec<f64>> {
    sol.samples
        .iter()
        .map(|s| {
            let mut row = vec![s.t, s.position[0], s.position[1], s.frame[0], s.frame[1]];
            if let Some(e) = s.eps {
                row.push(e);
            }
            row
        })
        .collect()
}

pub fn transport_cmd(ctx: &Context, sink: &mut OutputSink, kind: TransportChoice, args: &CurveArgs) -> CliResult<Outcome> {
    let m = ctx.manifold.as_ref();
    let (curve, info) = build_curve(ctx, args)?;
    let v0 = pair_or("v0", args.v0.as_deref(), [1.0, 0.0])?;
    let v = Tangent::new(v0[0], v0[1]);
    let h = ctx.config.integrator.h;
    let name = kind.name();
    let (t0, t1) = curve.t_span();

    if kind == TransportChoice::Brownian {
        let mut params = BrownianParams::new(t1 - t0, ctx.config.monte_carlo.n_samples, ctx.master_seed());
        params.h = h;
        let b = brownian_transport(m, &curve, &v, &params)?;
        let standard = transport(m, &curve, &TransportKind::Standard, &v, h)?;
        let s = b.summary();
        let std_end = standard.end().frame;
        let z = [0, 1].map(|i| z_score(s.mean[i], std_end[i], s.stderr[i]));
        let out = BrownianOutput {
            kind,
            manifold: m.name().to_string(),
            curve: info,
            v0,
            h: params.h,
            n_paths: params.n_paths,
            summary: s,
            standard_end: arr(&std_end),
            z_scores: z,
            within_three_stderr: z.iter().all(|z| *z <= 3.0),
            log_norm_variance: b.log_norm_variance,
            log_norm_variance_expected: t1 - t0,
        };
        sink.write_json("transport-brownian.json", ctx.master_seed(), &out)?;
        // Standard transport at the recorded times, matched by parameter value.
        let table: Vec<Vec<f64>> = b
            .mean
            .samples
            .iter()
            .zip(&b.stderr)
            .map(|(smp, se)| {
                let k = standard.samples.partition_point(|x| x.t < smp.t - 0.5 * standard.h).min(standard.samples.len() - 1);
                let st = standard.samples[k].frame;
                vec![smp.t, smp.position[0], smp.position[1], smp.frame[0], smp.frame[1], se[0], se[1], st[0], st[1]]
            })
            .collect();
        sink.write_csv(
            "transport-brownian.csv",
            ctx.master_seed(),
            &["t", "x0", "x1", "mean0", "mean1", "stderr0", "stderr1", "standard0", "standard1"],
            &table,
        )?;
        return Ok(Outcome {
            lines: vec![format!(
                "transport brownian: {} paths, mean ({:.6}, {:.6}) ± ({:.2e}, {:.2e}), standard ({:.6}, {:.6}), z = ({:.2}, {:.2})",
                s.n_paths, s.mean[0], s.mean[1], s.stderr[0], s.stderr[1], std_end[0], std_end[1], z[0], z[1]
            )],
            failed: 0,
        });
    }

    let mut draw = None;
    let tk = match kind {
        TransportChoice::Standard => TransportKind::Standard,
        TransportChoice::Expected => TransportKind::Expected(ctx.spec.clone()),
        _ => {
            let d = ctx.draw()?;
            let k = TransportKind::Realized(d.realization.clone());
            draw = Some(d);
            k
        }
    };
    let sol = transport(m, &curve, &tk, &v, h)?;
    let closed = m.domain().gap(&curve.position(t0), &curve.position(t1)) <= CLOSURE_TOL;
    let hol = if closed && !sol.is_truncated() {
        let hol = holonomy(m, &curve, &tk, h)?;
        let closed_form_angle = match info {
            CurveInfo::Latitude { theta0 } => Some(wrap_angle(TAU * (1.0 - theta0.cos()))),
            CurveInfo::Line { .. } => None,
        };
        Some(HolonomyOutput {
            angle: hol.angle,
            log_scale: hol.log_scale,
            map: rows(&hol.map),
            closed_form_angle,
            angle_error: closed_form_angle.map(|c| torsionfield_core::transport::angle_difference(hol.angle, c).abs()),
        })
    } else {
        None
    };

    let mut scaling_residual = None;
    let mut magnitude_factor = None;
    let mut magnitude_residual = None;
    match kind {
        TransportChoice::Realized => {
            let d = draw.as_ref().expect("realized transport draws a realization");
            let standard = transport(m, &curve, &TransportKind::Standard, &v, h)?;
            let e0 = d.realization.eps(&curve.position(t0))?;
            scaling_residual = Some(sol.samples.iter().zip(&standard.samples).fold(0.0_f64, |w, (a, b)| {
                let e = a.eps.unwrap_or(f64::NAN);
                w.max((a.frame - b.frame * (e0 / e)).amax())
            }));
        }
        TransportChoice::Expected => {
            let standard = transport(m, &curve, &TransportKind::Standard, &v, h)?;
            let end = sol.end();
            let n = ((end.t - t0) / h).ceil().max(2.0) as usize;
            let f = expected_magnitude_factor(&ctx.spec, &curve, t0, end.t, n)?;
            magnitude_factor = Some(f);
            magnitude_residual = Some((end.frame - standard.end().frame * f).amax());
        }
        _ => {}
    }

    let seed = draw.as_ref().map_or(ctx.master_seed(), |d| d.seed);
    let end = *sol.end();
    let out = TransportOutput {
        kind,
        manifold: m.name().to_string(),
        curve: info,
        v0,
        h,
        samples: sol.samples.len(),
        end_t: end.t,
        end_frame: arr(&end.frame),
        termination: sol.termination,
        fundamental: sol.fundamental.as_ref().map(rows),
        holonomy: hol,
        realization: draw.as_ref().map(RealizationInfo::from),
        scaling_residual,
        magnitude_factor,
        magnitude_residual,
    };
    sink.write_json(&format!("transport-{name}.json"), seed, &out)?;
    let mut header = vec!["t", "x0", "x1", "X0", "X1"];
    if draw.is_some() {
        header.push("eps");
    }
    sink.write_csv(&format!("transport-{name}.csv"), seed, &header, &transport_rows(&sol))?;

    let mut line = format!(
        "transport {name}: end frame ({:.6}, {:.6}) at t = {:.6}",
        end.frame[0], end.frame[1], end.t
    );
    if let Some(hol) = &out.holonomy {
        line.push_str(&format!(", holonomy angle {:.9}", hol.angle));
        if let Some(e) = hol.angle_error {
            line.push_str(&format!(" (closed form off by {e:.2e})"));
        }
    }
    Ok(Outcome { lines: vec![line], failed: 0 })
}

#[derive(Serialize)]
struct CurvatureOutput {
    manifold: String,
    realization: RealizationInfo,
    report: CurvatureReport,
    /// `Ω` and `Ω̃ = ε² Ω` as densities on `dx¹∧dx²`.
    omega: f64,
    omega_stochastic: f64,
    /// `max |ε ∇ₕ(ε³R) − (ε⁴ R_{,h} + 3ε³ ∂ₕε R)|` for `h = 0, 1`.
    covariant_derivative_residual: [f64; 2],
}

pub fn curvature(ctx: &Context, sink: &mut OutputSink, point: Option<&str>) -> CliResult<Outcome> {
    let m = ctx.manifold.as_ref();
    let p = pair_or("point", point, default_point(m))?;
    let p = Point::new(p[0], p[1]);
    let d = ctx.draw()?;
    let r = &d.realization;
    let report = curvature_report(m, r, &p)?;
    let (omega, omega_stochastic) = curvature_form(m, r, &p)?;
    let cd = [covariant_derivative_rtilde(m, r, &p, 0)?.residual(), covariant_derivative_rtilde(m, r, &p, 1)?.residual()];
    let line = format!(
        "curvature at ({:.6}, {:.6}): eps {:.6}, K = {:.9}, K~ = {:.9}, direct vs scaled {:.2e}",
        p[0], p[1], report.eps, report.sectional, report.sectional_stochastic, report.direct_vs_scaled
    );
    let out = CurvatureOutput {
        manifold: m.name().to_string(),
        realization: RealizationInfo::from(&d),
        report,
        omega,
        omega_stochastic,
        covariant_derivative_residual: cd,
    };
    sink.write_json("curvature.json", d.seed, &out)?;
    Ok(Outcome { lines: vec![line], failed: 0 })
}

#[derive(Serialize)]
struct GaussBonnetOutput {
    /// `∫ Ω`.
    integral: f64,
    chi: i32,
    manifold: String,
    grid: [usize; 2],
    /// `∫ E[ε²] Ω`.
    integral_expected: f64,
    deviation: f64,
    deviation_closed_form: Option<f64>,
    refinement_delta: f64,
    cap_bound: f64,
    monte_carlo: Option<MonteCarloEstimate>,
}

pub fn gauss_bonnet(ctx: &Context, sink: &mut OutputSink) -> CliResult<Outcome> {
    let m = ctx.manifold.as_ref();
    let q = &ctx.config.quadrature;
    let mc = (ctx.config.monte_carlo.n_realizations, ctx.master_seed());
    let g = gauss_bonnet_deviation(m, &ctx.spec, [q.n_theta, q.n_phi], Some(mc))?;
    let out = GaussBonnetOutput {
        integral: g.integral_omega,
        chi: g.chi,
        manifold: g.manifold,
        grid: g.grid,
        integral_expected: g.integral_expected,
        deviation: g.deviation,
        deviation_closed_form: g.deviation_closed_form,
        refinement_delta: g.refinement_delta,
        cap_bound: g.cap_bound,
        monte_carlo: g.monte_carlo,
    };
    sink.write_json("gauss-bonnet.json", ctx.master_seed(), &out)?;
    let mut line = format!(
        "gauss-bonnet: integral {:.9} (chi {}), deviation {:.6e}",
        out.integral, out.chi, out.deviation
    );
    if let Some(c) = out.deviation_closed_form {
        line.push_str(&format!(", closed form {c:.6e}"));
    }
    if let Some(mc) = out.monte_carlo {
        line.push_str(&format!(", monte carlo {:.6e} ± {:.2e}", mc.mean, mc.stderr));
    }
    Ok(Outcome { lines: vec![line], failed: 0 })
}

/// Random test function and vector field, reproducible from the master seed.
#[derive(Debug, Clone, Serialize)]
pub struct TestFields {
    pub f: TrigPolynomial,
    pub x: [TrigPolynomial; 2],
}

impl TestFields {
    pub fn from_seed(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master, TEST_FIELD_STREAM));
        let f = TrigPolynomial::random(&mut rng, 1.0);
        let x = [TrigPolynomial::random(&mut rng, 1.0), TrigPolynomial::random(&mut rng, 1.0)];
        Self { f, x }
    }

    pub fn scalar(&self) -> ScalarFieldExpr {
        ScalarFieldExpr::from(self.f.clone())
    }

    pub fn vector(&self) -> VectorFieldExpr {
        VectorFieldExpr::from_components(self.x[0].clone(), self.x[1].clone())
    }
}

#[derive(Serialize)]
struct LaplacianOutput {
    manifold: String,
    point: [f64; 2],
    realization: RealizationInfo,
    test_fields: TestFields,
    eps: f64,
    gradient: [f64; 2],
    stochastic_gradient: [f64; 2],
    divergence: f64,
    stochastic_divergence_formula: f64,
    stochastic_divergence_direct: f64,
    laplacian: f64,
    stochastic_laplacian_formula: f64,
    stochastic_laplacian_direct: f64,
}

pub fn laplacian_cmd(ctx: &Context, sink: &mut OutputSink, point: Option<&str>) -> CliResult<Outcome> {
    let m = ctx.manifold.as_ref();
    let p = pair_or("point", point, default_point(m))?;
    let p = Point::new(p[0], p[1]);
    let d = ctx.draw()?;
    let r = &d.realization;
    let fields = TestFields::from_seed(ctx.master_seed());
    let (f, x) = (fields.scalar(), fields.vector());
    let out = LaplacianOutput {
        manifold: m.name().to_string(),
        point: arr(&p),
        realization: RealizationInfo::from(&d),
        eps: r.eps(&p)?,
        gradient: arr(&gradient(m, &f, &p)?),
        stochastic_gradient: arr(&stochastic_gradient(m, r, &f, &p)?),
        divergence: divergence(m, &x, &p)?,
        stochastic_divergence_formula: stochastic_divergence(m, r, &x, &p, Method::Formula)?,
        stochastic_divergence_direct: stochastic_divergence(m, r, &x, &p, Method::Direct)?,
        laplacian: laplacian(m, &f, &p)?,
        stochastic_laplacian_formula: stochastic_laplacian(m, r, &f, &p, Method::Formula)?,
        stochastic_laplacian_direct: stochastic_laplacian(m, r, &f, &p, Method::Direct)?,
        test_fields: fields,
    };
    sink.write_json("laplacian.json", d.seed, &out)?;
    Ok(Outcome {
        lines: vec![format!(
            "laplacian at ({:.6}, {:.6}): div~ {:.12} / {:.12}, lap~ {:.12} / {:.12} (formula / direct)",
            p[0],
            p[1],
            out.stochastic_divergence_formula,
            out.stochastic_divergence_direct,
            out.stochastic_laplacian_formula,
            out.stochastic_laplacian_direct
        )],
        failed: 0,
    })
}

#[derive(Serialize)]
struct DivergenceOutput {
    manifold: String,
    band: [f64; 2],
    realization: RealizationInfo,
    test_field: [TrigPolynomial; 2],
    check: DivergenceCheck,
    tolerance: f64,
    pass: bool,
}

pub fn divergence_theorem(ctx: &Context, sink: &mut OutputSink, band: Option<&str>) -> CliResult<Outcome> {
    let m = ctx.manifold.as_ref();
    let default = match m.name() {
        "sphere" => [0.3, FRAC_PI_2],
        _ => [1.0, 2.5],
    };
    let band = pair_or("band", band, default)?;
    let patch = BoundaryPatch::band(m, band[0], band[1])?;
    let d = ctx.draw()?;
    let fields = TestFields::from_seed(ctx.master_seed());
    let q = &ctx.config.quadrature;
    let check = divergence_theorem_check(m, &d.realization, &fields.vector(), &patch, [q.n_theta, q.n_phi], 2 * q.n_phi)?;
    let pass = check.residual <= DIVERGENCE_TOL;
    let out = DivergenceOutput {
        manifold: m.name().to_string(),
        band,
        realization: RealizationInfo::from(&d),
        test_field: fields.x,
        check,
        tolerance: DIVERGENCE_TOL,
        pass,
    };
    sink.write_json("divergence-theorem.json", d.seed, &out)?;
    Ok(Outcome {
        lines: vec![format!(
            "divergence-theorem on [{}, {}]: volume {:.12}, boundary {:.12}, residual {:.2e} ({})",
            band[0],
            band[1],
            check.lhs,
            check.rhs,
            check.residual,
            if pass { "pass" } else { "FAIL" }
        )],
        failed: usize::from(!pass),
    })
}
