//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::{self, parse_override_value};
use crate::error::{CliError, CliResult, EXIT_OK};
use crate::experiments::{self, Context, CurveArgs, GeodesicKind, Outcome, TransportChoice};
use crate::output::OutputSink;
use crate::verify::run_verify;

#[derive(Debug, Parser)]
#[command(name = "torsionfield", version, about = "Stochastic Levi-Civita connections on surfaces")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each one overrides the matching config
/// key; `--set` reaches any key by dotted path.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Arbitrary override, e.g. `--set integrator.h=1e-4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub manifold: Option<String>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// auto, torus-fourier, sphere-harmonics or bumps.
    #[arg(long, global = true)]
    pub basis: Option<String>,
    /// Number of basis functions.
    #[arg(long = "N", global = true, value_name = "N")]
    pub n: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha_exp: Option<f64>,
    /// Noise amplitude.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Integrator step.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Integration horizon.
    #[arg(long = "T", alias = "duration", global = true, value_name = "T", allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, global = true)]
    pub n_samples: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// abort or resample-and-report.
    #[arg(long, global = true)]
    pub degenerate_policy: Option<String>,
    #[arg(long, global = true)]
    pub n_realizations: Option<usize>,
    #[arg(long, global = true)]
    pub n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub n_phi: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated subset of json,csv.
    #[arg(long, global = true, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
    /// Random samples per identity in `verify`.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

impl Overrides {
    /// Dotted-path overrides in application order: `--set` first, then the
    /// dedicated flags.
    pub fn pairs(&self) -> CliResult<Vec<(String, Value)>> {
        let mut out = Vec::new();
        for raw in &self.set {
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{raw}`")))?;
            out.push((key.trim().to_string(), parse_override_value(value.trim())));
        }
        let mut push = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                out.push((key.to_string(), v));
            }
        };
        push("manifold.name", self.manifold.clone().map(Value::from));
        push("manifold.params.radius", self.radius.map(Value::from));
        push("field_spec.basis", self.basis.clone().map(Value::from));
        push("field_spec.N", self.n.map(Value::from));
        push("field_spec.alpha_exp", self.alpha_exp.map(Value::from));
        push("field_spec.c", self.c.map(Value::from));
        push("integrator.h", self.h.map(Value::from));
        push("integrator.T", self.t.map(Value::from));
        push("monte_carlo.n_samples", self.n_samples.map(Value::from));
        push("monte_carlo.master_seed", self.seed.map(Value::from));
        push("monte_carlo.degenerate_policy", self.degenerate_policy.clone().map(Value::from));
        push("monte_carlo.n_realizations", self.n_realizations.map(Value::from));
        push("quadrature.n_theta", self.n_theta.map(Value::from));
        push("quadrature.n_phi", self.n_phi.map(Value::from));
        push("output.directory", self.output_dir.as_ref().map(|d| Value::from(d.to_string_lossy().into_owned())));
        push("output.formats", self.formats.clone().map(Value::from));
        push("verify.samples", self.samples.map(Value::from));
        Ok(out)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every identity at random samples and write verify.json / verify.txt.
    Verify,
    /// Draw one realization of the random field.
    SampleField,
    /// Integrate a standard, expected or realized geodesic.
    Geodesic {
        #[arg(value_enum)]
        kind: GeodesicKind,
        /// Start point `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        p0: Option<String>,
        /// Start velocity `vx,vy`.
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
    },
    /// Parallel transport along a latitude or a straight chart line.
    Transport {
        #[arg(value_enum)]
        kind: TransportChoice,
        /// Colatitude of a sphere latitude; accepts `pi/3` style values.
        #[arg(long, conflicts_with = "line", allow_hyphen_values = true)]
        latitude: Option<String>,
        /// Chart line `x,y,dx,dy` traversed for `t` in `[0, T]`.
        #[arg(long, allow_hyphen_values = true)]
        line: Option<String>,
        /// Initial vector `vx,vy`.
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
    },
    /// Stochastic curvature tensors at a point.
    Curvature {
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Gauss-Bonnet integral and its deviation under the random field.
    GaussBonnet,
    /// Stochastic gradient, divergence and Laplacian at a point.
    Laplacian {
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Divergence theorem on a coordinate band `lo,hi` of the first axis.
    DivergenceTheorem {
        #[arg(long, allow_hyphen_values = true)]
        band: Option<String>,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Self::Verify => "verify".into(),
            Self::SampleField => "sample-field".into(),
            Self::Geodesic { kind, .. } => format!("geodesic {}", value_name(kind)),
            Self::Transport { kind, .. } => format!("transport {}", value_name(kind)),
            Self::Curvature { .. } => "curvature".into(),
            Self::GaussBonnet => "gauss-bonnet".into(),
            Self::Laplacian { .. } => "laplacian".into(),
            Self::DivergenceTheorem { .. } => "divergence-theorem".into(),
        }
    }
}

fn value_name<T: clap::ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn verify(ctx: &Context, sink: &mut OutputSink) -> CliResult<Outcome> {
    let report = run_verify(&ctx.config)?;
    let seed = ctx.config.monte_carlo.master_seed;
    sink.write_json("verify.json", seed, &report)?;
    let text = report.to_text();
    sink.write_text("verify.txt", &text)?;
    Ok(Outcome { lines: text.lines().map(str::to_string).collect(), failed: report.failed() })
}

fn dispatch(command: &Command, ctx: &Context, sink: &mut OutputSink) -> CliResult<Outcome> {
    match command {
        Command::Verify => verify(ctx, sink),
        Command::SampleField => experiments::sample_field(ctx, sink),
        Command::Geodesic { kind, p0, v0 } => experiments::geodesic(ctx, sink, *kind, p0.as_deref(), v0.as_deref()),
        Command::Transport { kind, latitude, line, v0 } => {
            let args = CurveArgs { latitude: latitude.clone(), line: line.clone(), v0: v0.clone() };
            experiments::transport_cmd(ctx, sink, *kind, &args)
        }
        Command::Curvature { point } => experiments::curvature(ctx, sink, point.as_deref()),
        Command::GaussBonnet => experiments::gauss_bonnet(ctx, sink),
        Command::Laplacian { point } => experiments::laplacian_cmd(ctx, sink, point.as_deref()),
        Command::DivergenceTheorem { band } => experiments::divergence_theorem(ctx, sink, band.as_deref()),
    }
}

/// Parses, loads the config, runs one subcommand. Returns printed lines.
pub fn execute(cli: &Cli) -> CliResult<Vec<String>> {
    let mut config = config::load(cli.overrides.config.as_deref(), &cli.overrides.pairs()?)?;
    config.resolve_output_dir();
    let ctx = Context::new(config)?;
    let mut sink = OutputSink::create(&ctx.config, &cli.command.name())?;
    let outcome = match dispatch(&cli.command, &ctx, &mut sink) {
        Err(CliError::Degenerate(record)) => {
            let dump = sink.write_json_always("degenerate-realization.json", record.seed.unwrap_or(0), &record)?;
            return Err(CliError::DegenerateAbort { seed: record.seed, min_eps: record.min_eps, dump });
        }
        other => other?,
    };
    let mut lines = outcome.lines;
    lines.push(format!("output: {}", sink.dir().display()));
    if outcome.failed > 0 {
        print_lines(&lines);
        return Err(CliError::ChecksFailed { failed: outcome.failed });
    }
    Ok(lines)
}

/// Writes to stdout, ignoring a closed pipe.
fn print_lines(lines: &[String]) {
    let mut out = std::io::stdout().lock();
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return;
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            print_lines(&lines);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
