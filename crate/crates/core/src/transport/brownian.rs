use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::parallel::{Regime, TransportSample, TransportSolution};
use crate::error::{Error, Result};
use crate::geom::ode::uniform_steps;
use crate::geom::{christoffel_at, inner, CurvePath, Manifold, Tangent, Termination};
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrownianParams {
    pub h: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Record every this many steps (the last step is always recorded).
    pub record_every: usize,
    /// Number of individual paths returned in full.
    pub keep_paths: usize,
    /// Multiplies every increment; `0` removes the noise.
    pub noise_scale: f64,
}

impl BrownianParams {
    /// Defaults: `h = 10⁻³ · duration`, recording every 10 steps.
    pub fn new(duration: f64, n_paths: usize, master_seed: u64) -> Self {
        Self {
            h: 1e-3 * duration.abs(),
            n_paths,
            master_seed,
            record_every: 10,
            keep_paths: 0,
            noise_scale: 1.0,
        }
    }
}

/// Monte Carlo summary at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub mean: [f64; 2],
    pub stderr: [f64; 2],
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BrownianResult {
    pub params: BrownianParams,
    /// Empirical mean trajectory (regime `brownian-mean`).
    pub mean: TransportSolution,
    /// Standard error of the mean at each recorded time.
    pub stderr: Vec<Tangent>,
    /// Sample variance of `log ‖X(T)‖_g` over paths.
    pub log_norm_variance: f64,
    pub samples: Vec<TransportSolution>,
}

impl BrownianResult {
    pub fn summary(&self) -> MonteCarloSummary {
        let m = self.mean.end().frame;
        let s = self.stderr.last().copied().unwrap_or_else(Tangent::zeros);
        MonteCarloSummary {
            mean: [m[0], m[1]],
            stderr: [s[0], s[1]],
            n_paths: self.params.n_paths,
            seed: self.params.master_seed,
        }
    }
}

/// One-step RK4 propagator of `Y′ = A(t) Y`, `Y(t) = I`.
fn rk4_propagator(a: impl Fn(f64) -> Result<Matrix2<f64>>, t: f64, h: f64) -> Result<Matrix2<f64>> {
    let (a0, am, a1) = (a(t)?, a(t + 0.5 * h)?, a(t + h)?);
    let id = Matrix2::identity();
    let k1 = a0;
    let k2 = am * (id + k1 * (0.5 * h));
    let k3 = am * (id + k2 * (0.5 * h));
    let k4 = a1 * (id + k3 * h);
    Ok(id + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Solves `dX = −Γ(γ′)X dt − X dB` (Itô), one scalar Brownian motion per
/// path seeded by `mix_seed(master_seed, i)`. The noise factor takes the
/// Euler–Maruyama step `1 − ΔB`; the drift takes an RK4 step. Both are
/// linear and commute, so the path mean is unbiased for the RK4 standard
/// transport at the same step.
pub fn brownian_transport(m: &dyn Manifold, curve: &CurvePath, v0: &Tangent, params: &BrownianParams) -> Result<BrownianResult> {
    if !(params.h > 0.0) || params.n_paths == 0 || params.record_every == 0 {
        return Err(Error::InvalidArgument(format!(
            "brownian transport needs h > 0, n_paths > 0, record_every > 0 (got {}, {}, {})",
            params.h, params.n_paths, params.record_every
        )));
    }
    let (t0, t1) = curve.t_span();
    let (n, step) = uniform_steps(t1 - t0, params.h);
    let generator = |t: f64| christoffel_at(m, &curve.position(t)).map(|g| -g.along(&curve.velocity(t)));
    // Drift propagators are shared by all paths.
    let drift: Vec<Matrix2<f64>> = (0..n)
        .map(|k| rk4_propagator(generator, t0 + k as f64 * step, step))
        .collect::<Result<_>>()?;
    let recorded: Vec<usize> = (0..=n).filter(|&k| k % params.record_every == 0 || k == n).collect();
    let times: Vec<f64> = recorded.iter().map(|&k| if k == n { t1 } else { t0 + k as f64 * step }).collect();
    let sd = params.noise_scale * step.abs().sqrt();

    let paths: Vec<Vec<Tangent>> = (0..params.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.master_seed, i as u64));
            let mut x = *v0;
            let mut out = Vec::with_capacity(recorded.len());
            out.push(x);
            for (k, a) in drift.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = (a * x) * (1.0 - sd * z);
                if (k + 1) % params.record_every == 0 || k + 1 == n {
                    out.push(x);
                }
            }
            out
        })
        .collect();

    let np = params.n_paths as f64;
    let mut mean = vec![Tangent::zeros(); recorded.len()];
    for path in &paths {
        for (acc, x) in mean.iter_mut().zip(path) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= np);
    let mut var = vec![Tangent::zeros(); recorded.len()];
    for path in &paths {
        for ((acc, x), mu) in var.iter_mut().zip(path).zip(&mean) {
            let d = x - mu;
            *acc += d.component_mul(&d);
        }
    }
    let denom = (np - 1.0).max(1.0);
    let stderr = var.iter().map(|v| (v / denom / np).map(f64::sqrt)).collect();

    let g_end = m.metric(&curve.position(t1));
    let logs: Vec<f64> = paths.iter().map(|p| 0.5 * inner(&g_end, &p[p.len() - 1], &p[p.len() - 1]).ln()).collect();
    let log_mean = logs.iter().sum::<f64>() / np;
    let log_norm_variance = logs.iter().map(|l| (l - log_mean).powi(2)).sum::<f64>() / denom;

    let build = |regime: Regime, frames: &[Tangent], seed: Option<u64>| TransportSolution {
        regime,
        h: step.abs(),
        seed,
        samples: times
            .iter()
            .zip(frames)
            .map(|(&t, f)| TransportSample {
                t,
                position: curve.position(t),
                velocity: curve.velocity(t),
                frame: *f,
                eps: None,
            })
            .collect(),
        fundamental: None,
        termination: Termination::Completed,
    };
    let samples = paths
        .iter()
        .take(params.keep_paths)
        .enumerate()
        .map(|(i, p)| build(Regime::BrownianSample, p, Some(mix_seed(params.master_seed, i as u64))))
        .collect();
    let mean_solution = build(Regime::BrownianMean, &mean, Some(params.master_seed));
    Ok(BrownianResult {
        params: *params,
        mean: mean_solution,
        stderr,
        log_norm_variance,
        samples,
    })
}
