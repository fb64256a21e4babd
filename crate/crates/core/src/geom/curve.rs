use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{Point, Tangent};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub position: Point,
    pub velocity: Tangent,
}

/// Why an integrated path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    /// The trajectory left the chart domain after time `t`.
    ChartExit { t: f64 },
    /// The realized field dropped to or below the positivity floor.
    Degenerate { t: f64, eps: f64 },
}

type PosFn = dyn Fn(f64) -> Point + Send + Sync;

#[derive(Clone)]
enum Shape {
    Analytic { position: Arc<PosFn>, velocity: Arc<PosFn> },
    Sampled,
}

/// Parametrized curve in chart coordinates.
///
/// Analytic curves evaluate anywhere in `t_span`; integrator output is
/// evaluated between samples by cubic Hermite interpolation.
#[derive(Clone)]
pub struct CurvePath {
    shape: Shape,
    t_span: (f64, f64),
    samples: Arc<Vec<CurveSample>>,
    termination: Termination,
}

impl fmt::Debug for CurvePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurvePath")
            .field("t_span", &self.t_span)
            .field("samples", &self.samples.len())
            .field("termination", &self.termination)
            .finish()
    }
}

impl CurvePath {
    pub fn analytic(
        position: impl Fn(f64) -> Point + Send + Sync + 'static,
        velocity: impl Fn(f64) -> Tangent + Send + Sync + 'static,
        t_span: (f64, f64),
    ) -> Self {
        Self {
            shape: Shape::Analytic {
                position: Arc::new(position),
                velocity: Arc::new(velocity),
            },
            t_span,
            samples: Arc::new(Vec::new()),
            termination: Termination::Completed,
        }
    }

    /// `t ↦ p0 + t v` on `t_span`.
    pub fn line(p0: Point, v: Tangent, t_span: (f64, f64)) -> Self {
        Self::analytic(move |t| p0 + v * t, move |_| v, t_span)
    }

    /// Sphere latitude circle `t ↦ (θ0, t)`, `t ∈ [0, 2π]`.
    pub fn latitude(theta0: f64) -> Self {
        Self::latitude_arc(theta0, std::f64::consts::TAU)
    }

    /// Latitude arc `t ↦ (θ0, t)`, `t ∈ [0, length]`.
    pub fn latitude_arc(theta0: f64, length: f64) -> Self {
        Self::analytic(move |t| Point::new(theta0, t), |_| Tangent::new(0.0, 1.0), (0.0, length))
    }

    /// Curve from integrator output. Samples must be sorted by `t`.
    pub fn from_samples(samples: Vec<CurveSample>, termination: Termination) -> Result<Self> {
        let (first, last) = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return Err(Error::InvalidArgument("curve needs at least one sample".into())),
        };
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument("curve samples must increase in t".into()));
        }
        Ok(Self {
            shape: Shape::Sampled,
            t_span: (first, last),
            samples: Arc::new(samples),
            termination,
        })
    }

    pub fn t_span(&self) -> (f64, f64) {
        self.t_span
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn is_truncated(&self) -> bool {
        self.termination != Termination::Completed
    }

    pub fn position(&self, t: f64) -> Point {
        match &self.shape {
            Shape::Analytic { position, .. } => position(t),
            Shape::Sampled => self.hermite(t).0,
        }
    }

    pub fn velocity(&self, t: f64) -> Tangent {
        match &self.shape {
            Shape::Analytic { velocity, .. } => velocity(t),
            Shape::Sampled => self.hermite(t).1,
        }
    }

    pub fn end(&self) -> (Point, Tangent) {
        let t1 = self.t_span.1;
        (self.position(t1), self.velocity(t1))
    }

    fn hermite(&self, t: f64) -> (Point, Tangent) {
        let s = &self.samples;
        if s.len() == 1 {
            return (s[0].position, s[0].velocity);
        }
        let idx = match s.binary_search_by(|x| x.t.total_cmp(&t)) {
            Ok(i) => return (s[i].position, s[i].velocity),
            Err(i) => i.clamp(1, s.len() - 1),
        };
        let (a, b) = (&s[idx - 1], &s[idx]);
        let dt = b.t - a.t;
        let u = (t - a.t) / dt;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let pos = a.position * h00 + a.velocity * (h10 * dt) + b.position * h01 + b.velocity * (h11 * dt);
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let vel = (a.position * d00 + b.position * d01) / dt + a.velocity * d10 + b.velocity * d11;
        (pos, vel)
    }
}
