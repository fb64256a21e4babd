use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the chart domain of {chart}")]
    OutsideDomain { chart: String, x: f64, y: f64 },

    #[error("metric is numerically singular at ({x}, {y}): det = {det:e}, condition number = {condition:e}")]
    SingularMetric { x: f64, y: f64, det: f64, condition: f64 },

    #[error("invalid field spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate realization: epsilon = {eps} at or below floor {floor}")]
    DegenerateRealization { eps: f64, floor: f64 },

    #[error("tangent vectors span a degenerate plane (gram determinant {gram:e})")]
    DegenerateSpan { gram: f64 },

    #[error("curve is not closed: endpoint gap {gap:e}")]
    NotClosed { gap: f64 },

    #[error("{0} is not a closed surface")]
    NotClosedSurface(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
