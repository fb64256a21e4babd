//! Geodesics, parallel transport in the standard, expected, realized and
//! Brownian regimes, and holonomy.

mod brownian;
mod geodesics;
mod holonomy;
mod parallel;
mod recovery;

pub use brownian::{brownian_transport, BrownianParams, BrownianResult, MonteCarloSummary};
pub use geodesics::{expected_geodesic, max_relative_residual, realized_geodesic, realized_geodesic_residuals, GeodesicResidual};
pub use holonomy::{angle_difference, holonomy, wrap_angle, Holonomy, CLOSURE_TOL};
pub use parallel::{
    expected_magnitude_factor, expected_transport, fundamental_matrix, realized_transport, standard_transport, transport,
    transport_between, Regime, TransportKind, TransportSample, TransportSolution,
};
pub use recovery::{recovery_limit_check, RecoveryReport, RECOVERY_FLOOR, RECOVERY_SLOPE_TOL};
