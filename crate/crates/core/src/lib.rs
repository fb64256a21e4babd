//! Stochastic Riemannian geometry on 2-D coordinate charts.

pub mod error;
pub mod geom;
pub mod quadrature;
pub mod random_field;
pub mod report;
pub mod seed;
pub mod stoch_connection;
pub mod stoch_curvature;
pub mod stoch_laplace;
pub mod transport;

pub use error::{Error, Result};
pub use report::IdentityReport;
