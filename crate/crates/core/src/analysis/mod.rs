//! Numerical checks of the structural identities, inequalities and
//! random-dynamics properties of the system.

pub mod energy;
pub mod inequalities;
pub mod kappa;
pub mod pullback;
pub mod rds;
pub mod report;

pub use energy::*;
pub use inequalities::*;
pub use kappa::*;
pub use pullback::*;
pub use rds::*;
pub use report::{normalized, sweep, sweep_many, InequalityReport, QUADRATURE_TOL, REPORT_SCHEMA_VERSION};
