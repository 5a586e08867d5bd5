//! IMEX-Euler integration of the transformed system and the cocycle drivers.

pub mod cocycle;
pub mod config;
pub mod integrator;
pub mod trajectory;

pub use cocycle::{cocycle_phi, pullback_many, pullback_solve};
pub use config::{SolverConfig, DEFAULT_GUARD};
pub use integrator::{ledger_row, noise_stride, rhs_transformed, Integrator, LedgerRow, Rhs};
pub use trajectory::{solve_transformed, EnergyLedger, Trajectory};
