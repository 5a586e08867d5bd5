//! Colored two-sided Wiener noise and the stationary Ornstein-Uhlenbeck process.

pub mod coloring;
pub mod ergodic;
pub mod ou;
pub mod stats;
pub mod wiener;

pub use coloring::{ColoringSpectrum, Quadrature, RealMode, SpectrumSums};
pub use ergodic::{ergodic_average, growth_threshold, lp_series, GrowthThresholdReport};
pub use ou::{chi_difference_residual, ou_exact_step, ou_path, ou_path_from_state, OuPath};
pub use stats::{ou_mode_statistics, ModeStatistics, MomentEstimate};
pub use wiener::{Omega, WienerPath, DEFAULT_HISTORY};
