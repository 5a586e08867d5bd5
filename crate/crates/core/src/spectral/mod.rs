//! Periodic-box function spaces, transforms and the operators `A`, `B`, `C`.

pub mod domain;
pub mod field;
pub mod norms;
pub mod operators;
pub mod params;
pub mod sample;
pub mod snapshot;

pub use domain::{Domain, DomainSpec};
pub use field::{leray_project, PhysicalField, RawCoeffs, SpectralField};
pub use norms::{h_norm, h_norm_sq, lp_norm, lp_pow, v_norm, v_norm_sq, vprime_norm_sq};
pub use operators::{advection, forchheimer, gradient_sq_integral, nonlinear_terms, operator_b, stokes, trilinear, NonlinearTerms};
pub use params::{PhysicalParams, Regime};
pub use sample::{random_field, shear_field};
