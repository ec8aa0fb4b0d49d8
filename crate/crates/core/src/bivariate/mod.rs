//! The distribution itself: parameters, moments, density and sampling.

pub mod density;
pub mod moments;
pub mod params;
pub mod sample;
pub mod sampling;

pub use density::{density, density_or_undefined, is_density_defined};
pub use moments::{moments_of, moments_of_raw, rho_bounds, solve_four_moments, solve_three_moments};
pub use params::{AlphaParams, MomentSummary, RhoInterval, SolverOutcome};
pub use sample::PairedSample;
pub use sampling::sample;
