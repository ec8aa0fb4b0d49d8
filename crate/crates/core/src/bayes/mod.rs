//! Bayesian estimation through the latent-variable augmented posterior.

pub mod convergence;
pub mod fit;
pub mod nuts;
pub mod posterior;
pub mod ppc;
pub mod prior;
pub mod sbc;

pub use fit::{be1, be2, hmc_fit, HmcConfig, PosteriorDraws, SamplerDiagnostics};
pub use posterior::{log_augmented_posterior, AugmentedPosterior, AugmentedState};
pub use ppc::{ppc, prior_predictive_correlation, MomentCheck, PpcReport};
pub use prior::{PriorFamily, PriorSpec};
pub use sbc::{rank_statistic, sbc, SbcConfig, SbcReport};
