//! Gaussian-weighted functionals: `F_{y,sigma}`, entropy, cutoff functionals,
//! the modified monotone functionals and the shrinker scales.

mod config;
mod cutoff;
mod entropy;
mod functional;
mod modified;
mod monotone;
mod scales;

pub use config::{
    cutoff_profile, error_profile_max, sampled_k_psi, FunctionalConfig, K1Variant,
    LocalizedConstants,
};
pub use cutoff::{cutoff_functional, CutoffValue};
pub use entropy::{entropy_estimate, EntropyEstimate, EntropySearch};
pub use functional::{f_functional, f_value, gaussian_kernel, gaussian_weights, weighted_l2_sq};
pub use modified::{
    compact_mu, f_hat, localized_from_f_hat, modified_functional_compact,
    modified_functional_localized, CompactModified, LocalizedModified,
};
pub use monotone::{almost_monotone_j, j_samples, j_value};
pub use scales::{localisation_scale, shrinker_scale, trapezoid_window, ScaleFlag, ScaleReadout};
