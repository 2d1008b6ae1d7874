//! Verification engine: comparison lemmas with the proof's explicit
//! constants, and inequality certificates along trajectories.

mod checks;
mod fit;
mod lemmas;
mod report;

pub use checks::{
    cauchy_sup, check_cauchy_decrease, check_discrete_loja, check_distance_decay, check_extension_phi_bound, check_l2_control,
    check_mean_value, check_monotonicity_compact, check_quadratic_bound, mean_value_structural_constant,
};
pub use fit::{differential_tolerance, fit_two_constants, fit_two_constants_scaled, linear_regression, TOL_A, TOL_B};
pub use lemmas::{verify_discrete_lemma, verify_ode_lemma, verify_summability, SequenceData};
pub use report::{CheckReport, ConstantRecord, Provenance, Verdict};
