//! Losses, theory constants, lemma checks and rate regression.

mod lemmas;
mod loss;
mod rate;
mod theory;

pub use lemmas::{lemma_suite, stability_check, CheckKind, LemmaCheck, LemmaReport};
pub use loss::{kl_divergence, l2_error};
pub use rate::{rate_regression, theoretical_slope, LossKind, RateFit, RateRow, RateTable};
pub use theory::{
    galerkin_norm_constants, level_constant, sup_ratio, theory_diagnostics, TheoryDiagnostics,
};
