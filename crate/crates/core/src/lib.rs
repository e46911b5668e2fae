//! Posterior model probabilities: exact answers and Monte Carlo estimators.
//!
//! Four closed-form model-comparison problems are provided in [`models`];
//! [`estimators`] holds the within-model averaging estimators, their joint
//! Gibbs correction and the point-mass plug-in; [`sweep`] evaluates them over
//! observation grids and writes CSV tables.

pub mod error;
pub mod estimators;
pub mod math;
pub mod models;
pub mod samplers;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
pub use estimators::{
    congdon_coupled_ex2, congdon_estimate, dirac_plugin, exact_estimate, gibbs_corrected,
    mc_stderr, scott_estimate, EstimateResult, GibbsAverage, GibbsOptions, Method,
};
pub use models::{
    build_example, ex3_bayes_factor_closed_form, exact_bayes_factor, exact_posterior_probs,
    Component, ExampleConfig, ModelSet,
};
pub use samplers::{sample_within_model_posteriors, RandomStream, SampleMatrix};
