//! Hierarchical Bayesian noise inference (HBNI) for sequential classifier
//! fusion.
//!
//! A low-level classifier emits a probability vector per frame. This crate
//! models those outputs with a per-class Dirichlet whose concentration
//! `theta_m` measures how reliable the classifier is on class `m`, shares a
//! gamma prior `Ga(kappa, gamma)` across classes, infers everything with
//! Metropolis–Hastings, and then filters new streams with the inferred noise.
//! On top of the filter sits a durative macro-observation process that
//! reports a label once a confidence threshold is met, together with the
//! label-confusion and duration distributions a task planner samples.
//!
//! Modules, bottom-up:
//!
//! - [`simplex`], [`density`]: domain types and log densities.
//! - [`genmodel`]: forward sampling of labeled classifier outputs.
//! - [`inference`]: the MCMC sampler and posterior summaries.
//! - [`filters`]: max-of-mean, voting, SSBF and HBNI filters.
//! - [`macroobs`]: thresholded macro-observations and their models.
//! - [`bench`]: experiment configs and the harness behind the CLI.
//! - [`io`]: CSV/JSON file formats.

pub mod bench;
pub mod density;
pub mod error;
pub mod filters;
pub mod genmodel;
pub mod inference;
pub mod io;
pub mod macroobs;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use filters::{ClassPosterior, FilterState, Method, NoiseModel};
pub use genmodel::{GenerativeConfig, ModelSpec, NoiseSource};
pub use macroobs::{MacroObsModel, MacroObservation};
pub use inference::{ChainState, ChainSummary, MHConfig, SamplerSettings};

pub use simplex::{
    ClassLabel, ClassPrior, GammaPrior, HyperParams, Hyperprior, NoiseParams, ObservationSequence,
    SimplexVector,
};

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!("hbni ", env!("CARGO_PKG_VERSION"));
