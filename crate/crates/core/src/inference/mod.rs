//! Metropolis–Hastings inference over class labels, per-class noise
//! parameters and the shared gamma hyperparameters.

mod model;
mod sampler;
mod summary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::Hyperprior;

pub use model::{log_joint, ChainState, Posterior};
pub use sampler::{mh_step, run_chain, AcceptanceCounts, LabelProposal, Sampler};
pub use summary::{
    quantile, summarize_noise_posterior, AcceptanceRates, ChainSample, ChainSummary,
    ParamSummary, PointEstimate,
};

/// How the per-observation class labels are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// Labels are latent and sampled inside the chain.
    #[default]
    Sample,
    /// Labels are fixed to the ground truth supplied with the data.
    ClampToTruth,
}

/// Initial label assignment when labels are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LabelInit {
    #[default]
    UniformRandom,
    Argmax,
}

/// Tuning of the sampler, independent of its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSettings {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Random-walk standard deviation on `ln theta_m`.
    pub log_theta_step: f64,
    pub log_kappa_step: f64,
    pub log_gamma_step: f64,
    /// Proposal mass kept on the current label.
    pub stay_weight: f64,
    pub labels: LabelMode,
    pub init: LabelInit,
    /// Mass of the equal-tailed credible intervals.
    pub credible_level: f64,
    pub hyperprior: Hyperprior,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            iterations: 50_000,
            burn_in: 10_000,
            thinning: 10,
            log_theta_step: 0.5,
            log_kappa_step: 0.5,
            log_gamma_step: 0.5,
            stay_weight: 0.8,
            labels: LabelMode::Sample,
            init: LabelInit::UniformRandom,
            credible_level: 0.9,
            hyperprior: Hyperprior::default(),
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        for (name, step) in [
            ("log_theta_step", self.log_theta_step),
            ("log_kappa_step", self.log_kappa_step),
            ("log_gamma_step", self.log_gamma_step),
        ] {
            if !(step.is_finite() && step >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {step}")));
            }
        }
        if !(self.stay_weight > 0.0 && self.stay_weight < 1.0) {
            return Err(Error::Config(format!(
                "stay_weight must lie in (0, 1), got {}",
                self.stay_weight
            )));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::Config(format!(
                "credible_level must lie in (0, 1), got {}",
                self.credible_level
            )));
        }
        self.hyperprior.validate()
    }

    pub fn with_seed(self, seed: u64) -> MHConfig {
        MHConfig {
            settings: self,
            seed,
        }
    }
}

/// Sampler settings plus the seed of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MHConfig {
    #[serde(flatten)]
    pub settings: SamplerSettings,
    #[serde(default)]
    pub seed: u64,
}

impl MHConfig {
    pub fn validate(&self) -> Result<()> {
        self.settings.validate()
    }
}
