//! Experiment harness: configs, the simulated benchmark experiments, stream
//! replay, and the command implementations behind the `hbni` binary.

pub mod commands;
mod error_curve;
mod stream;
mod theta;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{Method, NoiseModel};
use crate::genmodel::{generate_dataset, GenerativeConfig, ModelSpec};
use crate::inference::{run_chain, summarize_noise_posterior, ChainSummary, PointEstimate, SamplerSettings};
use crate::macroobs::{MacroModelOptions, DEFAULT_CAP, DEFAULT_THRESHOLD};

pub use error_curve::{
    run_error_vs_n, wilson_interval, write_error_curve_csv, write_error_long_csv, ErrorCurve,
    ErrorCurveSet, ErrorPoint, TrialOutcome,
};
pub use stream::{run_replay, run_stream_filter, write_trace_csv, StreamOptions, TraceRow};
pub use theta::{
    histogram, run_theta_recovery, run_theta_recovery_repetitions, Histogram, RepetitionReport,
    ThetaRecoveryReport,
};

/// Which experiment a config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Generate,
    ThetaPosterior,
    HyperparamShift,
    ErrorVsN,
    MacroobsModel,
    FilterStream,
}

/// Size of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n: usize,
    pub per_class: Option<usize>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n: 15,
            per_class: Some(5),
        }
    }
}

/// How the HBNI filter consumes the inferred noise posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HbniNoise {
    #[default]
    Median,
    Mean,
    /// Average the likelihood over retained chain samples.
    Marginal,
}

/// Macro-observation settings of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MacroSettings {
    pub threshold: f64,
    pub cap: usize,
    pub method: Method,
}

impl Default for MacroSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            cap: DEFAULT_CAP,
            method: Method::Hbni,
        }
    }
}

/// Complete, serializable description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
    pub sampler: SamplerSettings,
    pub filters: Vec<Method>,
    pub n_grid: Vec<usize>,
    /// Trials per (method, N) for error curves, per class for macro models.
    pub trials: usize,
    /// Labeled observations per class used to infer noise for filtering.
    pub calibration_per_class: usize,
    pub hbni_noise: HbniNoise,
    pub macro_obs: MacroSettings,
    /// Not part of the config hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 0,
            model: ModelSpec::three_class_reference(),
            dataset: DatasetSpec::default(),
            sampler: SamplerSettings::default(),
            filters: Method::ALL.to_vec(),
            n_grid: (1..=50).collect(),
            trials: 2000,
            calibration_per_class: 5,
            hbni_noise: HbniNoise::Median,
            macro_obs: MacroSettings::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sampler.validate()?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Config("N grid must be non-empty and positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.calibration_per_class == 0 {
            return Err(Error::Config("calibration_per_class must be at least 1".into()));
        }
        if self.filters.is_empty() {
            return Err(Error::Config("at least one filter method is required".into()));
        }
        Ok(())
    }

    /// Hash of everything that influences results (the output directory
    /// excluded).
    pub fn hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.output_dir = None;
        crate::io::config_hash(&stripped)
    }

    /// Generative config seeded by the experiment seed.
    pub fn generative(&self) -> GenerativeConfig {
        self.model.clone().with_seed(self.seed)
    }

    pub fn macro_options(&self) -> MacroModelOptions {
        MacroModelOptions {
            threshold: self.macro_obs.threshold,
            cap: self.macro_obs.cap,
            trials: self.trials,
            method: self.macro_obs.method,
        }
    }

    /// Reference setup with a hyperprior whose implied noise median is
    /// `target_median` (for the hyperparameter-shift experiment).
    pub fn hyperparam_shift(target_median: f64) -> Result<Self> {
        let mut config = Self {
            kind: Some(ExperimentKind::HyperparamShift),
            ..Default::default()
        };
        config.sampler.hyperprior =
            crate::simplex::Hyperprior::with_theta_median(target_median, 2.0, 2.0)?;
        Ok(config)
    }
}

/// Result of the offline noise-calibration phase.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub summary: ChainSummary,
    pub noise: NoiseModel,
    pub point: crate::simplex::NoiseParams,
}

/// Infers noise parameters from a labeled calibration set drawn
/// independently of any test trial.
pub fn calibrate(config: &ExperimentConfig) -> Result<Calibration> {
    config.validate()?;
    let k = config.calibration_per_class;
    let generative = config.generative();
    let data = generate_dataset(&generative, k * config.model.classes, Some(k))?;
    let mh = config.sampler.clone().with_seed(config.seed);
    let summary = run_chain(&data, &generative.class_prior(), &mh)?;
    let point = summarize_noise_posterior(
        &summary,
        if config.hbni_noise == HbniNoise::Mean {
            PointEstimate::Mean
        } else {
            PointEstimate::Median
        },
    )?;
    let noise = match config.hbni_noise {
        HbniNoise::Marginal => NoiseModel::Marginal(summary.theta_samples()),
        _ => NoiseModel::Point(point.clone()),
    };
    Ok(Calibration {
        summary,
        noise,
        point,
    })
}
