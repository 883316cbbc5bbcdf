use serde::{Deserialize, Serialize};

use super::model::ChainState;
use super::sampler::AcceptanceCounts;
use super::MHConfig;
use crate::density::gamma_quantile;
use crate::error::{Error, Result};
use crate::simplex::NoiseParams;

/// One retained draw of the continuous parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub theta: Vec<f64>,
    pub kappa: f64,
    pub gamma: f64,
    pub log_posterior: f64,
}

impl ChainSample {
    pub fn from_state(state: &ChainState) -> Self {
        Self {
            theta: state.theta.theta().to_vec(),
            kappa: state.kappa,
            gamma: state.gamma,
            log_posterior: state.log_posterior,
        }
    }
}

/// Median, mean and equal-tailed credible interval of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub median: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl ParamSummary {
    pub fn from_samples(values: &[f64], level: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("chain samples"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        Ok(Self {
            median: quantile(&sorted, 0.5),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            lower: quantile(&sorted, tail),
            upper: quantile(&sorted, 1.0 - tail),
            level,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Acceptance rates per block. `labels` is `None` when labels were clamped
/// or no label move was ever proposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub labels: Option<f64>,
    pub theta: Vec<f64>,
    pub kappa: f64,
    pub gamma: f64,
}

impl AcceptanceRates {
    pub fn from_counts(counts: &AcceptanceCounts) -> Self {
        let rate = |a: u64, p: u64| if p == 0 { 0.0 } else { a as f64 / p as f64 };
        Self {
            labels: (counts.label_proposed > 0)
                .then(|| rate(counts.label_accepted, counts.label_proposed)),
            theta: counts
                .theta_accepted
                .iter()
                .zip(&counts.theta_proposed)
                .map(|(a, p)| rate(*a, *p))
                .collect(),
            kappa: rate(counts.kappa_accepted, counts.kappa_proposed),
            gamma: rate(counts.gamma_accepted, counts.gamma_proposed),
        }
    }
}

/// Posterior summary of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub config: MHConfig,
    pub classes: usize,
    pub retained: usize,
    pub theta: Vec<ParamSummary>,
    pub kappa: ParamSummary,
    pub gamma: ParamSummary,
    pub acceptance: AcceptanceRates,
    /// Posterior label frequencies per observation (rows sum to one).
    pub label_marginals: Vec<Vec<f64>>,
    /// Median of `Ga(kappa, gamma)` at the hyperprior medians.
    pub implied_theta_median_prior: f64,
    /// Median of `Ga(kappa, gamma)` at the posterior medians.
    pub implied_theta_median_posterior: f64,
    /// Retained samples; persisted separately as CSV.
    #[serde(skip)]
    pub samples: Vec<ChainSample>,
}

impl ChainSummary {
    pub fn new(
        config: MHConfig,
        classes: usize,
        samples: Vec<ChainSample>,
        counts: &AcceptanceCounts,
        label_tally: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("chain samples"));
        }
        let level = config.settings.credible_level;
        let theta = (0..classes)
            .map(|m| {
                let column: Vec<f64> = samples.iter().map(|s| s.theta[m]).collect();
                ParamSummary::from_samples(&column, level)
            })
            .collect::<Result<Vec<_>>>()?;
        let kappas: Vec<f64> = samples.iter().map(|s| s.kappa).collect();
        let gammas: Vec<f64> = samples.iter().map(|s| s.gamma).collect();
        let kappa = ParamSummary::from_samples(&kappas, level)?;
        let gamma = ParamSummary::from_samples(&gammas, level)?;
        let label_marginals = label_tally
            .into_iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.into_iter().map(|c| c as f64 / total as f64).collect()
            })
            .collect();
        Ok(Self {
            implied_theta_median_prior: config.settings.hyperprior.implied_theta_median(),
            implied_theta_median_posterior: gamma_quantile(0.5, kappa.median, gamma.median),
            config,
            classes,
            retained: samples.len(),
            theta,
            kappa,
            gamma,
            acceptance: AcceptanceRates::from_counts(counts),
            label_marginals,
            samples,
        })
    }

    /// Retained noise-parameter draws, for marginalized filtering.
    pub fn theta_samples(&self) -> Vec<NoiseParams> {
        self.samples
            .iter()
            .map(|s| NoiseParams::new(s.theta.clone()).expect("chain keeps theta positive"))
            .collect()
    }
}

/// Which point estimate to extract from a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PointEstimate {
    #[default]
    Median,
    Mean,
}

/// Component-wise posterior point estimate of the noise parameters.
pub fn summarize_noise_posterior(
    summary: &ChainSummary,
    estimate: PointEstimate,
) -> Result<NoiseParams> {
    if summary.samples.is_empty() {
        return Err(Error::Empty("chain samples"));
    }
    let level = summary.config.settings.credible_level;
    let theta = (0..summary.classes)
        .map(|m| {
            let column: Vec<f64> = summary.samples.iter().map(|s| s.theta[m]).collect();
            ParamSummary::from_samples(&column, level).map(|p| match estimate {
                PointEstimate::Median => p.median,
                PointEstimate::Mean => p.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NoiseParams::new(theta)
}
