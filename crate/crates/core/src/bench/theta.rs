use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::Result;
use crate::genmodel::generate_dataset;
use crate::inference::{quantile, run_chain, ChainSummary};
use crate::simplex::ObservationSequence;

/// Equal-width histogram of one parameter's retained samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub parameter: String,
    /// `bins + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// True value, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
}

/// Histogram over `[0, q99.5]` (or the sample max if smaller) with `bins` bins.
pub fn histogram(parameter: &str, values: &[f64], bins: usize, truth: Option<f64>) -> Histogram {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = if sorted.is_empty() {
        1.0
    } else {
        quantile(&sorted, 0.995).max(truth.unwrap_or(0.0) * 1.05)
    };
    let width = top / bins as f64;
    let edges = (0..=bins).map(|k| k as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for v in values {
        let k = ((v / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram {
        parameter: parameter.to_string(),
        edges,
        counts,
        truth,
    }
}

/// Posterior of the noise parameters for one dataset, with per-parameter
/// histograms and, when the truth is known, coverage and ordering checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRecoveryReport {
    pub tool: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub truth: Option<Vec<f64>>,
    pub summary: ChainSummary,
    pub histograms: Vec<Histogram>,
    /// Whether each credible interval contains the true value.
    pub covered: Option<Vec<bool>>,
    /// Whether posterior medians sort in the same order as the truth.
    pub ordering_recovered: Option<bool>,
}

fn same_order(estimate: &[f64], truth: &[f64]) -> bool {
    let n = truth.len();
    (0..n).all(|i| {
        (0..n).all(|j| {
            truth[i].partial_cmp(&truth[j]) == estimate[i].partial_cmp(&estimate[j])
                || truth[i] == truth[j]
        })
    })
}

/// Runs inference on `data` (or on a dataset generated from the config) and
/// reports the posterior.
pub fn run_theta_recovery(
    config: &ExperimentConfig,
    data: Option<&ObservationSequence>,
) -> Result<ThetaRecoveryReport> {
    config.validate()?;
    let generative = config.generative();
    let (owned, truth) = match data {
        Some(_) => (None, None),
        None => {
            let d = generate_dataset(&generative, config.dataset.n, config.dataset.per_class)?;
            (Some(d), Some(generative.realized_theta()?.theta().to_vec()))
        }
    };
    let data = data.or(owned.as_ref()).expect("one of the two is set");
    let prior = match data.classes() == config.model.classes {
        true => generative.class_prior(),
        false => crate::simplex::ClassPrior::uniform(data.classes())?,
    };
    let mh = config.sampler.clone().with_seed(config.seed);
    let summary = run_chain(data, &prior, &mh)?;
    Ok(report(config, summary, truth))
}

fn report(config: &ExperimentConfig, summary: ChainSummary, truth: Option<Vec<f64>>) -> ThetaRecoveryReport {
    let bins = 40;
    let mut histograms: Vec<Histogram> = (0..summary.classes)
        .map(|m| {
            let values: Vec<f64> = summary.samples.iter().map(|s| s.theta[m]).collect();
            histogram(
                &format!("theta_{}", m + 1),
                &values,
                bins,
                truth.as_ref().map(|t| t[m]),
            )
        })
        .collect();
    let kappas: Vec<f64> = summary.samples.iter().map(|s| s.kappa).collect();
    let gammas: Vec<f64> = summary.samples.iter().map(|s| s.gamma).collect();
    histograms.push(histogram("kappa", &kappas, bins, None));
    histograms.push(histogram("gamma", &gammas, bins, None));
    let medians: Vec<f64> = summary.theta.iter().map(|p| p.median).collect();
    let covered = truth
        .as_ref()
        .map(|t| summary.theta.iter().zip(t).map(|(p, v)| p.contains(*v)).collect());
    let ordering_recovered = truth.as_ref().map(|t| same_order(&medians, t));
    ThetaRecoveryReport {
        tool: crate::TOOL_VERSION.to_string(),
        config_hash: config.hash(),
        config: config.clone(),
        truth,
        summary,
        histograms,
        covered,
        ordering_recovered,
    }
}

/// Aggregate of repeated theta-recovery runs on independently seeded data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub repetitions: usize,
    /// Fraction of runs whose medians reproduce the true ordering.
    pub ordering_rate: f64,
    /// Per-class fraction of runs whose credible interval covers the truth.
    pub coverage_rates: Vec<f64>,
    /// Posterior medians per run.
    pub medians: Vec<Vec<f64>>,
}

/// Repeats theta recovery with seeds `seed, seed + 1, ...`, in parallel.
pub fn run_theta_recovery_repetitions(
    config: &ExperimentConfig,
    repetitions: usize,
) -> Result<RepetitionReport> {
    config.validate()?;
    let reports: Vec<ThetaRecoveryReport> = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(r as u64);
            run_theta_recovery(&c, None)
        })
        .collect::<Result<_>>()?;
    let classes = config.model.classes;
    let n = repetitions as f64;
    let ordering_rate = reports
        .iter()
        .filter(|r| r.ordering_recovered == Some(true))
        .count() as f64
        / n;
    let coverage_rates = (0..classes)
        .map(|m| {
            reports
                .iter()
                .filter(|r| r.covered.as_ref().is_some_and(|c| c[m]))
                .count() as f64
                / n
        })
        .collect();
    let medians = reports
        .iter()
        .map(|r| r.summary.theta.iter().map(|p| p.median).collect())
        .collect();
    Ok(RepetitionReport {
        repetitions,
        ordering_rate,
        coverage_rates,
        medians,
    })
}
