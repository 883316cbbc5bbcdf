//! Durative macro-observations.
//!
//! A macro-observation consumes low-level classifier outputs through a filter
//! until the posterior confidence reaches a threshold (or a cap is hit), and
//! reports the winning label and the number of observations consumed.
//! [`estimate_model`] tabulates, per true class, the distribution over
//! reported labels and over that duration by Monte Carlo; a planner then
//! draws from the resulting [`MacroObsModel`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{ClassPosterior, FilterState, Method, NoiseModel};
use crate::genmodel::{GenerativeConfig, ObservationStream};
use crate::rng::{self, Purpose};
use crate::simplex::{ClassLabel, NoiseParams, SimplexVector, SUM_TOLERANCE};

/// Default bound on observations consumed by one macro-observation.
pub const DEFAULT_CAP: usize = 200;

/// Default confidence threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.95;

/// How a macro-observation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Posterior confidence reached the threshold.
    Confident,
    /// The cap was reached first.
    Timeout,
    /// The stream ran dry before either.
    Exhausted,
}

/// A reported semantic label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroObservation {
    pub label: ClassLabel,
    /// Largest component of the terminal posterior.
    pub confidence: f64,
    /// Low-level observations consumed.
    pub tau: usize,
    pub termination: Termination,
    pub posterior: ClassPosterior,
}

impl MacroObservation {
    pub fn timed_out(&self) -> bool {
        self.termination != Termination::Confident
    }
}

fn check_threshold(threshold: f64, classes: usize, cap: usize) -> Result<()> {
    if !(threshold > 1.0 / classes as f64 && threshold < 1.0) {
        return Err(Error::Config(format!(
            "threshold must lie in (1/M, 1) = ({:.4}, 1), got {threshold}",
            1.0 / classes as f64
        )));
    }
    if cap == 0 {
        return Err(Error::Config("cap must be at least 1".into()));
    }
    Ok(())
}

/// Runs one macro-observation over `stream`.
pub fn run_macro_observation<I>(
    stream: I,
    filter: FilterState,
    threshold: f64,
    cap: usize,
) -> Result<MacroObservation>
where
    I: IntoIterator<Item = SimplexVector>,
{
    check_threshold(threshold, filter.classes(), cap)?;
    let mut filter = filter;
    let mut tau = 0;
    let mut termination = Termination::Exhausted;
    for o in stream {
        filter.update(&o)?;
        tau += 1;
        if filter.posterior().confidence() >= threshold {
            termination = Termination::Confident;
            break;
        }
        if tau == cap {
            termination = Termination::Timeout;
            break;
        }
    }
    let posterior = filter.posterior();
    Ok(MacroObservation {
        label: posterior.argmax(),
        confidence: posterior.confidence(),
        tau,
        termination,
        posterior,
    })
}

/// Settings for [`estimate_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MacroModelOptions {
    pub threshold: f64,
    pub cap: usize,
    /// Macro-observations simulated per true class.
    pub trials: usize,
    pub method: Method,
}

impl Default for MacroModelOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            cap: DEFAULT_CAP,
            trials: 2000,
            method: Method::Hbni,
        }
    }
}

/// Per-class label-confusion and duration tables of a macro-observation
/// process. This is the file handed to planners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroObsModel {
    pub tool: String,
    pub config_hash: String,
    pub classes: usize,
    pub method: Method,
    pub threshold: f64,
    pub cap: usize,
    /// Trials run per true class.
    pub trials: Vec<u64>,
    /// `confusion[c][l]`: probability of reporting label `l + 1` when the
    /// true class is `c + 1`.
    pub confusion: Vec<Vec<f64>>,
    pub label_counts: Vec<Vec<u64>>,
    /// `tau_histograms[c][k]`: count of runs that consumed `k + 1`
    /// observations.
    pub tau_histograms: Vec<Vec<u64>>,
    /// Runs per true class that ended on the cap.
    pub timeouts: Vec<u64>,
    /// `joint_counts[c][l][k]`: runs reporting label `l + 1` after `k + 1`
    /// observations.
    pub joint_counts: Vec<Vec<Vec<u64>>>,
}

impl MacroObsModel {
    /// Checks the internal consistency of a loaded model.
    pub fn validate(&self) -> Result<()> {
        let m = self.classes;
        let shape_ok = self.trials.len() == m
            && self.confusion.len() == m
            && self.label_counts.len() == m
            && self.tau_histograms.len() == m
            && self.timeouts.len() == m
            && self.joint_counts.len() == m;
        if !shape_ok {
            return Err(Error::Dimension {
                expected: m,
                got: self.confusion.len(),
            });
        }
        for c in 0..m {
            let row = &self.confusion[c];
            if row.len() != m || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Simplex(format!("confusion row {} is malformed", c + 1)));
            }
            if self.trials[c] > 0 && (row.iter().sum::<f64>() - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::Simplex(format!("confusion row {} does not sum to 1", c + 1)));
            }
            if self.label_counts[c].iter().sum::<u64>() != self.trials[c]
                || self.tau_histograms[c].iter().sum::<u64>() != self.trials[c]
            {
                return Err(Error::Domain(format!(
                    "counts for class {} do not sum to its trial count",
                    c + 1
                )));
            }
        }
        Ok(())
    }

    pub fn confusion_row(&self, true_class: ClassLabel) -> Result<SimplexVector> {
        true_class.check(self.classes)?;
        SimplexVector::new(self.confusion[true_class.zero_based()].clone())
    }

    /// Mean duration for a true class.
    pub fn mean_tau(&self, true_class: ClassLabel) -> f64 {
        let h = &self.tau_histograms[true_class.zero_based()];
        let n: u64 = h.iter().sum();
        h.iter()
            .enumerate()
            .map(|(k, c)| (k + 1) as f64 * *c as f64)
            .sum::<f64>()
            / n as f64
    }

    /// Standard deviation of the duration for a true class.
    pub fn std_tau(&self, true_class: ClassLabel) -> f64 {
        let mean = self.mean_tau(true_class);
        let h = &self.tau_histograms[true_class.zero_based()];
        let n: u64 = h.iter().sum();
        let var = h
            .iter()
            .enumerate()
            .map(|(k, c)| ((k + 1) as f64 - mean).powi(2) * *c as f64)
            .sum::<f64>()
            / n as f64;
        var.sqrt()
    }
}

/// Simulates `options.trials` macro-observations per true class on fresh
/// streams from `config`, filtering with `noise`.
pub fn estimate_model(
    config: &GenerativeConfig,
    noise: &NoiseParams,
    options: &MacroModelOptions,
) -> Result<MacroObsModel> {
    let classes = config.classes();
    check_threshold(options.threshold, classes, options.cap)?;
    if options.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if noise.classes() != classes {
        return Err(Error::Dimension {
            expected: classes,
            got: noise.classes(),
        });
    }
    let truth = config.realized_theta()?;
    let prior = config.class_prior();
    let noise_model = (options.method == Method::Hbni).then(|| NoiseModel::Point(noise.clone()));
    // Fail early on a filter that cannot be built for this prior.
    FilterState::new(options.method, prior.clone(), noise_model.clone())?;

    let jobs: Vec<(usize, usize)> = (0..classes)
        .flat_map(|c| (0..options.trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<(usize, usize, usize, bool)> = jobs
        .into_par_iter()
        .map(|(c, t)| {
            let stream_rng = rng::derive(config.seed, Purpose::MacroTrial, rng::pair_index(c, t));
            let stream = ObservationStream::new(ClassLabel::from_zero_based(c), &truth, stream_rng);
            let filter = FilterState::new(options.method, prior.clone(), noise_model.clone())
                .expect("checked above");
            let obs = run_macro_observation(stream, filter, options.threshold, options.cap)
                .expect("validated inputs");
            (c, obs.label.zero_based(), obs.tau, obs.timed_out())
        })
        .collect();

    let max_tau = outcomes.iter().map(|o| o.2).max().unwrap_or(1);
    let mut label_counts = vec![vec![0u64; classes]; classes];
    let mut tau_histograms = vec![vec![0u64; max_tau]; classes];
    let mut joint_counts = vec![vec![vec![0u64; max_tau]; classes]; classes];
    let mut timeouts = vec![0u64; classes];
    for (c, label, tau, timed_out) in outcomes {
        label_counts[c][label] += 1;
        tau_histograms[c][tau - 1] += 1;
        joint_counts[c][label][tau - 1] += 1;
        timeouts[c] += u64::from(timed_out);
    }
    let trials = vec![options.trials as u64; classes];
    let confusion = label_counts
        .iter()
        .map(|row| row.iter().map(|&n| n as f64 / options.trials as f64).collect())
        .collect();
    Ok(MacroObsModel {
        tool: crate::TOOL_VERSION.to_string(),
        config_hash: crate::io::config_hash(&(config, noise, options)),
        classes,
        method: options.method,
        threshold: options.threshold,
        cap: options.cap,
        trials,
        confusion,
        label_counts,
        tau_histograms,
        timeouts,
        joint_counts,
    })
}

fn draw_index<R: Rng + ?Sized>(counts: &[u64], rng: &mut R) -> usize {
    let total: u64 = counts.iter().sum();
    let mut target = rng.random_range(0..total);
    for (i, &c) in counts.iter().enumerate() {
        if target < c {
            return i;
        }
        target -= c;
    }
    unreachable!("target below total")
}

fn check_row(model: &MacroObsModel, true_class: ClassLabel) -> Result<usize> {
    true_class.check(model.classes)?;
    let c = true_class.zero_based();
    if model.trials[c] == 0 {
        return Err(Error::Empty("macro-observation model row"));
    }
    Ok(c)
}

/// Draws `(label, tau)` for `true_class`, sampling the label from the
/// confusion row and `tau` from the duration histogram independently.
pub fn sample_macro_observation<R: Rng + ?Sized>(
    model: &MacroObsModel,
    true_class: ClassLabel,
    rng: &mut R,
) -> Result<(ClassLabel, usize)> {
    let c = check_row(model, true_class)?;
    let label = draw_index(&model.label_counts[c], rng);
    let tau = draw_index(&model.tau_histograms[c], rng) + 1;
    Ok((ClassLabel::from_zero_based(label), tau))
}

/// Draws `(label, tau)` jointly, keeping their dependence.
pub fn sample_macro_observation_joint<R: Rng + ?Sized>(
    model: &MacroObsModel,
    true_class: ClassLabel,
    rng: &mut R,
) -> Result<(ClassLabel, usize)> {
    let c = check_row(model, true_class)?;
    let width = model.tau_histograms[c].len();
    let flat: Vec<u64> = model.joint_counts[c].iter().flatten().copied().collect();
    let k = draw_index(&flat, rng);
    Ok((ClassLabel::from_zero_based(k / width), k % width + 1))
}
