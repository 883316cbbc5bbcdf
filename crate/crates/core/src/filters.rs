//! Sequential classification filters: max-of-mean, voting, the static-state
//! Bayes filter (SSBF) and the noise-aware HBNI filter.
//!
//! SSBF and HBNI keep an unnormalized log posterior and normalize only on
//! read-out, so long confident streams never underflow.

use serde::{Deserialize, Serialize};

use crate::density::{log_dirichlet_hbni, log_sum_exp};
use crate::error::{Error, Result};
use crate::simplex::{
    ClassLabel, ClassPrior, NoiseParams, ObservationSequence, SimplexVector, CLAMP_EPSILON,
};

/// Filtering method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MaxOfMean,
    Voting,
    Ssbf,
    Hbni,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MaxOfMean, Method::Voting, Method::Ssbf, Method::Hbni];

    pub fn name(self) -> &'static str {
        match self {
            Method::MaxOfMean => "max-of-mean",
            Method::Voting => "voting",
            Method::Ssbf => "ssbf",
            Method::Hbni => "hbni",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown filter method `{s}`")))
    }
}

/// Noise knowledge used by the HBNI filter.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    /// A single point estimate of the concentrations.
    Point(NoiseParams),
    /// Retained posterior draws; the likelihood of each class is averaged
    /// over them.
    Marginal(Vec<NoiseParams>),
}

/// Posterior over classes after some number of observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassPosterior {
    pub probs: SimplexVector,
    pub n_observations: usize,
}

impl ClassPosterior {
    pub fn argmax(&self) -> ClassLabel {
        self.probs.argmax()
    }

    pub fn confidence(&self) -> f64 {
        self.probs.max()
    }

    fn from_log(log_post: &[f64], n_observations: usize) -> Self {
        let norm = log_sum_exp(log_post);
        let probs = log_post.iter().map(|l| (l - norm).exp()).collect();
        Self {
            probs: SimplexVector::from_normalized_unchecked(probs),
            n_observations,
        }
    }
}

/// Result of majority voting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteResult {
    pub label: ClassLabel,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Stats {
    MaxOfMean {
        sums: Vec<f64>,
    },
    Voting {
        counts: Vec<u64>,
    },
    Ssbf {
        log_post: Vec<f64>,
        log_prior: Vec<f64>,
    },
    Hbni {
        log_post: Vec<f64>,
        noise: NoiseParams,
    },
    HbniMarginal {
        log_prior: Vec<f64>,
        /// Accumulated log likelihood per class and per draw.
        log_lik: Vec<Vec<f64>>,
        draws: Vec<NoiseParams>,
    },
}

/// Recursive state of one filter over one observation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    classes: usize,
    prior: ClassPrior,
    n: usize,
    stats: Stats,
}

impl FilterState {
    pub fn max_of_mean(prior: ClassPrior) -> Self {
        let classes = prior.classes();
        Self {
            classes,
            prior,
            n: 0,
            stats: Stats::MaxOfMean {
                sums: vec![0.0; classes],
            },
        }
    }

    pub fn voting(prior: ClassPrior) -> Self {
        let classes = prior.classes();
        Self {
            classes,
            prior,
            n: 0,
            stats: Stats::Voting {
                counts: vec![0; classes],
            },
        }
    }

    /// Static-state Bayes filter; the prior must be strictly positive.
    pub fn ssbf(prior: ClassPrior) -> Result<Self> {
        if !prior.is_strictly_positive() {
            return Err(Error::Domain(
                "SSBF divides by the class prior, which has a zero component".into(),
            ));
        }
        let log_prior: Vec<f64> = prior.probs().iter().map(|p| p.ln()).collect();
        Ok(Self {
            classes: prior.classes(),
            prior,
            n: 0,
            stats: Stats::Ssbf {
                log_post: log_prior.clone(),
                log_prior,
            },
        })
    }

    pub fn hbni(prior: ClassPrior, noise: NoiseModel) -> Result<Self> {
        let classes = prior.classes();
        let log_prior: Vec<f64> = prior.probs().iter().map(|p| p.ln()).collect();
        let stats = match noise {
            NoiseModel::Point(theta) => {
                check_noise(&theta, classes)?;
                Stats::Hbni {
                    log_post: log_prior,
                    noise: theta,
                }
            }
            NoiseModel::Marginal(draws) => {
                if draws.is_empty() {
                    return Err(Error::Empty("noise-parameter draws"));
                }
                for d in &draws {
                    check_noise(d, classes)?;
                }
                Stats::HbniMarginal {
                    log_prior,
                    log_lik: vec![vec![0.0; draws.len()]; classes],
                    draws,
                }
            }
        };
        Ok(Self {
            classes,
            prior,
            n: 0,
            stats,
        })
    }

    /// Builds any filter; HBNI requires `noise`.
    pub fn new(method: Method, prior: ClassPrior, noise: Option<NoiseModel>) -> Result<Self> {
        match method {
            Method::MaxOfMean => Ok(Self::max_of_mean(prior)),
            Method::Voting => Ok(Self::voting(prior)),
            Method::Ssbf => Self::ssbf(prior),
            Method::Hbni => {
                let noise = noise.ok_or_else(|| {
                    Error::Config("the HBNI filter needs noise parameters".into())
                })?;
                Self::hbni(prior, noise)
            }
        }
    }

    pub fn method(&self) -> Method {
        match self.stats {
            Stats::MaxOfMean { .. } => Method::MaxOfMean,
            Stats::Voting { .. } => Method::Voting,
            Stats::Ssbf { .. } => Method::Ssbf,
            Stats::Hbni { .. } | Stats::HbniMarginal { .. } => Method::Hbni,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn prior(&self) -> &ClassPrior {
        &self.prior
    }

    pub fn n_observations(&self) -> usize {
        self.n
    }

    /// Folds one observation into the state.
    pub fn update(&mut self, o: &SimplexVector) -> Result<()> {
        if o.len() != self.classes {
            return Err(Error::Dimension {
                expected: self.classes,
                got: o.len(),
            });
        }
        match &mut self.stats {
            Stats::MaxOfMean { sums } => {
                for (s, p) in sums.iter_mut().zip(o.probs()) {
                    *s += p;
                }
            }
            Stats::Voting { counts } => counts[o.argmax().zero_based()] += 1,
            Stats::Ssbf {
                log_post,
                log_prior,
            } => {
                let o = o.clamped(CLAMP_EPSILON);
                for ((l, p), lp) in log_post.iter_mut().zip(o.probs()).zip(log_prior.iter()) {
                    *l += p.ln() - lp;
                }
            }
            Stats::Hbni { log_post, noise } => {
                let o = o.clamped(CLAMP_EPSILON);
                for (m, l) in log_post.iter_mut().enumerate() {
                    let c = ClassLabel::from_zero_based(m);
                    *l += log_dirichlet_hbni(&o, c, noise.get(c));
                }
            }
            Stats::HbniMarginal { log_lik, draws, .. } => {
                let o = o.clamped(CLAMP_EPSILON);
                for (m, row) in log_lik.iter_mut().enumerate() {
                    let c = ClassLabel::from_zero_based(m);
                    for (l, d) in row.iter_mut().zip(draws.iter()) {
                        *l += log_dirichlet_hbni(&o, c, d.get(c));
                    }
                }
            }
        }
        self.n += 1;
        Ok(())
    }

    /// Swaps in new noise parameters; evidence gathered so far is kept.
    pub fn set_noise(&mut self, noise: NoiseParams) -> Result<()> {
        check_noise(&noise, self.classes)?;
        match &mut self.stats {
            Stats::Hbni { noise: current, .. } => {
                *current = noise;
                Ok(())
            }
            Stats::HbniMarginal { .. } => {
                let log_post = self.log_posterior().expect("hbni state");
                self.stats = Stats::Hbni { log_post, noise };
                Ok(())
            }
            _ => Err(Error::Config(format!(
                "{} filter takes no noise parameters",
                self.method()
            ))),
        }
    }

    /// Unnormalized log posterior for the Bayesian filters.
    pub fn log_posterior(&self) -> Option<Vec<f64>> {
        match &self.stats {
            Stats::Ssbf { log_post, .. } | Stats::Hbni { log_post, .. } => Some(log_post.clone()),
            Stats::HbniMarginal {
                log_prior,
                log_lik,
                draws,
            } => {
                let log_draws = (draws.len() as f64).ln();
                Some(
                    log_lik
                        .iter()
                        .zip(log_prior)
                        .map(|(row, lp)| lp + log_sum_exp(row) - log_draws)
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Current posterior over classes. Before any observation this is the
    /// prior for every method.
    pub fn posterior(&self) -> ClassPosterior {
        if self.n == 0 {
            return ClassPosterior {
                probs: self.prior.as_simplex().clone(),
                n_observations: 0,
            };
        }
        let n = self.n as f64;
        match &self.stats {
            Stats::MaxOfMean { sums } => ClassPosterior {
                probs: SimplexVector::from_normalized_unchecked(
                    sums.iter().map(|s| s / n).collect(),
                ),
                n_observations: self.n,
            },
            Stats::Voting { counts } => ClassPosterior {
                probs: SimplexVector::from_normalized_unchecked(
                    counts.iter().map(|&c| c as f64 / n).collect(),
                ),
                n_observations: self.n,
            },
            _ => ClassPosterior::from_log(&self.log_posterior().expect("bayesian filter"), self.n),
        }
    }

    /// The filter's class decision (lowest index wins ties).
    pub fn decision(&self) -> ClassLabel {
        self.posterior().argmax()
    }
}

fn check_noise(noise: &NoiseParams, classes: usize) -> Result<()> {
    if noise.classes() != classes {
        return Err(Error::Dimension {
            expected: classes,
            got: noise.classes(),
        });
    }
    Ok(())
}

/// Component-wise mean of the history.
pub fn max_of_mean(history: &ObservationSequence) -> Result<ClassPosterior> {
    if history.is_empty() {
        return Err(Error::Empty("observation history"));
    }
    let mut state = FilterState::max_of_mean(ClassPrior::uniform(history.classes())?);
    for o in history.iter() {
        state.update(o)?;
    }
    Ok(state.posterior())
}

/// Majority vote over per-observation argmax labels.
pub fn vote(history: &ObservationSequence) -> Result<VoteResult> {
    if history.is_empty() {
        return Err(Error::Empty("observation history"));
    }
    let mut counts = vec![0u64; history.classes()];
    for o in history.iter() {
        counts[o.argmax().zero_based()] += 1;
    }
    let mut best = 0;
    for (i, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = i;
        }
    }
    Ok(VoteResult {
        label: ClassLabel::from_zero_based(best),
        counts,
    })
}

/// One SSBF step in functional form.
pub fn ssbf_update(state: FilterState, o: &SimplexVector) -> Result<FilterState> {
    if state.method() != Method::Ssbf {
        return Err(Error::Config(format!("expected an SSBF state, got {}", state.method())));
    }
    let mut state = state;
    state.update(o)?;
    Ok(state)
}

/// One HBNI step in functional form.
pub fn hbni_update(state: FilterState, o: &SimplexVector) -> Result<FilterState> {
    if state.method() != Method::Hbni {
        return Err(Error::Config(format!("expected an HBNI state, got {}", state.method())));
    }
    let mut state = state;
    state.update(o)?;
    Ok(state)
}

/// Posterior after folding the whole history through `method`.
pub fn batch(
    method: Method,
    history: &ObservationSequence,
    prior: &ClassPrior,
    noise: Option<NoiseModel>,
) -> Result<ClassPosterior> {
    Ok(batch_state(method, history, prior, noise)?.posterior())
}

/// Like [`batch`] but returns the final filter state.
pub fn batch_state(
    method: Method,
    history: &ObservationSequence,
    prior: &ClassPrior,
    noise: Option<NoiseModel>,
) -> Result<FilterState> {
    let mut state = FilterState::new(method, prior.clone(), noise)?;
    for o in history.iter() {
        state.update(o)?;
    }
    Ok(state)
}
