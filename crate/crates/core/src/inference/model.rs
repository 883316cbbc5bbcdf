use serde::{Deserialize, Serialize};

use crate::density::{log_dirichlet_hbni, log_gamma_density_unchecked};
use crate::error::{Error, Result};
use crate::simplex::{
    ClassLabel, ClassPrior, Hyperprior, NoiseParams, ObservationSequence, SimplexVector,
    CLAMP_EPSILON,
};

/// One joint sample of labels, noise parameters and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub labels: Vec<ClassLabel>,
    pub theta: NoiseParams,
    pub kappa: f64,
    pub gamma: f64,
    /// Cached log joint density of this state.
    pub log_posterior: f64,
}

/// The unnormalized joint posterior over `(labels, theta, kappa, gamma)`.
///
/// Observations are clamped away from the simplex boundary on construction.
#[derive(Debug, Clone)]
pub struct Posterior {
    classes: usize,
    observations: Vec<SimplexVector>,
    log_obs: Vec<Vec<f64>>,
    truth: Option<Vec<ClassLabel>>,
    log_prior: Vec<f64>,
    hyperprior: Hyperprior,
}

impl Posterior {
    pub fn new(
        data: &ObservationSequence,
        prior: &ClassPrior,
        hyperprior: Hyperprior,
    ) -> Result<Self> {
        if prior.classes() != data.classes() {
            return Err(Error::Dimension {
                expected: data.classes(),
                got: prior.classes(),
            });
        }
        hyperprior.validate()?;
        let observations: Vec<SimplexVector> =
            data.iter().map(|o| o.clamped(CLAMP_EPSILON)).collect();
        let log_obs = observations
            .iter()
            .map(|o| o.probs().iter().map(|p| p.ln()).collect())
            .collect();
        Ok(Self {
            classes: data.classes(),
            observations,
            log_obs,
            truth: data.labels().map(<[ClassLabel]>::to_vec),
            log_prior: prior.probs().iter().map(|p| p.ln()).collect(),
            hyperprior,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn truth(&self) -> Option<&[ClassLabel]> {
        self.truth.as_deref()
    }

    pub fn hyperprior(&self) -> &Hyperprior {
        &self.hyperprior
    }

    pub(crate) fn observation(&self, i: usize) -> &SimplexVector {
        &self.observations[i]
    }

    pub(crate) fn log_obs(&self, i: usize, c: ClassLabel) -> f64 {
        self.log_obs[i][c.zero_based()]
    }

    /// Dirichlet likelihood plus class prior of observation `i` under label `c`.
    pub fn observation_term(&self, i: usize, c: ClassLabel, theta_c: f64) -> f64 {
        log_dirichlet_hbni(&self.observations[i], c, theta_c) + self.log_prior[c.zero_based()]
    }

    /// `ln Ga(theta; kappa, gamma)`, normalized: its constant depends on the
    /// hyperparameters, which are themselves sampled.
    pub fn theta_prior_term(&self, theta: f64, kappa: f64, gamma: f64) -> f64 {
        log_gamma_density_unchecked(theta, kappa, gamma)
    }

    pub fn kappa_prior_term(&self, kappa: f64) -> f64 {
        let p = self.hyperprior.kappa;
        log_gamma_density_unchecked(kappa, p.shape, p.scale)
    }

    pub fn gamma_prior_term(&self, gamma: f64) -> f64 {
        let p = self.hyperprior.gamma;
        log_gamma_density_unchecked(gamma, p.shape, p.scale)
    }

    /// Recomputes the log joint density of `state` from scratch.
    pub fn log_joint(&self, state: &ChainState) -> Result<f64> {
        if state.labels.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: state.labels.len(),
            });
        }
        if state.theta.classes() != self.classes {
            return Err(Error::Dimension {
                expected: self.classes,
                got: state.theta.classes(),
            });
        }
        let mut total = 0.0;
        for (i, &c) in state.labels.iter().enumerate() {
            c.check(self.classes)?;
            total += self.observation_term(i, c, state.theta.get(c));
        }
        for &theta in state.theta.theta() {
            total += self.theta_prior_term(theta, state.kappa, state.gamma);
        }
        total += self.kappa_prior_term(state.kappa) + self.gamma_prior_term(state.gamma);
        Ok(total)
    }
}

/// Log joint density of `state` given data, class prior and hyperprior.
pub fn log_joint(
    state: &ChainState,
    data: &ObservationSequence,
    prior: &ClassPrior,
    hyperprior: &Hyperprior,
) -> Result<f64> {
    Posterior::new(data, prior, *hyperprior)?.log_joint(state)
}
