use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::model::{ChainState, Posterior};
use super::summary::{ChainSample, ChainSummary};
use super::{LabelInit, LabelMode, MHConfig, SamplerSettings};
use crate::density::hbni_normalizer;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::simplex::{ClassLabel, ClassPrior, NoiseParams, ObservationSequence};

/// Smallest noise parameter a chain is allowed to hold.
const THETA_FLOOR: f64 = 1e-300;

/// Categorical label proposal that keeps mass `stay_weight` on the current
/// label and spreads the rest evenly over the other classes.
#[derive(Debug, Clone, Copy)]
pub struct LabelProposal {
    classes: usize,
    stay_weight: f64,
}

impl LabelProposal {
    pub fn new(classes: usize, stay_weight: f64) -> Self {
        Self {
            classes,
            stay_weight,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, from: ClassLabel, rng: &mut R) -> ClassLabel {
        if rng.random::<f64>() < self.stay_weight {
            return from;
        }
        let k = rng.random_range(0..self.classes - 1);
        let to = if k >= from.zero_based() { k + 1 } else { k };
        ClassLabel::from_zero_based(to)
    }

    /// `ln q(to | from)`.
    pub fn log_prob(&self, from: ClassLabel, to: ClassLabel) -> f64 {
        if from == to {
            self.stay_weight.ln()
        } else {
            ((1.0 - self.stay_weight) / (self.classes - 1) as f64).ln()
        }
    }
}

/// Proposed/accepted counts per block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcceptanceCounts {
    /// Label moves to a different class (stays are not counted).
    pub label_proposed: u64,
    pub label_accepted: u64,
    pub theta_proposed: Vec<u64>,
    pub theta_accepted: Vec<u64>,
    pub kappa_proposed: u64,
    pub kappa_accepted: u64,
    pub gamma_proposed: u64,
    pub gamma_accepted: u64,
}

impl AcceptanceCounts {
    pub fn new(classes: usize) -> Self {
        Self {
            theta_proposed: vec![0; classes],
            theta_accepted: vec![0; classes],
            ..Default::default()
        }
    }
}

/// Metropolis–Hastings sweeps over a fixed posterior.
#[derive(Debug, Clone)]
pub struct Sampler {
    posterior: Posterior,
    settings: SamplerSettings,
    proposal: LabelProposal,
    verify_cache: bool,
}

impl Sampler {
    pub fn new(
        data: &ObservationSequence,
        prior: &ClassPrior,
        settings: SamplerSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let posterior = Posterior::new(data, prior, settings.hyperprior)?;
        if settings.labels == LabelMode::ClampToTruth && posterior.truth().is_none() {
            return Err(Error::Config(
                "clamping labels to truth requires labeled data".into(),
            ));
        }
        let proposal = LabelProposal::new(posterior.classes(), settings.stay_weight);
        Ok(Self {
            posterior,
            settings,
            proposal,
            verify_cache: cfg!(debug_assertions),
        })
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn settings(&self) -> &SamplerSettings {
        &self.settings
    }

    /// Toggles the from-scratch check of the cached log posterior after
    /// every accepted move (on by default in debug builds).
    pub fn verify_cache(mut self, on: bool) -> Self {
        self.verify_cache = on;
        self
    }

    /// Builds a state from explicit values, computing its log posterior.
    pub fn state(
        &self,
        labels: Vec<ClassLabel>,
        theta: NoiseParams,
        kappa: f64,
        gamma: f64,
    ) -> Result<ChainState> {
        let mut state = ChainState {
            labels,
            theta,
            kappa,
            gamma,
            log_posterior: 0.0,
        };
        state.log_posterior = self.posterior.log_joint(&state)?;
        Ok(state)
    }

    /// Hyperparameters at their prior medians, noise parameters drawn from
    /// the implied prior, labels per the configured mode.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ChainState {
        let hp = self.posterior.hyperprior();
        let kappa = hp.kappa.median();
        let gamma = hp.gamma.median();
        let classes = self.posterior.classes();
        let draw = Gamma::new(kappa, gamma).expect("positive medians");
        let theta = (0..classes)
            .map(|_| draw.sample(rng).max(THETA_FLOOR))
            .collect();
        let labels = match (self.settings.labels, self.settings.init) {
            (LabelMode::ClampToTruth, _) => self.posterior.truth().expect("checked").to_vec(),
            (LabelMode::Sample, LabelInit::UniformRandom) => (0..self.posterior.len())
                .map(|_| ClassLabel::from_zero_based(rng.random_range(0..classes)))
                .collect(),
            (LabelMode::Sample, LabelInit::Argmax) => (0..self.posterior.len())
                .map(|i| self.posterior.observation(i).argmax())
                .collect(),
        };
        self.state(labels, NoiseParams::new(theta).expect("positive"), kappa, gamma)
            .expect("dimensions match by construction")
    }

    fn check_cache(&self, state: &ChainState) {
        if self.verify_cache {
            let fresh = self.posterior.log_joint(state).expect("valid state");
            assert!(
                (fresh - state.log_posterior).abs() <= 1e-8,
                "cached log posterior {} drifted from {}",
                state.log_posterior,
                fresh
            );
        }
    }

    /// One full sweep: every label, every `ln theta_m`, then `ln kappa` and
    /// `ln gamma`.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
        counts: &mut AcceptanceCounts,
    ) {
        if self.settings.labels == LabelMode::Sample {
            self.label_block(state, rng, counts);
        }
        self.theta_block(state, rng, counts);
        self.kappa_block(state, rng, counts);
        self.gamma_block(state, rng, counts);
    }

    fn label_block<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
        counts: &mut AcceptanceCounts,
    ) {
        for i in 0..state.labels.len() {
            let current = state.labels[i];
            let proposed = self.proposal.sample(current, rng);
            if proposed == current {
                continue;
            }
            counts.label_proposed += 1;
            let delta = self.posterior.observation_term(i, proposed, state.theta.get(proposed))
                - self.posterior.observation_term(i, current, state.theta.get(current));
            let correction =
                self.proposal.log_prob(proposed, current) - self.proposal.log_prob(current, proposed);
            if accept(delta + correction, rng) {
                state.labels[i] = proposed;
                state.log_posterior += delta;
                counts.label_accepted += 1;
                self.check_cache(state);
            }
        }
    }

    /// Per-class label counts and summed log components, the sufficient
    /// statistics of the `theta_m` conditionals.
    fn class_statistics(&self, state: &ChainState) -> (Vec<f64>, Vec<f64>) {
        let classes = self.posterior.classes();
        let mut n = vec![0.0; classes];
        let mut log_sum = vec![0.0; classes];
        for (i, &c) in state.labels.iter().enumerate() {
            n[c.zero_based()] += 1.0;
            log_sum[c.zero_based()] += self.posterior.log_obs(i, c);
        }
        (n, log_sum)
    }

    fn theta_block<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
        counts: &mut AcceptanceCounts,
    ) {
        let classes = self.posterior.classes();
        let (n, log_sum) = self.class_statistics(state);
        let step = self.settings.log_theta_step;
        for m in 0..classes {
            let label = ClassLabel::from_zero_based(m);
            let current = state.theta.get(label);
            let proposed = current * (step * rng.sample::<f64, _>(StandardNormal)).exp();
            counts.theta_proposed[m] += 1;
            if !(proposed.is_finite() && proposed > 0.0) {
                continue;
            }
            let likelihood = |t: f64| n[m] * hbni_normalizer(classes, t) + t * log_sum[m];
            let delta = likelihood(proposed) - likelihood(current)
                + self.posterior.theta_prior_term(proposed, state.kappa, state.gamma)
                - self.posterior.theta_prior_term(current, state.kappa, state.gamma);
            // Jacobian of the log transform.
            let jacobian = proposed.ln() - current.ln();
            if accept(delta + jacobian, rng) {
                state.theta.set(label, proposed);
                state.log_posterior += delta;
                counts.theta_accepted[m] += 1;
                self.check_cache(state);
            }
        }
    }

    fn kappa_block<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
        counts: &mut AcceptanceCounts,
    ) {
        let current = state.kappa;
        let proposed =
            current * (self.settings.log_kappa_step * rng.sample::<f64, _>(StandardNormal)).exp();
        counts.kappa_proposed += 1;
        if !(proposed.is_finite() && proposed > 0.0) {
            return;
        }
        let thetas = state.theta.theta();
        let delta = thetas
            .iter()
            .map(|&t| {
                self.posterior.theta_prior_term(t, proposed, state.gamma)
                    - self.posterior.theta_prior_term(t, current, state.gamma)
            })
            .sum::<f64>()
            + self.posterior.kappa_prior_term(proposed)
            - self.posterior.kappa_prior_term(current);
        if accept(delta + proposed.ln() - current.ln(), rng) {
            state.kappa = proposed;
            state.log_posterior += delta;
            counts.kappa_accepted += 1;
            self.check_cache(state);
        }
    }

    fn gamma_block<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
        counts: &mut AcceptanceCounts,
    ) {
        let current = state.gamma;
        let proposed =
            current * (self.settings.log_gamma_step * rng.sample::<f64, _>(StandardNormal)).exp();
        counts.gamma_proposed += 1;
        if !(proposed.is_finite() && proposed > 0.0) {
            return;
        }
        let thetas = state.theta.theta();
        let delta = thetas
            .iter()
            .map(|&t| {
                self.posterior.theta_prior_term(t, state.kappa, proposed)
                    - self.posterior.theta_prior_term(t, state.kappa, current)
            })
            .sum::<f64>()
            + self.posterior.gamma_prior_term(proposed)
            - self.posterior.gamma_prior_term(current);
        if accept(delta + proposed.ln() - current.ln(), rng) {
            state.gamma = proposed;
            state.log_posterior += delta;
            counts.gamma_accepted += 1;
            self.check_cache(state);
        }
    }

    /// Runs the configured number of sweeps from a fresh initial state.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<ChainSample>, AcceptanceCounts, Vec<Vec<u64>>) {
        let mut state = self.initial_state(rng);
        self.run_from(&mut state, rng)
    }

    /// Runs the configured sweeps starting from `state`; returns retained
    /// samples, acceptance counts and per-observation label tallies over the
    /// retained sweeps.
    pub fn run_from<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> (Vec<ChainSample>, AcceptanceCounts, Vec<Vec<u64>>) {
        let s = &self.settings;
        let classes = self.posterior.classes();
        let mut counts = AcceptanceCounts::new(classes);
        let mut label_tally = vec![vec![0u64; classes]; self.posterior.len()];
        let mut samples = Vec::with_capacity((s.iterations - s.burn_in) / s.thinning + 1);
        for it in 0..s.iterations {
            self.sweep(state, rng, &mut counts);
            if it >= s.burn_in && (it - s.burn_in).is_multiple_of(s.thinning) {
                samples.push(ChainSample::from_state(state));
                for (tally, c) in label_tally.iter_mut().zip(&state.labels) {
                    tally[c.zero_based()] += 1;
                }
            }
        }
        (samples, counts, label_tally)
    }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}

/// One sweep of the sampler, returning the updated state.
pub fn mh_step<R: Rng + ?Sized>(state: ChainState, sampler: &Sampler, rng: &mut R) -> ChainState {
    let mut state = state;
    let mut counts = AcceptanceCounts::new(sampler.posterior().classes());
    sampler.sweep(&mut state, rng, &mut counts);
    state
}

/// Runs a full chain and summarizes the retained samples.
pub fn run_chain(
    data: &ObservationSequence,
    prior: &ClassPrior,
    config: &MHConfig,
) -> Result<ChainSummary> {
    if data.is_empty() {
        return Err(Error::Empty("observations for inference"));
    }
    let sampler = Sampler::new(data, prior, config.settings.clone())?;
    let mut rng = rng::derive(config.seed, Purpose::Chain, 0);
    let (samples, counts, tally) = sampler.run(&mut rng);
    ChainSummary::new(config.clone(), data.classes(), samples, &counts, tally)
}
