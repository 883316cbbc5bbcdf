//! Forward sampling from the hierarchical noise model.
//!
//! Classes are drawn from a categorical prior, noise parameters either fixed
//! or drawn from `Ga(kappa, gamma)`, and each classifier output from
//! `Dir(theta_c * e_c + 1)` via normalized gamma variates.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose, SimRng};
use crate::simplex::{
    ClassLabel, ClassPrior, HyperParams, NoiseParams, ObservationSequence, SimplexVector,
};

/// Where the true noise parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    /// Known per-class concentrations.
    Fixed(NoiseParams),
    /// Concentrations drawn once per dataset from `Ga(kappa, gamma)`.
    Hierarchical(HyperParams),
}

/// Class count, class prior and noise source of the generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub classes: usize,
    /// Categorical class prior; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<ClassPrior>,
    pub noise: NoiseSource,
}

impl ModelSpec {
    /// Fixed-truth model with a uniform prior.
    pub fn fixed(theta: &[f64]) -> Result<Self> {
        let spec = Self {
            classes: theta.len(),
            prior: None,
            noise: NoiseSource::Fixed(NoiseParams::new(theta.to_vec())?),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The three-class setup with heterogeneous noise `theta = (1, 6, 20)`.
    pub fn three_class_reference() -> Self {
        Self::fixed(&[1.0, 6.0, 20.0]).expect("reference model is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "at least 2 classes are required, got {}",
                self.classes
            )));
        }
        if let Some(prior) = &self.prior {
            if prior.classes() != self.classes {
                return Err(Error::Config(format!(
                    "prior has {} classes, model has {}",
                    prior.classes(),
                    self.classes
                )));
            }
        }
        match &self.noise {
            NoiseSource::Fixed(theta) if theta.classes() != self.classes => {
                Err(Error::Config(format!(
                    "noise parameters have {} classes, model has {}",
                    theta.classes(),
                    self.classes
                )))
            }
            NoiseSource::Fixed(_) => Ok(()),
            NoiseSource::Hierarchical(hyper) => hyper.validate(),
        }
    }

    pub fn class_prior(&self) -> ClassPrior {
        self.prior
            .clone()
            .unwrap_or_else(|| ClassPrior::uniform(self.classes).expect("classes >= 2"))
    }

    pub fn with_seed(self, seed: u64) -> GenerativeConfig {
        GenerativeConfig { model: self, seed }
    }
}

/// A model together with the seed that fixes every draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
}

impl GenerativeConfig {
    pub fn fixed(theta: &[f64], seed: u64) -> Result<Self> {
        Ok(ModelSpec::fixed(theta)?.with_seed(seed))
    }

    pub fn three_class_reference(seed: u64) -> Self {
        ModelSpec::three_class_reference().with_seed(seed)
    }

    pub fn classes(&self) -> usize {
        self.model.classes
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()
    }

    pub fn class_prior(&self) -> ClassPrior {
        self.model.class_prior()
    }

    /// The noise parameters this config generates with. Hierarchical configs
    /// draw them from the dataset stream reserved for that purpose.
    pub fn realized_theta(&self) -> Result<NoiseParams> {
        self.validate()?;
        match &self.model.noise {
            NoiseSource::Fixed(theta) => Ok(theta.clone()),
            NoiseSource::Hierarchical(hyper) => {
                let mut rng = rng::derive(self.seed, Purpose::Dataset, 0);
                let theta = (0..self.model.classes)
                    .map(|_| sample_theta(hyper, &mut rng))
                    .collect();
                NoiseParams::new(theta)
            }
        }
    }
}

/// `c ~ Cat(p)` by inverse-CDF lookup.
pub fn sample_class<R: Rng + ?Sized>(prior: &ClassPrior, rng: &mut R) -> ClassLabel {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let probs = prior.probs();
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return ClassLabel::from_zero_based(i);
        }
    }
    // Rounding left u above the accumulated mass: fall back to the last
    // class with non-zero probability.
    let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1);
    ClassLabel::from_zero_based(last)
}

/// `o ~ Dir(theta_c * e_c + 1)` over `classes` components.
pub fn sample_observation<R: Rng + ?Sized>(
    c: ClassLabel,
    theta: &NoiseParams,
    rng: &mut R,
) -> SimplexVector {
    let classes = theta.classes();
    let theta_c = theta.get(c);
    let peak = Gamma::new(1.0 + theta_c, 1.0).expect("shape >= 1");
    let mut draws = Vec::with_capacity(classes);
    for m in 0..classes {
        let g: f64 = if m == c.zero_based() && theta_c > 0.0 {
            peak.sample(rng)
        } else {
            Exp1.sample(rng)
        };
        draws.push(g);
    }
    let sum: f64 = draws.iter().sum();
    SimplexVector::from_normalized_unchecked(draws.into_iter().map(|g| g / sum).collect())
}

/// `theta ~ Ga(kappa, scale gamma)`.
pub fn sample_theta<R: Rng + ?Sized>(hyper: &HyperParams, rng: &mut R) -> f64 {
    Gamma::new(hyper.kappa, hyper.gamma)
        .expect("validated hyperparameters")
        .sample(rng)
}

/// Draws a labeled dataset of `n` observations.
///
/// With `per_class`, labels are stratified: `per_class` observations of class
/// 1, then class 2, and so on, so `n` must equal `classes * per_class`.
/// Otherwise each label is drawn from the class prior.
pub fn generate_dataset(
    config: &GenerativeConfig,
    n: usize,
    per_class: Option<usize>,
) -> Result<ObservationSequence> {
    config.validate()?;
    if let Some(k) = per_class {
        if n != k * config.classes() {
            return Err(Error::Config(format!(
                "stratified generation needs N = M * per_class = {}, got {n}",
                k * config.classes()
            )));
        }
    }
    let theta = config.realized_theta()?;
    let prior = config.class_prior();
    let mut rng = rng::derive(config.seed, Purpose::Dataset, 1);
    let mut observations = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = match per_class {
            Some(k) => ClassLabel::from_zero_based(i / k),
            None => sample_class(&prior, &mut rng),
        };
        observations.push(sample_observation(c, &theta, &mut rng));
        labels.push(c);
    }
    ObservationSequence::with_labels(config.classes(), observations, labels)
}

/// An endless stream of observations for one true class.
pub struct ObservationStream<'a> {
    class: ClassLabel,
    theta: &'a NoiseParams,
    rng: SimRng,
}

impl<'a> ObservationStream<'a> {
    pub fn new(class: ClassLabel, theta: &'a NoiseParams, rng: SimRng) -> Self {
        Self { class, theta, rng }
    }
}

impl Iterator for ObservationStream<'_> {
    type Item = SimplexVector;

    fn next(&mut self) -> Option<SimplexVector> {
        Some(sample_observation(self.class, self.theta, &mut self.rng))
    }
}
