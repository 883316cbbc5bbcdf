//! Probability-simplex domain types shared by every other module.
//!
//! Class labels are 1-based wherever they cross an external boundary (CSV,
//! JSON, `Display`) and 0-based in memory.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on the element sum of a stored simplex vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Vectors whose pre-normalization sum falls below this are rejected.
pub const MIN_MASS: f64 = 1e-12;

/// Floor applied to classifier outputs before density evaluation.
pub const CLAMP_EPSILON: f64 = 1e-9;

/// A point on the (M-1)-simplex: one classifier output over M classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector {
    probs: Vec<f64>,
}

impl SimplexVector {
    /// Validates and normalizes `values` onto the simplex.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Simplex(format!(
                "need at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Simplex(format!(
                "components must be finite and non-negative, found {bad}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if sum < MIN_MASS {
            return Err(Error::Simplex(format!("total mass {sum} is too small")));
        }
        let mut probs = values;
        if (sum - 1.0).abs() > f64::EPSILON {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self { probs })
    }

    /// The uniform point (1/M, ..., 1/M).
    pub fn uniform(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Simplex(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        Ok(Self {
            probs: vec![1.0 / classes as f64; classes],
        })
    }

    /// The vertex for `label`.
    pub fn vertex(label: ClassLabel, classes: usize) -> Result<Self> {
        label.check(classes)?;
        let mut probs = vec![0.0; classes];
        probs[label.zero_based()] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    /// Number of classes M.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.probs[label.zero_based()]
    }

    /// Index of the largest component; ties go to the lowest index.
    pub fn argmax(&self) -> ClassLabel {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate().skip(1) {
            if *p > self.probs[best] {
                best = i;
            }
        }
        ClassLabel(best)
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Floors every component at `eps` and renormalizes.
    ///
    /// Components already at or above `eps` keep their relative sizes, and a
    /// vector with no component below `eps` is returned unchanged.
    pub fn clamped(&self, eps: f64) -> Self {
        if self.probs.iter().all(|p| *p >= eps) {
            return self.clone();
        }
        let floored: Vec<f64> = self.probs.iter().map(|p| p.max(eps)).collect();
        let sum: f64 = floored.iter().sum();
        Self {
            probs: floored.into_iter().map(|p| p / sum).collect(),
        }
    }

    pub(crate) fn from_normalized_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        Self { probs }
    }
}

impl Serialize for SimplexVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.probs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SimplexVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        SimplexVector::new(values).map_err(serde::de::Error::custom)
    }
}

/// A class label. Stored 0-based, displayed and serialized 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassLabel(usize);

impl ClassLabel {
    /// Builds a label from a 1-based index, checked against `classes`.
    pub fn new(index: usize, classes: usize) -> Result<Self> {
        if index == 0 || index > classes {
            return Err(Error::ClassOutOfRange { index, classes });
        }
        Ok(Self(index - 1))
    }

    pub fn from_zero_based(index: usize) -> Self {
        Self(index)
    }

    pub fn zero_based(self) -> usize {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 + 1
    }

    pub fn check(self, classes: usize) -> Result<()> {
        if self.0 >= classes {
            return Err(Error::ClassOutOfRange {
                index: self.index(),
                classes,
            });
        }
        Ok(())
    }

    /// All labels for `classes` classes in order.
    pub fn all(classes: usize) -> impl Iterator<Item = ClassLabel> {
        (0..classes).map(ClassLabel)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u64(self.index() as u64)
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let index = usize::deserialize(deserializer)?;
        if index == 0 {
            return Err(serde::de::Error::custom("class labels are 1-based"));
        }
        Ok(Self(index - 1))
    }
}

/// Categorical prior over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassPrior(SimplexVector);

impl ClassPrior {
    pub fn new(p: SimplexVector) -> Self {
        Self(p)
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        SimplexVector::uniform(classes).map(Self)
    }

    pub fn probs(&self) -> &[f64] {
        self.0.probs()
    }

    pub fn as_simplex(&self) -> &SimplexVector {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.0.get(label)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.probs().iter().all(|p| *p > 0.0)
    }
}

/// Per-class Dirichlet concentration scalars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseParams {
    theta: Vec<f64>,
}

impl NoiseParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Empty("noise parameters"));
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::Domain(format!(
                "noise parameters must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.theta[label.zero_based()]
    }

    pub fn classes(&self) -> usize {
        self.theta.len()
    }

    pub(crate) fn set(&mut self, label: ClassLabel, value: f64) {
        self.theta[label.zero_based()] = value;
    }
}

impl<'de> Deserialize<'de> for NoiseParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            theta: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        NoiseParams::new(raw.theta).map_err(serde::de::Error::custom)
    }
}

/// Shape/scale parameters of a gamma prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        let prior = Self { shape, scale };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("shape", self.shape), ("scale", self.scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "gamma prior {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn median(&self) -> f64 {
        crate::density::gamma_quantile(0.5, self.shape, self.scale)
    }
}

/// Fixed gamma hyperpriors on the shared shape `kappa` and scale `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperprior {
    pub kappa: GammaPrior,
    pub gamma: GammaPrior,
}

impl Default for Hyperprior {
    fn default() -> Self {
        Self {
            kappa: GammaPrior {
                shape: 2.0,
                scale: 2.0,
            },
            gamma: GammaPrior {
                shape: 2.0,
                scale: 2.0,
            },
        }
    }
}

impl Hyperprior {
    pub fn validate(&self) -> Result<()> {
        self.kappa.validate()?;
        self.gamma.validate()
    }

    /// Median of `Ga(kappa, gamma)` evaluated at the hyperprior medians.
    pub fn implied_theta_median(&self) -> f64 {
        gamma_median(self.kappa.median(), self.gamma.median())
    }

    /// A hyperprior whose shape and scale medians place the implied noise
    /// parameter median at `target`.
    ///
    /// Both hyperpriors use shape `hyper_shape`; the `kappa` median is pinned
    /// at `kappa_median` and the `gamma` scale is solved for.
    pub fn with_theta_median(target: f64, kappa_median: f64, hyper_shape: f64) -> Result<Self> {
        if !(target > 0.0 && kappa_median > 0.0 && hyper_shape > 0.0) {
            return Err(Error::Config(
                "targets must be strictly positive".to_string(),
            ));
        }
        let unit_median = crate::density::gamma_quantile(0.5, hyper_shape, 1.0);
        let gamma_median = target / crate::density::gamma_quantile(0.5, kappa_median, 1.0);
        Ok(Self {
            kappa: GammaPrior::new(hyper_shape, kappa_median / unit_median)?,
            gamma: GammaPrior::new(hyper_shape, gamma_median / unit_median)?,
        })
    }
}

fn gamma_median(shape: f64, scale: f64) -> f64 {
    crate::density::gamma_quantile(0.5, shape, scale)
}

/// Shared gamma-prior parameters together with their hyperprior constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Gamma shape shared by every noise parameter.
    pub kappa: f64,
    /// Gamma scale shared by every noise parameter (rate is `1 / gamma`).
    pub gamma: f64,
    #[serde(default)]
    pub hyperprior: Hyperprior,
}

impl HyperParams {
    pub fn new(kappa: f64, gamma: f64, hyperprior: Hyperprior) -> Result<Self> {
        let params = Self {
            kappa,
            gamma,
            hyperprior,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        GammaPrior::new(self.kappa, self.gamma)?;
        self.hyperprior.validate()
    }

    /// Median of the noise-parameter prior `Ga(kappa, gamma)`.
    pub fn theta_median(&self) -> f64 {
        gamma_median(self.kappa, self.gamma)
    }
}

/// An ordered stream of classifier outputs sharing one class count, with
/// optional ground-truth labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSequence {
    classes: usize,
    observations: Vec<SimplexVector>,
    labels: Option<Vec<ClassLabel>>,
}

impl ObservationSequence {
    pub fn new(classes: usize, observations: Vec<SimplexVector>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Simplex(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if let Some(o) = observations.iter().find(|o| o.len() != classes) {
            return Err(Error::Dimension {
                expected: classes,
                got: o.len(),
            });
        }
        Ok(Self {
            classes,
            observations,
            labels: None,
        })
    }

    pub fn with_labels(
        classes: usize,
        observations: Vec<SimplexVector>,
        labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        let mut seq = Self::new(classes, observations)?;
        if labels.len() != seq.observations.len() {
            return Err(Error::Dimension {
                expected: seq.observations.len(),
                got: labels.len(),
            });
        }
        for label in &labels {
            label.check(classes)?;
        }
        seq.labels = Some(labels);
        Ok(seq)
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

    pub fn observations(&self) -> &[SimplexVector] {
        &self.observations
    }

    pub fn labels(&self) -> Option<&[ClassLabel]> {
        self.labels.as_deref()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SimplexVector> {
        self.observations.iter()
    }

    /// The first `n` observations (and labels).
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            classes: self.classes,
            observations: self.observations[..n].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
        }
    }
}
