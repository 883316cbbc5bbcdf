use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibrate, ExperimentConfig};
use crate::error::Result;
use crate::filters::{FilterState, Method};
use crate::genmodel::{sample_class, sample_observation};
use crate::io::{fmt_f64, provenance_line};
use crate::rng::{self, Purpose};

const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` out of `trials` at 95%.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    // The bounds bracket p exactly; min/max only absorb rounding at 0 and 1.
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Misclassification rate of one method at one observation count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub n: usize,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorPoint {
    fn new(n: usize, errors: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(errors, trials);
        Self {
            n,
            trials,
            errors,
            rate: errors as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    /// Binomial standard error of the rate.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub method: Method,
    pub points: Vec<ErrorPoint>,
}

impl ErrorCurve {
    pub fn at(&self, n: usize) -> Option<&ErrorPoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

/// One scored decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub method: Method,
    pub n: usize,
    pub trial: usize,
    pub correct: bool,
}

/// Error curves for every configured method plus the long-form outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveSet {
    pub curves: Vec<ErrorCurve>,
    /// Noise point estimate handed to the HBNI filter.
    pub calibrated_theta: Vec<f64>,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

impl ErrorCurveSet {
    pub fn curve(&self, method: Method) -> Option<&ErrorCurve> {
        self.curves.iter().find(|c| c.method == method)
    }

    /// Correctness flags of `method` at `n`, ordered by trial.
    pub fn decisions(&self, method: Method, n: usize) -> Vec<bool> {
        self.outcomes
            .iter()
            .filter(|o| o.method == method && o.n == n)
            .map(|o| o.correct)
            .collect()
    }
}

/// Classification error versus stream length.
///
/// Noise for HBNI is inferred once from an independent labeled calibration
/// set; each trial then draws a true class, streams `max(N grid)`
/// observations and scores every method's argmax at each grid point.
pub fn run_error_vs_n(config: &ExperimentConfig) -> Result<ErrorCurveSet> {
    config.validate()?;
    let calibration = calibrate(config)?;
    let generative = config.generative();
    let truth = generative.realized_theta()?;
    let prior = generative.class_prior();
    let max_n = *config.n_grid.iter().max().expect("validated non-empty");
    let mut grid = config.n_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let methods = config.filters.clone();
    // Fail on unbuildable filters before fanning out.
    for &m in &methods {
        FilterState::new(m, prior.clone(), Some(calibration.noise.clone()))?;
    }

    let per_trial: Vec<Vec<TrialOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::derive(config.seed, Purpose::Trial, trial as u64);
            let class = sample_class(&prior, &mut rng);
            let mut filters: Vec<FilterState> = methods
                .iter()
                .map(|&m| {
                    FilterState::new(m, prior.clone(), Some(calibration.noise.clone()))
                        .expect("checked above")
                })
                .collect();
            let mut outcomes = Vec::with_capacity(grid.len() * methods.len());
            let mut next = 0;
            for n in 1..=max_n {
                let o = sample_observation(class, &truth, &mut rng);
                for f in filters.iter_mut() {
                    f.update(&o).expect("dimensions match");
                }
                if grid[next] == n {
                    for f in &filters {
                        outcomes.push(TrialOutcome {
                            method: f.method(),
                            n,
                            trial,
                            correct: f.decision() == class,
                        });
                    }
                    next += 1;
                }
            }
            outcomes
        })
        .collect();

    let outcomes: Vec<TrialOutcome> = per_trial.into_iter().flatten().collect();
    let curves = methods
        .iter()
        .map(|&method| {
            let points = grid
                .iter()
                .map(|&n| {
                    let errors = outcomes
                        .iter()
                        .filter(|o| o.method == method && o.n == n && !o.correct)
                        .count() as u64;
                    ErrorPoint::new(n, errors, config.trials as u64)
                })
                .collect();
            ErrorCurve { method, points }
        })
        .collect();
    Ok(ErrorCurveSet {
        curves,
        calibrated_theta: calibration.point.theta().to_vec(),
        outcomes,
    })
}

/// Long form, one row per scored decision: `method,N,trial,correct`.
pub fn write_error_long_csv<W: Write>(mut out: W, set: &ErrorCurveSet, hash: &str) -> Result<()> {
    out.write_all(provenance_line(hash).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "N", "trial", "correct"])?;
    for o in &set.outcomes {
        w.write_record([
            o.method.name(),
            &o.n.to_string(),
            &o.trial.to_string(),
            if o.correct { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregated: `method,N,trials,errors,rate,ci_low,ci_high`.
pub fn write_error_curve_csv<W: Write>(mut out: W, set: &ErrorCurveSet, hash: &str) -> Result<()> {
    out.write_all(provenance_line(hash).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "N", "trials", "errors", "rate", "ci_low", "ci_high"])?;
    for curve in &set.curves {
        for p in &curve.points {
            w.write_record([
                curve.method.name().to_string(),
                p.n.to_string(),
                p.trials.to_string(),
                p.errors.to_string(),
                fmt_f64(p.rate),
                fmt_f64(p.ci_low),
                fmt_f64(p.ci_high),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_point_estimate() {
        for (e, n) in [(0, 10), (3, 10), (10, 10), (37, 2000)] {
            let (lo, hi) = wilson_interval(e, n);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }

    #[test]
    fn small_curve_is_deterministic() {
        let mut config = ExperimentConfig {
            trials: 50,
            n_grid: vec![1, 3, 5],
            ..Default::default()
        };
        config.sampler.iterations = 2000;
        config.sampler.burn_in = 500;
        let a = run_error_vs_n(&config).unwrap();
        let b = run_error_vs_n(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.outcomes.len(), 50 * 3 * 4);
        let mut long = Vec::new();
        write_error_long_csv(&mut long, &a, "h").unwrap();
        assert_eq!(String::from_utf8(long).unwrap().lines().count(), 2 + 600);
        let mut agg = Vec::new();
        write_error_curve_csv(&mut agg, &a, "h").unwrap();
        assert_eq!(String::from_utf8(agg).unwrap().lines().count(), 2 + 12);
        for curve in &a.curves {
            for p in &curve.points {
                assert!(p.ci_low <= p.rate && p.rate <= p.ci_high);
            }
        }
    }
}
