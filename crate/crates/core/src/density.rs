//! Log-density primitives for the Dirichlet observation model, the gamma
//! priors and the categorical class prior.
//!
//! Every gamma density here is parameterized by shape and SCALE.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::simplex::{ClassLabel, ClassPrior, SimplexVector};

/// Log density of `Dir(o; theta_c * e_c + 1)`.
///
/// This is the specialized form in which only the `c`-th concentration
/// departs from one:
/// `-lnΓ(1 + θ) + lnΓ(M + θ) + θ ln o_c`.
///
/// Returns `-inf` when `o_c = 0` and `theta_c > 0`. Callers that ingest raw
/// classifier output clamp it first (see [`SimplexVector::clamped`]).
pub fn log_dirichlet_hbni(o: &SimplexVector, c: ClassLabel, theta_c: f64) -> f64 {
    debug_assert!(theta_c >= 0.0, "noise parameter must be non-negative");
    let m = o.len() as f64;
    // lnΓ(M) is exact for the θ = 0 case: 0·ln o_c must not turn into NaN.
    if theta_c == 0.0 {
        return ln_gamma(m);
    }
    let oc = o.get(c);
    if oc == 0.0 {
        return f64::NEG_INFINITY;
    }
    hbni_normalizer(o.len(), theta_c) + theta_c * oc.ln()
}

/// `lnΓ(M + θ) - lnΓ(1 + θ)`, the log-normalizer of the specialized density.
#[inline]
pub fn hbni_normalizer(classes: usize, theta: f64) -> f64 {
    ln_gamma(classes as f64 + theta) - ln_gamma(1.0 + theta)
}

/// Standard Dirichlet log density with arbitrary positive concentrations.
pub fn log_dirichlet_generic(o: &SimplexVector, alpha: &[f64]) -> Result<f64> {
    if alpha.len() != o.len() {
        return Err(Error::Dimension {
            expected: o.len(),
            got: alpha.len(),
        });
    }
    if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::Domain(format!(
            "Dirichlet concentrations must be positive, got {a}"
        )));
    }
    let total: f64 = alpha.iter().sum();
    let mut log_density = ln_gamma(total);
    for (&a, &x) in alpha.iter().zip(o.probs()) {
        log_density -= ln_gamma(a);
        if a != 1.0 {
            if x == 0.0 {
                return Ok(if a > 1.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                });
            }
            log_density += (a - 1.0) * x.ln();
        }
    }
    Ok(log_density)
}

fn check_gamma_args(x: f64, shape: f64, scale: f64) -> Result<()> {
    for (name, v) in [("x", x), ("shape", shape), ("scale", scale)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!(
                "gamma density needs positive finite {name}, got {v}"
            )));
        }
    }
    Ok(())
}

/// Normalized log density of `Ga(x; shape, scale)`.
pub fn log_gamma_density(x: f64, shape: f64, scale: f64) -> Result<f64> {
    check_gamma_args(x, shape, scale)?;
    Ok(log_gamma_density_unchecked(x, shape, scale))
}

#[inline]
pub(crate) fn log_gamma_density_unchecked(x: f64, shape: f64, scale: f64) -> f64 {
    log_gamma_kernel(x, shape, scale) - ln_gamma(shape) - shape * scale.ln()
}

/// Unnormalized gamma log kernel `(shape - 1) ln x - x / scale`.
#[inline]
pub fn log_gamma_kernel(x: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * x.ln() - x / scale
}

/// `ln p_c`; `-inf` for a zero-probability class.
pub fn log_categorical(c: ClassLabel, prior: &ClassPrior) -> f64 {
    prior.get(c).ln()
}

/// Gamma CDF with shape/scale parameterization.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(shape, x / scale)
    }
}

/// Quantile of `Ga(shape, scale)` by bracketing and bisection.
pub fn gamma_quantile(p: f64, shape: f64, scale: f64) -> f64 {
    assert!((0.0..1.0).contains(&p) && p > 0.0, "quantile level in (0, 1)");
    let mut lo = 0.0;
    let mut hi = shape.max(1.0);
    while gamma_lr(shape, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(shape, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi) * scale
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
