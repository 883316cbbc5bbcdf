//! Starts from a hyperprior expecting near-perfect classifiers (median
//! theta of 100) and shows the posterior pulling it down.

use hbni::bench::{run_theta_recovery, ExperimentConfig};

fn main() -> hbni::Result<()> {
    let config = ExperimentConfig::hyperparam_shift(100.0)?;
    let report = run_theta_recovery(&config, None)?;
    let s = &report.summary;
    println!("implied theta median: prior {:.1}, posterior {:.1}", s.implied_theta_median_prior, s.implied_theta_median_posterior);
    Ok(())
}
