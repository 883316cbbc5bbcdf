//! Infers the noise parameters from 15 unlabeled observations, sampling the labels.

use hbni::bench::{run_theta_recovery, ExperimentConfig};

fn main() -> hbni::Result<()> {
    let config = ExperimentConfig {
        seed: 3,
        ..Default::default()
    };
    let report = run_theta_recovery(&config, None)?;
    let truth = report.truth.as_deref().unwrap_or_default();
    for (m, p) in report.summary.theta.iter().enumerate() {
        println!(
            "theta_{}: median {:6.2}  90% [{:6.2}, {:6.2}]  truth {}",
            m + 1,
            p.median,
            p.lower,
            p.upper,
            truth[m]
        );
    }
    println!("kappa median {:.2}, gamma median {:.2}", report.summary.kappa.median, report.summary.gamma.median);
    println!("acceptance {:?}", report.summary.acceptance);
    println!("ordering recovered: {:?}", report.ordering_recovered);
    Ok(())
}
