//! Error versus number of observations on a reduced grid.

use hbni::bench::{run_error_vs_n, ExperimentConfig};

fn main() -> hbni::Result<()> {
    let config = ExperimentConfig {
        n_grid: vec![1, 2, 5, 10, 20, 30, 40, 50],
        trials: 1000,
        ..Default::default()
    };
    let set = run_error_vs_n(&config)?;
    println!("calibrated theta {:.2?}", set.calibrated_theta);
    print!("{:>12}", "N");
    for n in &config.n_grid {
        print!("{n:>8}");
    }
    println!();
    for curve in &set.curves {
        print!("{:>12}", curve.method.name());
        for p in &curve.points {
            print!("{:>8.4}", p.rate);
        }
        println!();
    }
    Ok(())
}
