//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use hbni::bench::{self, ExperimentConfig};
use hbni::density::{log_dirichlet_generic, log_dirichlet_hbni};
use hbni::filters::{FilterState, Method};
use hbni::genmodel::{sample_observation, GenerativeConfig};
use hbni::inference::{LabelMode, Sampler};
use hbni::macroobs::{estimate_model, MacroModelOptions};
use hbni::rng::seeded;
use hbni::simplex::{ClassLabel, ClassPrior, NoiseParams, SimplexVector};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, name: &'static str, started: Instant, (pass, detail): (bool, String)) {
    let line = format!(
        "{} {name}: {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    println!("{line}");
    results.push(Outcome { name, pass, detail });
}

fn random_simplex<R: Rng>(m: usize, rng: &mut R) -> SimplexVector {
    let g = Gamma::new(0.7, 1.0).unwrap();
    let v: Vec<f64> = (0..m).map(|_| g.sample(rng) + 1e-12).collect();
    SimplexVector::new(v).unwrap()
}

/// Textbook Dirichlet log-density.
fn dirichlet_oracle(o: &[f64], alpha: &[f64]) -> f64 {
    let total: f64 = alpha.iter().sum();
    ln_gamma(total)
        + alpha
            .iter()
            .zip(o)
            .map(|(a, x)| (a - 1.0) * x.ln() - ln_gamma(*a))
            .sum::<f64>()
}

fn theta_recovery() -> (bool, String) {
    let config = ExperimentConfig::default();
    let report = bench::run_theta_recovery_repetitions(&config, 50).unwrap();
    let coverage_ok = report.coverage_rates.iter().all(|&c| c >= 0.8);
    (
        report.ordering_rate >= 0.95 && coverage_ok,
        format!(
            "ordering {:.2} (>= 0.95), coverage per class {:?} (each >= 0.80)",
            report.ordering_rate, report.coverage_rates
        ),
    )
}

fn hyperparam_shift() -> (bool, String) {
    let config = ExperimentConfig::hyperparam_shift(100.0).unwrap();
    let report = bench::run_theta_recovery(&config, None).unwrap();
    let prior = report.summary.implied_theta_median_prior;
    let post = report.summary.implied_theta_median_posterior;
    (
        (prior - 100.0).abs() < 1e-6 && post < 50.0,
        format!("implied median prior {prior:.2}, posterior {post:.2} (< 50)"),
    )
}

fn diff_sigma(a: &bench::ErrorPoint, b: &bench::ErrorPoint) -> f64 {
    let var = a.std_error().powi(2) + b.std_error().powi(2);
    (a.rate - b.rate) / var.sqrt()
}

fn error_vs_n(results: &mut Vec<Outcome>) {
    let started = Instant::now();
    let config = ExperimentConfig::default();
    let set = bench::run_error_vs_n(&config).unwrap();
    let baselines = [Method::Voting, Method::MaxOfMean, Method::Ssbf];
    let hbni10 = *set.curve(Method::Hbni).unwrap().at(10).unwrap();

    let mut pass = hbni10.rate < 0.05;
    let mut detail = format!("HBNI {:.4}", hbni10.rate);
    for b in baselines {
        let p = set.curve(b).unwrap().at(10).unwrap();
        let z = diff_sigma(p, &hbni10);
        pass &= z > 3.0;
        detail += &format!(", {b} {:.4} ({z:.1} sigma)", p.rate);
    }
    record(results, "error-vs-N (a) N=10", started, (pass, detail));

    let started = Instant::now();
    let reference = set.decisions(Method::Voting, 1);
    let identical = baselines.iter().all(|&b| set.decisions(b, 1) == reference);
    let ssbf1 = set.curve(Method::Ssbf).unwrap().at(1).unwrap();
    let hbni1 = set.curve(Method::Hbni).unwrap().at(1).unwrap();
    let z = diff_sigma(ssbf1, hbni1);
    record(
        results,
        "error-vs-N (b) N=1",
        started,
        (
            identical && z > 3.0,
            format!(
                "baselines trial-wise identical: {identical}; baseline {:.4} vs HBNI {:.4} ({z:.1} sigma)",
                ssbf1.rate, hbni1.rate
            ),
        ),
    );

    let started = Instant::now();
    let mut pass = true;
    let mut detail = format!("target {:.4};", hbni10.rate);
    for b in baselines {
        let first = set
            .curve(b)
            .unwrap()
            .points
            .iter()
            .find(|p| p.rate <= hbni10.rate)
            .map(|p| p.n);
        pass &= first.is_some_and(|n| n >= 30);
        detail += &format!(
            " {b} first at N={}",
            first.map_or("never".to_string(), |n| n.to_string())
        );
    }
    record(results, "error-vs-N (c) baselines need N >= 30", started, (pass, detail));
}

fn density_equivalence() -> (bool, String) {
    let mut rng = seeded(11);
    let mut worst: f64 = 0.0;
    for i in 0..100_000 {
        let m = 2 + i % 5;
        let o = random_simplex(m, &mut rng);
        let c = ClassLabel::from_zero_based(rng.random_range(0..m));
        let theta = if i % 10 == 0 { 0.0 } else { rng.random_range(0.0..100.0) };
        let mut alpha = vec![1.0; m];
        alpha[c.zero_based()] += theta;
        let special = log_dirichlet_hbni(&o, c, theta);
        let generic = log_dirichlet_generic(&o, &alpha).unwrap();
        let oracle = dirichlet_oracle(o.probs(), &alpha);
        worst = worst.max((special - oracle).abs()).max((generic - oracle).abs());
    }
    (worst <= 1e-10, format!("max |diff| {worst:.2e} over 1e5 draws, M in 2..=6"))
}

fn recursive_vs_batch() -> (bool, String) {
    let mut rng = seeded(12);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let m = 2 + trial % 4;
        let n = 1 + rng.random_range(0..200);
        let prior = ClassPrior::new(random_simplex(m, &mut rng));
        let theta = NoiseParams::new((0..m).map(|_| rng.random_range(0.0..30.0)).collect()).unwrap();
        let history: Vec<SimplexVector> = (0..n).map(|_| random_simplex(m, &mut rng)).collect();
        let mut ssbf = FilterState::ssbf(prior.clone()).unwrap();
        let mut hb = FilterState::hbni(prior.clone(), hbni::filters::NoiseModel::Point(theta.clone())).unwrap();
        for o in &history {
            ssbf.update(o).unwrap();
            hb.update(o).unwrap();
        }
        let eps = hbni::simplex::CLAMP_EPSILON;
        for mi in 0..m {
            let c = ClassLabel::from_zero_based(mi);
            let lp = prior.probs()[mi].ln();
            let batch_ssbf = lp + history.iter().map(|o| o.clamped(eps).probs()[mi].ln() - lp).sum::<f64>();
            let batch_hbni = lp
                + history
                    .iter()
                    .map(|o| {
                        let oc = o.clamped(eps);
                        let t = theta.theta()[mi];
                        ln_gamma(m as f64 + t) - ln_gamma(1.0 + t) + t * oc.get(c).ln()
                    })
                    .sum::<f64>();
            worst = worst
                .max((ssbf.log_posterior().unwrap()[mi] - batch_ssbf).abs())
                .max((hb.log_posterior().unwrap()[mi] - batch_hbni).abs());
        }
    }
    (worst <= 1e-10, format!("max |diff| {worst:.2e} over 200 histories, N <= 200"))
}

fn mh_vs_grid() -> (bool, String) {
    let truth = 6.0;
    let theta = NoiseParams::new(vec![truth, 3.0]).unwrap();
    let class = ClassLabel::from_zero_based(0);
    let mut rng = seeded(21);
    let obs = (0..20).map(|_| sample_observation(class, &theta, &mut rng)).collect();
    let data = hbni::simplex::ObservationSequence::with_labels(2, obs, vec![class; 20]).unwrap();

    let mut settings = hbni::inference::SamplerSettings {
        labels: LabelMode::ClampToTruth,
        log_kappa_step: 0.0,
        log_gamma_step: 0.0,
        burn_in: 5_000,
        thinning: 10,
        ..Default::default()
    };
    settings.iterations = settings.burn_in + 100_000 * settings.thinning;
    let (kappa, gamma) = (settings.hyperprior.kappa.median(), settings.hyperprior.gamma.median());
    let prior = ClassPrior::uniform(2).unwrap();
    let sampler = Sampler::new(&data, &prior, settings).unwrap().verify_cache(false);
    let mut start = sampler
        .state(labels_of(&data), NoiseParams::new(vec![1.0, 1.0]).unwrap(), kappa, gamma)
        .unwrap();
    let (samples, _, _) = sampler.run_from(&mut start, &mut seeded(22));
    let mut draws: Vec<f64> = samples.iter().map(|s| s.theta[0]).collect();
    draws.sort_by(f64::total_cmp);

    // Unnormalized log posterior of theta_1 on a grid over (0, 200].
    let grid: Vec<f64> = (1..=2000).map(|k| k as f64 * 0.1).collect();
    let log_post: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let prior = (kappa - 1.0) * t.ln() - t / gamma;
            prior
                + data
                    .iter()
                    .map(|o| {
                        let mut alpha = vec![1.0, 1.0];
                        alpha[0] += t;
                        dirichlet_oracle(o.probs(), &alpha)
                    })
                    .sum::<f64>()
        })
        .collect();
    let top = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = log_post.iter().map(|l| (l - top).exp()).collect();
    // Trapezoid CDF with the density taken to vanish at zero.
    let mut cdf = vec![0.0; grid.len()];
    let mut acc = 0.5 * dens[0] * grid[0];
    cdf[0] = acc;
    for k in 1..grid.len() {
        acc += 0.5 * (dens[k] + dens[k - 1]) * (grid[k] - grid[k - 1]);
        cdf[k] = acc;
    }
    let total = acc;
    cdf.iter_mut().for_each(|c| *c /= total);
    let grid_median = {
        let k = cdf.iter().position(|&c| c >= 0.5).unwrap();
        let (c0, c1) = (if k == 0 { 0.0 } else { cdf[k - 1] }, cdf[k]);
        let t0 = if k == 0 { 0.0 } else { grid[k - 1] };
        t0 + (0.5 - c0) / (c1 - c0) * (grid[k] - t0)
    };
    let n = draws.len() as f64;
    let mut sup: f64 = 0.0;
    for (t, c) in grid.iter().zip(&cdf) {
        let emp = draws.partition_point(|d| d <= t) as f64 / n;
        sup = sup.max((emp - c).abs());
    }
    let mh_median = hbni::inference::quantile(&draws, 0.5);
    let rel = (mh_median - grid_median).abs() / grid_median;
    (
        rel < 0.05 && sup < 0.02 && draws.len() == 100_000,
        format!(
            "median MH {mh_median:.3} vs grid {grid_median:.3} ({:.2}%), CDF sup {sup:.4}, {} samples",
            rel * 100.0,
            draws.len()
        ),
    )
}

fn labels_of(data: &hbni::simplex::ObservationSequence) -> Vec<ClassLabel> {
    data.labels().unwrap().to_vec()
}

fn macro_model() -> (bool, String) {
    let options = MacroModelOptions::default();
    let clean = GenerativeConfig::fixed(&[1000.0; 3], 31).unwrap();
    let noise = clean.realized_theta().unwrap();
    let model = estimate_model(&clean, &noise, &options).unwrap();
    let mut worst: f64 = 0.0;
    for (c, row) in model.confusion.iter().enumerate() {
        for (l, p) in row.iter().enumerate() {
            worst = worst.max((p - if c == l { 1.0 } else { 0.0 }).abs());
        }
    }

    let reference = GenerativeConfig::three_class_reference(32);
    let noise = reference.realized_theta().unwrap();
    let model = estimate_model(&reference, &noise, &options).unwrap();
    let diag: Vec<f64> = (0..3).map(|c| model.confusion[c][c]).collect();
    let weakest = diag[0] < diag[1] && diag[0] < diag[2];
    let (c1, c3) = (ClassLabel::from_zero_based(0), ClassLabel::from_zero_based(2));
    let se = (model.std_tau(c1).powi(2) / model.trials[0] as f64
        + model.std_tau(c3).powi(2) / model.trials[2] as f64)
        .sqrt();
    let z = (model.mean_tau(c1) - model.mean_tau(c3)) / se;
    (
        worst <= 0.01 && weakest && z > 3.0,
        format!(
            "noiseless max deviation {worst:.4}; diagonal {diag:.3?}; mean tau {:.2} vs {:.2} ({z:.1} sigma)",
            model.mean_tau(c1),
            model.mean_tau(c3)
        ),
    )
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_hbni"))
        .args(args)
        .args(["--seed", "7", "--threads", &threads.to_string(), "--out"])
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success(), "hbni {args:?} failed");
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> (bool, String) {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("config.json");
    let mut c = ExperimentConfig {
        trials: 300,
        ..Default::default()
    };
    c.sampler.iterations = 20_000;
    c.sampler.burn_in = 5_000;
    std::fs::write(&config, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    let config = config.to_str().unwrap().to_string();

    let data_dir = root.path().join("data");
    run_cli(&data_dir, 1, &["generate", "--config", &config]);
    let data = data_dir.join("dataset.csv").to_str().unwrap().to_string();
    let update = format!("4:{}", root.path().join("noise.json").display());
    std::fs::write(root.path().join("noise.json"), r#"{"theta": [2.0, 5.0, 15.0]}"#).unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["generate"],
        vec!["infer"],
        vec!["infer", "--data", &data],
        vec!["filter", "--data", &data, "--method", "ssbf"],
        vec!["filter", "--data", &data, "--method", "hbni", "--noise-update", &update],
        vec!["error-curve"],
        vec!["macro-model"],
        vec!["replay", "--data", &data],
    ];
    let mut mismatched = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let mut args = cmd.clone();
        args.extend(["--config", &config]);
        let mut snaps = Vec::new();
        for (run, threads) in [(0, 1), (1, 1), (2, 4)] {
            let dir = root.path().join(format!("cmd{i}-run{run}"));
            run_cli(&dir, threads, &args);
            snaps.push(snapshot(&dir));
        }
        if snaps[0].is_empty() || snaps.iter().any(|s| *s != snaps[0]) {
            mismatched.push(cmd[0]);
        }
    }
    (
        mismatched.is_empty(),
        format!(
            "{} command lines x (2 runs at 1 thread + 1 run at 4 threads); mismatched: {mismatched:?}",
            commands.len()
        ),
    )
}

fn main() {
    let mut results = Vec::new();
    let t = Instant::now();
    record(&mut results, "theta recovery (50 chains)", t, theta_recovery());
    let t = Instant::now();
    record(&mut results, "hyperparameter shrinkage", t, hyperparam_shift());
    error_vs_n(&mut results);
    let t = Instant::now();
    record(&mut results, "density oracle equivalence", t, density_equivalence());
    let t = Instant::now();
    record(&mut results, "recursive vs batch filtering", t, recursive_vs_batch());
    let t = Instant::now();
    record(&mut results, "single-class MH vs grid quadrature", t, mh_vs_grid());
    let t = Instant::now();
    record(&mut results, "macro-observation model sanity", t, macro_model());
    let t = Instant::now();
    record(&mut results, "CLI determinism", t, determinism());

    let failed: Vec<&Outcome> = results.iter().filter(|r| !r.pass).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    for f in &failed {
        println!("  failed: {} ({})", f.name, f.detail);
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
