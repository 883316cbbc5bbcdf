//! Statistical checks of the MCMC sampler against forward simulation.

use rand_distr::{Distribution, Gamma};

use hbni::genmodel::{generate_dataset, sample_class, sample_observation, GenerativeConfig};
use hbni::inference::{run_chain, AcceptanceCounts, Sampler, SamplerSettings};
use hbni::rng::seeded;
use hbni::simplex::{ClassPrior, GammaPrior, Hyperprior, NoiseParams, ObservationSequence};

fn tame_hyperprior() -> Hyperprior {
    Hyperprior {
        kappa: GammaPrior::new(4.0, 0.5).unwrap(),
        gamma: GammaPrior::new(4.0, 0.5).unwrap(),
    }
}

/// Mean and batch-means standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let batches = 50;
    let size = xs.len() / batches;
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

// Successive-conditional simulation: alternating one sweep with a fresh draw
// of the data must leave the joint prior invariant.
#[test]
fn geweke_successive_conditional() {
    let classes = 2;
    let n = 4;
    let hp = tame_hyperprior();
    let prior = ClassPrior::uniform(classes).unwrap();
    let settings = SamplerSettings {
        hyperprior: hp,
        ..Default::default()
    };
    let mut rng = seeded(101);
    let draws = 1_000_000;

    let functionals = |kappa: f64, gamma: f64, theta: &[f64], first_label: usize| {
        [kappa.ln(), gamma.ln(), theta[0].ln(), first_label as f64]
    };

    // Forward (marginal-conditional) draws.
    let kd = Gamma::new(hp.kappa.shape, hp.kappa.scale).unwrap();
    let gd = Gamma::new(hp.gamma.shape, hp.gamma.scale).unwrap();
    let mut forward = vec![Vec::new(); 4];
    for _ in 0..draws {
        let (k, g) = (kd.sample(&mut rng), gd.sample(&mut rng));
        let td = Gamma::new(k, g).unwrap();
        let theta: Vec<f64> = (0..classes).map(|_| td.sample(&mut rng)).collect();
        let c = sample_class(&prior, &mut rng);
        for (f, v) in forward.iter_mut().zip(functionals(k, g, &theta, c.zero_based())) {
            f.push(v);
        }
    }

    // Successive-conditional chain.
    let (mut kappa, mut gamma) = (2.0, 2.0);
    let mut theta = NoiseParams::new(vec![4.0; classes]).unwrap();
    let mut labels: Vec<_> = (0..n).map(|_| sample_class(&prior, &mut rng)).collect();
    let mut chain = vec![Vec::new(); 4];
    let mut counts = AcceptanceCounts::new(classes);
    for _ in 0..draws {
        let obs = labels
            .iter()
            .map(|&c| sample_observation(c, &theta, &mut rng))
            .collect();
        let data = ObservationSequence::new(classes, obs).unwrap();
        let sampler = Sampler::new(&data, &prior, settings.clone())
            .unwrap()
            .verify_cache(false);
        let mut state = sampler.state(labels, theta, kappa, gamma).unwrap();
        sampler.sweep(&mut state, &mut rng, &mut counts);
        labels = state.labels;
        theta = state.theta;
        kappa = state.kappa;
        gamma = state.gamma;
        for (f, v) in chain
            .iter_mut()
            .zip(functionals(kappa, gamma, theta.theta(), labels[0].zero_based()))
        {
            f.push(v);
        }
    }

    for (i, name) in ["ln kappa", "ln gamma", "ln theta_1", "c_1 = 2"].iter().enumerate() {
        let (mf, sf) = mean_se(&forward[i]);
        let (mc, sc) = mean_se(&chain[i]);
        let z = (mf - mc) / (sf * sf + sc * sc).sqrt();
        assert!(z.abs() < 3.0, "{name}: forward {mf:.4} vs chain {mc:.4} (z = {z:.2})");
    }
}

#[test]
fn acceptance_rates_within_tuning_bounds() {
    let data = generate_dataset(&GenerativeConfig::three_class_reference(5), 15, Some(5)).unwrap();
    let config = SamplerSettings::default().with_seed(5);
    let summary = run_chain(&data, &ClassPrior::uniform(3).unwrap(), &config).unwrap();
    let rates = &summary.acceptance;
    for (name, r) in rates
        .theta
        .iter()
        .map(|r| ("theta", *r))
        .chain([("kappa", rates.kappa), ("gamma", rates.gamma)])
    {
        assert!((0.1..=0.7).contains(&r), "{name} acceptance {r}");
    }
}

#[test]
fn one_hot_evidence_drives_theta_up() {
    let classes = 2;
    let mut medians = Vec::new();
    for n in [2usize, 8, 32] {
        let obs = (0..n)
            .map(|i| {
                let mut v = vec![0.0; classes];
                v[i % classes] = 1.0;
                hbni::simplex::SimplexVector::new(v).unwrap()
            })
            .collect();
        let labels = (0..n)
            .map(|i| hbni::simplex::ClassLabel::from_zero_based(i % classes))
            .collect();
        let data = ObservationSequence::with_labels(classes, obs, labels).unwrap();
        let settings = SamplerSettings {
            labels: hbni::inference::LabelMode::ClampToTruth,
            iterations: 20_000,
            burn_in: 5_000,
            ..Default::default()
        };
        let summary = run_chain(&data, &ClassPrior::uniform(classes).unwrap(), &settings.with_seed(3)).unwrap();
        medians.push(summary.theta[0].median);
    }
    assert!(medians.windows(2).all(|w| w[1] > w[0]), "{medians:?}");
}
