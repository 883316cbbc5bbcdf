use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

use hbni::density::{log_dirichlet_generic, log_dirichlet_hbni, log_sum_exp};
use hbni::filters::{batch_state, FilterState, Method, NoiseModel};
use hbni::simplex::{
    ClassLabel, ClassPrior, NoiseParams, ObservationSequence, SimplexVector, CLAMP_EPSILON,
};

fn simplex(m: usize) -> impl Strategy<Value = SimplexVector> {
    prop::collection::vec(1e-6f64..1.0, m).prop_map(|v| SimplexVector::new(v).unwrap())
}

fn history(m: usize, max_len: usize) -> impl Strategy<Value = Vec<SimplexVector>> {
    prop::collection::vec(simplex(m), 1..=max_len)
}

fn normalized(log: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log);
    log.iter().map(|l| l - z).collect()
}

proptest! {
    #[test]
    fn specialized_density_matches_textbook(
        (o, c) in (2usize..=6).prop_flat_map(|m| (simplex(m), 0..m)),
        theta in 0.0f64..200.0,
    ) {
        let m = o.len();
        let mut alpha = vec![1.0; m];
        alpha[c] += theta;
        let total: f64 = alpha.iter().sum();
        let textbook = ln_gamma(total)
            + alpha.iter().zip(o.probs()).map(|(a, x)| (a - 1.0) * x.ln() - ln_gamma(*a)).sum::<f64>();
        let special = log_dirichlet_hbni(&o, ClassLabel::from_zero_based(c), theta);
        let generic = log_dirichlet_generic(&o, &alpha).unwrap();
        prop_assert!((special - textbook).abs() <= 1e-10);
        prop_assert!((generic - textbook).abs() <= 1e-10);
    }

    #[test]
    fn renormalizing_is_idempotent(v in prop::collection::vec(0.0f64..10.0, 2..8), scale in 0.01f64..100.0) {
        prop_assume!(v.iter().sum::<f64>() > 1e-6);
        let once = SimplexVector::new(v.clone()).unwrap();
        let twice = SimplexVector::new(once.probs().to_vec()).unwrap();
        let scaled = SimplexVector::new(v.iter().map(|x| x * scale).collect()).unwrap();
        for ((a, b), c) in once.probs().iter().zip(twice.probs()).zip(scaled.probs()) {
            prop_assert!((a - b).abs() <= 1e-15);
            prop_assert!((a - c).abs() <= 1e-12);
        }
        prop_assert!((once.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn recursive_equals_batch(
        (hist, prior, theta) in (2usize..=5).prop_flat_map(|m| (
            history(m, 200),
            simplex(m),
            prop::collection::vec(0.0f64..40.0, m),
        )),
    ) {
        let m = prior.len();
        let prior = ClassPrior::new(prior);
        let theta = NoiseParams::new(theta).unwrap();
        let mut ssbf = FilterState::ssbf(prior.clone()).unwrap();
        let mut hb = FilterState::hbni(prior.clone(), NoiseModel::Point(theta.clone())).unwrap();
        for o in &hist {
            ssbf.update(o).unwrap();
            hb.update(o).unwrap();
            let p = hb.posterior();
            prop_assert!((p.probs.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let clamped: Vec<SimplexVector> = hist.iter().map(|o| o.clamped(CLAMP_EPSILON)).collect();
        for c in 0..m {
            let lp = prior.probs()[c].ln();
            let t = theta.theta()[c];
            let (mut want_ssbf, mut want_hbni) = (lp, lp);
            for o in &clamped {
                let x = o.probs()[c].ln();
                want_ssbf += x - lp;
                want_hbni += ln_gamma(m as f64 + t) - ln_gamma(1.0 + t) + t * x;
            }
            prop_assert!((ssbf.log_posterior().unwrap()[c] - want_ssbf).abs() <= 1e-10);
            prop_assert!((hb.log_posterior().unwrap()[c] - want_hbni).abs() <= 1e-10);
        }
        let seq = ObservationSequence::new(m, hist).unwrap();
        let bat = batch_state(Method::Hbni, &seq, &prior, Some(NoiseModel::Point(theta))).unwrap();
        prop_assert_eq!(bat.log_posterior(), hb.log_posterior());
    }

    #[test]
    fn equal_theta_hbni_agrees_with_ssbf(
        hist in (2usize..=5).prop_flat_map(|m| history(m, 60)),
        theta in 0.05f64..50.0,
    ) {
        let m = hist[0].len();
        let prior = ClassPrior::uniform(m).unwrap();
        let mut ssbf = FilterState::ssbf(prior.clone()).unwrap();
        let noise = NoiseModel::Point(NoiseParams::new(vec![theta; m]).unwrap());
        let mut hb = FilterState::hbni(prior, noise).unwrap();
        for o in &hist {
            ssbf.update(o).unwrap();
            hb.update(o).unwrap();
            let (a, b) = (ssbf.log_posterior().unwrap(), hb.log_posterior().unwrap());
            // Equal concentration makes the HBNI posterior the SSBF posterior raised to theta.
            let scaled: Vec<f64> = normalized(&a).iter().map(|x| x * theta).collect();
            let tied = normalized(&scaled)
                .iter()
                .zip(normalized(&b))
                .all(|(x, y)| (x - y).abs() <= 1e-8);
            prop_assert!(tied);
            prop_assert_eq!(ssbf.decision(), hb.decision());
        }
    }

    #[test]
    fn single_observation_baselines_coincide(o in (2usize..=6).prop_flat_map(simplex)) {
        let prior = ClassPrior::uniform(o.len()).unwrap();
        let decisions: Vec<ClassLabel> = [Method::MaxOfMean, Method::Voting, Method::Ssbf]
            .into_iter()
            .map(|m| {
                let mut f = FilterState::new(m, prior.clone(), None).unwrap();
                f.update(&o).unwrap();
                f.decision()
            })
            .collect();
        prop_assert!(decisions.iter().all(|d| *d == o.argmax()));
    }
}

#[test]
fn near_one_hot_streams_do_not_underflow() {
    let m = 3;
    let prior = ClassPrior::uniform(m).unwrap();
    let noise = NoiseModel::Point(NoiseParams::new(vec![1.0, 6.0, 20.0]).unwrap());
    // Alternating confident evidence for class 2 and class 3.
    let a = SimplexVector::new(vec![1e-15, 1.0 - 2e-15, 1e-15]).unwrap();
    let b = SimplexVector::new(vec![1e-15, 1e-15, 1.0 - 2e-15]).unwrap();
    let mut filters = vec![
        FilterState::ssbf(prior.clone()).unwrap(),
        FilterState::hbni(prior, noise).unwrap(),
    ];
    for i in 0..10_000 {
        let o = if i % 3 == 0 { &a } else { &b };
        for f in filters.iter_mut() {
            f.update(o).unwrap();
        }
    }
    for f in &filters {
        let p = f.posterior();
        assert!(p.probs.probs().iter().all(|x| x.is_finite()));
        assert!((p.probs.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.probs.max() > 0.0);
    }
    assert_eq!(filters[0].decision().index(), 3);
    // Contradictory confident outputs are best explained by the noisiest class.
    assert_eq!(filters[1].decision().index(), 1);
}
