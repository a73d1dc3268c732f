use proptest::prelude::*;

use persistence_core::estimator::{exponent_fit, FitMode, SurvivalCurve};
use persistence_core::fluctuation::{ladder_heights, phi_estimate, renewal_estimate, AreaWalk};
use persistence_core::model::{log_space, ChainSpec};
use persistence_core::parallel::run_replicas;
use persistence_core::rng::RngStream;
use persistence_core::sim::sample_path;
use persistence_core::functional::compute_trace;
use rand::Rng;

fn brute_ladder(s: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut epochs = vec![0];
    let mut best = s[0];
    for (k, v) in s.iter().enumerate().skip(1) {
        if *v > best {
            best = *v;
            epochs.push(k);
        }
    }
    let heights = epochs.iter().map(|&k| s[k]).collect();
    (epochs, heights)
}

fn steps() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-3i32..=3, 1..40).prop_map(|v| v.into_iter().map(f64::from).collect()),
        prop::collection::vec(-10.0f64..10.0, 1..40),
    ]
}

proptest! {
    #[test]
    fn ladder_matches_brute_force(s in steps()) {
        let w = AreaWalk::from_steps(s);
        let l = ladder_heights(&w);
        let (e, h) = brute_ladder(&w.partial_sums);
        prop_assert_eq!(l.epochs, e);
        prop_assert_eq!(l.heights.clone(), h);
        prop_assert!(l.heights.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn renewal_is_monotone(walks in prop::collection::vec(steps(), 2..20), top in 1.0f64..30.0) {
        let walks: Vec<AreaWalk> = walks.into_iter().map(AreaWalk::from_steps).collect();
        let z = log_space(0.1, top, 12);
        if let Ok(t) = renewal_estimate(&walks, &z, 1000) {
            prop_assert!(t.is_nondecreasing());
            prop_assert!(t.renewal.iter().all(|v| *v >= 1.0));
        }
    }

    #[test]
    fn empirical_phi_is_concave_and_increasing(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = RngStream::new(seed, 0);
        let dtau: Vec<f64> = (0..1000).map(|_| scale * rng.random::<f64>().powi(3)).collect();
        let q = log_space(1e-3 / scale, 10.0 / scale, 15);
        let t = phi_estimate(&dtau, &q).unwrap();
        prop_assert!(t.check_shape().is_ok());
    }

    #[test]
    fn fit_is_scale_equivariant(theta in 0.05f64..1.0, c in 0.01f64..1.0, lambda in 0.1f64..10.0) {
        let t = log_space(1.0, 1e5, 51);
        let s: Vec<f64> = t.iter().map(|t| c * t.powf(-theta)).collect();
        let a = exponent_fit(&SurvivalCurve::from_values(t.clone(), s.clone(), 1_000_000_000), Some((10.0, 1e4)), FitMode::PurePower).unwrap();
        // rescaling time by lambda leaves the exponent unchanged
        let ts: Vec<f64> = t.iter().map(|t| t * lambda).collect();
        let b = exponent_fit(&SurvivalCurve::from_values(ts, s, 1_000_000_000), Some((10.0 * lambda, 1e4 * lambda)), FitMode::PurePower).unwrap();
        prop_assert!((a.theta_hat - theta).abs() < 1e-10);
        prop_assert!((a.theta_hat - b.theta_hat).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn replicas_do_not_depend_on_workers(seed in any::<u64>(), workers in 2usize..9) {
        let chain = ChainSpec::srw(64, |x| x).unwrap();
        let go = |w| run_replicas(40, w, seed, |_, rng| {
            let p = sample_path(&chain, 50.0, chain.zero_index(), rng).unwrap();
            let tr = compute_trace(&p, chain.f_values(), chain.zero_index() as i32, chain.zero_mass()).unwrap();
            (tr.xi_at(50.0).unwrap().to_bits(), tr.first_passage(1.0).map(f64::to_bits))
        }).unwrap();
        prop_assert_eq!(go(1), go(workers));
    }
}
