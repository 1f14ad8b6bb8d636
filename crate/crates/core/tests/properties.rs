use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stratsample::analysis::{binned_error, category_fractions, interpolate_log_kappa, reweight_categories, weighted_estimate};
use stratsample::geometry::TangentBasis;
use stratsample::models::{Model, Trimer};
use stratsample::proposals::{acceptance_probability, propose_lose, tangential_components};
use stratsample::sampler::{ChainState, TraceRecord};
use stratsample::selfcheck::{gradient_error, tangent_error};
use stratsample::trace::{read_trace_csv, write_trace_csv};

fn records(ids: &[u8]) -> Vec<TraceRecord> {
    ids.iter()
        .enumerate()
        .map(|(k, id)| TraceRecord { step: k as u64, manifold_id: id.to_string(), m_l: *id as usize, observables: vec![*id as f64] })
        .collect()
}

proptest! {
    #[test]
    fn constant_series_has_zero_error(c in -1e3f64..1e3, len in 8usize..200, bins in 2usize..8) {
        let est = binned_error(&vec![c; len], bins).unwrap();
        prop_assert!((est.value - c).abs() <= 1e-12 * (1.0 + c.abs()));
        prop_assert!(est.std_error <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn equal_weights_give_the_plain_mean(values in prop::collection::vec(-10f64..10.0, 8..100), w in 0.1f64..10.0) {
        let est = weighted_estimate(&values, &vec![w; values.len()], 4).unwrap();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((est.value - mean).abs() < 1e-12);
    }

    #[test]
    fn fractions_sum_to_one(ids in prop::collection::vec(0u8..5, 8..300)) {
        let recs = records(&ids);
        let fr = category_fractions(&recs, |r| r.manifold_id.clone(), 4).unwrap();
        let total: f64 = fr.values().map(|e| e.value).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let weighted = reweight_categories(&recs, |r| 1.5f64.powf(r.observables[0]), |r| r.manifold_id.clone(), 4).unwrap();
        let total: f64 = weighted.values().map(|e| e.value).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 1..20)) {
        let recs: Vec<TraceRecord> = values
            .iter()
            .enumerate()
            .map(|(k, v)| TraceRecord { step: k as u64, manifold_id: "EI".into(), m_l: 1, observables: vec![*v] })
            .collect();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &["v".to_string()], &recs).unwrap();
        prop_assert_eq!(read_trace_csv(&buf[..]).unwrap().records, recs);
    }

    #[test]
    fn acceptance_probability_is_a_clipped_exponential(a in -50f64..50.0, b in -50f64..50.0) {
        let (pa, pb) = (acceptance_probability(a), acceptance_probability(b));
        prop_assert!((0.0..=1.0).contains(&pa));
        prop_assert!((pa - a.exp().min(1.0)).abs() < 1e-15);
        if a <= b {
            prop_assert!(pa <= pb);
        }
    }

    #[test]
    fn log_kappa_interpolation_hits_anchors(k1 in 0.1f64..1.0, k2 in 2.0f64..10.0, v1 in -5f64..5.0, v2 in -5f64..5.0, t in 0f64..1.0) {
        let anchors = [(k1, v1), (k2, v2)];
        prop_assert!((interpolate_log_kappa(&anchors, k1).unwrap() - v1).abs() < 1e-12);
        prop_assert!((interpolate_log_kappa(&anchors, k2).unwrap() - v2).abs() < 1e-12);
        let mid = interpolate_log_kappa(&anchors, (k1.ln() + t * (k2.ln() - k1.ln())).exp()).unwrap();
        prop_assert!(mid >= v1.min(v2) - 1e-12 && mid <= v1.max(v2) + 1e-12);
    }

    #[test]
    fn lose_step_inverts(d in 2usize..8, sigma in 0.05f64..2.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = TangentBasis::identity(d);
        let mut v_opt = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        v_opt /= v_opt.norm();
        let step = propose_lose(&t, &v_opt, sigma, &mut rng);
        prop_assert!((step.v.norm() - 1.0).abs() < 1e-12);
        prop_assert!(step.v.dot(&v_opt) > 0.0);
        let back = tangential_components(&step.v, &v_opt, &step.perp).unwrap();
        prop_assert!((back - &step.r).amax() < 1e-9 * (1.0 + step.r.amax()));
        prop_assert!(tangential_components(&(-&step.v), &v_opt, &step.perp).is_none());
    }

    #[test]
    fn open_trimer_geometry(theta in (PI / 3.0 + 1e-3)..(5.0 * PI / 3.0 - 1e-3)) {
        let model = Trimer::new(1.0);
        let x = Trimer::configuration(theta);
        prop_assert!((Trimer::bond_angle(x.as_slice()) - theta).abs() < 1e-12);
        let state = ChainState::new(x.clone(), model.initial_state().labels().clone());
        prop_assert!(state.validate(&model, 1e-12).is_ok());
        prop_assert!(tangent_error(&model, &state).unwrap() < 1e-10);
        prop_assert!(gradient_error(&model, x.as_slice()) < 1e-5);
    }
}
