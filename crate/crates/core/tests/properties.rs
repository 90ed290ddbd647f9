mod common;

use common::{divergence, idiv, normalized};
use lifted_nmf::*;
use proptest::prelude::*;

/// A probability matrix and a compatible interior pair.
fn instance() -> impl Strategy<Value = (ProbMatrix, FactorPair)> {
    (2usize..=6, 2usize..=6, 1usize..=3)
        .prop_flat_map(|(m, n, k)| {
            let k = k.min(m).min(n);
            (
                Just((m, k, n)),
                prop::collection::vec(0.0f64..1.0, m * n),
                prop::collection::vec(1e-3f64..1.0, m * k),
                prop::collection::vec(1e-3f64..1.0, k * n),
            )
        })
        .prop_filter("needs mass", |(_, p, _, _)| p.iter().sum::<f64>() > 1e-3)
        .prop_map(|((m, k, n), p, qm, qp)| {
            let p = ProbMatrix::with_tolerance(NonnegMatrix::new(m, n, normalized(p)).unwrap(), 1e-12)
                .unwrap();
            let mut rows = Vec::with_capacity(k * n);
            for row in qp.chunks(n) {
                rows.extend(normalized(row.to_vec()));
            }
            let pair = FactorPair::with_tolerance(
                NonnegMatrix::new(m, k, normalized(qm)).unwrap(),
                NonnegMatrix::new(k, n, rows).unwrap(),
                1e-12,
            )
            .unwrap();
            (p, pair)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scalar_divergence_matches_definition(p in 1e-6f64..1e3, q in 1e-6f64..1e3) {
        let d = i_div_scalar(p, q).unwrap().value();
        prop_assert!(d >= 0.0);
        prop_assert!((d - idiv(p, q)).abs() <= 1e-12 * idiv(p, q).max(1.0));
    }

    #[test]
    fn every_step_descends((p, pair) in instance()) {
        let d0 = divergence(&p, &pair);
        for next in [step_simultaneous(&p, &pair).unwrap(), step_sequential(&p, &pair).unwrap()] {
            prop_assert!(divergence(&p, &next) <= d0 + 1e-12);
            prop_assert!((next.qminus().sum() - 1.0).abs() <= 1e-12);
            prop_assert!(next.qplus().row_sums().iter().all(|s| (s - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn gain_splits_exactly((p, pair) in instance()) {
        let next = step_simultaneous(&p, &pair).unwrap();
        let c = gain_components(&p, &pair, &next).unwrap();
        prop_assert!(c.gain_p >= 0.0 && c.gain_q >= 0.0);
        prop_assert!(c.residual <= 1e-10 * divergence(&p, &pair).max(1.0));
    }

    #[test]
    fn hellinger_is_dominated_by_divergence((p, pair) in instance()) {
        let q = tensor_from_pair(&pair);
        let pstar = best_p_tensor(&p, &q).unwrap();
        let h = hellinger_tensor(&pstar, &q).unwrap();
        let d = i_div_tensor(&pstar, &q).unwrap().value();
        prop_assert!(h <= d + 1e-12);
    }

    #[test]
    fn auxiliary_gaps_have_closed_forms((p, pair) in instance()) {
        let ids = aux_gain_identities(&p, &pair).unwrap();
        prop_assert!(ids.holds(1e-10), "{:?}", ids);
        let touch = aux_g(&p, &pair, &pair).unwrap();
        prop_assert!(touch.slack.abs() <= 1e-12);
    }

    #[test]
    fn projections_land_in_their_sets((p, pair) in instance()) {
        let q = tensor_from_pair(&pair);
        prop_assert!(is_member_q(&q, 1e-12).unwrap().member);
        let pstar = best_p_tensor(&p, &q).unwrap();
        prop_assert!(is_member_p(&pstar, &p, 1e-12).unwrap().member);
        let back = best_q_pair(&pstar).unwrap();
        prop_assert!(is_member_q(&tensor_from_pair(&back), 1e-12).unwrap().member);
        prop_assert!((collapse(&pstar).max_abs_diff(p.matrix()).unwrap()) <= 1e-15);
    }

    #[test]
    fn scaling_the_data_does_not_change_the_normalized_problem(
        (p, _) in instance(),
        scale in 1e-3f64..1e6,
    ) {
        let v = p.matrix().scaled(scale).unwrap();
        let sp = normalize_problem(&v).unwrap();
        prop_assert!((sp.total() - scale).abs() <= 1e-12 * scale);
        prop_assert!(sp.p().matrix().max_abs_diff(p.matrix()).unwrap() <= 1e-15);
    }
}
