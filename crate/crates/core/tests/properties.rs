use canonrep_core::bench::{interleave, lp_norm, recover_sums, sample_pairs};
use canonrep_core::canon::{
    augment, canonical_representation, coordinate_recovery, evaluate, law_of_representation, quantile_function,
};
use canonrep_core::generate::{generate_process, generate_tangent_pair, GenSpec};
use canonrep_core::json::{process_from_json, process_to_json, representation_from_json, representation_to_json};
use canonrep_core::mds::{construct_ci_copy, pair_law, represent_mds, verify_zero_sections};
use canonrep_core::process::{are_tangent, is_mds, joint_law, satisfies_ci, Component};
use canonrep_core::rational::{rat, Rational};
use canonrep_core::skorohod::harmonic_measure_unchecked;
use canonrep_core::transport::{build_transport, generalized_inverse, verify_measure_preserving};
use num::complex::Complex64;
use num::One;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn spec(seed: u64, depth: usize, branching: usize, dimension: usize, mds: bool) -> GenSpec {
    GenSpec { depth, branching, dimension, mds, seed }
}

fn cube_point(depth: usize, raw: &[u32]) -> Vec<Rational> {
    (0..depth).map(|i| rat(2 * raw[i % raw.len()] as i64 + 1, 1 << 21)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn representation_preserves_law(seed in any::<u64>(), depth in 1usize..=4, b in 1usize..=4, d in 1usize..=2) {
        let p = generate_process(&spec(seed, depth, b, d, false)).unwrap();
        let r = canonical_representation(&p);
        prop_assert_eq!(law_of_representation(&r), joint_law(&p));
    }

    #[test]
    fn quantile_agrees_with_first_cell(seed in any::<u64>(), raw in 1u32..(1 << 20)) {
        let p = generate_process(&spec(seed, 2, 5, 1, false)).unwrap();
        let r = canonical_representation(&p);
        let x = rat(2 * raw as i64 + 1, 1 << 21);
        let v = quantile_function(&p, &[], &x).unwrap();
        prop_assert_eq!(&evaluate(&r, &[x, rat(1, 2)]).unwrap()[0], &v);
    }

    #[test]
    fn coordinates_are_recovered(seed in any::<u64>(), raw in proptest::collection::vec(0u32..(1 << 20), 3)) {
        let p = generate_process(&spec(seed, 3, 4, 1, false)).unwrap();
        let r = canonical_representation(&p);
        let x = cube_point(3, &raw);
        let path = evaluate(&r, &x).unwrap();
        let cells = coordinate_recovery(&r, &path).unwrap();
        for (c, xi) in cells.iter().zip(&x) {
            prop_assert!(c.contains(xi));
        }
    }

    #[test]
    fn tie_breaks_invert(seed in any::<u64>(), raw in 0u32..(1 << 20)) {
        let p = generate_process(&spec(seed, 1, 6, 1, false)).unwrap();
        let aug = augment(&canonical_representation(&p));
        let x = rat(2 * raw as i64 + 1, 1 << 21);
        let (v, tie) = aug.evaluate(&[x.clone()]).unwrap().remove(0);
        prop_assert_eq!(generalized_inverse(&aug, &[], &v, &tie).unwrap(), x);
    }

    #[test]
    fn mds_fixtures_have_zero_sections(seed in any::<u64>(), depth in 1usize..=4, b in 1usize..=5) {
        let p = generate_process(&spec(seed, depth, b, 2, true)).unwrap();
        prop_assert!(is_mds(&p).holds());
        let r = represent_mds(&p).unwrap();
        prop_assert!(verify_zero_sections(&r).is_zero());
    }

    #[test]
    fn decoupled_copy_is_tangent_and_ci(seed in any::<u64>(), depth in 1usize..=3, b in 1usize..=3) {
        let p = generate_process(&spec(seed, depth, b, 1, seed % 2 == 0)).unwrap();
        let r = canonical_representation(&p);
        let pq = pair_law(&construct_ci_copy(&r));
        prop_assert!(are_tangent(&pq).holds());
        prop_assert!(satisfies_ci(&pq, Component::Second).holds());
        let law = joint_law(pq.process());
        let half = pq.half();
        let first = law.map_paths(|path| path.iter().map(|v| v.split_at(half).0).collect());
        let second = law.map_paths(|path| path.iter().map(|v| v.split_at(half).1).collect());
        let source = joint_law(&p);
        prop_assert_eq!(&first, &source);
        for n in 0..depth {
            prop_assert_eq!(second.step_marginal(n), source.step_marginal(n));
        }
    }

    #[test]
    fn transport_moves_h_onto_k(seed in any::<u64>(), depth in 1usize..=3, b in 1usize..=4, raw in proptest::collection::vec(0u32..(1 << 20), 8)) {
        let pq = generate_tangent_pair(&spec(seed, depth, b, 1, false)).unwrap();
        let base = canonical_representation(pq.process());
        for section in build_transport(&pq, &base).unwrap().iter().flatten() {
            prop_assert!(verify_measure_preserving(section).holds());
            let node = base.node_at(&section.prefix).unwrap();
            for &r in &raw {
                let x = rat(2 * r as i64 + 1, 1 << 21);
                let y = section.apply(&x).unwrap();
                let k = pq.component(&node.cells()[node.locate(&x)].value, Component::Second);
                let h = pq.component(&node.cells()[node.locate(&y)].value, Component::First);
                prop_assert_eq!(h, k);
            }
        }
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), depth in 1usize..=3, b in 1usize..=4) {
        let p = generate_process(&spec(seed, depth, b, 2, false)).unwrap();
        prop_assert_eq!(&process_from_json(&process_to_json(&p)).unwrap(), &p);
        let r = canonical_representation(&p);
        prop_assert_eq!(&representation_from_json(&representation_to_json(&r)).unwrap(), &r);
    }

    #[test]
    fn interleaving_recovers_sums(seed in any::<u64>()) {
        let p = generate_process(&spec(seed, 3, 3, 2, true)).unwrap();
        let batch = sample_pairs(&construct_ci_copy(&canonical_representation(&p)), 32, seed);
        for (d, e) in batch.d.iter().zip(&batch.e) {
            let (sd, se) = recover_sums(&interleave(d, e));
            let plain = d.iter().skip(1).fold(d[0].clone(), |a, v| a.add(v));
            let other = e.iter().skip(1).fold(e[0].clone(), |a, v| a.add(v));
            prop_assert_eq!(sd, plain);
            prop_assert_eq!(se, other);
        }
    }

    #[test]
    fn lp_norm_scales(xs in proptest::collection::vec(-100.0f64..100.0, 1..50), c in 0.1f64..10.0, p in 1.1f64..6.0) {
        let sums: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let scaled: Vec<Vec<f64>> = xs.iter().map(|x| vec![c * x]).collect();
        if let (Ok(a), Ok(b)) = (lp_norm(&sums, p), lp_norm(&scaled, p)) {
            prop_assert!((b.estimate - c * a.estimate).abs() <= 1e-9 * b.estimate.max(1.0));
        }
    }

    #[test]
    fn harmonic_measure_is_additive(r in 0.0f64..0.999, arg in 0.0f64..TAU, cuts in proptest::collection::vec(0.0f64..TAU, 1..63)) {
        let z = Complex64::from_polar(r, arg);
        let mut cuts = cuts;
        cuts.push(0.0);
        cuts.push(TAU);
        cuts.sort_by(f64::total_cmp);
        let total: f64 = cuts.windows(2).map(|w| harmonic_measure_unchecked(z, w[0], w[1])).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn law_sums_to_one() {
    for seed in 0..10 {
        let p = generate_process(&spec(seed, 4, 4, 1, false)).unwrap();
        assert!(joint_law(&p).total().is_one());
    }
}
