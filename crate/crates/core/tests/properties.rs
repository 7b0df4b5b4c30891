use std::collections::BTreeMap;

use hpo_core::io::{model_from_json, model_to_json};
use hpo_core::mask::{brute_force_count, count_a, count_intersection, k_res_closed_form, materialize, MaskSpec};
use hpo_core::pauli::{hamming_distance, weight, PauliString};
use hpo_core::ptm::{compose_global, effective_ptm, lift_edge, Coo, SparsePtm, TopologyGraph};
use hpo_core::qem::{density_from_pauli_vector, pauli_vector_from_density, DensityMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

/// Random trace-preserving delta: rows 1.. only.
fn arb_delta(n: usize, max_entries: usize) -> impl Strategy<Value = SparsePtm> {
    let dim = 1usize << (2 * n);
    proptest::collection::btree_map((1..dim, 0..dim), -0.2f64..0.2, 0..max_entries).prop_map(move |m| {
        let entries: Vec<Coo> = m.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        SparsePtm::from_entries(n, entries).unwrap()
    })
}

fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (0..1usize << (2 * n)).prop_map(move |i| PauliString::decode(i, n).unwrap())
}

proptest! {
    #[test]
    fn text_round_trip(p in (1usize..=8).prop_flat_map(arb_pauli)) {
        let text = p.to_string();
        let back: PauliString = text.parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn hamming_bounds(a in arb_pauli(6), b in arb_pauli(6)) {
        let d = hamming_distance(&a, &b).unwrap();
        prop_assert!(d <= weight(&a) + weight(&b));
        prop_assert!(d >= weight(&a).abs_diff(weight(&b)));
    }

    #[test]
    fn masks_are_symmetric(n in 2usize..=6, i in 0usize..4096, j in 0usize..4096) {
        let dim = 1usize << (2 * n);
        let (i, j) = (i % dim, j % dim);
        for spec in [MaskSpec::baseline(n), MaskSpec::residual(n)] {
            prop_assert_eq!(spec.contains(i, j), spec.contains(j, i));
        }
    }

    #[test]
    fn composition_is_associative_and_trace_preserving(
        a in arb_delta(2, 20), b in arb_delta(2, 20), c in arb_delta(2, 20)
    ) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
        prop_assert!(left.is_trace_preserving());
        let dense = a.to_dense() * b.to_dense() * c.to_dense();
        prop_assert!((left.to_dense() - dense).abs().max() < 1e-12);
    }

    #[test]
    fn disjoint_edges_commute(a in arb_delta(2, 12), b in arb_delta(2, 12)) {
        let la = lift_edge(&a, (0, 1), 4).unwrap();
        let lb = lift_edge(&b, (2, 3), 4).unwrap();
        let ab = la.compose(&lb).unwrap();
        let ba = lb.compose(&la).unwrap();
        prop_assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);
        let graph = TopologyGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let global = compose_global(&graph, &BTreeMap::from([((0, 1), a.clone()), ((2, 3), b.clone())])).unwrap();
        prop_assert!(global.max_abs_diff(&ab).unwrap() < 1e-12);
    }

    #[test]
    fn effective_model_keeps_frozen_off_mask(frozen in arb_delta(3, 60), seed in 0usize..1485, v in -0.1f64..0.1) {
        let mask = materialize(&MaskSpec::residual(3)).unwrap();
        let (i, j) = mask.pairs()[seed];
        let eff = effective_ptm(&frozen, &[(i, j, v)], &mask).unwrap();
        for &(r, c, d) in frozen.delta() {
            if (r, c) != (i, j) {
                prop_assert_eq!(eff.delta_at(r, c).to_bits(), d.to_bits());
            }
        }
        prop_assert!((eff.delta_at(i, j) - frozen.delta_at(i, j) - v).abs() < 1e-15);
    }

    #[test]
    fn model_json_round_trip(m in arb_delta(2, 40)) {
        let text = model_to_json(&m, None).unwrap();
        prop_assert_eq!(model_from_json(&text).unwrap(), m);
    }

    #[test]
    fn density_pauli_round_trip(n in 1usize..=3, re in proptest::collection::vec(-1.0f64..1.0, 8), im in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let dim = 1usize << n;
        let mut amps: Vec<Complex64> = (0..dim).map(|k| Complex64::new(re[k], im[k])).collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        amps.iter_mut().for_each(|z| *z /= norm);
        let rho = DensityMatrix::pure(n, &amps).unwrap();
        let back = density_from_pauli_vector(&pauli_vector_from_density(&rho).unwrap()).unwrap();
        let err: f64 = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }
}

#[test]
fn closed_forms_match_brute_force() {
    for n in 2..=5 {
        let brute = brute_force_count(&MaskSpec::residual(n)).unwrap();
        assert_eq!(brute, k_res_closed_form(n), "n={n}");
        assert_eq!(2 * count_a(n) - count_intersection(n), brute, "n={n}");
        assert_eq!(materialize(&MaskSpec::residual(n)).unwrap().len() as u64, brute);
    }
}

#[test]
fn dense_identity_matches_sparse_identity() {
    for n in 1..=3 {
        let dim = 1usize << (2 * n);
        assert_eq!(SparsePtm::identity(n).unwrap().to_dense(), DMatrix::<f64>::identity(dim, dim));
    }
}
