use cnml_core::aiger::{pad_wires, parse_aag, render_aag};
use cnml_core::datagen::{
    augment_dataset, build_batches, generate_pairs, random_circuit, read_records, write_records, AugmentConfig,
    FilterMode, OracleBudget, PadMode, PairGenConfig, VerdictCache,
};
use cnml_core::ltl::{eval_on_lasso, parse_ltl, random_formula, render_ltl, split_spec, Lasso, LtlFormula};
use cnml_core::verifier::{ltl_to_buchi, model_check, validate_witness, EmptinessAlgorithm, Limits, Verdict};
use cnml_core::Circuit;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn props(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("p{k}")).collect()
}

fn random_lasso(rng: &mut ChaCha8Rng, props: Vec<String>) -> Lasso {
    let top = 1u64 << props.len();
    let prefix = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..top)).collect();
    let cycle = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..top)).collect();
    Lasso::new(props, prefix, cycle).unwrap()
}

/// Up to four propositions drawn from the circuit's wires.
fn circuit_formula(rng: &mut ChaCha8Rng, c: &Circuit, depth: usize) -> LtlFormula {
    let mut wires = c.input_names();
    wires.extend(c.output_names());
    wires.shuffle(rng);
    wires.truncate(4);
    random_formula(rng, &wires, depth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ltl_render_parse_round_trip(seed in any::<u64>(), depth in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, &props(4), depth);
        let text = render_ltl(&f);
        prop_assert_eq!(parse_ltl(&text).unwrap(), f);
    }

    #[test]
    fn aag_render_parse_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(3, 2, 3, 8, &mut rng).unwrap();
        let text = render_aag(&c);
        let back = parse_aag(&text).unwrap();
        prop_assert_eq!(render_aag(&back), text);
        prop_assert_eq!(back, c);
    }

    #[test]
    fn buchi_membership_matches_lasso_semantics(seed in any::<u64>(), depth in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = props(3);
        let f = random_formula(&mut rng, &ps, depth);
        let ba = ltl_to_buchi(&f).unwrap();
        for _ in 0..8 {
            let w = random_lasso(&mut rng, ps.clone());
            prop_assert_eq!(ba.accepts(&w).unwrap(), eval_on_lasso(&f, &w).unwrap(), "{} on {:?}", f, w);
        }
    }

    #[test]
    fn emptiness_algorithms_agree_and_witnesses_validate(seed in any::<u64>(), depth in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(rng.gen_range(1..=3), 2, 3, 6, &mut rng).unwrap();
        let f = circuit_formula(&mut rng, &c, depth);
        let ndfs = model_check(&c, &f, &Limits::default()).unwrap();
        let scc = model_check(&c, &f, &Limits { algorithm: EmptinessAlgorithm::Scc, ..Limits::default() }).unwrap();
        prop_assert_eq!(ndfs.is_satisfied(), scc.is_satisfied());
        for v in [&ndfs, &scc] {
            if let Verdict::Violates(w) = v {
                prop_assert!(validate_witness(&c, &f, w), "witness for {} fails", f);
            }
        }
    }

    #[test]
    fn padding_preserves_original_wires(seed in any::<u64>(), extra_in in 0usize..3, extra_out in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(2, 2, 3, 8, &mut rng).unwrap();
        let p = pad_wires(&c, 2 + extra_in, 2 + extra_out).unwrap();
        prop_assert_eq!((p.num_inputs(), p.num_outputs()), (2 + extra_in, 2 + extra_out));
        let steps: Vec<Vec<bool>> = (0..100).map(|_| (0..2 + extra_in).map(|_| rng.gen()).collect()).collect();
        let short: Vec<Vec<bool>> = steps.iter().map(|s| s[..2].to_vec()).collect();
        let a = c.run(&short).unwrap();
        let b = p.run(&steps).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x[..], &y[..2]);
        }
    }
}

#[test]
fn figure_one_verdicts() {
    let c = parse_aag("aag 4 2 1 1 1\n2\n4\n6 4\n8\n8 2 7\ni0 i0\ni1 i1\no0 o1\n").unwrap();
    let phi = parse_ltl("(G i0) -> (G ((! i1) -> (X o1)))").unwrap();
    assert_eq!(model_check(&c, &phi, &Limits::default()).unwrap(), Verdict::Satisfies);
    let g = parse_ltl("G o1").unwrap();
    match model_check(&c, &g, &Limits::default()).unwrap() {
        Verdict::Violates(w) => assert!(validate_witness(&c, &g, &w)),
        v => panic!("expected a violation, got {v:?}"),
    }
}

#[test]
fn generated_pairs_split_augment_and_round_trip() {
    let config = PairGenConfig { count: 60, ..PairGenConfig::default() };
    let (pairs, _) = generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let oracle = OracleBudget::default();
    for p in &pairs {
        assert_eq!(oracle.satisfies(&p.circuit, &p.flattened()).unwrap(), Some(true));
        for s in split_spec(&p.spec) {
            assert_eq!(oracle.satisfies(&p.circuit, &s.flatten()).unwrap(), Some(true), "{}", s.flatten_text());
        }
        assert_eq!(parse_ltl(p.spec_text()).unwrap(), p.flattened());
    }
    let aug = AugmentConfig { pad: PadMode::Fixed { inputs: 6, outputs: 6 }, ..AugmentConfig::default() };
    let (out, report) = augment_dataset(&pairs, &aug, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(report.reverify_failures, 0);
    for p in &out {
        assert_eq!((p.circuit.num_inputs(), p.circuit.num_outputs()), (6, 6));
        assert_eq!(oracle.satisfies(&p.circuit, &p.flattened()).unwrap(), Some(true));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.jsonl");
    write_records(&path, &out).unwrap();
    assert_eq!(read_records(&path).unwrap(), out);
}

#[test]
fn oracle_batches_have_no_false_negatives() {
    let config = PairGenConfig { count: 80, ..PairGenConfig::default() };
    let (pairs, _) = generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
    let oracle = OracleBudget::default();
    let batches =
        build_batches(&pairs, 16, &mut ChaCha8Rng::seed_from_u64(1), FilterMode::Oracle, &oracle, &mut VerdictCache::new())
            .unwrap();
    for b in &batches {
        let rs = b.records(&pairs);
        for (i, a) in rs.iter().enumerate() {
            for (j, c) in rs.iter().enumerate() {
                if i != j {
                    assert_ne!(a.aag_text(), c.aag_text());
                    assert_ne!(a.spec_text(), c.spec_text());
                    assert_eq!(oracle.satisfies(&a.circuit, &c.flattened()).unwrap(), Some(false));
                }
            }
        }
    }
}
