use num_complex::Complex64 as C64;

use super::wire::*;
use super::*;
use crate::fock::FockConfig;

fn matrix(k: usize) -> Algebra {
    Algebra::matrix(k).unwrap()
}

fn scenario(kind: ScenarioKind, spec: &str, order: usize, seed: u64, trials: usize) -> ScenarioConfig {
    ScenarioConfig::new(kind, AlgebraSpec::parse_short(spec).unwrap(), order, seed).with_trials(trials)
}

#[test]
fn generation_is_deterministic() {
    let alg = matrix(2);
    let a = generate_instance(ScenarioKind::VerifyS, &alg, 2, 9).unwrap();
    let b = generate_instance(ScenarioKind::VerifyS, &alg, 2, 9).unwrap();
    assert_eq!(a, b);
    let c = generate_instance(ScenarioKind::VerifyS, &alg, 2, 10).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn generated_first_moment_is_alpha_zero() {
    let alg = matrix(2);
    let (x, _) = generate_models(ScenarioKind::VerifyS, &alg, 2, 4).unwrap();
    let (mx, my) = generate_instance(ScenarioKind::VerifyS, &alg, 2, 4).unwrap();
    assert_eq!(mx.order(), 3);
    assert_eq!(my.order(), 3);
    let alpha0 = x.coeffs()[0].as_element();
    assert!(mx.moment(1).eval(&[alg.unit()]).unwrap().dist(&alpha0) < 1e-14);
}

#[test]
fn generated_data_is_bimodular() {
    for kind in [ScenarioKind::VerifyS, ScenarioKind::VerifyR] {
        let (x, y) = generate_instance(kind, &matrix(2), 3, 1).unwrap();
        x.validate().unwrap();
        y.validate().unwrap();
    }
}

#[test]
fn generation_rejects_large_degree() {
    assert!(generate_instance(ScenarioKind::VerifyS, &matrix(1), 6, 0).is_err());
}

#[test]
fn verify_s_small_grid() {
    let report = run_scenario(&scenario(ScenarioKind::VerifyS, "matrix:2", 3, 42, 3));
    assert!(report.pass, "{report:?}");
    assert_eq!(report.per_degree.len(), 3);
    assert_eq!(report.seeds, vec![42, 43, 44]);
    assert!(report.max_abs_dev <= 1e-7);
}

#[test]
fn verify_s_first_moment_factorizes() {
    let alg = matrix(2);
    let (x, y) = generate_models(ScenarioKind::VerifyS, &alg, 0, 3).unwrap();
    let cfg = FockConfig::strict(&alg, product_depth(1));
    let xy = product_moments(&cfg, &x, &y, 1).unwrap();
    let want = alg.mul(&x.coeffs()[0].as_element(), &y.coeffs()[0].as_element());
    assert!(xy.mean().dist(&want) < 1e-12);

    let report = run_scenario(&scenario(ScenarioKind::VerifyS, "matrix:2", 1, 3, 4));
    assert!(report.pass, "{report:?}");
    assert_eq!(report.per_degree.len(), 1);
}

#[test]
fn scalar_product_is_plain() {
    let alg = matrix(1);
    for seed in 0..3 {
        let (x, y) = generate_instance(ScenarioKind::VerifyS, &alg, 2, seed).unwrap();
        let inst = s_instance(&x, &y, 3, 1e-7).unwrap();
        assert!(inst.twisted.pass);
        assert!(jet_equal(&inst.lhs.jet, &inst.plain, 1e-7).unwrap().pass);
    }
}

#[test]
fn verify_r_small_grid() {
    let cfg = scenario(ScenarioKind::VerifyR, "matrix:2", 3, 42, 3).with_tol(1e-8);
    let report = run_scenario(&cfg);
    assert!(report.pass, "{report:?}");
    assert_eq!(report.per_degree.len(), 4);
}

#[test]
fn r_degree_zero_is_sum_of_means() {
    let alg = matrix(2);
    let (x, y) = generate_instance(ScenarioKind::VerifyR, &alg, 1, 6).unwrap();
    let inst = r_instance(&x, &y, 1, 1e-8).unwrap();
    let want = &x.mean() + &y.mean();
    assert!(inst.lhs.jet.constant_term().dist(&want) < 1e-12);
}

#[test]
fn semicircle_sum() {
    // Both are standard semicircles: R(b) = b.
    let alg = matrix(1);
    let semi = |i| {
        RvModel::new(
            &alg,
            i,
            ModelFlavor::R,
            vec![MultilinearMap::zeros(1, 0), MultilinearMap::identity(1)],
        )
        .unwrap()
    };
    let cfg = FockConfig::strict(&alg, sum_depth(3));
    let sum = sum_moments(&cfg, &semi(1), &semi(2), 4).unwrap();
    // Variance-2 semicircle: m_{2k} = Catalan(k)·2^k.
    let catalan = [1.0, 1.0, 2.0];
    let want = [0.0, catalan[1] * 2.0, 0.0, catalan[2] * 4.0];
    for (n, w) in want.iter().enumerate() {
        let got = sum.moment(n + 1).coeffs()[0];
        assert!((got - C64::new(*w, 0.0)).norm() < 1e-12, "moment {}: {got}", n + 1);
    }
    let r = r_transform(&sum).unwrap().jet;
    let want = [0.0, 2.0, 0.0, 0.0];
    for (n, w) in want.iter().enumerate() {
        assert!((r.term(n).coeffs()[0] - C64::new(*w, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn commutative_scenario() {
    for d in 1..=2 {
        let report = run_scenario(&scenario(ScenarioKind::Commutative, &format!("diagonal:{d}"), 3, 5, 2));
        assert!(report.pass, "{report:?}");
        assert!(report.diagnostics["twist_dev"] <= TWIST_TOL);
    }
    let report = run_scenario(&scenario(ScenarioKind::Commutative, "matrix:2", 3, 5, 2));
    assert!(!report.pass);
    assert!(!report.errors.is_empty());
}

#[test]
fn counterexample_finds_witness() {
    let report = run_scenario(&scenario(ScenarioKind::Counterexample, "matrix:2", 3, 42, 3));
    assert!(report.pass, "{report:?}");
    let seed = report.witness.unwrap();
    assert!(report.diagnostics["witness_plain_dev"] > WITNESS_GAP);

    // The witness replays identically.
    let again = run_scenario(&scenario(ScenarioKind::Counterexample, "matrix:2", 3, seed, 1));
    assert_eq!(again.witness, Some(seed));
    assert_eq!(
        again.diagnostics["witness_plain_dev"],
        report.diagnostics["witness_plain_dev"]
    );
}

#[test]
fn commuting_inputs_give_no_witness() {
    let alg = matrix(2);
    for seed in 0..3 {
        let (x, y) = generate_commuting_models(&alg, 2, seed).unwrap();
        let (mx, my) = instance_from_models(&alg, &x, &y, 2).unwrap();
        let inst = s_instance(&mx, &my, 3, 1e-7).unwrap();
        assert!(inst.twisted.pass);
        let plain = jet_equal(&inst.lhs.jet, &inst.plain, 1e-7).unwrap();
        assert!(plain.max_dev < WITNESS_GAP, "{plain:?}");
    }
}

#[test]
fn reports_are_deterministic() {
    let cfg = scenario(ScenarioKind::VerifyS, "matrix:2", 2, 7, 2);
    assert!(run_scenario(&cfg).same_outcome(&run_scenario(&cfg)));
}

#[test]
fn supplied_moments_are_used() {
    let alg = matrix(2);
    let (x, y) = generate_instance(ScenarioKind::VerifyS, &alg, 1, 11).unwrap();
    let mut cfg = scenario(ScenarioKind::VerifyS, "matrix:2", 2, 11, 20);
    cfg.x = Some(x);
    cfg.y = Some(y);
    let report = run_scenario(&cfg);
    assert!(report.pass, "{report:?}");
    assert_eq!(report.seeds, vec![11]);

    cfg.y = None;
    assert!(!run_scenario(&cfg).pass);
}

#[test]
fn order_out_of_range() {
    for order in [0, MAX_COMPARE_ORDER + 1] {
        let report = run_scenario(&scenario(ScenarioKind::VerifyS, "matrix:1", order, 0, 1));
        assert!(!report.pass);
        assert!(report.errors[0].contains("compare order"));
    }
}

#[test]
fn report_json_fields() {
    let report = run_scenario(&scenario(ScenarioKind::VerifyR, "matrix:1", 1, 0, 1));
    let v = serde_json::to_value(&report).unwrap();
    for key in [
        "scenario",
        "order",
        "per_degree",
        "max_abs_dev",
        "pass",
        "seed",
        "runtime_ms",
        "diagnostics",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["scenario"], "verify-r");
}

#[test]
fn wire_round_trips() {
    let alg = matrix(2);
    let (x, _) = generate_instance(ScenarioKind::VerifyS, &alg, 2, 3).unwrap();
    let back = moments_from_json(&moments_to_json(&x)).unwrap();
    assert_eq!(back, x);

    let s = s_transform(&x).unwrap();
    let text = transform_to_json(&s);
    assert!(text.contains("\"diagnostics\""));
    assert_eq!(jet_from_json(&text).unwrap(), s.jet);

    let (model, _) = generate_models(ScenarioKind::VerifyR, &alg, 2, 3).unwrap();
    assert_eq!(model_from_json(&alg, &model_to_json(&model)).unwrap(), model);
}

#[test]
fn wire_layout() {
    // A moment file with one scalar moment μ_1(b) = b·(2 + i).
    let text = r#"{"algebra":{"kind":"matrix","k":1},"order":1,"moments":[[[2.0,1.0]]]}"#;
    let m = moments_from_json(text).unwrap();
    assert_eq!(m.moment(1).coeffs(), &[C64::new(2.0, 1.0)]);

    let bad_count = r#"{"algebra":{"kind":"matrix","k":1},"order":2,"moments":[[[2.0,1.0]]]}"#;
    assert!(matches!(moments_from_json(bad_count), Err(Error::Format(_))));
    let bad_len = r#"{"algebra":{"kind":"matrix","k":1},"order":1,"moments":[[[2.0,1.0],[0.0,0.0]]]}"#;
    assert!(moments_from_json(bad_len).is_err());
    assert!(matches!(moments_from_json("{"), Err(Error::Json(_))));
}

#[test]
fn selftest_passes() {
    let report = run_selftest(&matrix(2), 1);
    assert!(report.pass, "{report:#?}");
    assert!(report.suites.len() >= 13);
    assert_eq!(report.suites[0].name, "algebra associativity");
}

#[test]
fn selftest_catches_transposed_structure() {
    let alg = matrix(2);
    let d = alg.dim();
    let mut structure = Vec::with_capacity(d * d * d);
    for p in 0..d {
        for q in 0..d {
            for r in 0..d {
                structure.push(alg.structure(p, r, q));
            }
        }
    }
    let broken = Algebra::from_parts_unchecked(d, structure, alg.unit().clone());
    let report = run_selftest(&broken, 1);
    assert!(!report.pass);
    assert_eq!(report.suites.len(), 1);
    assert!(!report.suites[0].pass);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn twisted_product_identity(k in 1usize..=2, order in 1usize..=3, seed in any::<u64>()) {
            let alg = matrix(k);
            let (x, y) = generate_instance(ScenarioKind::VerifyS, &alg, order - 1, seed).unwrap();
            prop_assert!(s_instance(&x, &y, order, 1e-7).unwrap().twisted.pass);
        }

        #[test]
        fn additivity(k in 1usize..=2, order in 1usize..=3, seed in any::<u64>()) {
            let alg = matrix(k);
            let (x, y) = generate_instance(ScenarioKind::VerifyR, &alg, order, seed).unwrap();
            prop_assert!(r_instance(&x, &y, order, 1e-8).unwrap().comparison.pass);
        }

        #[test]
        fn first_moments(k in 1usize..=2, seed in any::<u64>()) {
            let alg = matrix(k);
            let (x, y) = generate_models(ScenarioKind::VerifyS, &alg, 1, seed).unwrap();
            let cfg = FockConfig::strict(&alg, 4);
            let (mx, my) = (model_moments(&cfg, &x, 1).unwrap(), model_moments(&cfg, &y, 1).unwrap());
            let prod = product_moments(&cfg, &x, &y, 1).unwrap();
            prop_assert!(prod.mean().dist(&alg.mul(&mx.mean(), &my.mean())) <= 1e-10);
            let sum = sum_moments(&cfg, &x, &y, 1).unwrap();
            prop_assert!(sum.moment(1).dist(&mx.moment(1).add(my.moment(1))) <= 1e-10);
        }

        #[test]
        fn moment_files_round_trip(k in 1usize..=2, seed in any::<u64>()) {
            let (x, _) = generate_instance(ScenarioKind::VerifyR, &matrix(k), 2, seed).unwrap();
            prop_assert_eq!(moments_from_json(&moments_to_json(&x)).unwrap(), x);
        }
    }
}
