use super::*;

const COUNTEREXAMPLE: &str = include_str!("../../../../scenarios/counterexample_cp1xcp1.json");
const SPACEFORM: &str = include_str!("../../../../scenarios/umbilic_spheres_spaceform.json");
const FLAT: &str = include_str!("../../../../scenarios/flat_chain.json");
const RSPACE: &str = include_str!("../../../../scenarios/rspace_examples.json");
const VERONESE: &str = include_str!("../../../../scenarios/veronese_sphere.json");

fn run(text: &str) -> Value {
    let file = parse_scenario_file(text, "test").unwrap();
    let report = run_file(&file, &RunOptions::default()).unwrap();
    assert!(!report.has_errors());
    serde_json::from_str(&report.to_json()).unwrap()
}

fn verdicts(report: &Value) -> Vec<String> {
    report["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["jets"].as_array().unwrap().iter())
        .map(|j| j["results"]["holonomy"]["result"]["verdict"].as_str().unwrap_or("-").to_string())
        .collect()
}

#[test]
fn bundled_files_round_trip() {
    for text in [COUNTEREXAMPLE, SPACEFORM, FLAT, RSPACE, VERONESE] {
        let file = parse_scenario_file(text, "bundled").unwrap();
        let back = serde_json::to_value(&file).unwrap();
        let orig: Value = serde_json::from_str(text).unwrap();
        assert_eq!(back, orig);
    }
}

#[test]
fn counterexample_is_not_homogeneous() {
    let r = run(COUNTEREXAMPLE);
    assert_eq!(verdicts(&r), ["not_homogeneous", "homogeneous"]);
    let jet = &r["scenarios"][0]["jets"][0];
    assert_eq!(failing_link(jet), Some("gamma_feasibility"));
    assert_eq!(jet["results"]["nomizu"]["status"], "not_applicable");
    let text = explain(&r);
    assert!(text.contains("failing link: gamma_feasibility"), "{text}");
}

#[test]
fn space_form_umbilics_are_homogeneous() {
    let r = run(SPACEFORM);
    let v = verdicts(&r);
    assert!(v.len() >= 6);
    assert!(v.iter().all(|x| x == "homogeneous"), "{v:?}");
    let text = explain(&r);
    assert!(text.contains("defect norms: ["));
}

#[test]
fn empty_jet_list_is_a_valid_run() {
    let text = r#"{"schema": 1, "scenarios": [{"id": "e", "model": "sphere(2)", "jets": [], "pipelines": ["holonomy"], "rng_seed": 0}]}"#;
    let r = run(text);
    assert_eq!(r["scenarios"][0]["jets"], json!([]));
    assert!(explain(&r).contains("no jets evaluated"));
    assert!(explain(&json!({})).contains("no jets evaluated"));
}

#[test]
fn parse_errors_carry_locations() {
    let e = parse_scenario_file("{\"schema\": 1,\n \"scenarios\": [ {\"id\": 3} ]}", "f.json").unwrap_err();
    assert!(e.location.starts_with("f.json:2:"), "{e}");
    let e = parse_scenario_file(r#"{"schema": 2, "scenarios": []}"#, "f.json").unwrap_err();
    assert!(e.message.contains("unsupported schema"));
    let dup = r#"{"schema": 1, "scenarios": [
        {"id": "a", "model": "sphere(2)", "jets": [], "pipelines": [], "rng_seed": 0},
        {"id": "a", "model": "sphere(2)", "jets": [], "pipelines": [], "rng_seed": 0}]}"#;
    assert!(parse_scenario_file(dup, "f").unwrap_err().message.contains("duplicate"));
    let extra = r#"{"schema": 1, "scenarios": [], "bogus": 1}"#;
    assert!(parse_scenario_file(extra, "f").is_err());
}

#[test]
fn bad_jets_are_located() {
    let text = r#"{"schema": 1, "scenarios": [{"id": "a", "model": "sphere(3)", "jets": [
        {"circle": {"x": [1.0, 0.0, 0.0], "y": [0.0, 1.0, 0.0]}},
        {"circle": {"x": [1.0, 0.0], "y": [0.0, 1.0]}}], "pipelines": [], "rng_seed": 0}]}"#;
    let file = parse_scenario_file(text, "f").unwrap();
    let e = run_file(&file, &RunOptions::default()).unwrap_err();
    assert_eq!(e.location, "scenarios[0].jets[1]");
}

#[test]
fn generators_expand_as_documented() {
    let tol = Tolerances::default();
    let s = Arc::new(CatalogSpec::Sphere(3).build(&tol).unwrap());
    let spec = JetSpec::Umbilic {
        kappa: 2.0,
        tangent: Some(vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 3.0]]),
        tangent_dim: None,
        normal: vec![1.0, -1.0, 0.0],
    };
    let j = build_jet(&s, &spec, &tol).unwrap();
    let x = DVector::from_vec(vec![0.6, 0.6, 0.0]);
    let xi = DVector::from_vec(vec![1.0, -1.0, 0.0]).normalize();
    assert!((j.b(&x, &x) - &xi * (2.0 * 0.72)).norm() < 1e-12);
    let bad = JetSpec::Umbilic {
        kappa: 1.0,
        tangent: None,
        tangent_dim: Some(2),
        normal: vec![1.0, 0.0, 0.0],
    };
    assert!(build_jet(&s, &bad, &tol).is_err());
    let v = build_jet(&Arc::new(CatalogSpec::Sphere(4).build(&tol).unwrap()), &JetSpec::Veronese { m: 2, lambda: None }, &tol).unwrap();
    let e0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    // |b(e0, e0)|² = λ²(1 - 1/m) for the traceless part of e0e0ᵀ
    assert!((v.b(&e0, &e0).norm_squared() - (2.0 / 3.0) * 0.5).abs() < 1e-12);
}

#[test]
fn tolerance_overrides_are_validated() {
    let o = ToleranceOverride {
        residual_abs: Some(-1.0),
        ..Default::default()
    };
    assert!(o.apply(Tolerances::default()).is_err());
    let o = ToleranceOverride {
        feas_rel: Some(1e-6),
        ..Default::default()
    };
    assert_eq!(o.apply(Tolerances::default()).unwrap().feas_rel, 1e-6);
}

#[test]
fn seed_override_reaches_the_report() {
    let file = parse_scenario_file(RSPACE, "r").unwrap();
    let opts = RunOptions {
        seed: Some(99),
        ..Default::default()
    };
    let r = run_file(&file, &opts).unwrap();
    assert!(r.scenarios.iter().all(|s| s.rng_seed == 99));
    let json = r.to_json();
    assert!(!json.contains("wall_time_ms"));
}

#[test]
fn rspace_pipeline_reports_identity_checks() {
    let r = run(RSPACE);
    let g = &r["scenarios"][2]["model_results"]["rspace"];
    assert_eq!(g["status"], "ok");
    assert_eq!(g["result"]["k0_equals_bracket"]["holds"], true);
    assert_eq!(g["result"]["commutant_is_center"]["holds"], true);
    assert!(g["result"]["center_meets_kminus_dim"].as_u64().unwrap() >= 1);
    assert_eq!(r["scenarios"][3]["model_results"]["rspace"]["status"], "not_applicable");
}

#[test]
fn catalog_ranks_add_over_products() {
    let tol = Tolerances::default();
    for spec in catalog_examples() {
        let s = spec.build(&tol).unwrap();
        let m = ModelSummary::of(&s, &tol);
        assert_eq!(m.dim_g, m.dim_k + m.dim_p);
        if let CatalogSpec::Product(fs) = &spec {
            let sum: usize = fs.iter().map(|f| f.build(&tol).unwrap().rank(&tol)).sum();
            assert_eq!(m.rank, sum, "{spec}");
        }
    }
    let t = catalog_table(&tol).unwrap();
    for fam in ["sphere", "euclidean", "product", "cp", "grassmannian_su", "hyperbolic", "dual"] {
        assert!(t.contains(fam));
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for text in [COUNTEREXAMPLE, FLAT, RSPACE] {
        let file = parse_scenario_file(text, "d").unwrap();
        let a = run_file(&file, &RunOptions::default()).unwrap().to_json();
        let b = run_file(&file, &RunOptions::default()).unwrap().to_json();
        assert_eq!(a, b);
    }
}
