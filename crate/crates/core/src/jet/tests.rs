use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::lie::CatalogSpec;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn model(s: &str) -> Arc<SymmetricSpaceModel> {
    Arc::new(s.parse::<CatalogSpec>().unwrap().build(&tol()).unwrap())
}

fn e(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })
}

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.qr().q()
}

fn counterexample(k1: f64, k2: f64) -> TwoJet {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let space = model("product(sphere(2),sphere(2))");
    circle(space, &dv(&[h, 0.0, h, 0.0]), &dv(&[0.0, k1 * h, 0.0, k2 * h]), &tol()).unwrap()
}

fn umbilic_s3(kappa: f64) -> TwoJet {
    let space = model("sphere(4)");
    umbilic(space, Subspace::axes(4, 0..3), &e(4, 3), kappa, &tol()).unwrap()
}

#[test]
fn validation_rejects_bad_jets() {
    let space = model("sphere(3)");
    let w = Subspace::axes(3, 0..2);
    let tangential = vec![vec![e(3, 0), e(3, 2)], vec![e(3, 2), e(3, 2)]];
    assert!(TwoJet::new(space.clone(), w.clone(), tangential, &tol()).is_err());
    let asym = vec![vec![e(3, 2), e(3, 2) * 2.0], vec![e(3, 2), e(3, 2)]];
    assert!(TwoJet::new(space.clone(), w.clone(), asym, &tol()).is_err());
    assert!(TwoJet::new(space, w, vec![vec![e(3, 2)]], &tol()).is_err());
}

#[test]
fn zero_jet_frame_is_just_w() {
    let j = totally_geodesic(model("sphere(3)"), Subspace::axes(3, 0..2), &tol()).unwrap();
    let f = build_frame(&j, &tol());
    assert_eq!(f.first_normal.dim(), 0);
    assert_eq!(f.osc.equality_residual(j.w()), 0.0);
    assert!(f.bold_b.iter().all(|b| b.norm() == 0.0));
    let v = check_infinitesimal_model(&j, &tol()).unwrap();
    assert_eq!(v.overall, Decision::Holds);
    let fi = check_fundamental_identity(&j, &tol()).unwrap();
    assert_eq!(fi.worst_residual, 0.0);
}

#[test]
fn umbilic_frame_in_s4() {
    let j = umbilic_s3(0.7);
    let f = build_frame(&j, &tol());
    assert_eq!(f.first_normal.dim(), 1);
    assert_eq!(f.dim_osc(), 4);
    assert!(f.invariant_residual(&j) < 1e-14);
    // bold_b(w_0) is the rotation of the (w_0, ξ) plane with angle speed κ
    let b0 = &f.bold_b[0];
    assert!((b0[(3, 0)] - 0.7).abs() < 1e-15 && (b0[(0, 3)] + 0.7).abs() < 1e-15);
    assert!(b0.norm() - 0.7 * std::f64::consts::SQRT_2 < 1e-14);
}

#[test]
fn circle_frame_is_a_planar_rotation() {
    let space = model("sphere(3)");
    let j = circle(space, &dv(&[2.0, 0.0, 0.0]), &dv(&[0.0, 0.0, 1.5]), &tol()).unwrap();
    let f = build_frame(&j, &tol());
    assert_eq!(f.dim_osc(), 2);
    let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.5, 1.5, 0.0]);
    assert!((&f.bold_b[0] - expected).norm() < 1e-15);
    let sp = check_semiparallel(&j, &tol()).unwrap();
    assert!(sp.holds);
    assert_eq!(sp.worst_residual, 0.0);
}

#[test]
fn umbilic_jets_in_space_forms_are_models() {
    for (name, n) in [("sphere(4)", 4), ("hyperbolic(4)", 4), ("euclidean(4)", 4)] {
        for m in 1..n {
            let j = umbilic(model(name), Subspace::axes(n, 0..m), &e(n, n - 1), 1.3, &tol()).unwrap();
            let v = check_infinitesimal_model(&j, &tol()).unwrap();
            assert!(v.curvature_invariant && v.semiparallel, "{name} m={m}");
            assert_eq!(v.overall, Decision::Holds, "{name} m={m}: {v:?}");
            assert!(check_fundamental_identity(&j, &tol()).unwrap().holds);
            assert!(check_curvature_h_invariance(&j, &tol()).holds);
            assert!(normal_curvature_residual(&j, &tol()) < 1e-12);
        }
    }
}

#[test]
fn perturbed_umbilic_is_not_semiparallel() {
    let base = umbilic_s3(0.5);
    let xi = e(4, 3);
    let eps = 1e-3;
    let b: Vec<Vec<DVector<f64>>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let q = if i == j { [1.0, 0.0, -1.0][i] } else { 0.0 };
                    base.b_basis(i, j) + &xi * (eps * q)
                })
                .collect()
        })
        .collect();
    let j = TwoJet::new(base.space_arc().clone(), base.w().clone(), b, &tol()).unwrap();
    let sp = check_semiparallel(&j, &tol()).unwrap();
    assert!(!sp.holds);
    assert!(sp.worst_residual > 1e-5, "{}", sp.worst_residual);
}

#[test]
fn counterexample_circle_is_not_a_model() {
    let j = counterexample(1.0, 2.0);
    let v = check_infinitesimal_model(&j, &tol()).unwrap();
    assert!(v.curvature_invariant);
    assert!(v.semiparallel);
    assert_eq!(v.gamma_feasible_per_basis[0].verdict, Verdict::Infeasible);
    assert_eq!(v.overall, Decision::Fails);
    let g = &v.gamma_feasible_per_basis[0];
    assert!(g.residual >= 1e-3 * g.target_norm);
}

#[test]
fn equal_curvature_circle_is_a_model() {
    let k = 1.7;
    let j = counterexample(k, k);
    let x = j.w().vector(0);
    let g = check_gamma_feasibility(&j, &x, &tol()).unwrap();
    assert_eq!(g.verdict, Verdict::Feasible);
    assert!(g.residual <= 1e-8);
    // π₂(X) rotates each factor's tangent plane with speed ±κ
    let a = j.space().pi2_k(&g.x_k);
    for f in 0..2 {
        let blk = a.view((2 * f, 2 * f), (2, 2));
        assert!((blk[(1, 0)].abs() - k).abs() < 1e-10, "{a}");
    }
    assert_eq!(check_infinitesimal_model(&j, &tol()).unwrap().overall, Decision::Holds);
}

#[test]
fn euclidean_jets_are_always_gamma_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = model("euclidean(5)");
    for _ in 0..5 {
        let q = random_orthogonal(&mut rng, 5);
        let w = Subspace::from_onb_columns(q.columns(0, 2).into_owned());
        let normals = q.columns(2, 3).into_owned();
        let mut vals = vec![vec![DVector::zeros(5); 2]; 2];
        for i in 0..2 {
            for k in i..2 {
                let c = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
                vals[i][k] = &normals * c;
                vals[k][i] = vals[i][k].clone();
            }
        }
        let j = TwoJet::new(space.clone(), w, vals, &tol()).unwrap();
        for x in j.w().vectors() {
            assert_eq!(check_gamma_feasibility(&j, &x, &tol()).unwrap().verdict, Verdict::Feasible);
        }
    }
}

#[test]
fn gamma_rejects_vectors_outside_w() {
    let j = umbilic_s3(1.0);
    assert!(check_gamma_feasibility(&j, &e(4, 3), &tol()).is_err());
}

#[test]
fn gauss_equation_for_euclidean_umbilics() {
    let kappa = 0.8;
    let space = model("euclidean(4)");
    let j = umbilic(space, Subspace::axes(4, 0..3), &e(4, 3), kappa, &tol()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let x = j.w().project(&DVector::from_fn(4, |_, _| rng.sample(StandardNormal)));
        let y = j.w().project(&DVector::from_fn(4, |_, _| rng.sample(StandardNormal)));
        let r = derived_tangent_curvature(&j, &x, &y, &y);
        let expected = (&x * y.dot(&y) - &y * x.dot(&y)) * (kappa * kappa);
        assert!((r - expected).norm() < 1e-12);
    }
}

#[test]
fn gauss_equation_trivial_cases() {
    let space = model("cp(2)");
    let w = Subspace::axes(4, 0..2);
    let j = totally_geodesic(space.clone(), w.clone(), &tol()).unwrap();
    let (x, y, z) = (e(4, 0), e(4, 1), e(4, 1));
    let r = derived_tangent_curvature(&j, &x, &y, &z);
    assert!((r - w.project(&space.curvature(&x, &y, &z))).norm() < 1e-14);
    let c = counterexample(1.0, 2.0);
    let u = c.w().vector(0);
    assert!(derived_tangent_curvature(&c, &u, &u, &u).norm() < 1e-14);
}

#[test]
fn shape_operator_duality() {
    let j = veronese(model("sphere(5)"), 2, 0.9, &tol()).unwrap();
    let ws = j.w().vectors();
    let normals = build_frame(&j, &tol()).first_normal.vectors();
    for x in &ws {
        for y in &ws {
            for xi in &normals {
                let lhs = j.shape_operator(xi, x).dot(y);
                assert!((lhs - j.b(x, y).dot(xi)).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn veronese_is_parallel_only_at_its_radius() {
    for m in [2usize, 3] {
        let n = m + m * (m + 1) / 2 - 1;
        let space = model(&format!("sphere({n})"));
        let lam = (m as f64 / (m as f64 + 1.0)).sqrt();
        let good = veronese(space.clone(), m, lam, &tol()).unwrap();
        let sp = check_semiparallel(&good, &tol()).unwrap();
        assert!(sp.holds, "m={m} residual {}", sp.worst_residual);
        assert!(check_fundamental_identity(&good, &tol()).unwrap().holds);
        assert!(normal_curvature_residual(&good, &tol()) < 1e-12);
        assert!(check_curvature_h_invariance(&good, &tol()).holds);
        let bad = veronese(space, m, lam * 1.1, &tol()).unwrap();
        assert!(!check_semiparallel(&bad, &tol()).unwrap().holds);
    }
}

#[test]
fn osc_leak_is_a_structural_error() {
    // W a complex line of cp(2) and a single real normal direction: R(x, Jx)
    // acts like J on the normal plane, pushing that normal out of the osculating space
    let space = model("cp(2)");
    let x = e(4, 0);
    let jacobi = DMatrix::from_fn(4, 4, |r, c| space.curvature(&e(4, c), &x, &x)[r]);
    let eig = jacobi.symmetric_eigen();
    let k = (0..4).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    assert!((eig.eigenvalues[k] - 4.0).abs() < 1e-10);
    let u = eig.eigenvectors.column(k).into_owned();
    let w = numeric::span(&[x, u], 4, &tol()).unwrap();
    let nu = w.complement(&tol()).vector(0);
    let j = umbilic(space, w, &nu, 1.0, &tol()).unwrap();
    assert!(matches!(check_semiparallel(&j, &tol()), Err(Error::Structural { .. })));
    assert!(matches!(check_fundamental_identity(&j, &tol()), Err(Error::Structural { .. })));
    let v = check_infinitesimal_model(&j, &tol()).unwrap();
    assert!(!v.semiparallel && v.semiparallel_note.is_some());
    assert_eq!(v.overall, Decision::Fails);
}

#[test]
fn json_round_trip() {
    let j = counterexample(1.0, 3.0);
    let js = j.to_json("product(sphere(2),sphere(2))");
    let text = serde_json::to_string(&js).unwrap();
    assert!(text.contains("\"W_onb\""));
    let back: JetJson = serde_json::from_str(&text).unwrap();
    let j2 = TwoJet::from_json(j.space_arc().clone(), &back, &tol()).unwrap();
    assert_eq!(j2.to_json("product(sphere(2),sphere(2))"), js);
}

#[test]
fn kleene_conjunction() {
    use Decision::*;
    assert_eq!(Holds.and(Indeterminate), Indeterminate);
    assert_eq!(Fails.and(Indeterminate), Fails);
    assert_eq!(Indeterminate.and(Fails), Fails);
    assert_eq!(Holds.and(Holds), Holds);
}

fn model_jets() -> Vec<TwoJet> {
    vec![
        umbilic_s3(0.4),
        counterexample(1.0, 1.0),
        veronese(model("sphere(4)"), 2, (2.0_f64 / 3.0).sqrt(), &tol()).unwrap(),
        umbilic(model("hyperbolic(3)"), Subspace::axes(3, 0..2), &e(3, 2), 2.0, &tol()).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semiparallel_is_basis_independent(seed in any::<u64>(), which in 0usize..4) {
        let j = &model_jets()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_orthogonal(&mut rng, j.dim_w());
        let r = j.rebased(&q);
        let a = check_semiparallel(j, &tol()).unwrap();
        let b = check_semiparallel(&r, &tol()).unwrap();
        prop_assert_eq!(a.holds, b.holds);
        prop_assert!((a.worst_residual - b.worst_residual).abs() <= 10.0 * tol().residual_abs);
    }

    #[test]
    fn bold_b_is_odd_and_skew(seed in any::<u64>(), which in 0usize..4) {
        let j = model_jets()[which].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = j.rebased(&random_orthogonal(&mut rng, j.dim_w())).scaled(rng.random_range(-2.0..2.0));
        let f = build_frame(&j, &tol());
        prop_assert!(f.invariant_residual(&j) < 1e-12);
    }

    #[test]
    fn models_annihilate_restricted_curvature(seed in any::<u64>(), which in 0usize..4) {
        let j = model_jets()[which].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = j.rebased(&random_orthogonal(&mut rng, j.dim_w()));
        prop_assume!(check_infinitesimal_model(&j, &tol()).unwrap().overall == Decision::Holds);
        prop_assert!(check_curvature_h_invariance(&j, &tol()).holds);
    }
}
