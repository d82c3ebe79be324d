//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use symjet::holonomy::{self, intertwiners, schur_dimension, schur_dimension_of, Homogeneity};
use symjet::jet::{self, check_gamma_feasibility, TwoJet};
use symjet::lie::{CatalogSpec, IsotropyMethod, SymmetricSpaceModel};
use symjet::nomizu;
use symjet::numeric::{symmetric_eigen, Verdict};
use symjet::rspace::{self, RSpaceSearch};
use symjet::{Subspace, Tolerances};

type Outcome = Result<String, String>;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn model(spec: CatalogSpec) -> Arc<SymmetricSpaceModel> {
    Arc::new(spec.build(&tol()).expect("catalog model builds"))
}

fn axis(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.2} s exceeds {limit_s} s", elapsed.as_secs_f64())
    })
}

fn catalog_models() -> Vec<CatalogSpec> {
    use CatalogSpec::*;
    let mut v: Vec<CatalogSpec> = (2..=6).map(Sphere).collect();
    v.extend((1..=4).map(Euclidean));
    v.extend((1..=3).map(Cp));
    v.extend([GrassmannianSu(1, 2), GrassmannianSu(2, 2), GrassmannianSu(2, 3)]);
    v.extend((2..=4).map(Hyperbolic));
    v.extend([
        Dual(Box::new(Cp(2))),
        Dual(Box::new(GrassmannianSu(2, 2))),
        Product(vec![Sphere(2), Sphere(2)]),
        Product(vec![Sphere(2), Cp(2)]),
        Product(vec![Sphere(2), Sphere(2), Sphere(2)]),
        Product(vec![Hyperbolic(2), Hyperbolic(2)]),
        Product(vec![Sphere(2), Euclidean(2)]),
    ]);
    v
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let models = catalog_models();
    for spec in &models {
        let m = spec.build(&tol()).map_err(|e| format!("{spec}: {e}"))?;
        let i = m.integrity();
        ensure(i.passes(1e-9), || format!("{spec}: integrity residual {:.3e}", i.worst()))?;
        worst = worst.max(i.worst());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut curv_dev: f64 = 0.0;
    for n in 2..=6 {
        let s = model(CatalogSpec::Sphere(n));
        for _ in 0..20 {
            let (x, y) = (gaussian(n, &mut rng), gaussian(n, &mut rng));
            curv_dev = curv_dev.max((s.sectional_curvature(&x, &y) - 1.0).abs());
        }
    }
    ensure(curv_dev <= 1e-9, || format!("unit sphere curvature off by {curv_dev:.3e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "{} models, worst integrity residual {worst:.1e}, sphere curvature deviation {curv_dev:.1e}",
        models.len()
    ))
}

/// A random k-dimensional subspace of a random maximal abelian subspace.
fn random_flat_subspace(m: &SymmetricSpaceModel, k: usize, rng: &mut ChaCha8Rng) -> Subspace {
    let a = m.maximal_abelian_from(rng.random_range(0..m.dim_p()), &tol());
    let k = k.min(a.dim()).max(1);
    let coeffs = DMatrix::from_fn(a.dim(), k, |_, _| rng.sample::<f64, _>(StandardNormal));
    Subspace::from_onb_columns((a.onb() * coeffs).qr().q())
}

fn random_subspace(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Subspace {
    let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    Subspace::from_onb_columns(g.qr().q())
}

fn criterion_2() -> Outcome {
    use CatalogSpec::*;
    let start = Instant::now();
    let models = [
        Sphere(3),
        Cp(2),
        GrassmannianSu(2, 2),
        Hyperbolic(3),
        Product(vec![Sphere(2), Sphere(2)]),
        Product(vec![Sphere(2), Sphere(2), Sphere(2)]),
        Dual(Box::new(Cp(2))),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut total, mut isotropic) = (0, 0);
    for spec in &models {
        let m = model(spec.clone());
        for t in 0..32 {
            let k = 1 + t % 3;
            let w = if t % 2 == 0 {
                random_flat_subspace(&m, k, &mut rng)
            } else {
                random_subspace(m.dim_p(), k.min(m.dim_p()), &mut rng)
            };
            let verdicts: Vec<bool> = [IsotropyMethod::Operator, IsotropyMethod::Bracket, IsotropyMethod::Sectional]
                .into_iter()
                .map(|meth| m.is_curvature_isotropic(&w, meth, &tol()))
                .collect();
            ensure(verdicts.iter().all(|v| *v == verdicts[0]), || {
                format!("{spec}: methods disagree {verdicts:?} on a {}-dim subspace", w.dim())
            })?;
            total += 1;
            isotropic += verdicts[0] as usize;
        }
    }
    ensure(total >= 200, || format!("only {total} subspaces"))?;
    ensure(isotropic > 0 && isotropic < total, || "sample lacks one of the two outcomes".into())?;
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "{total} subspaces over {} models agree ({isotropic} isotropic)",
        models.len()
    ))
}

fn product_circle(space: &Arc<SymmetricSpaceModel>, k1: f64, k2: f64) -> TwoJet {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = DVector::from_vec(vec![h, 0.0, h, 0.0]);
    let y = DVector::from_vec(vec![0.0, k1 * h, 0.0, k2 * h]);
    jet::circle(space.clone(), &x, &y, &tol()).expect("valid circle jet")
}

fn criterion_3() -> Outcome {
    use CatalogSpec::*;
    let start = Instant::now();
    let mut details = Vec::new();
    for spec in [Product(vec![Sphere(2), Sphere(2)]), Product(vec![Cp(1), Cp(1)])] {
        let s = model(spec.clone());
        let bad = product_circle(&s, 1.0, 2.0);
        let x = bad.w().vector(0);
        let g = check_gamma_feasibility(&bad, &x, &tol()).map_err(|e| e.to_string())?;
        ensure(g.verdict == Verdict::Infeasible && g.residual >= 1e-3 * g.target_norm, || {
            format!("{spec}: kappa 1/2 gave {:?} residual {:.3e}", g.verdict, g.residual)
        })?;
        let good = product_circle(&s, 1.5, 1.5);
        let x = good.w().vector(0);
        let f = check_gamma_feasibility(&good, &x, &tol()).map_err(|e| e.to_string())?;
        ensure(f.verdict == Verdict::Feasible && f.residual <= 1e-8, || {
            format!("{spec}: equal kappa gave {:?} residual {:.3e}", f.verdict, f.residual)
        })?;
        details.push(format!(
            "{spec}: residual/target {:.2} vs {:.1e}",
            g.residual / g.target_norm,
            f.residual
        ));
    }
    within(start.elapsed(), 1.0)?;
    Ok(details.join("; "))
}

/// Jets that are infinitesimal models, with a flag for space-form ambients.
fn model_jets() -> Vec<(String, TwoJet, bool)> {
    use CatalogSpec::*;
    let t = tol();
    let mut out = Vec::new();
    for n in 3..=7 {
        let s = model(Euclidean(n));
        let w = Subspace::axes(n, 0..n - 1);
        let j = jet::umbilic(s, w, &axis(n, n - 1), 1.0, &t).unwrap();
        out.push((format!("round S^{} in euclidean({n})", n - 1), j, false));
    }
    for (n, kappa) in [(3, 0.5), (4, 1.0), (5, 2.0)] {
        let s = model(Sphere(n));
        let w = Subspace::axes(n, 0..n - 1);
        let j = jet::umbilic(s, w, &axis(n, n - 1), kappa, &t).unwrap();
        out.push((format!("umbilic kappa {kappa} in sphere({n})"), j, true));
    }
    for kappa in [0.5, 1.0, 2.0] {
        let s = model(Hyperbolic(3));
        let j = jet::umbilic(s, Subspace::axes(3, 0..2), &axis(3, 2), kappa, &t).unwrap();
        out.push((format!("umbilic kappa {kappa} in hyperbolic(3)"), j, true));
    }
    let s = model(Sphere(4));
    out.push(("totally geodesic S^3 in sphere(4)".into(), jet::totally_geodesic(s, Subspace::axes(4, 0..3), &t).unwrap(), true));
    let s = model(Product(vec![Sphere(2), Sphere(2)]));
    out.push(("totally geodesic factor in S2xS2".into(), jet::totally_geodesic(s.clone(), Subspace::axes(4, 0..2), &t).unwrap(), false));
    out.push(("equal-kappa circle in S2xS2".into(), product_circle(&s, 1.0, 1.0), false));
    let s = model(Product(vec![Cp(1), Cp(1)]));
    out.push(("equal-kappa circle in CP1xCP1".into(), product_circle(&s, 0.5, 0.5), false));
    let s = model(Sphere(4));
    out.push(("veronese surface in sphere(4)".into(), jet::veronese(s, 2, (2.0f64 / 3.0).sqrt(), &t).unwrap(), false));
    out
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let jets = model_jets();
    let keys = ["triple_1", "triple_5", "direct_sum", "m_eq_m0", "jacobi", "roundtrip"];
    let mut worst: f64 = 0.0;
    for (name, j, _) in &jets {
        let r = nomizu::construct(j, &tol()).map_err(|e| format!("{name}: {e}"))?;
        for k in keys {
            let v = r.residuals[k];
            ensure(v <= 1e-8, || format!("{name}: {k} = {v:.3e}"))?;
            worst = worst.max(v);
        }
        let brute = nomizu::generated_algebra_dim(j.space(), &r.hat_gamma, &tol()).map_err(|e| e.to_string())?;
        ensure(brute == r.dims.g && r.dims.m == j.dim_w(), || {
            format!("{name}: dims {:?} vs brute-force closure {brute}", r.dims)
        })?;
    }
    ensure(jets.len() >= 10, || format!("only {} jets", jets.len()))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("{} jets, worst residual {worst:.1e}, all dims match matrix closure", jets.len()))
}

fn criterion_5() -> Outcome {
    let jets = model_jets();
    let mut worst: f64 = 0.0;
    let mut space_forms = 0;
    for (name, j, space_form) in &jets {
        let h = holonomy::hol_osculating(j, &tol()).map_err(|e| format!("{name}: {e}"))?;
        for k in ["sigma_invariance", "split_dimension", "plus_contains_curvature"] {
            let v = h.residuals[k];
            ensure(v <= 1e-8, || format!("{name}: {k} = {v:.3e}"))?;
            worst = worst.max(v);
        }
        if *space_form {
            space_forms += 1;
            let rep = holonomy::homogeneity_verdict(j, &tol()).map_err(|e| e.to_string())?;
            let d = rep.defect_norms.iter().copied().fold(0.0, f64::max);
            ensure(d <= 1e-8 && rep.verdict == Homogeneity::Homogeneous, || {
                format!("{name}: defect {d:.3e}, verdict {:?}", rep.verdict)
            })?;
        }
    }
    Ok(format!(
        "{} jets, worst structure residual {worst:.1e}; {space_forms} curved space-form jets homogeneous with zero defect",
        jets.len()
    ))
}

fn restricted_ops(j: &TwoJet) -> Vec<DMatrix<f64>> {
    let w = j.w().onb();
    let ws = j.w().vectors();
    let mut ops = Vec::new();
    for a in 0..ws.len() {
        for b in (a + 1)..ws.len() {
            ops.push(w.transpose() * j.space().curvature_operator(&ws[a], &ws[b]) * w);
        }
    }
    ops
}

/// A complex line of cp(n): x and the eigenvector of the Jacobi operator at the top of its spectrum.
fn complex_line(s: &SymmetricSpaceModel) -> Subspace {
    let n = s.dim_p();
    let x = axis(n, 0);
    let jac = DMatrix::from_fn(n, n, |r, c| s.curvature(&axis(n, c), &x, &x)[r]);
    let (vals, vecs) = symmetric_eigen(&jac);
    let top = vals.len() - 1;
    Subspace::from_onb_columns(DMatrix::from_columns(&[x, vecs.column(top).into_owned()]))
}

fn criterion_6() -> Outcome {
    use CatalogSpec::*;
    let t = tol();
    let mut cases: Vec<(String, TwoJet, usize)> = Vec::new();
    for n in 3..=5 {
        let s = model(Sphere(n + 1));
        let j = jet::umbilic(s, Subspace::axes(n + 1, 0..n), &axis(n + 1, n), 1.0, &t).unwrap();
        cases.push((format!("so({n}) on umbilic S^{n}"), j, 1));
        let s = model(Sphere(n));
        cases.push((format!("so({n}) on sphere({n})"), jet::totally_geodesic(s, Subspace::full(n), &t).unwrap(), 1));
    }
    let s = model(Sphere(3));
    cases.push(("u(1) on umbilic S^2".into(), jet::umbilic(s, Subspace::axes(3, 0..2), &axis(3, 2), 1.0, &t).unwrap(), 2));
    let s = model(Cp(2));
    let w = complex_line(&s);
    cases.push(("u(1) on a complex line of cp(2)".into(), jet::totally_geodesic(s, w, &t).unwrap(), 2));
    let mut lines = Vec::new();
    for (name, j, expected) in &cases {
        let sd = schur_dimension(j, &t).map_err(|e| format!("{name}: {e}"))?;
        let ops = restricted_ops(j);
        let m = j.dim_w();
        let brute = intertwiners(&ops, m, &ops, m, &t).map_err(|e| e.to_string())?.dim();
        ensure(sd.d == *expected && brute == sd.d, || {
            format!("{name}: d = {}, intertwiners {brute}, expected {expected}", sd.d)
        })?;
        ensure(!sd.irreducible || sd.classified == Some(true), || format!("{name}: d = {} unclassified", sd.d))?;
        lines.push(format!("{name}: {}", sd.d));
    }
    // quaternionic type: left multiplication by i, j, k on R^4
    let q = |rows: [[f64; 4]; 4]| DMatrix::from_fn(4, 4, |r, c| rows[r][c]);
    let li = q([[0., -1., 0., 0.], [1., 0., 0., 0.], [0., 0., 0., -1.], [0., 0., 1., 0.]]);
    let lj = q([[0., 0., -1., 0.], [0., 0., 0., 1.], [1., 0., 0., 0.], [0., -1., 0., 0.]]);
    let lk = &li * &lj;
    let ops = vec![li, lj, lk];
    let d = schur_dimension_of(&ops, 4, &t).map_err(|e| e.to_string())?;
    let brute = intertwiners(&ops, 4, &ops, 4, &t).map_err(|e| e.to_string())?.dim();
    ensure(d == 4 && brute == 4, || format!("sp(1) on R^4: d = {d}, intertwiners {brute}"))?;
    Ok(format!("{} tangent modules plus sp(1) on R^4 (d = 4) match the intertwiner solve", cases.len()))
}

fn criterion_7() -> Outcome {
    use CatalogSpec::*;
    let start = Instant::now();
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut su4_meet = 0;
    for spec in [Sphere(3), Sphere(4), Sphere(5), GrassmannianSu(2, 2)] {
        let s = model(spec.clone());
        let d = match rspace::find_rspace_element(&s, 8, 7, &t).map_err(|e| e.to_string())? {
            RSpaceSearch::Found(d) => d,
            RSpaceSearch::NotFound { reason } => return Err(format!("{spec}: {reason}")),
        };
        let cubic = d.residuals["ad_cubic"];
        let k0 = rspace::verify_k0_equals_bracket(&s, &d, &t).map_err(|e| e.to_string())?;
        let comm = rspace::verify_commutant_is_center(&s, &d, &t).map_err(|e| e.to_string())?;
        for (what, v) in [("ad(X)^3 + ad(X)", cubic), ("k0 = [k-, k-]", k0.residual), ("commutant = center", comm.residual)] {
            ensure(v <= 1e-8, || format!("{spec}: {what} residual {v:.3e}"))?;
            worst = worst.max(v);
        }
        if spec == GrassmannianSu(2, 2) {
            su4_meet = rspace::verify_center_meets_kminus(&d, &t).map_err(|e| e.to_string())?;
            ensure(su4_meet >= 1, || "su(4): center misses k-".into())?;
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("spheres 3..5 and su(4): worst residual {worst:.1e}, dim(c ∩ k-) = {su4_meet} for su(4)"))
}

/// Umbilic jets of dimension m inside rotated flats of products of 2-spheres,
/// plus inconclusive torus and circle jets.
fn flat_instances() -> Vec<(TwoJet, bool)> {
    use CatalogSpec::*;
    let t = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut out = Vec::new();
    for (factors, m, count) in [(3usize, 2usize, 30usize), (4, 2, 15), (4, 3, 15)] {
        let s = model(Product(vec![Sphere(2); factors]));
        let n = s.dim_p();
        for _ in 0..count {
            // a flat through o: one unit vector in each factor's tangent plane
            let flat: Vec<DVector<f64>> = (0..factors)
                .map(|f| {
                    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    &axis(n, 2 * f) * th.cos() + &axis(n, 2 * f + 1) * th.sin()
                })
                .collect();
            let q = random_subspace(factors, factors, &mut rng).onb().clone();
            let basis: Vec<DVector<f64>> = (0..factors)
                .map(|c| flat.iter().enumerate().fold(DVector::zeros(n), |acc, (r, v)| acc + v * q[(r, c)]))
                .collect();
            let w = Subspace::from_onb_columns(DMatrix::from_columns(&basis[..m]));
            let kappa = rng.random_range(0.2..3.0);
            out.push((jet::umbilic(s.clone(), w, &basis[m], kappa, &t).unwrap(), true));
        }
    }
    let s = model(Product(vec![Sphere(2); 4]));
    for _ in 0..5 {
        let (k1, k2) = (rng.random_range(0.3..2.0), rng.random_range(0.3..2.0));
        let (u1, u2, n1, n2) = (axis(8, 0), axis(8, 2), axis(8, 4), axis(8, 6));
        let w = Subspace::from_onb_columns(DMatrix::from_columns(&[u1.clone(), u2.clone()]));
        let j = TwoJet::from_fn(s.clone(), w, |x, y| &n1 * (k1 * x.dot(&u1) * y.dot(&u1)) + &n2 * (k2 * x.dot(&u2) * y.dot(&u2)), &t).unwrap();
        out.push((j, false));
    }
    let s = model(Product(vec![Sphere(2); 2]));
    for _ in 0..5 {
        let y = DVector::from_vec(vec![0.0, rng.random_range(0.3..2.0), rng.random_range(-1.0..1.0), 0.0]);
        out.push((jet::circle(s.clone(), &axis(4, 0), &y, &t).unwrap(), false));
    }
    out
}

fn criterion_8() -> Outcome {
    let instances = flat_instances();
    let (mut conclusive, mut agree, mut inconclusive) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for (j, _) in &instances {
        ensure(!j.is_zero(&tol()), || "flat instance with b = 0".into())?;
        let r = rspace::flat_case_pipeline(j, &tol()).map_err(|e| e.to_string())?;
        let fn_res = j
            .space()
            .curvature_isotropy(&jet::build_frame(j, &tol()).first_normal, IsotropyMethod::Operator, &tol())
            .residual;
        worst = worst.max(fn_res).max(r.fundamental_identity_residual);
        ensure(r.first_normal_isotropic && fn_res <= 1e-8, || format!("first normal space not isotropic ({fn_res:.3e})"))?;
        if r.centralizer_minus_dim == 0 {
            conclusive += 1;
            agree += (r.prediction_agrees == Some(true)) as usize;
        } else {
            inconclusive += 1;
        }
    }
    ensure(conclusive >= 50 && agree == conclusive, || format!("{agree}/{conclusive} conclusive instances agree"))?;
    Ok(format!(
        "{agree}/{conclusive} conclusive instances agree, {inconclusive} inconclusive, worst first-normal residual {worst:.1e}"
    ))
}

fn criterion_9() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let run = |p: &PathBuf| -> Result<Vec<u8>, String> {
        let o = Command::new(env!("CARGO_BIN_EXE_symjet"))
            .args(["run", "--seed", "42"])
            .arg(p)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || format!("{}: exit {:?}", p.display(), o.status.code()))?;
        Ok(o.stdout)
    };
    let mut bytes = 0;
    for f in &files {
        let (a, b) = (run(f)?, run(f)?);
        ensure(a == b, || format!("{}: reports differ", f.display()))?;
        bytes += a.len();
    }
    ensure(!files.is_empty(), || "no bundled scenarios".into())?;
    Ok(format!("{} scenario files, {bytes} bytes identical across two runs", files.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("catalog integrity", criterion_1),
        ("isotropy tests agree", criterion_2),
        ("counterexample circle", criterion_3),
        ("nomizu soundness", criterion_4),
        ("holonomy structure", criterion_5),
        ("schur dimensions", criterion_6),
        ("r-space identities", criterion_7),
        ("flat-case chain", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
