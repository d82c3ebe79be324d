//! Symmetric R-space elements X ∈ p with ad(X)³ = −ad(X), the splitting
//! k = k₀ ⊕ k₋ they induce, the orbit 2-jet of Ad(K)X, and the flat-case chain
//! for parallel jets with curvature-isotropic tangent space.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::centralizer_minus;
use crate::jet::{
    build_frame, check_curvature_h_invariance, check_fundamental_identity,
    check_semiparallel_in, TwoJet,
};
use crate::lie::{CatalogSpec, IsotropyMethod, SymmetricSpaceModel};
use crate::numeric::{
    self, commutant, nullspace, rows_serde, solve_least_squares, symmetric_eigen, transpose_rows,
    vec_op, vstack, Subspace, Tolerances,
};

const MAX_SNAP_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Snapping,
    RootEnumeration,
}

#[derive(Clone, Debug, Serialize)]
pub struct RSpaceDatum {
    /// X in g-coordinates (its k-part is zero).
    pub x: DVector<f64>,
    pub k0_basis: Subspace,
    pub kminus_basis: Subspace,
    pub center_basis: Subspace,
    /// ad(Z)|p for an orthonormal basis Z of k₋ (k-coordinates).
    #[serde(serialize_with = "ser_ops")]
    pub tangent_ops: Vec<DMatrix<f64>>,
    pub method: SearchMethod,
    pub residuals: BTreeMap<String, f64>,
}

fn ser_ops<S: serde::Serializer>(ops: &[DMatrix<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Rows<'a>(&'a DMatrix<f64>);
    impl Serialize for Rows<'_> {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            rows_serde::serialize(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(ops.len()))?;
    for op in ops {
        seq.serialize_element(&Rows(op))?;
    }
    seq.end()
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RSpaceSearch {
    Found(Box<RSpaceDatum>),
    NotFound { reason: String },
}

impl RSpaceSearch {
    pub fn datum(&self) -> Option<&RSpaceDatum> {
        match self {
            RSpaceSearch::Found(d) => Some(d),
            RSpaceSearch::NotFound { .. } => None,
        }
    }
}

/// ad restricted to p, in coordinates orthonormal for −B.
struct OrthoAd {
    ops: Vec<DMatrix<f64>>,
    stacked: DMatrix<f64>,
}

impl OrthoAd {
    fn new(space: &SymmetricSpaceModel) -> Option<Self> {
        let neg_b = -space.g().killing().clone();
        let l = neg_b.cholesky()?.l();
        let l_inv_t = l.transpose().try_inverse()?;
        let ops: Vec<DMatrix<f64>> = (0..space.dim_p())
            .map(|i| l.transpose() * space.g().ad_basis(i) * &l_inv_t)
            .collect();
        let cols: Vec<DVector<f64>> = ops.iter().map(vec_op).collect();
        let stacked = DMatrix::from_columns(&cols);
        Some(OrthoAd { ops, stacked })
    }

    fn at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.ops[0].nrows();
        let mut m = DMatrix::zeros(n, n);
        for (i, op) in self.ops.iter().enumerate() {
            if x[i] != 0.0 {
                m += op * x[i];
            }
        }
        m
    }
}

fn cubic_residual(a: &DMatrix<f64>) -> f64 {
    (a * a * a + a).amax()
}

/// Largest distance of a −ad(X)² eigenvalue from {0, 1}.
pub fn spectrum_deviation(space: &SymmetricSpaceModel, x_p: &DVector<f64>) -> Option<f64> {
    let o = OrthoAd::new(space)?;
    let a = o.at(x_p);
    let s = -(&a * &a);
    Some(
        symmetric_eigen(&s)
            .0
            .iter()
            .map(|l| l.abs().min((l - 1.0).abs()))
            .fold(0.0, f64::max),
    )
}

fn snap_search(
    o: &OrthoAd,
    dim_p: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Option<DVector<f64>> {
    let mut x = DVector::from_fn(dim_p, |_, _| rng.sample(StandardNormal));
    for _ in 0..MAX_SNAP_ITERATIONS {
        let a = o.at(&x);
        let s = -(&a * &a);
        let (vals, vecs) = symmetric_eigen(&s);
        let mu: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt()).collect();
        let top = mu.iter().copied().fold(0.0, f64::max);
        if top < 1e-12 {
            return None;
        }
        let g = DVector::from_iterator(
            mu.len(),
            mu.iter().map(|m| {
                let m = m / top;
                if m > 0.5 {
                    1.0 / m
                } else {
                    0.0
                }
            }),
        );
        let a = a / top;
        let target = &a * (&vecs * DMatrix::from_diagonal(&g) * vecs.transpose());
        let ls = solve_least_squares(&o.stacked, &vec_op(&target), tol).ok()?;
        x = ls.solution;
        if cubic_residual(&o.at(&x)) <= tol.residual_abs * 1e-1 {
            return Some(x);
        }
    }
    None
}

/// Restricted roots as coefficient vectors on a basis of a maximal abelian subspace.
fn restricted_roots(
    space: &SymmetricSpaceModel,
    o: &OrthoAd,
    a: &Subspace,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let basis = a.vectors();
    let coeffs = DVector::from_fn(basis.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let h0 = a.onb() * &coeffs;
    let ah = o.at(&h0);
    let s = -(&ah * &ah);
    let (vals, vecs) = symmetric_eigen(&s);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut roots = Vec::new();
    let mut last: Option<f64> = None;
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= 1e-8 * scale {
            continue;
        }
        if last.is_some_and(|l| lam - l <= 1e-6 * scale) {
            continue;
        }
        last = Some(lam);
        let v = vecs.column(i).into_owned();
        let w = &ah * &v / lam.sqrt();
        roots.push(DVector::from_iterator(
            basis.len(),
            basis.iter().map(|b| (o.at(b) * &v).dot(&w)),
        ));
    }
    let _ = space;
    roots
}

fn enumerate_roots(
    space: &SymmetricSpaceModel,
    o: &OrthoAd,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Option<DVector<f64>> {
    let a = (0..space.dim_p())
        .map(|s| space.maximal_abelian_from(s, tol))
        .max_by_key(Subspace::dim)?;
    let r = a.dim();
    let roots = restricted_roots(space, o, &a, rng);
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    for root in &roots {
        let mut cand = chosen.clone();
        cand.push(root.clone());
        if numeric::numerical_rank(&DMatrix::from_columns(&cand), tol) == cand.len() {
            chosen = cand;
        }
        if chosen.len() == r {
            break;
        }
    }
    if chosen.len() < r || r == 0 {
        return None;
    }
    let basis_t = DMatrix::from_columns(&chosen).transpose();
    let inv = basis_t.try_inverse()?;
    let total = 3usize.pow(r as u32);
    for code in 1..total {
        let mut t = DVector::zeros(r);
        let mut c = code;
        for k in 0..r {
            t[k] = (c % 3) as f64 - 1.0;
            c /= 3;
        }
        let coeff = &inv * &t;
        let ok = roots.iter().all(|root| {
            let v = root.dot(&coeff).abs();
            v < 1e-8 || (v - 1.0).abs() < 1e-8
        });
        if ok {
            return Some(a.onb() * coeff);
        }
    }
    None
}

/// Searches p for X ≠ 0 with ad(X)³ = −ad(X).
pub fn find_rspace_element(
    space: &SymmetricSpaceModel,
    attempts: usize,
    rng_seed: u64,
    tol: &Tolerances,
) -> Result<RSpaceSearch> {
    if !space.is_compact_type() {
        return Ok(RSpaceSearch::NotFound {
            reason: format!("{} is not of compact type", space.name),
        });
    }
    let Some(o) = OrthoAd::new(space) else {
        return Ok(RSpaceSearch::NotFound {
            reason: "Killing form is not negative definite".into(),
        });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut found = None;
    for _ in 0..attempts {
        if let Some(x) = snap_search(&o, space.dim_p(), &mut rng, tol) {
            found = Some((x, SearchMethod::Snapping));
            break;
        }
    }
    if found.is_none() {
        found = enumerate_roots(space, &o, &mut rng, tol).map(|x| (x, SearchMethod::RootEnumeration));
    }
    let Some((x_p, method)) = found else {
        return Ok(RSpaceSearch::NotFound {
            reason: format!("no element found after {attempts} snapping attempts and root enumeration"),
        });
    };
    let datum = build_datum(space, &x_p, method, tol)?;
    if datum.residuals["ad_cubic"] > tol.residual_abs {
        return Ok(RSpaceSearch::NotFound {
            reason: format!("best candidate has ad(X)^3 + ad(X) = {:.3e}", datum.residuals["ad_cubic"]),
        });
    }
    Ok(RSpaceSearch::Found(Box::new(datum)))
}

/// k₀ = ker ad(X)|k and k₋ = the (−1)-eigenspace of ad(X)²|k, in k-coordinates.
pub fn split_k(space: &SymmetricSpaceModel, x_p: &DVector<f64>, tol: &Tolerances) -> Result<(Subspace, Subspace)> {
    if x_p.norm() == 0.0 {
        return Err(Error::Precondition("X must be nonzero".into()));
    }
    let (p, k) = (space.dim_p(), space.dim_k());
    let ad = space.g().ad(&space.transvection(x_p));
    let to_p = ad.view((0, p), (p, k)).into_owned();
    let k0 = nullspace(&to_p, tol).canonical_signs();
    let sq = (&ad * &ad).view((p, p), (k, k)).into_owned() + DMatrix::identity(k, k);
    let km = nullspace(&sq, tol).canonical_signs();
    let sum = numeric::sum(&k0, &km, tol)?;
    if sum.dim() != k || k0.dim() + km.dim() != k {
        return Err(Error::Structural {
            what: format!(
                "k does not split: dim k0 = {}, dim k- = {}, dim k = {k}",
                k0.dim(),
                km.dim()
            ),
            residual: (k as f64 - sum.dim() as f64).abs(),
        });
    }
    Ok((k0, km))
}

/// Center of k in k-coordinates.
pub fn center_of_k(space: &SymmetricSpaceModel, tol: &Tolerances) -> Subspace {
    let (p, k) = (space.dim_p(), space.dim_k());
    if k == 0 {
        return Subspace::zero(0);
    }
    let blocks: Vec<DMatrix<f64>> = (0..k)
        .map(|i| space.g().ad_basis(p + i).view((p, p), (k, k)).into_owned())
        .collect();
    nullspace(&vstack(&blocks), tol).canonical_signs()
}

fn build_datum(
    space: &SymmetricSpaceModel,
    x_p: &DVector<f64>,
    method: SearchMethod,
    tol: &Tolerances,
) -> Result<RSpaceDatum> {
    let p = space.dim_p();
    let x = space.transvection(x_p);
    let ad = space.g().ad(&x);
    let (k0, km) = split_k(space, x_p, tol)?;
    let center = center_of_k(space, tol);
    let tangent_ops: Vec<DMatrix<f64>> = km.vectors().iter().map(|z| space.pi2_k(z)).collect();

    // σ = +1 on ker ad(X)|p (orbit normal space), −1 on ad(X)(k) (orbit tangent space)
    let kernel = nullspace(&ad.view((p, 0), (space.dim_k(), p)).into_owned(), tol);
    let sigma = kernel.projector() * 2.0 - DMatrix::identity(p, p);
    let mut res = BTreeMap::new();
    res.insert("ad_cubic".to_string(), cubic_residual(&ad));
    res.insert(
        "spectrum".to_string(),
        spectrum_deviation(space, x_p).unwrap_or(f64::INFINITY),
    );
    let plus = k0
        .vectors()
        .iter()
        .map(|z| {
            let a = space.pi2_k(z);
            (&sigma * &a * &sigma - a).amax()
        })
        .fold(0.0, f64::max);
    let minus = tangent_ops
        .iter()
        .map(|a| (&sigma * a * &sigma + a).amax())
        .fold(0.0, f64::max);
    res.insert("k0_even".to_string(), plus);
    res.insert("kminus_odd".to_string(), minus);
    let bk = space.g().killing().view((p, p), (space.dim_k(), space.dim_k())).into_owned();
    let orth = (k0.onb().transpose() * &bk * km.onb()).amax();
    res.insert("killing_orthogonality".to_string(), if orth.is_finite() { orth } else { 0.0 });
    Ok(RSpaceDatum {
        x,
        k0_basis: k0,
        kminus_basis: km,
        center_basis: center,
        tangent_ops,
        method,
        residuals: res,
    })
}

/// Recomputes a datum for a given X (in p-coordinates).
pub fn datum_for(space: &SymmetricSpaceModel, x_p: &DVector<f64>, tol: &Tolerances) -> Result<RSpaceDatum> {
    build_datum(space, x_p, SearchMethod::Snapping, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub holds: bool,
    pub residual: f64,
}

/// k₀ = [k₋, k₋].
pub fn verify_k0_equals_bracket(space: &SymmetricSpaceModel, d: &RSpaceDatum, tol: &Tolerances) -> Result<IdentityCheck> {
    let zs = d.kminus_basis.vectors();
    let mut br = Vec::new();
    for i in 0..zs.len() {
        for j in (i + 1)..zs.len() {
            let c = space.g().bracket(&space.from_k(&zs[i]), &space.from_k(&zs[j]));
            br.push(space.k_part(&c));
        }
    }
    let span = numeric::span(&br, space.dim_k(), tol)?;
    let residual = span.equality_residual(&d.k0_basis);
    Ok(IdentityCheck {
        holds: residual <= tol.residual_abs,
        residual,
    })
}

/// Skew operators on p commuting with ad(k)|p are exactly ad(center)|p.
pub fn verify_commutant_is_center(space: &SymmetricSpaceModel, d: &RSpaceDatum, tol: &Tolerances) -> Result<IdentityCheck> {
    if space.factors.len() > 1 {
        return Err(Error::Precondition(
            "the commutant statement needs an irreducible model".into(),
        ));
    }
    let n = space.dim_p();
    let ops: Vec<DMatrix<f64>> = (0..space.dim_k()).map(|i| space.pi2_basis(i).clone()).collect();
    let comm = commutant(&ops, n, tol)?;
    let skew = nullspace(&transpose_rows(n, -1.0), tol);
    let skew_comm = numeric::intersect(&comm, &skew, tol)?;
    let center_ops: Vec<DVector<f64>> = d
        .center_basis
        .vectors()
        .iter()
        .map(|z| vec_op(&space.pi2_k(z)))
        .collect();
    let center_span = numeric::span(&center_ops, n * n, tol)?;
    let residual = skew_comm.equality_residual(&center_span);
    Ok(IdentityCheck {
        holds: residual <= tol.residual_abs,
        residual,
    })
}

/// dim(c ∩ k₋); positive values mean the orbit splits off a euclidean factor.
pub fn verify_center_meets_kminus(d: &RSpaceDatum, tol: &Tolerances) -> Result<usize> {
    Ok(numeric::intersect(&d.center_basis, &d.kminus_basis, tol)?.dim())
}

/// The 2-jet at X of the orbit Ad(K)X ⊂ p, as a jet in euclidean space of
/// dimension dim p: W = [k₋, X], b from normal parts of [Z₁, [Z₂, X]].
pub fn orbit_jet(space: &SymmetricSpaceModel, d: &RSpaceDatum, tol: &Tolerances) -> Result<TwoJet> {
    let n = space.dim_p();
    let x_p = space.pi1(&d.x);
    let zs = d.kminus_basis.vectors();
    let u = DMatrix::from_columns(
        &zs.iter().map(|z| space.pi2_k(z) * &x_p).collect::<Vec<_>>(),
    );
    let qr = u.clone().qr();
    let r = qr.r();
    let c = r.try_inverse().ok_or_else(|| Error::Structural {
        what: "ad(X) is not injective on k-".into(),
        residual: 0.0,
    })?;
    let w_onb = qr.q();
    let w = Subspace::from_onb_columns(w_onb);
    // Z'_a = Σ_i c[i][a] Z_i has ad(Z'_a)X = w_a
    let zp: Vec<DVector<f64>> = (0..zs.len())
        .map(|a| {
            zs.iter()
                .enumerate()
                .fold(DVector::zeros(space.dim_k()), |acc, (i, z)| acc + z * c[(i, a)])
        })
        .collect();
    let m = zs.len();
    let mut b = vec![vec![DVector::zeros(n); m]; m];
    for a in 0..m {
        for bb in 0..m {
            let v = space.pi2_k(&zp[a]) * (space.pi2_k(&zp[bb]) * &x_p);
            b[a][bb] = w.project_perp(&v);
        }
    }
    for a in 0..m {
        for bb in (a + 1)..m {
            let s = (&b[a][bb] + &b[bb][a]) * 0.5;
            b[a][bb] = s.clone();
            b[bb][a] = s;
        }
    }
    let flat = Arc::new(CatalogSpec::Euclidean(n).build(tol)?);
    TwoJet::new(flat, w, b, tol)
}

/// Compares span{Ext𝐛(w)} of the orbit jet with span{ad(Z)|p : Z ∈ k₋}.
pub fn verify_orbit_jet(space: &SymmetricSpaceModel, d: &RSpaceDatum, tol: &Tolerances) -> Result<IdentityCheck> {
    let jet = orbit_jet(space, d, tol)?;
    let n = space.dim_p();
    let frame = build_frame(&jet, tol);
    let ext: Vec<DVector<f64>> = frame.bold_b.iter().map(|b| vec_op(&frame.extend(b))).collect();
    let lhs = numeric::span(&ext, n * n, tol)?;
    let tang: Vec<DVector<f64>> = d.tangent_ops.iter().map(vec_op).collect();
    let rhs = numeric::span(&tang, n * n, tol)?;
    let residual = lhs.equality_residual(&rhs);
    Ok(IdentityCheck {
        holds: residual <= tol.residual_abs,
        residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatReport {
    pub tangent_isotropic: bool,
    pub first_normal_isotropic: bool,
    pub fundamental_identity_residual: f64,
    pub centralizer_minus_dim: usize,
    /// Osculating isotropy predicted from a trivial centralizer; `None` when inconclusive.
    pub predicted_osc_isotropic: Option<bool>,
    pub osc_isotropic: bool,
    pub prediction_agrees: Option<bool>,
    pub reduced_to_flat: bool,
    pub h_invariance_residual: f64,
}

/// Evaluates the flat-case chain on a semiparallel jet with curvature-isotropic W.
pub fn flat_case_pipeline(jet: &TwoJet, tol: &Tolerances) -> Result<FlatReport> {
    let space = jet.space();
    let method = IsotropyMethod::Operator;
    if !space.is_curvature_isotropic(jet.w(), method, tol) {
        return Err(Error::Precondition("W is not curvature isotropic".into()));
    }
    let frame = build_frame(jet, tol);
    let sp = check_semiparallel_in(jet, &frame, tol)?;
    if !sp.holds {
        return Err(Error::Precondition(format!(
            "jet is not semiparallel (residual {:.3e})",
            sp.worst_residual
        )));
    }
    let fi = check_fundamental_identity(jet, tol)?;
    let d = frame.dim_osc();
    let hs: Vec<DVector<f64>> = frame.bold_b.iter().map(vec_op).collect();
    let h_span = numeric::span(&hs, d * d, tol)?;
    let cent = centralizer_minus(&frame, &h_span, tol);
    let osc_iso = space.is_curvature_isotropic(&frame.osc, method, tol);
    let predicted = (cent.dim() == 0).then_some(true);
    Ok(FlatReport {
        tangent_isotropic: true,
        first_normal_isotropic: space.is_curvature_isotropic(&frame.first_normal, method, tol),
        fundamental_identity_residual: fi.worst_residual,
        centralizer_minus_dim: cent.dim(),
        predicted_osc_isotropic: predicted,
        osc_isotropic: osc_iso,
        prediction_agrees: predicted.map(|p| p == osc_iso),
        reduced_to_flat: osc_iso,
        h_invariance_residual: check_curvature_h_invariance(jet, tol).worst_residual,
    })
}
