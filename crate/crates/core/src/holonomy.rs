//! Holonomy algebras attached to a 2-jet and the homogeneity verdict.
//!
//! The holonomy of the osculating bundle is approximated by the smallest
//! operator space containing the restricted curvature operators R(x, y)|O that
//! is closed under brackets and under bracketing with every 𝐡(x). Structural
//! facts about the true holonomy (σ⊥-invariance, the ± splitting, R|O ∈ hol₊)
//! are then checked on that closure rather than assumed. The verdict itself is
//! always the direct isotropy-equation test.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::jet::{
    build_frame, check_gamma_feasibility, osc_preservation_residual, Decision, GammaSummary,
    OsculatingFrame, TwoJet,
};
use crate::lie::SymmetricSpaceModel;
use crate::numeric::{
    self, bracket_closure, commutant, commutator, isotypic_split, nullspace, transpose_rows,
    unvec_op, vec_op, vstack, LinearMap, Subspace, Tolerances,
};

/// Seed for the randomised isotypic splitting; fixed so reports are reproducible.
const SPLIT_SEED: u64 = 0x5EED_1DEA;

fn ops_of(s: &Subspace, n: usize) -> Vec<LinearMap> {
    s.vectors().iter().map(|v| unvec_op(v, n)).collect()
}

/// span{R(u, v)} over basis pairs, as vectorised operators on p.
pub fn hol_ambient(space: &SymmetricSpaceModel, tol: &Tolerances) -> Subspace {
    space.curvature_operator_span(tol)
}

/// Largest distance from `s` of a bracket of two of its basis elements.
pub fn bracket_closure_residual(s: &Subspace, n: usize) -> f64 {
    let ops = ops_of(s, n);
    let mut worst: f64 = 0.0;
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            worst = worst.max(s.distance(&vec_op(&commutator(&ops[i], &ops[j]))));
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct MbarHolonomy {
    /// Vectorised operators on W-coordinates.
    pub algebra: Subspace,
    pub irreducible: bool,
    /// Dimension of the joint kernel (the flat de Rham factor).
    pub flat_part_dim: usize,
    pub block_dims: Vec<usize>,
}

fn restricted_curvature(jet: &TwoJet) -> Vec<LinearMap> {
    let w = jet.w().onb();
    let ws = jet.w().vectors();
    let mut out = Vec::new();
    for i in 0..ws.len() {
        for j in (i + 1)..ws.len() {
            out.push(w.transpose() * jet.space().curvature_operator(&ws[i], &ws[j]) * w);
        }
    }
    out
}

/// span{R(x, y)|W} in W-coordinates, with its irreducibility decided by splitting.
pub fn hol_mbar(jet: &TwoJet, tol: &Tolerances) -> Result<MbarHolonomy> {
    let leak = jet.space().curvature_invariance_residual(jet.w());
    if leak > tol.residual_abs {
        return Err(Error::Precondition(format!(
            "W is not curvature invariant (leak {leak:.3e})"
        )));
    }
    let m = jet.dim_w();
    let ops = restricted_curvature(jet);
    let flat: Vec<_> = ops.iter().map(vec_op).collect();
    let algebra = numeric::span(&flat, m * m, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SPLIT_SEED);
    let split = isotypic_split(&ops, m, tol, &mut rng)?;
    Ok(MbarHolonomy {
        algebra,
        irreducible: m > 0 && split.is_irreducible(),
        flat_part_dim: split.trivial_part.dim(),
        block_dims: split.blocks.iter().map(Subspace::dim).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OscHolonomy {
    pub dim_osc: usize,
    /// Vectorised operators on osculating coordinates.
    pub algebra: Subspace,
    pub plus: Subspace,
    pub minus: Subspace,
    pub residuals: BTreeMap<String, f64>,
}

fn sigma_conj(frame: &OsculatingFrame, a: &LinearMap) -> LinearMap {
    &frame.sigma_perp * a * &frame.sigma_perp
}

/// Closure of the restricted curvature operators under brackets and 𝐡(W).
pub fn hol_osculating(jet: &TwoJet, tol: &Tolerances) -> Result<OscHolonomy> {
    let frame = build_frame(jet, tol);
    hol_osculating_in(jet, &frame, tol)
}

fn hol_osculating_in(jet: &TwoJet, frame: &OsculatingFrame, tol: &Tolerances) -> Result<OscHolonomy> {
    let leak = osc_preservation_residual(jet, frame);
    if leak > tol.residual_abs {
        return Err(Error::Structural {
            what: "restricted curvature operators do not preserve the osculating space".into(),
            residual: leak,
        });
    }
    let d = frame.dim_osc();
    let ws = jet.w().vectors();
    let mut seed = Vec::new();
    for i in 0..ws.len() {
        for j in (i + 1)..ws.len() {
            seed.push(frame.restrict(&jet.space().curvature_operator(&ws[i], &ws[j])));
        }
    }
    let algebra = if d == 0 {
        Subspace::zero(0)
    } else if seed.is_empty() {
        Subspace::zero(d * d)
    } else {
        bracket_closure(&seed, &frame.bold_b, tol)?
    };
    let ops = ops_of(&algebra, d);
    let plus_vecs: Vec<_> = ops
        .iter()
        .map(|a| vec_op(&((a + sigma_conj(frame, a)) * 0.5)))
        .collect();
    let minus_vecs: Vec<_> = ops
        .iter()
        .map(|a| vec_op(&((a - sigma_conj(frame, a)) * 0.5)))
        .collect();
    let plus = numeric::span(&plus_vecs, d * d, tol)?;
    let minus = numeric::span(&minus_vecs, d * d, tol)?;

    let mut res = BTreeMap::new();
    let sigma_inv = ops
        .iter()
        .map(|a| algebra.distance(&vec_op(&sigma_conj(frame, a))))
        .fold(0.0, f64::max);
    res.insert("sigma_invariance".to_string(), sigma_inv);
    res.insert(
        "split_dimension".to_string(),
        (algebra.dim() as f64 - (plus.dim() + minus.dim()) as f64).abs(),
    );
    let seed_in_plus = seed
        .iter()
        .map(|r| plus.distance(&vec_op(r)))
        .fold(0.0, f64::max);
    res.insert("plus_contains_curvature".to_string(), seed_in_plus);
    let mut outer: f64 = 0.0;
    for h in &frame.bold_b {
        for a in &ops {
            outer = outer.max(algebra.distance(&vec_op(&commutator(h, a))));
        }
    }
    res.insert("outer_derivation".to_string(), outer);
    res.insert("bracket_closed".to_string(), bracket_closure_residual(&algebra, d));
    let skew = ops
        .iter()
        .map(|a| (a + a.transpose()).amax())
        .fold(0.0, f64::max);
    res.insert("skew".to_string(), skew);
    Ok(OscHolonomy {
        dim_osc: d,
        algebra,
        plus,
        minus,
        residuals: res,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Defect {
    pub defect_norms: Vec<f64>,
    #[serde(skip)]
    pub projections: Vec<LinearMap>,
    /// Largest ‖[𝐡(x) − P𝐡(x), A]‖ over basis elements A of the algebra.
    pub centralizer_residual: f64,
    /// Largest distance of P𝐡(x) from the odd part of the algebra.
    pub minus_residual: f64,
    /// Rank of x ↦ 𝐡(x) − P𝐡(x).
    pub rank: usize,
}

/// Orthogonal projection of each 𝐡(w_i) onto `hol` for the trace form
/// −tr(AB), which on skew operators is the Frobenius inner product.
pub fn project_defect(
    jet: &TwoJet,
    hol: &OscHolonomy,
    tol: &Tolerances,
) -> Result<Defect> {
    let frame = build_frame(jet, tol);
    let d = frame.dim_osc();
    if hol.dim_osc != d {
        return input("holonomy algebra lives on a different osculating space");
    }
    let ops = ops_of(&hol.algebra, d);
    let mut norms = Vec::new();
    let mut proj = Vec::new();
    let mut defects = Vec::new();
    let (mut cent, mut minus): (f64, f64) = (0.0, 0.0);
    for h in &frame.bold_b {
        let p = unvec_op(&hol.algebra.project(&vec_op(h)), d);
        let defect = h - &p;
        norms.push(defect.norm());
        for a in &ops {
            cent = cent.max(commutator(&defect, a).norm());
        }
        minus = minus.max(hol.minus.distance(&vec_op(&p)));
        defects.push(vec_op(&defect));
        proj.push(p);
    }
    let rank = if defects.is_empty() {
        0
    } else {
        numeric::numerical_rank(&DMatrix::from_columns(&defects), tol)
    };
    Ok(Defect {
        defect_norms: norms,
        projections: proj,
        centralizer_residual: cent,
        minus_residual: minus,
        rank,
    })
}

/// Linear maps λ: U₁ → U₂ with λ A₁ = A₂ λ for paired operators, flattened
/// column-major as `dim_u2 x dim_u1` matrices.
pub fn intertwiners(
    ops_1: &[LinearMap],
    dim_1: usize,
    ops_2: &[LinearMap],
    dim_2: usize,
    tol: &Tolerances,
) -> Result<Subspace> {
    if ops_1.len() != ops_2.len() {
        return input(format!(
            "operator lists must pair up: {} vs {}",
            ops_1.len(),
            ops_2.len()
        ));
    }
    for (a, b) in ops_1.iter().zip(ops_2) {
        if a.shape() != (dim_1, dim_1) || b.shape() != (dim_2, dim_2) {
            return input("operator sizes do not match the module dimensions");
        }
    }
    let nn = dim_1 * dim_2;
    if ops_1.is_empty() {
        return Ok(Subspace::full(nn));
    }
    let e1 = DMatrix::<f64>::identity(dim_1, dim_1);
    let e2 = DMatrix::<f64>::identity(dim_2, dim_2);
    let blocks: Vec<DMatrix<f64>> = ops_1
        .iter()
        .zip(ops_2)
        .map(|(a, b)| a.transpose().kronecker(&e2) - e1.kronecker(b))
        .collect();
    Ok(nullspace(&vstack(&blocks), tol))
}

/// dim of the commutant of `ops` on an n-dimensional module.
pub fn schur_dimension_of(ops: &[LinearMap], n: usize, tol: &Tolerances) -> Result<usize> {
    Ok(commutant(ops, n, tol)?.dim())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchurDimension {
    pub d: usize,
    pub irreducible: bool,
    /// Whether d ∈ {1, 2, 4}; only asserted for irreducible modules.
    pub classified: Option<bool>,
}

/// Commutant dimension of span{R(x, y)|W} acting on W.
pub fn schur_dimension(jet: &TwoJet, tol: &Tolerances) -> Result<SchurDimension> {
    let mb = hol_mbar(jet, tol)?;
    let m = jet.dim_w();
    let d = schur_dimension_of(&restricted_curvature(jet), m, tol)?;
    Ok(SchurDimension {
        d,
        irreducible: mb.irreducible,
        classified: mb.irreducible.then_some(matches!(d, 1 | 2 | 4)),
    })
}

/// Skew operators on the osculating space that are odd under σ⊥ and commute
/// with every element of `hol`.
pub fn centralizer_minus(
    frame: &OsculatingFrame,
    hol: &Subspace,
    tol: &Tolerances,
) -> Subspace {
    let d = frame.dim_osc();
    if d == 0 {
        return Subspace::zero(0);
    }
    let eye = DMatrix::<f64>::identity(d, d);
    let mut blocks = vec![
        transpose_rows(d, -1.0),
        frame.sigma_perp.kronecker(&frame.sigma_perp) + DMatrix::identity(d * d, d * d),
    ];
    for h in ops_of(hol, d) {
        blocks.push(h.transpose().kronecker(&eye) - eye.kronecker(&h));
    }
    nullspace(&vstack(&blocks), tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Homogeneity {
    Homogeneous,
    NotHomogeneous,
    Indeterminate,
}

/// The sufficient-condition chain: small centralizer ⇒ zero defect ⇒ every
/// 𝐡(x) lies in the holonomy ⇒ the isotropy equation is solvable.
#[derive(Clone, Debug, Serialize)]
pub struct ChainTrace {
    pub surrogate_checks_pass: bool,
    pub centralizer_minus_dim: usize,
    pub centralizer_below_dim_w: bool,
    pub defect_zero: bool,
    /// What the chain alone concludes (never "not homogeneous").
    pub implies_homogeneous: bool,
    /// Chain conclusion agrees with the direct test.
    pub consistent: bool,
    pub status: Decision,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyReport {
    pub hol_n_dim: usize,
    pub hol_mbar_dim: Option<usize>,
    pub mbar_irreducible: Option<bool>,
    pub mbar_flat_part_dim: Option<usize>,
    pub hol_of_dim: Option<usize>,
    pub hol_of_plus_dim: Option<usize>,
    pub hol_of_minus_dim: Option<usize>,
    pub centralizer_minus_dim: Option<usize>,
    pub defect_norms: Vec<f64>,
    pub defect_rank: Option<usize>,
    pub d: Option<SchurDimension>,
    pub dim_first_normal: usize,
    pub residuals: BTreeMap<String, f64>,
    pub gamma: Vec<GammaSummary>,
    pub chain: Option<ChainTrace>,
    pub minus_nonzero: Option<bool>,
    /// dim(c(hol) ∩ so(O)₋) < 3 for irreducible model jets with dim W ≥ 3.
    pub centralizer_below_three: Option<bool>,
    pub notes: Vec<String>,
    pub verdict: Homogeneity,
    #[serde(skip)]
    pub hol_of: Option<OscHolonomy>,
}

pub fn homogeneity_verdict(jet: &TwoJet, tol: &Tolerances) -> Result<HolonomyReport> {
    let space = jet.space();
    let frame = build_frame(jet, tol);
    let mut notes = Vec::new();

    let mut gamma = Vec::new();
    let mut direct = Decision::Holds;
    for w in jet.w().vectors() {
        let g = check_gamma_feasibility(jet, &w, tol)?;
        direct = direct.and(Decision::from_verdict(g.verdict));
        gamma.push(GammaSummary {
            verdict: g.verdict,
            residual: g.residual,
            target_norm: g.target_norm,
        });
    }
    let verdict = match direct {
        Decision::Holds => Homogeneity::Homogeneous,
        Decision::Fails => Homogeneity::NotHomogeneous,
        Decision::Indeterminate => Homogeneity::Indeterminate,
    };

    let hol_n_dim = hol_ambient(space, tol).dim();
    let mbar = match hol_mbar(jet, tol) {
        Ok(mb) => Some(mb),
        Err(Error::Precondition(msg)) => {
            notes.push(msg);
            None
        }
        Err(e) => return Err(e),
    };
    let schur = if mbar.is_some() {
        Some(schur_dimension(jet, tol)?)
    } else {
        None
    };
    let osc = match hol_osculating_in(jet, &frame, tol) {
        Ok(h) => Some(h),
        Err(Error::Structural { what, residual }) => {
            notes.push(format!("{what} ({residual:.3e})"));
            None
        }
        Err(e) => return Err(e),
    };

    let mut residuals = BTreeMap::new();
    let mut report = HolonomyReport {
        hol_n_dim,
        hol_mbar_dim: mbar.as_ref().map(|m| m.algebra.dim()),
        mbar_irreducible: mbar.as_ref().map(|m| m.irreducible),
        mbar_flat_part_dim: mbar.as_ref().map(|m| m.flat_part_dim),
        hol_of_dim: None,
        hol_of_plus_dim: None,
        hol_of_minus_dim: None,
        centralizer_minus_dim: None,
        defect_norms: Vec::new(),
        defect_rank: None,
        d: schur.clone(),
        dim_first_normal: frame.first_normal.dim(),
        residuals: BTreeMap::new(),
        gamma,
        chain: None,
        minus_nonzero: None,
        centralizer_below_three: None,
        notes,
        verdict,
        hol_of: None,
    };
    let Some(osc) = osc else {
        return Ok(report);
    };
    residuals.extend(osc.residuals.clone());
    let defect = project_defect(jet, &osc, tol)?;
    residuals.insert("defect_in_centralizer".into(), defect.centralizer_residual);
    residuals.insert("projection_in_minus".into(), defect.minus_residual);
    let cent = centralizer_minus(&frame, &osc.algebra, tol);

    let surrogate_ok = osc.residuals.values().all(|r| *r <= 10.0 * tol.residual_abs);
    let m = jet.dim_w();
    let defect_zero = defect.defect_norms.iter().all(|n| *n <= tol.residual_abs);
    let implies = surrogate_ok && defect_zero;
    let consistent = !implies || verdict == Homogeneity::Homogeneous;
    let chain = ChainTrace {
        surrogate_checks_pass: surrogate_ok,
        centralizer_minus_dim: cent.dim(),
        centralizer_below_dim_w: cent.dim() < m,
        defect_zero,
        implies_homogeneous: implies,
        consistent,
        status: if !surrogate_ok {
            Decision::Indeterminate
        } else {
            Decision::from_bool(implies)
        },
    };
    let model_jet = verdict == Homogeneity::Homogeneous;
    let irreducible = mbar.as_ref().is_some_and(|mb| mb.irreducible);
    if model_jet && irreducible {
        let d = schur.as_ref().map_or(1, |s| s.d);
        report.minus_nonzero =
            Some(check_minus_nonzero_parts(frame.first_normal.dim(), d, osc.minus.dim()));
        if m >= 3 {
            report.centralizer_below_three = Some(cent.dim() < 3);
        }
    }
    report.hol_of_dim = Some(osc.algebra.dim());
    report.hol_of_plus_dim = Some(osc.plus.dim());
    report.hol_of_minus_dim = Some(osc.minus.dim());
    report.centralizer_minus_dim = Some(cent.dim());
    report.defect_norms = defect.defect_norms;
    report.defect_rank = Some(defect.rank);
    report.residuals = residuals;
    report.chain = Some(chain);
    report.hol_of = Some(osc);
    Ok(report)
}

fn check_minus_nonzero_parts(dim_first_normal: usize, d: usize, minus_dim: usize) -> bool {
    dim_first_normal <= d || minus_dim > 0
}

/// dim ⊥¹ > d forces a nonzero odd part of the osculating holonomy.
pub fn check_minus_nonzero(report: &HolonomyReport) -> Result<bool> {
    let (Some(d), Some(minus)) = (&report.d, report.hol_of_minus_dim) else {
        return Err(Error::Precondition(
            "report lacks the Schur dimension or the osculating holonomy".into(),
        ));
    };
    if !d.irreducible {
        return Err(Error::Precondition("tangent holonomy is reducible".into()));
    }
    Ok(check_minus_nonzero_parts(report.dim_first_normal, d.d, minus))
}

/// Convenience: does a report's direct verdict agree with a gamma verdict list?
pub fn direct_decision(gamma: &[GammaSummary]) -> Decision {
    gamma
        .iter()
        .fold(Decision::Holds, |acc, g| acc.and(Decision::from_verdict(g.verdict)))
}
