//! Extrinsic Nomizu construction: from an infinitesimal model `(W, b)` build
//! `m = hatΓ(W)`, `h = [m, m]` and `g = h ⊕ m` inside the isometry algebra and
//! verify the bracket identities that make `g` a subalgebra whose orbit
//! through the origin has 2-jet `(W, b)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{self, build_frame, check_infinitesimal_model, Decision, TwoJet};
use crate::lie::SymmetricSpaceModel;
use crate::numeric::{self, nullspace, rows_serde, Subspace, Tolerances};

#[derive(Clone, Debug, Serialize)]
pub struct NomizuDims {
    pub m: usize,
    pub h: usize,
    pub g: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NomizuResult {
    /// Columns are hatΓ(w_i) in g-coordinates.
    #[serde(with = "rows_serde")]
    pub hat_gamma: DMatrix<f64>,
    pub m_basis: Subspace,
    pub h_basis: Subspace,
    pub g_basis: Subspace,
    pub m0_basis: Subspace,
    pub residuals: BTreeMap<String, f64>,
    pub dims: NomizuDims,
    /// Whether the osculating space lies in no proper curvature-invariant subspace.
    pub full: bool,
    pub invariant_hull_dim: usize,
    /// dim(m₀ ∩ k): isotropy elements acting trivially on the osculating space.
    pub m0_isotropy_dim: usize,
}

/// hatΓ(w_i) = Γw_i + b̂(w_i) with b̂ the trace-norm minimal solution of the
/// isotropy equation; unique exactly when the jet is full.
pub fn hat_gamma(jet: &TwoJet, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let verdict = check_infinitesimal_model(jet, tol)?;
    if verdict.overall != Decision::Holds {
        return Err(Error::Precondition(format!(
            "jet is not an infinitesimal model (overall: {:?})",
            verdict.overall
        )));
    }
    Ok(hat_gamma_unchecked(jet, tol))
}

fn hat_gamma_unchecked(jet: &TwoJet, tol: &Tolerances) -> DMatrix<f64> {
    let space = jet.space();
    let frame = build_frame(jet, tol);
    let (a, back) = jet::gamma_system(jet, &frame);
    let ws = jet.w().vectors();
    let mut out = DMatrix::zeros(space.dim_g(), ws.len());
    for (i, w) in ws.iter().enumerate() {
        let g = jet::gamma_solve(jet, &frame, &a, &back, w, tol)
            .expect("basis vectors lie in W and the system is consistent in size");
        out.set_column(i, &(space.transvection(w) + g.x_g));
    }
    out
}

/// hatΓ of an arbitrary vector of W.
pub fn apply_hat_gamma(hat: &DMatrix<f64>, jet: &TwoJet, x: &DVector<f64>) -> DVector<f64> {
    hat * jet.w().coords(x)
}

/// All X in g with π₁(X) ∈ W and π₂(X)|O = 𝐛(π₁X), π₂(X)(O) ⊆ O.
pub fn compute_m0(jet: &TwoJet, tol: &Tolerances) -> Subspace {
    let space = jet.space();
    let frame = build_frame(jet, tol);
    let (n, dk, d, m) = (space.dim_p(), space.dim_k(), frame.dim_osc(), jet.dim_w());
    let o = frame.osc.onb();
    let w = jet.w().onb();
    let mut sys = DMatrix::zeros(n + n * d, n + dk);
    let perp = DMatrix::identity(n, n) - jet.w().projector();
    sys.view_mut((0, 0), (n, n)).copy_from(&perp);
    // Ext𝐛(P_W u) o_v = Σᵢ (Wᵀu)ᵢ O 𝐛ᵢ e_v
    let images: Vec<DMatrix<f64>> = frame.bold_b.iter().map(|b| o * b).collect();
    for v in 0..d {
        let r0 = n + v * n;
        for r in 0..n {
            let mut col = DVector::zeros(n);
            for i in 0..m {
                col -= images[i].column(v) * w[(r, i)];
            }
            sys.view_mut((r0, r), (n, 1)).copy_from(&col);
        }
        for k in 0..dk {
            let img = space.pi2_basis(k) * o.column(v);
            sys.view_mut((r0, n + k), (n, 1)).copy_from(&img);
        }
    }
    nullspace(&sys, tol).canonical_signs()
}

/// Worst ‖proj_{W⊥}(π₂(hatΓ(w_i)) w_j) − b(w_i, w_j)‖ over basis pairs.
pub fn orbit_jet_roundtrip(result: &NomizuResult, jet: &TwoJet, tol: &Tolerances) -> (bool, f64) {
    let residual = roundtrip_residual(&result.hat_gamma, jet);
    (residual <= 10.0 * tol.residual_abs, residual)
}

fn roundtrip_residual(hat: &DMatrix<f64>, jet: &TwoJet) -> f64 {
    let space = jet.space();
    let ws = jet.w().vectors();
    let mut worst: f64 = 0.0;
    for i in 0..ws.len() {
        let a = space.pi2_k(&space.k_part(&hat.column(i).into_owned()));
        for (j, wj) in ws.iter().enumerate() {
            let normal = jet.w().project_perp(&(&a * wj));
            worst = worst.max((normal - jet.b_basis(i, j)).norm());
        }
    }
    worst
}

pub fn construct(jet: &TwoJet, tol: &Tolerances) -> Result<NomizuResult> {
    let hat = hat_gamma(jet, tol)?;
    let space = jet.space();
    let g = space.g();
    let dim_g = space.dim_g();
    let m = jet.dim_w();
    let cols: Vec<DVector<f64>> = (0..m).map(|i| hat.column(i).into_owned()).collect();
    let m_basis = numeric::span(&cols, dim_g, tol)?;

    let mut res = BTreeMap::<String, f64>::new();
    let mut brackets = Vec::new();
    let mut triple_1: f64 = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let c = g.bracket(&cols[i], &cols[j]);
            triple_1 = triple_1.max(space.pi1(&c).norm());
            brackets.push(c);
        }
    }
    let h_basis = numeric::span(&brackets, dim_g, tol)?;
    let g_basis = numeric::sum(&h_basis, &m_basis, tol)?;
    res.insert("triple_1".into(), triple_1);

    // [[hatΓx, hatΓy], hatΓz] = hatΓ(B z) with B = π₂ of the k-part of [hatΓx, hatΓy]
    let ws = jet.w().vectors();
    let mut triple_5: f64 = 0.0;
    let mut pair = 0;
    for i in 0..m {
        for _ in (i + 1)..m {
            let c = &brackets[pair];
            pair += 1;
            let b_op = space.pi2_k(&space.k_part(c));
            for k in 0..m {
                let lhs = g.bracket(c, &cols[k]);
                let bz = &b_op * &ws[k];
                let rhs = apply_hat_gamma(&hat, jet, &bz);
                let leak = jet.w().distance(&bz);
                triple_5 = triple_5.max((lhs - rhs).norm()).max(leak);
            }
        }
    }
    res.insert("triple_5".into(), triple_5);
    res.insert(
        "direct_sum".into(),
        (g_basis.dim() as f64 - (h_basis.dim() + m_basis.dim()) as f64).abs(),
    );

    let gv = g_basis.vectors();
    let mut jacobi: f64 = 0.0;
    let mut g_closed: f64 = 0.0;
    for a in 0..gv.len() {
        for b in (a + 1)..gv.len() {
            let ab = g.bracket(&gv[a], &gv[b]);
            g_closed = g_closed.max(g_basis.distance(&ab));
            for c in (b + 1)..gv.len() {
                let s = g.bracket(&ab, &gv[c])
                    + g.bracket(&g.bracket(&gv[b], &gv[c]), &gv[a])
                    + g.bracket(&g.bracket(&gv[c], &gv[a]), &gv[b]);
                jacobi = jacobi.max(s.norm());
            }
        }
    }
    res.insert("jacobi".into(), jacobi);
    res.insert("g_closed".into(), g_closed);
    let h_in_k = h_basis
        .vectors()
        .iter()
        .map(|v| space.pi1(v).norm())
        .fold(0.0, f64::max);
    res.insert("h_in_k".into(), h_in_k);
    let mut hm: f64 = 0.0;
    for h in h_basis.vectors() {
        for x in &cols {
            hm = hm.max(m_basis.distance(&g.bracket(&h, x)));
        }
    }
    res.insert("hm_in_m".into(), hm);
    res.insert("roundtrip".into(), roundtrip_residual(&hat, jet));

    let m0 = compute_m0(jet, tol);
    let m0_isotropy = numeric::intersect(&m0, &space.k_basis(), tol)?;
    let m_in_m0 = m0.containment_residual(&m_basis);
    let m_eq_m0 = if m0_isotropy.dim() == 0 {
        m0.equality_residual(&m_basis)
    } else if m0.dim() == m_basis.dim() + m0_isotropy.dim() {
        m_in_m0
    } else {
        f64::INFINITY
    };
    res.insert("m_eq_m0".into(), m_eq_m0);

    let hull = space.curvature_invariant_hull(&build_frame(jet, tol).osc, tol);
    let bad: BTreeMap<String, f64> = res
        .iter()
        .filter(|(_, v)| !(**v <= 10.0 * tol.residual_abs))
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Construction { residuals: res });
    }
    Ok(NomizuResult {
        hat_gamma: hat,
        dims: NomizuDims {
            m: m_basis.dim(),
            h: h_basis.dim(),
            g: g_basis.dim(),
        },
        m_basis,
        h_basis,
        g_basis,
        m0_basis: m0,
        residuals: res,
        full: hull.dim() == space.dim_p(),
        invariant_hull_dim: hull.dim(),
        m0_isotropy_dim: m0_isotropy.dim(),
    })
}

/// Dimension of the matrix Lie algebra generated by hatΓ(W), computed by
/// closing the matrices under commutators (no structure constants involved).
pub fn generated_algebra_dim(
    space: &SymmetricSpaceModel,
    hat: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<usize> {
    let mats: Vec<DMatrix<f64>> = hat
        .column_iter()
        .map(|c| space.g().matrix(&c.into_owned()))
        .collect();
    Ok(numeric::bracket_closure(&mats, &[], tol)?.dim())
}
