//! Formal 2-jets `(W, b)` at the origin and the infinitesimal-model test.
//!
//! Osculating coordinates list an orthonormal basis of `W` first and then one of
//! the first normal space, so `σ⊥ = diag(-I_m, I_s)` and every `𝐛(x)` has the
//! off-diagonal block form `[[0, -Cᵀ], [C, 0]]` with `C[a][j] = <b(x, w_j), ξ_a>`.
//! Operators on the osculating space are extended to all of p by zero on its
//! orthogonal complement.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::lie::SymmetricSpaceModel;
use crate::numeric::{self, commutator, solve_least_squares, Subspace, Tolerances, Verdict};

#[derive(Clone, Debug)]
pub struct TwoJet {
    space: Arc<SymmetricSpaceModel>,
    w: Subspace,
    b: Vec<Vec<DVector<f64>>>,
}

impl TwoJet {
    /// `b[i][j]` is `b(w_i, w_j)` for the orthonormal basis `w` of `W`.
    pub fn new(
        space: Arc<SymmetricSpaceModel>,
        w: Subspace,
        b: Vec<Vec<DVector<f64>>>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = space.dim_p();
        let m = w.dim();
        if w.ambient_dim() != n {
            return input(format!("W lives in dimension {}, p has {n}", w.ambient_dim()));
        }
        if w.orthonormality_residual() > tol.residual_abs.max(1e-12) * 10.0 {
            return input("W basis is not orthonormal");
        }
        if b.len() != m || b.iter().any(|row| row.len() != m) {
            return input(format!("b must be a {m}x{m} array"));
        }
        let scale = 1.0
            + b.iter()
                .flatten()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
        for i in 0..m {
            for j in 0..m {
                if b[i][j].len() != n {
                    return input("b values must be p-coordinate vectors");
                }
                if (&b[i][j] - &b[j][i]).amax() > tol.residual_abs * scale {
                    return input(format!("b is not symmetric at ({i},{j})"));
                }
                let leak = w.coords(&b[i][j]).norm();
                if leak > tol.residual_abs * scale {
                    return input(format!(
                        "b({i},{j}) is not normal to W (tangential part {leak:.3e})"
                    ));
                }
            }
        }
        Ok(TwoJet { space, w, b })
    }

    /// Builds `b` by evaluating a bilinear form on basis pairs.
    pub fn from_fn(
        space: Arc<SymmetricSpaceModel>,
        w: Subspace,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let ws = w.vectors();
        let b = ws
            .iter()
            .map(|x| ws.iter().map(|y| f(x, y)).collect())
            .collect();
        TwoJet::new(space, w, b, tol)
    }

    pub fn space(&self) -> &SymmetricSpaceModel {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<SymmetricSpaceModel> {
        &self.space
    }

    pub fn w(&self) -> &Subspace {
        &self.w
    }

    pub fn dim_w(&self) -> usize {
        self.w.dim()
    }

    pub fn b_basis(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.b[i][j]
    }

    /// b(x, y) for p-vectors in W (components outside W are ignored).
    pub fn b(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let (a, c) = (self.w.coords(x), self.w.coords(y));
        let mut out = DVector::zeros(self.space.dim_p());
        for i in 0..a.len() {
            for j in 0..c.len() {
                let s = a[i] * c[j];
                if s != 0.0 {
                    out += &self.b[i][j] * s;
                }
            }
        }
        out
    }

    pub fn is_zero(&self, tol: &Tolerances) -> bool {
        self.b.iter().flatten().all(|v| v.norm() <= tol.residual_abs)
    }

    /// The same jet with `b` multiplied by `t`.
    pub fn scaled(&self, t: f64) -> TwoJet {
        TwoJet {
            space: self.space.clone(),
            w: self.w.clone(),
            b: self
                .b
                .iter()
                .map(|row| row.iter().map(|v| v * t).collect())
                .collect(),
        }
    }

    /// Re-expresses the jet in the basis `W Q` for an orthogonal `Q`.
    pub fn rebased(&self, q: &DMatrix<f64>) -> TwoJet {
        let m = self.dim_w();
        let w = Subspace::from_onb_columns(self.w.onb() * q);
        let b = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut v = DVector::zeros(self.space.dim_p());
                        for k in 0..m {
                            for l in 0..m {
                                v += &self.b[k][l] * (q[(k, i)] * q[(l, j)]);
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        TwoJet {
            space: self.space.clone(),
            w,
            b,
        }
    }

    /// S_ξ x with <S_ξ x, y> = <b(x, y), ξ>.
    pub fn shape_operator(&self, xi: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.space.dim_p());
        for wj in self.w.vectors() {
            out += &wj * self.b(x, &wj).dot(xi);
        }
        out
    }

    pub fn to_json(&self, model_ref: impl Into<String>) -> JetJson {
        JetJson {
            model_ref: model_ref.into(),
            w_onb: self.w.rows(),
            b: self
                .b
                .iter()
                .map(|row| row.iter().map(|v| v.iter().copied().collect()).collect())
                .collect(),
        }
    }

    pub fn from_json(
        space: Arc<SymmetricSpaceModel>,
        j: &JetJson,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = space.dim_p();
        let vs: Vec<DVector<f64>> = j
            .w_onb
            .iter()
            .map(|r| DVector::from_column_slice(r))
            .collect();
        if vs.iter().any(|v| v.len() != n) {
            return input(format!("W_onb rows must have length {n}"));
        }
        let w = Subspace::from_onb_columns(DMatrix::from_fn(n, vs.len(), |i, c| vs[c][i]));
        let b = j
            .b
            .iter()
            .map(|row| row.iter().map(|v| DVector::from_column_slice(v)).collect())
            .collect();
        TwoJet::new(space, w, b, tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetJson {
    pub model_ref: String,
    #[serde(rename = "W_onb")]
    pub w_onb: Vec<Vec<f64>>,
    pub b: Vec<Vec<Vec<f64>>>,
}

/// W = span of the given vectors and b = κ<x, y> ξ for a unit normal ξ.
pub fn umbilic(
    space: Arc<SymmetricSpaceModel>,
    w: Subspace,
    xi: &DVector<f64>,
    kappa: f64,
    tol: &Tolerances,
) -> Result<TwoJet> {
    let xi = xi.normalize();
    TwoJet::from_fn(space, w, |x, y| &xi * (kappa * x.dot(y)), tol)
}

/// The jet of a curve with unit tangent x/|x| and acceleration y.
pub fn circle(
    space: Arc<SymmetricSpaceModel>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: &Tolerances,
) -> Result<TwoJet> {
    if x.norm() == 0.0 {
        return input("circle tangent must be nonzero");
    }
    let u = x.normalize();
    let w = Subspace::from_onb_columns(DMatrix::from_column_slice(u.len(), 1, u.as_slice()));
    TwoJet::new(space, w, vec![vec![y.clone()]], tol)
}

pub fn totally_geodesic(
    space: Arc<SymmetricSpaceModel>,
    w: Subspace,
    tol: &Tolerances,
) -> Result<TwoJet> {
    let n = space.dim_p();
    TwoJet::from_fn(space, w, |_, _| DVector::zeros(n), tol)
}

/// Frobenius-orthonormal basis of traceless symmetric m x m matrices.
pub fn traceless_symmetric_basis(m: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut e = DMatrix::zeros(m, m);
            e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
            e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
            out.push(e);
        }
    }
    for k in 1..m {
        let c = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut e = DMatrix::zeros(m, m);
        for i in 0..k {
            e[(i, i)] = c;
        }
        e[(k, k)] = -(k as f64) * c;
        out.push(e);
    }
    out
}

/// Veronese-type jet: W = first m axes, and b(x, y) = λ((xyᵀ + yxᵀ)/2 - <x,y> I/m)
/// written in the traceless symmetric basis on the next m(m+1)/2 - 1 axes.
pub fn veronese(
    space: Arc<SymmetricSpaceModel>,
    m: usize,
    lambda: f64,
    tol: &Tolerances,
) -> Result<TwoJet> {
    let basis = traceless_symmetric_basis(m);
    let need = m + basis.len();
    let n = space.dim_p();
    if m < 2 || need > n {
        return input(format!(
            "veronese({m}) needs m >= 2 and {need} tangent dimensions, model has {n}"
        ));
    }
    let w = Subspace::axes(n, 0..m);
    TwoJet::from_fn(
        space,
        w,
        |x, y| {
            let (x, y) = (x.rows(0, m), y.rows(0, m));
            let mat = (x * y.transpose() + y * x.transpose()) * 0.5
                - DMatrix::identity(m, m) * (x.dot(&y) / m as f64);
            let mut out = DVector::zeros(n);
            for (a, e) in basis.iter().enumerate() {
                out[m + a] = lambda * e.dot(&mat);
            }
            out
        },
        tol,
    )
}

#[derive(Clone, Debug)]
pub struct OsculatingFrame {
    pub osc: Subspace,
    pub first_normal: Subspace,
    pub sigma_perp: DMatrix<f64>,
    pub bold_b: Vec<DMatrix<f64>>,
    m: usize,
}

impl OsculatingFrame {
    pub fn dim_w(&self) -> usize {
        self.m
    }

    pub fn dim_osc(&self) -> usize {
        self.osc.dim()
    }

    /// 𝐛 of a W-coordinate vector.
    pub fn bold_b_coords(&self, alpha: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim_osc();
        let mut out = DMatrix::zeros(d, d);
        for (i, bb) in self.bold_b.iter().enumerate() {
            if alpha[i] != 0.0 {
                out += bb * alpha[i];
            }
        }
        out
    }

    /// Osculating coordinates of a p-vector.
    pub fn to_osc(&self, v: &DVector<f64>) -> DVector<f64> {
        self.osc.coords(v)
    }

    pub fn from_osc(&self, v: &DVector<f64>) -> DVector<f64> {
        self.osc.onb() * v
    }

    /// Extension of an osculating operator by zero on the orthogonal complement.
    pub fn extend(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.osc.onb() * a * self.osc.onb().transpose()
    }

    /// Restriction `Oᵀ A O` of an operator on p.
    pub fn restrict(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.osc.onb().transpose() * a * self.osc.onb()
    }

    /// Largest violation of skewness, σ⊥-oddness, and 𝐛(w_i)w_j = b(w_i, w_j).
    pub fn invariant_residual(&self, jet: &TwoJet) -> f64 {
        let d = self.dim_osc();
        let mut worst = (&self.sigma_perp * &self.sigma_perp - DMatrix::identity(d, d)).amax();
        for (i, bb) in self.bold_b.iter().enumerate() {
            worst = worst.max((bb + bb.transpose()).amax());
            worst = worst.max((&self.sigma_perp * bb * &self.sigma_perp + bb).amax());
            for j in 0..self.m {
                let img = self.from_osc(&bb.column(j).into_owned());
                worst = worst.max((img - jet.b_basis(i, j)).amax());
            }
        }
        worst
    }
}

pub fn build_frame(jet: &TwoJet, tol: &Tolerances) -> OsculatingFrame {
    let m = jet.dim_w();
    let n = jet.space().dim_p();
    let values: Vec<DVector<f64>> = (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .map(|(i, j)| jet.b_basis(i, j).clone())
        .collect();
    let first_normal = numeric::span(&values, n, tol)
        .expect("b values have length dim p")
        .canonical_signs();
    let s = first_normal.dim();
    let mut onb = DMatrix::zeros(n, m + s);
    onb.view_mut((0, 0), (n, m)).copy_from(jet.w().onb());
    onb.view_mut((0, m), (n, s)).copy_from(first_normal.onb());
    let osc = Subspace::from_onb_columns(onb);
    let sigma_perp = DMatrix::from_fn(m + s, m + s, |i, j| match (i == j, i < m) {
        (true, true) => -1.0,
        (true, false) => 1.0,
        _ => 0.0,
    });
    let bold_b = (0..m)
        .map(|i| {
            let mut bb = DMatrix::zeros(m + s, m + s);
            for j in 0..m {
                let c = first_normal.coords(jet.b_basis(i, j));
                for a in 0..s {
                    bb[(m + a, j)] = c[a];
                    bb[(j, m + a)] = -c[a];
                }
            }
            bb
        })
        .collect();
    OsculatingFrame {
        osc,
        first_normal,
        sigma_perp,
        bold_b,
        m,
    }
}

/// Worst leak of R(w_i, w_j) out of the osculating space over W-basis pairs.
pub fn osc_preservation_residual(jet: &TwoJet, frame: &OsculatingFrame) -> f64 {
    let ws = jet.w().vectors();
    let ops: Vec<DMatrix<f64>> = pairs(ws.len())
        .map(|(i, j)| jet.space().curvature_operator(&ws[i], &ws[j]))
        .collect();
    numeric::invariance_residual(&frame.osc, &ops)
}

fn pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |i| ((i + 1)..m).map(move |j| (i, j)))
}

fn require_osc_preserved(jet: &TwoJet, frame: &OsculatingFrame, tol: &Tolerances) -> Result<()> {
    let leak = osc_preservation_residual(jet, frame);
    if leak > tol.residual_abs {
        return Err(Error::Structural {
            what: "curvature operators R(x, y), x, y in W, do not preserve the osculating space"
                .into(),
            residual: leak,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemiparallelCheck {
    pub holds: bool,
    pub worst_residual: f64,
    /// Same identity evaluated on the orthogonal complement of the osculating
    /// space with every 𝐛 extended by zero there.
    pub outside_residual: f64,
}

/// Evaluates 𝐛(R(x,y)z - [𝐛x,𝐛y]z) v - [R(x,y) - [𝐛x,𝐛y], 𝐛z] v on basis tuples.
pub fn check_semiparallel(jet: &TwoJet, tol: &Tolerances) -> Result<SemiparallelCheck> {
    let frame = build_frame(jet, tol);
    check_semiparallel_in(jet, &frame, tol)
}

pub fn check_semiparallel_in(
    jet: &TwoJet,
    frame: &OsculatingFrame,
    tol: &Tolerances,
) -> Result<SemiparallelCheck> {
    require_osc_preserved(jet, frame, tol)?;
    let m = jet.dim_w();
    let d = frame.dim_osc();
    let ws = jet.w().vectors();
    let complement = frame.osc.complement(tol);
    let mut worst: f64 = 0.0;
    let mut outside: f64 = 0.0;
    for (i, j) in pairs(m) {
        let r_full = jet.space().curvature_operator(&ws[i], &ws[j]);
        let r = frame.restrict(&r_full);
        let bb = commutator(&frame.bold_b[i], &frame.bold_b[j]);
        let omega = &r - &bb;
        let omega_full = &r_full - frame.extend(&bb);
        for k in 0..m {
            let u = &omega * DVector::from_fn(d, |r, _| if r == k { 1.0 } else { 0.0 });
            let leak = u.rows(m, d - m).norm();
            if leak > tol.residual_abs * (1.0 + u.norm()) {
                return Err(Error::Structural {
                    what: "argument of 𝐛 leaves W in the semiparallel identity".into(),
                    residual: leak,
                });
            }
            let lhs = frame.bold_b_coords(&u.rows(0, m).into_owned());
            let diff = &lhs - commutator(&omega, &frame.bold_b[k]);
            for c in diff.column_iter() {
                worst = worst.max(c.norm());
            }
            if complement.dim() > 0 {
                let diff_full =
                    frame.extend(&lhs) - commutator(&omega_full, &frame.extend(&frame.bold_b[k]));
                for v in complement.vectors() {
                    outside = outside.max((&diff_full * v).norm());
                }
            }
        }
    }
    Ok(SemiparallelCheck {
        holds: worst <= tol.residual_abs,
        worst_residual: worst,
        outside_residual: outside,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaCheck {
    pub verdict: Verdict,
    pub residual: f64,
    pub target_norm: f64,
    /// Solution in k-coordinates.
    pub x_k: DVector<f64>,
    /// Solution in g-coordinates.
    pub x_g: DVector<f64>,
}

/// Constraint matrix for π₂(X) O = Ext𝐛(x) O over X in k, with columns already
/// transformed so that the Euclidean norm of the unknown is the trace norm
/// `-tr(π₂(X)²)` of X. Returns (matrix, back-transform to k-coordinates).
pub(crate) fn gamma_system(
    jet: &TwoJet,
    frame: &OsculatingFrame,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let space = jet.space();
    let (n, dk, d) = (space.dim_p(), space.dim_k(), frame.dim_osc());
    let o = frame.osc.onb();
    let mut a = DMatrix::zeros(n * d, dk);
    for i in 0..dk {
        let img = space.pi2_basis(i) * o;
        for v in 0..d {
            a.view_mut((v * n, i), (n, 1)).copy_from(&img.column(v));
        }
    }
    let gram = DMatrix::from_fn(dk, dk, |i, j| space.pi2_basis(i).dot(space.pi2_basis(j)));
    let back = match gram.cholesky() {
        Some(ch) => ch
            .l()
            .transpose()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::identity(dk, dk)),
        None => DMatrix::identity(dk, dk),
    };
    (a * &back, back)
}

pub(crate) fn gamma_target(jet: &TwoJet, frame: &OsculatingFrame, alpha: &DVector<f64>) -> DVector<f64> {
    let n = jet.space().dim_p();
    let d = frame.dim_osc();
    let img = frame.osc.onb() * frame.bold_b_coords(alpha);
    let mut t = DVector::zeros(n * d);
    for v in 0..d {
        t.rows_mut(v * n, n).copy_from(&img.column(v));
    }
    t
}

/// Is there X in k with π₂(X)(O) ⊆ O and π₂(X)|O = 𝐛(x)? Returns the
/// minimum-norm X for the trace norm of π₂.
pub fn check_gamma_feasibility(
    jet: &TwoJet,
    x: &DVector<f64>,
    tol: &Tolerances,
) -> Result<GammaCheck> {
    let frame = build_frame(jet, tol);
    let (a, back) = gamma_system(jet, &frame);
    gamma_solve(jet, &frame, &a, &back, x, tol)
}

pub(crate) fn gamma_solve(
    jet: &TwoJet,
    frame: &OsculatingFrame,
    a: &DMatrix<f64>,
    back: &DMatrix<f64>,
    x: &DVector<f64>,
    tol: &Tolerances,
) -> Result<GammaCheck> {
    let dist = jet.w().distance(x);
    if dist > tol.residual_abs * (1.0 + x.norm()) {
        return input(format!("x is not in W (distance {dist:.3e})"));
    }
    let alpha = jet.w().coords(x);
    let t = gamma_target(jet, frame, &alpha);
    let ls = solve_least_squares(a, &t, tol)?;
    let x_k = back * &ls.solution;
    let x_g = jet.space().from_k(&x_k);
    Ok(GammaCheck {
        verdict: ls.verdict,
        residual: ls.residual,
        target_norm: ls.target_norm,
        x_k,
        x_g,
    })
}

/// Three-valued truth for conjunctions involving indeterminate verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Holds,
    Fails,
    Indeterminate,
}

impl Decision {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Decision::Holds
        } else {
            Decision::Fails
        }
    }

    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Feasible => Decision::Holds,
            Verdict::Infeasible => Decision::Fails,
            Verdict::Indeterminate => Decision::Indeterminate,
        }
    }

    pub fn and(self, other: Decision) -> Decision {
        use Decision::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Holds, Holds) => Holds,
            _ => Indeterminate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaSummary {
    pub verdict: Verdict,
    pub residual: f64,
    pub target_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelVerdict {
    pub curvature_invariant: bool,
    pub curvature_residual: f64,
    pub semiparallel: bool,
    pub semiparallel_residual: Option<f64>,
    pub semiparallel_outside_residual: Option<f64>,
    pub semiparallel_note: Option<String>,
    pub gamma_feasible_per_basis: Vec<GammaSummary>,
    pub overall: Decision,
}

pub fn check_infinitesimal_model(jet: &TwoJet, tol: &Tolerances) -> Result<ModelVerdict> {
    let frame = build_frame(jet, tol);
    let curvature_residual = jet.space().curvature_invariance_residual(jet.w());
    let curvature_invariant = curvature_residual <= tol.residual_abs;
    let (semiparallel, sp_res, sp_out, note) = match check_semiparallel_in(jet, &frame, tol) {
        Ok(c) => (c.holds, Some(c.worst_residual), Some(c.outside_residual), None),
        Err(Error::Structural { what, residual }) => {
            (false, None, None, Some(format!("{what} ({residual:.3e})")))
        }
        Err(e) => return Err(e),
    };
    let (a, back) = gamma_system(jet, &frame);
    let mut gamma = Vec::new();
    let mut overall = Decision::from_bool(curvature_invariant && semiparallel);
    for w in jet.w().vectors() {
        let g = gamma_solve(jet, &frame, &a, &back, &w, tol)?;
        overall = overall.and(Decision::from_verdict(g.verdict));
        gamma.push(GammaSummary {
            verdict: g.verdict,
            residual: g.residual,
            target_norm: g.target_norm,
        });
    }
    Ok(ModelVerdict {
        curvature_invariant,
        curvature_residual,
        semiparallel,
        semiparallel_residual: sp_res,
        semiparallel_outside_residual: sp_out,
        semiparallel_note: note,
        gamma_feasible_per_basis: gamma,
        overall,
    })
}

/// Tangential curvature from the Gauss equation.
pub fn derived_tangent_curvature(
    jet: &TwoJet,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> DVector<f64> {
    let r = jet.w().project(&jet.space().curvature(x, y, z));
    r + jet.shape_operator(&jet.b(y, z), x) - jet.shape_operator(&jet.b(x, z), y)
}

/// Normal curvature on the first normal space from the Ricci equation.
pub fn derived_normal_curvature(
    jet: &TwoJet,
    frame: &OsculatingFrame,
    x: &DVector<f64>,
    y: &DVector<f64>,
    xi: &DVector<f64>,
) -> DVector<f64> {
    let r = frame.first_normal.project(&jet.space().curvature(x, y, xi));
    r + jet.b(x, &jet.shape_operator(xi, y)) - jet.b(&jet.shape_operator(xi, x), y)
}

/// R⊥(x₁,x₂) b(y₁,y₂) = b(R^M(x₁,x₂)y₁, y₂) + b(y₁, R^M(x₁,x₂)y₂) over basis tuples.
pub fn normal_curvature_residual(jet: &TwoJet, tol: &Tolerances) -> f64 {
    let frame = build_frame(jet, tol);
    let ws = jet.w().vectors();
    let m = ws.len();
    let mut worst: f64 = 0.0;
    for (i, j) in pairs(m) {
        for k in 0..m {
            for l in k..m {
                let lhs = derived_normal_curvature(jet, &frame, &ws[i], &ws[j], &jet.b(&ws[k], &ws[l]));
                let rk = derived_tangent_curvature(jet, &ws[i], &ws[j], &ws[k]);
                let rl = derived_tangent_curvature(jet, &ws[i], &ws[j], &ws[l]);
                let rhs = jet.b(&rk, &ws[l]) + jet.b(&ws[k], &rl);
                worst = worst.max((lhs - rhs).norm());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub holds: bool,
    pub worst_residual: f64,
}

/// R(h(x,x), h(y,y)) v = [𝐡x,[𝐡y,R(x,y)]] v - R(𝐡x𝐡y x, y) v - R(x, 𝐡x𝐡y y) v
/// over W-basis pairs and osculating basis vectors v.
pub fn check_fundamental_identity(jet: &TwoJet, tol: &Tolerances) -> Result<IdentityCheck> {
    let frame = build_frame(jet, tol);
    require_osc_preserved(jet, &frame, tol)?;
    let space = jet.space();
    let ws = jet.w().vectors();
    let m = ws.len();
    let hx: Vec<DMatrix<f64>> = frame.bold_b.iter().map(|b| frame.extend(b)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (&ws[i], &ws[j]);
            let lhs = space.curvature_operator(&jet.b(x, x), &jet.b(y, y));
            let r = space.curvature_operator(x, y);
            let hxy = &hx[i] * &hx[j];
            let rhs = commutator(&hx[i], &commutator(&hx[j], &r))
                - space.curvature_operator(&(&hxy * x), y)
                - space.curvature_operator(x, &(&hxy * y));
            let diff = (lhs - rhs) * frame.osc.onb();
            for c in diff.column_iter() {
                worst = worst.max(c.norm());
            }
        }
    }
    Ok(IdentityCheck {
        holds: worst <= tol.residual_abs,
        worst_residual: worst,
    })
}

/// Σᵢ R♭(v₁,…,𝐡(x)vᵢ,…,v₄) over osculating basis vectors: the curvature
/// restricted to the osculating space is annihilated by every 𝐡(x).
pub fn check_curvature_h_invariance(jet: &TwoJet, tol: &Tolerances) -> IdentityCheck {
    let frame = build_frame(jet, tol);
    let d = frame.dim_osc();
    let o: Vec<DVector<f64>> = frame.osc.vectors();
    let space = jet.space();
    // t[a][b] = Oᵀ R(o_a, o_b) O, so R♭(a,b,c,e) = t[a][b][(e, c)]
    let t: Vec<Vec<DMatrix<f64>>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| frame.restrict(&space.curvature_operator(&o[a], &o[b])))
                .collect()
        })
        .collect();
    let rf = |a: usize, b: usize, c: usize, e: usize| t[a][b][(e, c)];
    let mut worst: f64 = 0.0;
    for h in &frame.bold_b {
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += h[(k, a)] * rf(k, b, c, e)
                                + h[(k, b)] * rf(a, k, c, e)
                                + h[(k, c)] * rf(a, b, k, e)
                                + h[(k, e)] * rf(a, b, c, k);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
    }
    IdentityCheck {
        holds: worst <= tol.residual_abs,
        worst_residual: worst,
    }
}

#[cfg(test)]
mod tests;
