//! Tolerance-governed dense linear algebra.
//!
//! Every rank decision in the crate goes through [`Tolerances::rank_cut`], so
//! a single knob controls what "numerically zero" means everywhere. Operators on
//! an `n`-dimensional space are flattened column-major (nalgebra's native
//! layout) whenever they need to be treated as vectors.


use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{input, Result};

/// Linear maps between coordinate spaces are plain dense matrices.
pub type LinearMap = DMatrix<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rank_rel: f64,
    pub residual_abs: f64,
    pub feas_rel: f64,
    pub indeterminate_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-9,
            residual_abs: 1e-9,
            feas_rel: 1e-8,
            indeterminate_band: 1e3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rank_rel,
            self.residual_abs,
            self.feas_rel,
            self.indeterminate_band,
        ];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return input("all tolerances must be finite and strictly positive");
        }
        if !(self.feas_rel < self.feas_rel * self.indeterminate_band) {
            return input("indeterminate_band must exceed 1 so the guard band is nonempty");
        }
        Ok(())
    }

    /// Singular values at or below this are treated as zero.
    ///
    /// The cut is relative to the largest singular value but never drops below
    /// `rank_rel` itself, so a matrix made entirely of rounding noise has rank 0.
    pub fn rank_cut(&self, sigma_max: f64) -> f64 {
        self.rank_rel * sigma_max.max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Indeterminate,
}

/// A linear subspace given by an orthonormal basis stored as matrix columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    onb: DMatrix<f64>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            onb: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            onb: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Coordinate subspace spanned by the given axes.
    pub fn axes(ambient_dim: usize, axes: impl IntoIterator<Item = usize>) -> Self {
        let axes: Vec<usize> = axes.into_iter().collect();
        let mut onb = DMatrix::zeros(ambient_dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            onb[(a, c)] = 1.0;
        }
        Subspace { ambient_dim, onb }
    }

    /// Wraps columns that the caller guarantees to be orthonormal.
    pub fn from_onb_columns(onb: DMatrix<f64>) -> Self {
        Subspace {
            ambient_dim: onb.nrows(),
            onb,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.onb.ncols()
    }

    pub fn onb(&self) -> &DMatrix<f64> {
        &self.onb
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.onb.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        (0..self.dim()).map(|i| self.vector(i)).collect()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.onb * self.onb.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.onb * (self.onb.transpose() * v)
    }

    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.onb.transpose() * v
    }

    pub fn project_perp(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.project(v)
    }

    /// Distance of `v` from the subspace.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        self.project_perp(v).norm()
    }

    pub fn complement(&self, tol: &Tolerances) -> Subspace {
        nullspace(&self.onb.transpose(), tol)
    }

    /// Largest distance of a basis vector of `other` from `self`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        other
            .vectors()
            .iter()
            .map(|v| self.distance(v))
            .fold(0.0, f64::max)
    }

    /// Two-sided containment residual, infinite when dimensions differ.
    pub fn equality_residual(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.containment_residual(other)
            .max(other.containment_residual(self))
    }

    /// Deviation of the stored basis from orthonormality.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.onb.transpose() * &self.onb;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// Flips each basis vector so its first clearly nonzero entry is positive.
    pub fn canonical_signs(mut self) -> Self {
        for mut col in self.onb.column_iter_mut() {
            if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-8) {
                if first < 0.0 {
                    col.neg_mut();
                }
            }
        }
        self
    }

    /// Rows of the basis, one basis vector per row.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.vectors().iter().map(|v| v.iter().copied().collect()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SubspaceRepr {
    ambient_dim: usize,
    onb: Vec<Vec<f64>>,
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubspaceRepr {
            ambient_dim: self.ambient_dim,
            onb: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SubspaceRepr::deserialize(d)?;
        let mut onb = DMatrix::zeros(r.ambient_dim, r.onb.len());
        for (c, row) in r.onb.iter().enumerate() {
            if row.len() != r.ambient_dim {
                return Err(serde::de::Error::custom("basis vector length mismatch"));
            }
            for (i, x) in row.iter().enumerate() {
                onb[(i, c)] = *x;
            }
        }
        Ok(Subspace {
            ambient_dim: r.ambient_dim,
            onb,
        })
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serde adapter writing a matrix as a list of rows.
pub mod rows_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::matrix_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, |r| r.len());
        super::matrix_from_rows(&rows, ncols).map_err(serde::de::Error::custom)
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return input(format!("ragged matrix: expected {ncols} columns"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Flattens an operator to a vector (column-major).
pub fn vec_op(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_op`] for square operators.
pub fn unvec_op(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Singular value decomposition `a = U diag(s) Vᵀ` with singular values in
/// nonincreasing order. U has min(r, c) columns and V is square.
///
/// nalgebra's own SVD can return factors that fail to reconstruct the input
/// when singular values cluster, so the work is delegated to faer.
pub fn svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (r, c) = a.shape();
    let m = faer::Mat::<f64>::from_fn(r, c, |i, j| a[(i, j)]);
    let d = if r >= c { m.thin_svd() } else { m.svd() }.expect("SVD converges on finite input");
    let k = r.min(c);
    let u = DMatrix::from_fn(r, k, |i, j| d.U()[(i, j)]);
    let v = DMatrix::from_fn(c, c, |i, j| d.V()[(i, j)]);
    let s = (0..k).map(|i| d.S().column_vector()[i]).collect();
    (u, s, v)
}

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let e = m
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigendecomposition converges on finite input");
    let vals = (0..n).map(|i| e.S().column_vector()[i]).collect();
    (vals, DMatrix::from_fn(n, n, |i, j| e.U()[(i, j)]))
}

fn full_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (_, mut s, v) = svd(a);
    s.resize(a.ncols(), 0.0);
    (s, v)
}

/// Orthonormal basis of the kernel of `a` (as a subspace of the column space).
pub fn nullspace(a: &DMatrix<f64>, tol: &Tolerances) -> Subspace {
    let c = a.ncols();
    if c == 0 {
        return Subspace::zero(0);
    }
    if a.nrows() == 0 {
        return Subspace::full(c);
    }
    let (sv, v) = full_svd(a);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = tol.rank_cut(smax);
    let cols: Vec<usize> = (0..c).filter(|&i| sv[i] <= cut).collect();
    let mut onb = DMatrix::zeros(c, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        onb.set_column(k, &v.column(i));
    }
    Subspace::from_onb_columns(onb)
}

pub fn numerical_rank(a: &DMatrix<f64>, tol: &Tolerances) -> usize {
    if a.is_empty() {
        return 0;
    }
    let (_, sv, _) = svd(a);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = tol.rank_cut(smax);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis of the column space of `m`.
pub fn column_span(m: &DMatrix<f64>, tol: &Tolerances) -> Subspace {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Subspace::zero(n);
    }
    let (u, sv, _) = svd(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = tol.rank_cut(smax);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cut).collect();
    let mut onb = DMatrix::zeros(n, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        onb.set_column(k, &u.column(i));
    }
    Subspace::from_onb_columns(onb)
}

pub fn span(vectors: &[DVector<f64>], ambient_dim: usize, tol: &Tolerances) -> Result<Subspace> {
    if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
        return input(format!(
            "vector of length {} in span over ambient dimension {ambient_dim}",
            v.len()
        ));
    }
    let m = DMatrix::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i]);
    Ok(column_span(&m, tol))
}

/// Span of the union of two subspaces.
pub fn sum(a: &Subspace, b: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    if a.ambient_dim() != b.ambient_dim() {
        return input("ambient dimension mismatch in subspace sum");
    }
    let mut vs = a.vectors();
    vs.extend(b.vectors());
    span(&vs, a.ambient_dim(), tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub residual: f64,
    pub target_norm: f64,
    pub verdict: Verdict,
}

/// Minimum-norm least-squares solution with a three-valued feasibility verdict.
pub fn solve_least_squares(
    constraint: &LinearMap,
    target: &DVector<f64>,
    tol: &Tolerances,
) -> Result<LeastSquares> {
    if constraint.nrows() != target.len() {
        return input(format!(
            "constraint has {} rows but target has length {}",
            constraint.nrows(),
            target.len()
        ));
    }
    let c = constraint.ncols();
    let solution = if c == 0 || constraint.nrows() == 0 {
        DVector::zeros(c)
    } else {
        let (u, sv, v) = svd(constraint);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let cut = tol.rank_cut(smax);
        let mut x = DVector::zeros(c);
        for i in 0..sv.len() {
            if sv[i] > cut {
                let coef = u.column(i).dot(target) / sv[i];
                x += v.column(i) * coef;
            }
        }
        x
    };
    let residual = (constraint * &solution - target).norm();
    let target_norm = target.norm();
    let scale = target_norm.max(1.0);
    let verdict = if residual <= tol.feas_rel * scale {
        Verdict::Feasible
    } else if residual >= tol.feas_rel * tol.indeterminate_band * scale {
        Verdict::Infeasible
    } else {
        Verdict::Indeterminate
    };
    Ok(LeastSquares {
        solution,
        residual,
        target_norm,
        verdict,
    })
}

pub fn intersect(a: &Subspace, b: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    let n = a.ambient_dim();
    if n != b.ambient_dim() {
        return input("ambient dimension mismatch in intersection");
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let pa = &eye - a.projector();
    let pb = &eye - b.projector();
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&pa);
    stacked.view_mut((n, 0), (n, n)).copy_from(&pb);
    Ok(nullspace(&stacked, tol))
}

fn check_square(ops: &[LinearMap], n: Option<usize>) -> Result<usize> {
    let n = match (n, ops.first()) {
        (Some(n), _) => n,
        (None, Some(op)) => op.nrows(),
        (None, None) => 0,
    };
    for op in ops {
        if op.nrows() != n || op.ncols() != n {
            return input(format!(
                "expected square operators of size {n}, got {}x{}",
                op.nrows(),
                op.ncols()
            ));
        }
    }
    Ok(n)
}

/// Smallest operator subspace containing `seed`, closed under brackets and
/// under bracketing with every derivation.
pub fn bracket_closure(
    seed: &[LinearMap],
    derivations: &[LinearMap],
    tol: &Tolerances,
) -> Result<Subspace> {
    let n = match (seed.first(), derivations.first()) {
        (Some(op), _) | (None, Some(op)) => op.nrows(),
        (None, None) => 0,
    };
    check_square(seed, Some(n))?;
    check_square(derivations, Some(n))?;
    let flat: Vec<DVector<f64>> = seed.iter().map(vec_op).collect();
    let mut current = span(&flat, n * n, tol)?;
    loop {
        let mats: Vec<DMatrix<f64>> = current
            .vectors()
            .iter()
            .map(|v| unvec_op(v, n))
            .collect();
        let mut cand = current.vectors();
        for i in 0..mats.len() {
            for j in (i + 1)..mats.len() {
                cand.push(vec_op(&commutator(&mats[i], &mats[j])));
            }
            for d in derivations {
                cand.push(vec_op(&commutator(d, &mats[i])));
            }
        }
        let grown = span(&cand, n * n, tol)?;
        if grown.dim() == current.dim() {
            return Ok(current);
        }
        current = grown;
    }
}

/// Stacked Sylvester rows `A -> A B - B A`, one block per operator.
fn sylvester_rows(ops: &[LinearMap], n: usize) -> DMatrix<f64> {
    let nn = n * n;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut rows = DMatrix::zeros(nn * ops.len(), nn);
    for (k, b) in ops.iter().enumerate() {
        let block = b.transpose().kronecker(&eye) - eye.kronecker(b);
        rows.view_mut((k * nn, 0), (nn, nn)).copy_from(&block);
    }
    rows
}

/// Reduces an operator list to a basis of its span (keeps constraint systems small).
pub fn operator_basis(ops: &[LinearMap], n: usize, tol: &Tolerances) -> Result<Vec<LinearMap>> {
    check_square(ops, Some(n))?;
    let flat: Vec<DVector<f64>> = ops.iter().map(vec_op).collect();
    Ok(span(&flat, n * n, tol)?
        .vectors()
        .iter()
        .map(|v| unvec_op(v, n))
        .collect())
}

/// All operators on an `n`-dimensional space commuting with every element of `ops`.
pub fn commutant(ops: &[LinearMap], n: usize, tol: &Tolerances) -> Result<Subspace> {
    let basis = operator_basis(ops, n, tol)?;
    if basis.is_empty() {
        return Ok(Subspace::full(n * n));
    }
    Ok(nullspace(&sylvester_rows(&basis, n), tol))
}

/// Rows forcing `A = ±A^T` on vectorised `n x n` operators.
pub(crate) fn transpose_rows(n: usize, sign: f64) -> DMatrix<f64> {
    let nn = n * n;
    let mut rows = DMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let r = i + j * n;
            rows[(r, i + j * n)] += 1.0;
            rows[(r, j + i * n)] -= sign;
        }
    }
    rows
}

pub(crate) fn vstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotypicSplit {
    pub trivial_part: Subspace,
    pub blocks: Vec<Subspace>,
}

impl IsotypicSplit {
    /// True when the module is irreducible (a single block, or a trivial line).
    pub fn is_irreducible(&self) -> bool {
        let n = self.trivial_part.ambient_dim();
        (self.trivial_part.dim() == 0 && self.blocks.len() == 1)
            || (n == 1 && self.trivial_part.dim() == 1)
    }
}

/// Joint kernel plus a decomposition of its complement into minimal invariant
/// subspaces, for a set of skew operators.
pub fn isotypic_split<R: Rng + ?Sized>(
    ops: &[LinearMap],
    n: usize,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<IsotypicSplit> {
    let basis = operator_basis(ops, n, tol)?;
    if basis.is_empty() {
        return Ok(IsotypicSplit {
            trivial_part: Subspace::full(n),
            blocks: Vec::new(),
        });
    }
    let trivial_part = nullspace(&vstack(&basis), tol);
    let rest = trivial_part.complement(tol);
    let mut blocks = Vec::new();
    split_invariant(&rest, &basis, tol, rng, &mut blocks);
    let mut keyed: Vec<(Vec<i64>, Subspace)> = blocks
        .into_iter()
        .map(|b| (projector_key(&b), b.canonical_signs()))
        .collect();
    keyed.sort_by(|(ka, a), (kb, b)| b.dim().cmp(&a.dim()).then_with(|| ka.cmp(kb)));
    Ok(IsotypicSplit {
        trivial_part: trivial_part.canonical_signs(),
        blocks: keyed.into_iter().map(|(_, b)| b).collect(),
    })
}

fn projector_key(s: &Subspace) -> Vec<i64> {
    let p = s.projector();
    matrix_rows(&p)
        .into_iter()
        .flatten()
        .map(|x| (x * 1e6).round() as i64)
        .collect()
}

fn split_invariant<R: Rng + ?Sized>(
    v: &Subspace,
    ops: &[LinearMap],
    tol: &Tolerances,
    rng: &mut R,
    out: &mut Vec<Subspace>,
) {
    let k = v.dim();
    if k == 0 {
        return;
    }
    if k == 1 {
        out.push(v.clone());
        return;
    }
    let q = v.onb();
    let restricted: Vec<DMatrix<f64>> = ops.iter().map(|b| q.transpose() * b * q).collect();
    let constraints = vstack(&[sylvester_rows(&restricted, k), transpose_rows(k, 1.0)]);
    let sym_comm = nullspace(&constraints, tol);
    if sym_comm.dim() <= 1 {
        out.push(v.clone());
        return;
    }
    for _ in 0..8 {
        let mut s = DMatrix::zeros(k, k);
        for c in sym_comm.vectors() {
            let g: f64 = rng.sample(StandardNormal);
            s += unvec_op(&c, k) * g;
        }
        let s = (&s + s.transpose()) * 0.5;
        let (vals, vecs) = symmetric_eigen(&s);
        let spread = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let gap = 1e-6 * spread;
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for i in 0..k {
            match clusters.last_mut() {
                Some(cl) if vals[i] - vals[*cl.last().unwrap()] <= gap => {
                    cl.push(i)
                }
                _ => clusters.push(vec![i]),
            }
        }
        if clusters.len() < 2 {
            continue;
        }
        for cl in clusters {
            let mut local = DMatrix::zeros(k, cl.len());
            for (c, &i) in cl.iter().enumerate() {
                local.set_column(c, &vecs.column(i));
            }
            let sub = Subspace::from_onb_columns(q * local);
            split_invariant(&sub, ops, tol, rng, out);
        }
        return;
    }
    out.push(v.clone());
}

/// Maximum of `‖[c, b]‖_F` over basis elements `c` of `comm` and operators `b`.
pub fn commutation_residual(comm: &Subspace, ops: &[LinearMap], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for c in comm.vectors() {
        let c = unvec_op(&c, n);
        for b in ops {
            worst = worst.max(commutator(&c, b).norm());
        }
    }
    worst
}

/// Checks that every operator maps the subspace into itself; returns the worst leak.
pub fn invariance_residual(space: &Subspace, ops: &[LinearMap]) -> f64 {
    let mut worst: f64 = 0.0;
    for op in ops {
        for v in space.vectors() {
            worst = worst.max(space.distance(&(op * v)));
        }
    }
    worst
}
