use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::algebra::LieAlgebraPresentation;
use crate::error::{input, Error, Result};
use crate::numeric::{
    self, matrix_from_rows, matrix_rows, nullspace, vstack, Subspace, Tolerances,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeTag {
    Compact,
    Noncompact,
    Euclidean,
    Product,
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeTag::Compact => "compact",
            TypeTag::Noncompact => "noncompact",
            TypeTag::Euclidean => "euclidean",
            TypeTag::Product => "product",
        };
        f.write_str(s)
    }
}

/// A de Rham factor of a catalog model: which p- and k-coordinates belong to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub kind: TypeTag,
    pub p_start: usize,
    pub p_len: usize,
    pub k_start: usize,
    pub k_len: usize,
}

/// An orthogonal symmetric Lie algebra `g = k + p` with a metric on `p`.
///
/// g-coordinates list the p-basis first, then the k-basis, so `theta` is
/// `diag(-I_p, I_k)`. The p-basis is orthonormal for the metric, which makes
/// tangent-vector coordinates orthonormal coordinates and `Γ` the inclusion of
/// the first `dim_p` coordinates.
#[derive(Clone, Debug)]
pub struct SymmetricSpaceModel {
    pub name: String,
    pub params: serde_json::Value,
    pub type_tag: TypeTag,
    pub factors: Vec<Factor>,
    g: LieAlgebraPresentation,
    dim_p: usize,
    theta: DMatrix<f64>,
    metric: DMatrix<f64>,
    pi2: Vec<DMatrix<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsotropyMethod {
    Operator,
    Bracket,
    Sectional,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsotropyCheck {
    pub isotropic: bool,
    pub residual: f64,
}

/// Residuals of every structural identity a model must satisfy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelIntegrity {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub killing_symmetry: f64,
    pub killing_formula: f64,
    pub theta_involution: f64,
    pub theta_automorphism: f64,
    pub cartan_kk: f64,
    pub cartan_kp: f64,
    pub cartan_pp: f64,
    pub metric_symmetry: f64,
    pub metric_min_eigenvalue: f64,
    pub metric_skew: f64,
    /// Relative deviation of the metric from a multiple of the Killing form, per factor.
    pub killing_proportionality: Vec<(String, f64)>,
}

impl ModelIntegrity {
    pub fn worst(&self) -> f64 {
        let mut w = [
            self.antisymmetry,
            self.jacobi,
            self.killing_symmetry,
            self.killing_formula,
            self.theta_involution,
            self.theta_automorphism,
            self.cartan_kk,
            self.cartan_kp,
            self.cartan_pp,
            self.metric_symmetry,
            self.metric_skew,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        for (_, r) in &self.killing_proportionality {
            w = w.max(*r);
        }
        w
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol && self.metric_min_eigenvalue > 0.0
    }
}

impl SymmetricSpaceModel {
    /// Assembles a model from matrices spanning `p` (orthonormal for the metric)
    /// and matrices spanning `k`.
    pub fn from_parts(
        name: impl Into<String>,
        params: serde_json::Value,
        type_tag: TypeTag,
        factors: Vec<Factor>,
        p_mats: Vec<DMatrix<f64>>,
        k_mats: Vec<DMatrix<f64>>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let dim_p = p_mats.len();
        let dim_k = k_mats.len();
        let mut basis = p_mats;
        basis.extend(k_mats);
        let g = LieAlgebraPresentation::from_basis(basis, tol)?;
        let n = dim_p + dim_k;
        let theta = DMatrix::from_fn(n, n, |i, j| match (i == j, i < dim_p) {
            (true, true) => -1.0,
            (true, false) => 1.0,
            _ => 0.0,
        });
        let pi2 = (0..dim_k)
            .map(|i| {
                g.ad_basis(dim_p + i)
                    .view((0, 0), (dim_p, dim_p))
                    .into_owned()
            })
            .collect();
        Ok(SymmetricSpaceModel {
            name: name.into(),
            params,
            type_tag,
            factors,
            g,
            dim_p,
            theta,
            metric: DMatrix::identity(dim_p, dim_p),
            pi2,
        })
    }

    pub fn g(&self) -> &LieAlgebraPresentation {
        &self.g
    }

    pub fn dim_g(&self) -> usize {
        self.g.dim()
    }

    pub fn dim_p(&self) -> usize {
        self.dim_p
    }

    pub fn dim_k(&self) -> usize {
        self.g.dim() - self.dim_p
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn p_basis(&self) -> Subspace {
        Subspace::axes(self.dim_g(), 0..self.dim_p)
    }

    pub fn k_basis(&self) -> Subspace {
        Subspace::axes(self.dim_g(), self.dim_p..self.dim_g())
    }

    /// Whether the model (or every factor of a product) is of compact type.
    pub fn is_compact_type(&self) -> bool {
        match self.type_tag {
            TypeTag::Compact => true,
            TypeTag::Product => {
                !self.factors.is_empty()
                    && self.factors.iter().all(|f| f.kind == TypeTag::Compact)
            }
            _ => false,
        }
    }

    /// Γ: tangent coordinates to g-coordinates.
    pub fn transvection(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim_g());
        v.rows_mut(0, self.dim_p).copy_from(x);
        v
    }

    /// π₁: the p-component of a g-coordinate vector.
    pub fn pi1(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(0, self.dim_p).into_owned()
    }

    /// k-coordinates of a g-coordinate vector.
    pub fn k_part(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(self.dim_p, self.dim_k()).into_owned()
    }

    /// Embeds k-coordinates into g-coordinates.
    pub fn from_k(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim_g());
        v.rows_mut(self.dim_p, self.dim_k()).copy_from(y);
        v
    }

    /// π₂ of the k-basis element `i`, as an operator on p-coordinates.
    pub fn pi2_basis(&self, i: usize) -> &DMatrix<f64> {
        &self.pi2[i]
    }

    /// π₂ for k-coordinates.
    pub fn pi2_k(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim_p, self.dim_p);
        for (i, op) in self.pi2.iter().enumerate() {
            if y[i] != 0.0 {
                m += op * y[i];
            }
        }
        m
    }

    /// π₂(X) = ad(X)|p for a g-coordinate vector `x` lying in k.
    pub fn isotropy_action(&self, x: &DVector<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
        if x.len() != self.dim_g() {
            return input("isotropy_action expects a g-coordinate vector");
        }
        let leak = self.pi1(x).norm();
        if leak > tol.residual_abs * (1.0 + x.norm()) {
            return input(format!("element is not in k (p-component {leak:.3e})"));
        }
        Ok(self.pi2_k(&self.k_part(x)))
    }

    /// k-coordinates of [Γx, Γy].
    pub fn bracket_pp(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let b = self.g.bracket(&self.transvection(x), &self.transvection(y));
        self.k_part(&b)
    }

    /// The curvature endomorphism R(x, y) = -ad([Γx, Γy])|p.
    pub fn curvature_operator(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        -self.pi2_k(&self.bracket_pp(x, y))
    }

    /// R(x, y) z = -π₁([[Γx, Γy], Γz]).
    pub fn curvature(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let xy = self.g.bracket(&self.transvection(x), &self.transvection(y));
        -self.pi1(&self.g.bracket(&xy, &self.transvection(z)))
    }

    pub fn sectional_curvature(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let num = self.curvature(x, y, y).dot(x);
        let den = x.dot(x) * y.dot(y) - x.dot(y).powi(2);
        num / den
    }

    /// Largest leak of R(wᵢ, wⱼ) wₖ out of W over basis triples.
    pub fn curvature_invariance_residual(&self, w: &Subspace) -> f64 {
        let ws = w.vectors();
        let mut worst: f64 = 0.0;
        for i in 0..ws.len() {
            for j in (i + 1)..ws.len() {
                let r = self.curvature_operator(&ws[i], &ws[j]);
                for wk in &ws {
                    worst = worst.max(w.distance(&(&r * wk)));
                }
            }
        }
        worst
    }

    pub fn is_curvature_invariant(&self, w: &Subspace, tol: &Tolerances) -> bool {
        self.curvature_invariance_residual(w) <= tol.residual_abs
    }

    /// Curvature isotropy of W by one of three equivalent characterisations.
    ///
    /// The sectional route evaluates only `<R(u,v)v,u>` and recovers every
    /// coefficient of this biquadratic form on W by polarisation, so it decides
    /// whether sectional curvature vanishes on all 2-planes of W.
    pub fn curvature_isotropy(
        &self,
        w: &Subspace,
        method: IsotropyMethod,
        tol: &Tolerances,
    ) -> IsotropyCheck {
        let ws = w.vectors();
        let m = ws.len();
        let mut worst: f64 = 0.0;
        match method {
            IsotropyMethod::Operator => {
                for i in 0..m {
                    for j in (i + 1)..m {
                        worst = worst.max(self.curvature_operator(&ws[i], &ws[j]).norm());
                    }
                }
            }
            IsotropyMethod::Bracket => {
                for i in 0..m {
                    for j in (i + 1)..m {
                        worst = worst.max(self.bracket_pp(&ws[i], &ws[j]).norm());
                    }
                }
            }
            IsotropyMethod::Sectional => {
                let q = |u: &DVector<f64>, v: &DVector<f64>| self.curvature(u, v, v).dot(u);
                for i in 0..m {
                    for l in i..m {
                        let ail = &ws[i] + &ws[l];
                        for j in 0..m {
                            for k in j..m {
                                let bjk = &ws[j] + &ws[k];
                                let c = q(&ail, &bjk)
                                    - q(&ail, &ws[j])
                                    - q(&ail, &ws[k])
                                    - q(&ws[i], &bjk)
                                    + q(&ws[i], &ws[j])
                                    + q(&ws[i], &ws[k])
                                    - q(&ws[l], &bjk)
                                    + q(&ws[l], &ws[j])
                                    + q(&ws[l], &ws[k]);
                                worst = worst.max(c.abs() * 0.25);
                            }
                        }
                    }
                }
            }
        }
        IsotropyCheck {
            isotropic: worst <= tol.residual_abs,
            residual: worst,
        }
    }

    pub fn is_curvature_isotropic(
        &self,
        w: &Subspace,
        method: IsotropyMethod,
        tol: &Tolerances,
    ) -> bool {
        self.curvature_isotropy(w, method, tol).isotropic
    }

    /// Centraliser of an abelian family inside p, as a subspace of p-coordinates.
    fn p_centralizer(&self, family: &[DVector<f64>], tol: &Tolerances) -> Subspace {
        if family.is_empty() {
            return Subspace::full(self.dim_p);
        }
        let blocks: Vec<DMatrix<f64>> = family
            .iter()
            .map(|a| {
                let ad = self.g.ad(&self.transvection(a));
                ad.view((self.dim_p, 0), (self.dim_k(), self.dim_p))
                    .into_owned()
            })
            .collect();
        nullspace(&vstack(&blocks), tol)
    }

    /// A maximal abelian subspace of p grown greedily from coordinate direction `seed`.
    pub fn maximal_abelian_from(&self, seed: usize, tol: &Tolerances) -> Subspace {
        let mut family = vec![DVector::from_fn(self.dim_p, |i, _| {
            if i == seed {
                1.0
            } else {
                0.0
            }
        })];
        loop {
            let current = numeric::span(&family, self.dim_p, tol).expect("lengths match");
            let cent = self.p_centralizer(&family, tol);
            let extra = numeric::intersect(&cent, &current.complement(tol), tol)
                .expect("same ambient");
            if extra.dim() == 0 {
                return current;
            }
            family.push(extra.vector(0));
        }
    }

    /// Dimension of a maximal flat through the origin.
    pub fn rank(&self, tol: &Tolerances) -> usize {
        (0..self.dim_p)
            .map(|s| self.maximal_abelian_from(s, tol).dim())
            .max()
            .unwrap_or(0)
    }

    /// Smallest curvature-invariant subspace of p containing `v`.
    pub fn curvature_invariant_hull(&self, v: &Subspace, tol: &Tolerances) -> Subspace {
        let mut current = v.clone();
        loop {
            let vs = current.vectors();
            let mut cand = vs.clone();
            for i in 0..vs.len() {
                for j in (i + 1)..vs.len() {
                    let r = self.curvature_operator(&vs[i], &vs[j]);
                    cand.extend(vs.iter().map(|z| &r * z));
                }
            }
            let grown = numeric::span(&cand, self.dim_p, tol).expect("lengths match");
            if grown.dim() == current.dim() {
                return current;
            }
            current = grown;
        }
    }

    /// Span of all curvature operators R(u, v) on p.
    pub fn curvature_operator_span(&self, tol: &Tolerances) -> Subspace {
        let n = self.dim_p;
        let mut ops = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let e = |k: usize| DVector::from_fn(n, |r, _| if r == k { 1.0 } else { 0.0 });
                ops.push(numeric::vec_op(&self.curvature_operator(&e(i), &e(j))));
            }
        }
        numeric::span(&ops, n * n, tol).expect("lengths match")
    }

    /// Span of π₂(k) as operators on p.
    pub fn isotropy_image(&self, tol: &Tolerances) -> Subspace {
        let n = self.dim_p;
        let ops: Vec<DVector<f64>> = self.pi2.iter().map(numeric::vec_op).collect();
        numeric::span(&ops, n * n, tol).expect("lengths match")
    }

    /// The model of the totally geodesic submanifold exp(V) for a curvature-invariant V.
    pub fn totally_geodesic_reduce(&self, v: &Subspace, tol: &Tolerances) -> Result<Self> {
        if v.ambient_dim() != self.dim_p {
            return input("subspace must live in p-coordinates");
        }
        let leak = self.curvature_invariance_residual(v);
        if leak > tol.residual_abs {
            return Err(Error::Precondition(format!(
                "subspace is not curvature invariant (leak {leak:.3e})"
            )));
        }
        let vs = v.vectors();
        let p_mats: Vec<DMatrix<f64>> = vs
            .iter()
            .map(|x| self.g.matrix(&self.transvection(x)))
            .collect();
        let mut brackets = Vec::new();
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                brackets.push(self.bracket_pp(&vs[i], &vs[j]));
            }
        }
        let kspan = numeric::span(&brackets, self.dim_k(), tol)?;
        let k_mats: Vec<DMatrix<f64>> = kspan
            .vectors()
            .iter()
            .map(|y| self.g.matrix(&self.from_k(y)))
            .collect();
        let tag = if k_mats.is_empty() {
            TypeTag::Euclidean
        } else {
            self.type_tag
        };
        SymmetricSpaceModel::from_parts(
            format!("reduce({})", self.name),
            serde_json::json!({ "parent": self.name, "dim": v.dim() }),
            tag,
            Vec::new(),
            p_mats,
            k_mats,
            tol,
        )
    }

    pub fn integrity(&self) -> ModelIntegrity {
        let n = self.dim_g();
        let p = self.dim_p;
        let g = &self.g;
        let mut theta_auto: f64 = 0.0;
        let (mut kk, mut kp, mut pp): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let e = |k: usize| DVector::from_fn(n, |r, _| if r == k { 1.0 } else { 0.0 });
                let (ei, ej) = (e(i), e(j));
                let br = g.bracket(&ei, &ej);
                let lhs = &self.theta * &br;
                let rhs = g.bracket(&(&self.theta * &ei), &(&self.theta * &ej));
                theta_auto = theta_auto.max((lhs - rhs).amax());
                let p_part = br.rows(0, p).amax();
                let k_part = if n > p { br.rows(p, n - p).amax() } else { 0.0 };
                match (i < p, j < p) {
                    (false, false) => kk = kk.max(p_part),
                    (true, true) => pp = pp.max(p_part),
                    _ => kp = kp.max(k_part),
                }
            }
        }
        let theta_inv = (&self.theta * &self.theta - DMatrix::identity(n, n)).amax();
        let metric_symmetry = (&self.metric - self.metric.transpose()).amax();
        let metric_min_eigenvalue = if p == 0 {
            1.0
        } else {
            numeric::symmetric_eigen(&self.metric).0.first().copied().unwrap_or(1.0)
        };
        let metric_skew = self
            .pi2
            .iter()
            .map(|a| (&self.metric * a + a.transpose() * &self.metric).amax())
            .fold(0.0, f64::max);
        let killing = g.killing();
        let mut prop = Vec::new();
        for f in &self.factors {
            if !matches!(f.kind, TypeTag::Compact | TypeTag::Noncompact) || f.p_len == 0 {
                continue;
            }
            let b = killing
                .view((f.p_start, f.p_start), (f.p_len, f.p_len))
                .into_owned();
            let m = self
                .metric
                .view((f.p_start, f.p_start), (f.p_len, f.p_len))
                .into_owned();
            let c = b.trace() / m.trace();
            let sign_ok = match f.kind {
                TypeTag::Compact => c < 0.0,
                _ => c > 0.0,
            };
            let r = if sign_ok {
                (b - m * c).amax() / c.abs()
            } else {
                f64::INFINITY
            };
            prop.push((f.name.clone(), r));
        }
        ModelIntegrity {
            antisymmetry: g.antisymmetry_residual(),
            jacobi: g.jacobi_residual(),
            killing_symmetry: g.killing_symmetry_residual(),
            killing_formula: g.killing_formula_residual(),
            theta_involution: theta_inv,
            theta_automorphism: theta_auto,
            cartan_kk: kk,
            cartan_kp: kp,
            cartan_pp: pp,
            metric_symmetry,
            metric_min_eigenvalue,
            metric_skew,
            killing_proportionality: prop,
        }
    }
}

/// JSON form of a model: basis matrices are written row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub dim_g: usize,
    pub dim_p: usize,
    pub basis: Vec<Vec<Vec<f64>>>,
    pub theta: Vec<Vec<f64>>,
    pub metric: Vec<Vec<f64>>,
    pub type_tag: TypeTag,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

impl SymmetricSpaceModel {
    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            name: self.name.clone(),
            params: self.params.clone(),
            dim_g: self.dim_g(),
            dim_p: self.dim_p,
            basis: self.g.basis().iter().map(matrix_rows).collect(),
            theta: matrix_rows(&self.theta),
            metric: matrix_rows(&self.metric),
            type_tag: self.type_tag,
            factors: self.factors.clone(),
        }
    }

    /// Rebuilds a model from JSON. The basis must list p first; a metric other
    /// than the identity is absorbed by re-basing p through its Cholesky factor.
    pub fn from_json(j: &ModelJson, tol: &Tolerances) -> Result<Self> {
        if j.basis.len() != j.dim_g || j.dim_p > j.dim_g {
            return input("basis length must equal dim_g and dim_p must not exceed it");
        }
        let size = j.basis.first().map_or(0, |m| m.len());
        let mats = j
            .basis
            .iter()
            .map(|rows| matrix_from_rows(rows, size))
            .collect::<Result<Vec<_>>>()?;
        let theta = matrix_from_rows(&j.theta, j.dim_g)?;
        let metric = matrix_from_rows(&j.metric, j.dim_p)?;
        if theta.nrows() != j.dim_g || metric.nrows() != j.dim_p {
            return input("theta must be dim_g x dim_g and metric dim_p x dim_p");
        }
        let expected = DMatrix::from_fn(j.dim_g, j.dim_g, |r, c| match (r == c, r < j.dim_p) {
            (true, true) => -1.0,
            (true, false) => 1.0,
            _ => 0.0,
        });
        if (&theta - expected).amax() > tol.residual_abs {
            return input("theta must be diag(-I_p, I_k) with the p-basis listed first");
        }
        let (p_raw, k_mats) = mats.split_at(j.dim_p);
        let p_mats: Vec<DMatrix<f64>> = if metric == DMatrix::identity(j.dim_p, j.dim_p) {
            p_raw.to_vec()
        } else {
            if (&metric - metric.transpose()).amax() > tol.residual_abs {
                return input("metric must be symmetric");
            }
            let chol = metric
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Input("metric must be positive definite".into()))?;
            let linv_t = chol
                .l()
                .try_inverse()
                .ok_or_else(|| Error::Input("metric is singular".into()))?
                .transpose();
            (0..j.dim_p)
                .map(|a| {
                    let mut m = DMatrix::zeros(size, size);
                    for (i, e) in p_raw.iter().enumerate() {
                        m += e * linv_t[(i, a)];
                    }
                    m
                })
                .collect()
        };
        let model = SymmetricSpaceModel::from_parts(
            j.name.clone(),
            j.params.clone(),
            j.type_tag,
            j.factors.clone(),
            p_mats,
            k_mats.to_vec(),
            tol,
        )?;
        let cartan = model.integrity();
        let worst = cartan.cartan_kk.max(cartan.cartan_kp).max(cartan.cartan_pp);
        if worst > tol.residual_abs.max(1e-8) {
            return Err(Error::Structural {
                what: "basis does not satisfy the Cartan relations".into(),
                residual: worst,
            });
        }
        Ok(model)
    }
}
