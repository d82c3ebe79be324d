use nalgebra::{DMatrix, DVector};

use crate::error::{input, Error, Result};
use crate::numeric::Tolerances;

/// A real Lie algebra of square matrices together with its structure constants.
///
/// `ad[i]` is the matrix of `ad(e_i)` in basis coordinates, so the structure
/// constant `c[i][j][k]` is `ad[i][(k, j)]`.
#[derive(Clone, Debug)]
pub struct LieAlgebraPresentation {
    mat_size: usize,
    basis: Vec<DMatrix<f64>>,
    ad: Vec<DMatrix<f64>>,
    killing: DMatrix<f64>,
    gram_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl LieAlgebraPresentation {
    pub fn from_basis(basis: Vec<DMatrix<f64>>, tol: &Tolerances) -> Result<Self> {
        let dim = basis.len();
        let mat_size = basis.first().map_or(0, |m| m.nrows());
        if basis
            .iter()
            .any(|m| m.nrows() != mat_size || m.ncols() != mat_size)
        {
            return input("basis matrices must be square and of equal size");
        }
        let gram = DMatrix::from_fn(dim, dim, |i, j| basis[i].dot(&basis[j]));
        let gram_chol = gram
            .cholesky()
            .ok_or_else(|| Error::Input("basis matrices are linearly dependent".into()))?;
        let mut alg = LieAlgebraPresentation {
            mat_size,
            basis,
            ad: Vec::new(),
            killing: DMatrix::zeros(dim, dim),
            gram_chol,
        };
        let mut ad = vec![DMatrix::zeros(dim, dim); dim];
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let m = &alg.basis[i] * &alg.basis[j] - &alg.basis[j] * &alg.basis[i];
                let (c, res) = alg.coords_of(&m);
                worst = worst.max(res / (1.0 + m.norm()));
                ad[i].set_column(j, &c);
            }
        }
        if worst > tol.residual_abs {
            return Err(Error::Structural {
                what: "basis is not closed under the matrix commutator".into(),
                residual: worst,
            });
        }
        alg.killing = DMatrix::from_fn(dim, dim, |i, j| (&ad[i] * &ad[j]).trace());
        alg.ad = ad;
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn mat_size(&self) -> usize {
        self.mat_size
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn killing(&self) -> &DMatrix<f64> {
        &self.killing
    }

    pub fn structure(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ad[i][(k, j)]
    }

    pub fn ad_basis(&self, i: usize) -> &DMatrix<f64> {
        &self.ad[i]
    }

    /// Coordinates of an arbitrary matrix by orthogonal projection onto the
    /// basis span, with the Frobenius distance to that span.
    pub fn coords_of(&self, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let rhs = DVector::from_fn(self.dim(), |i, _| self.basis[i].dot(m));
        let c = self.gram_chol.solve(&rhs);
        let back = self.matrix(&c);
        (c, (m - back).norm())
    }

    pub fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.mat_size, self.mat_size);
        for (i, b) in self.basis.iter().enumerate() {
            if x[i] != 0.0 {
                m += b * x[i];
            }
        }
        m
    }

    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if x[i] != 0.0 {
                m += &self.ad[i] * x[i];
            }
        }
        m
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.ad(x) * y
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s = self.ad[i].column(j) + self.ad[j].column(i);
                worst = worst.max(s.amax());
            }
        }
        worst
    }

    /// `ad([e_i, e_j]) - [ad e_i, ad e_j]` over all basis pairs (Jacobi in operator form).
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let c = self.ad[i].column(j).into_owned();
                let lhs = self.ad(&c);
                let rhs = &self.ad[i] * &self.ad[j] - &self.ad[j] * &self.ad[i];
                worst = worst.max((lhs - rhs).amax());
            }
        }
        worst
    }

    pub fn killing_symmetry_residual(&self) -> f64 {
        (&self.killing - self.killing.transpose()).amax()
    }

    /// Compares the stored Killing form with the double sum of structure constants.
    pub fn killing_formula_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s += self.structure(i, l, k) * self.structure(j, k, l);
                    }
                }
                worst = worst.max((s - self.killing[(i, j)]).abs());
            }
        }
        worst
    }
}
