use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖VᴴV − I‖_F` for a matrix with (supposedly) orthonormal columns.
pub fn orthonormality_defect(v: &DMatrix<Complex64>) -> f64 {
    let g = v.adjoint() * v;
    let k = g.nrows();
    frobenius(&(g - DMatrix::identity(k, k)))
}

/// Dense LU with a relative pivot check.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

pub fn dense_lu(m: DMatrix<Complex64>, what: &str) -> Result<DenseLu> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
    let lu = m.lu();
    let u = lu.u();
    let smallest = u
        .diagonal()
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    if scale == 0.0 || !(smallest > scale * 1e-14) {
        return Err(Error::Singular(what.to_string()));
    }
    Ok(DenseLu { lu })
}

impl DenseLu {
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        self.lu
            .solve(b)
            .expect("factorization checked for singularity")
    }

    pub fn solve_matrix(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.lu
            .solve(b)
            .expect("factorization checked for singularity")
    }
}

/// Eigenvalues and (unit-norm) right eigenvectors of a general complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexEig {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
}

/// Dense eigen-decomposition via the complex Schur form `A = U T Uᴴ`;
/// eigenvectors are recovered by back substitution on `T`.
pub fn complex_eig(a: &DMatrix<Complex64>) -> Result<ComplexEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(ComplexEig {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
    let (u, t) = schur.unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = frobenius(&t).max(f64::MIN_POSITIVE);
    let mut vectors = DMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        let mut x = DVector::<Complex64>::zeros(n);
        x[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < f64::EPSILON * scale {
                d = Complex64::new(f64::EPSILON * scale, 0.0);
            }
            x[i] = -s / d;
        }
        let v = &u * x;
        let norm = v.norm();
        vectors.set_column(k, &(v / Complex64::new(norm, 0.0)));
    }
    Ok(ComplexEig { values, vectors })
}
