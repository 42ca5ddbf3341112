//! Small linear-algebra toolbox: compressed sparse rows, a banded LU with
//! partial pivoting and dense complex helpers built on `nalgebra`.

mod band;
mod csr;
mod dense;

pub use band::BandLu;
pub use csr::CsrMatrix;
pub use dense::{complex_eig, dense_lu, frobenius, orthonormality_defect, ComplexEig, DenseLu};
