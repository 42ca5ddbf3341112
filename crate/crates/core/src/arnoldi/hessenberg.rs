use nalgebra::DMatrix;

use crate::C64;

/// Rectangular upper Hessenberg matrix `H_k ∈ ℂ^{(k+1)×k}` grown one column
/// per iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HessenbergState {
    columns: Vec<Vec<C64>>,
}

impl HessenbergState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of completed iterations `k`.
    pub fn iterations(&self) -> usize {
        self.columns.len()
    }

    /// Appends the column `[h; β]` of iteration `k = h.len()`.
    pub fn push(&mut self, h: &[C64], beta: f64) {
        assert_eq!(h.len(), self.columns.len() + 1, "h must have k entries");
        let mut col = h.to_vec();
        col.push(C64::new(beta, 0.0));
        self.columns.push(col);
    }

    /// The full `(k+1)×k` matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        let k = self.iterations();
        let mut h = DMatrix::zeros(k + 1, k);
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                h[(i, j)] = *v;
            }
        }
        h
    }

    /// Leading `m×m` block.
    pub fn square(&self, m: usize) -> DMatrix<C64> {
        assert!(m <= self.iterations());
        self.matrix().view((0, 0), (m, m)).into_owned()
    }

    /// Subdiagonal entries `β₁, …, β_k`.
    pub fn subdiagonal(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.last().unwrap().re).collect()
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.columns[j]
    }
}
