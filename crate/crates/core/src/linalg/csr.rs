use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use num_traits::Zero;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T> CsrMatrix<T>
where
    T: Copy + AddAssign + Zero,
{
    /// Builds the matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (t, &(r, _, _)) in triplets.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut row_entries: Vec<(usize, T)> = Vec::new();
        for r in 0..nrows {
            row_entries.clear();
            row_entries.extend(order[counts[r]..counts[r + 1]].iter().map(|&t| {
                let (_, c, v) = triplets[t];
                (c, v)
            }));
            row_entries.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in &row_entries {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, &[])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    /// Iterates over the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (j, i, v))
            .collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// `P A Pᵀ` for the ordering `perm`, where new index `i` takes old index
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert!(
            self.nrows == self.ncols && perm.len() == self.nrows,
            "permutation length mismatch"
        );
        let mut inv = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        assert!(inv.iter().all(|&i| i != usize::MAX), "not a permutation");
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (inv[i], inv[j], v))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// `y += A x`.
    pub fn mul_add<X>(&self, x: &[X], y: &mut [X])
    where
        X: Copy + AddAssign + Mul<T, Output = X>,
    {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                *yi += x[self.col_idx[k]] * self.values[k];
            }
        }
    }

    /// Lower and upper bandwidth of the stored pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
        (lower, upper)
    }
}

impl CsrMatrix<f64> {
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// `A x` for a complex vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.mul_add(x, &mut y);
        y
    }

    /// `Σ c_i A_i` over real matrices of identical shape.
    pub fn combine(terms: &[(Complex64, &CsrMatrix<f64>)]) -> CsrMatrix<Complex64> {
        let (nrows, ncols) = terms
            .first()
            .map(|(_, m)| (m.nrows, m.ncols))
            .expect("at least one term");
        let mut triplets = Vec::new();
        for (coef, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols));
            triplets.extend(m.triplets().into_iter().map(|(i, j, v)| (i, j, coef * v)));
        }
        CsrMatrix::from_triplets(nrows, ncols, &triplets)
    }
}

impl CsrMatrix<Complex64> {
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.mul_add(x, &mut y);
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let m =
            CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.transpose().get(2, 0), 4.0);
        assert_eq!(m.bandwidth(), (0, 2));
    }

    #[test]
    fn complex_product_matches_dense() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, -3.0)]);
        let x = [Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)];
        let y = m.apply(&x);
        assert_eq!(y[0], Complex64::new(1.0, 5.0));
        assert_eq!(y[1], Complex64::new(-3.0, -3.0));
    }
}
