use num_complex::Complex64;

use super::CsrMatrix;
use crate::{Error, Result};

/// LU factorization with partial pivoting of a banded complex matrix.
///
/// Row `i` of the working array holds columns `i - kl ..= i + kl + ku`, which
/// is enough room for the fill produced by row interchanges. The multipliers
/// of step `i` are kept separately and replayed together with the recorded
/// interchanges during the forward solve.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<Complex64>,
    lower: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix<Complex64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            ab: vec![zero; n * width],
            lower: vec![zero; n * kl],
            piv: vec![0; n],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                let idx = lu.idx(i, j);
                lu.ab[idx] = v;
            }
        }
        let scale = (0..n)
            .flat_map(|i| a.row(i).map(|(_, v)| v.norm()))
            .fold(0.0_f64, f64::max);
        lu.eliminate(scale)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.kl + self.ku);
        row * self.width + (col + self.kl - row)
    }

    fn eliminate(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let reach = self.kl + self.ku;
        for i in 0..n {
            let last_row = (i + self.kl).min(n - 1);
            let mut p = i;
            let mut best = self.ab[self.idx(i, i)].norm();
            for r in i + 1..=last_row {
                let v = self.ab[self.idx(r, i)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || best <= scale * 1e-15 {
                return Err(Error::Singular(format!(
                    "zero pivot in banded LU at row {i}"
                )));
            }
            self.piv[i] = p;
            let last_col = (i + reach).min(n - 1);
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.idx(i, c), self.idx(p, c));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.idx(i, i)];
            let pivot_start = self.idx(i, i);
            for r in i + 1..=last_row {
                let ri = self.idx(r, i);
                let m = self.ab[ri] / pivot;
                self.lower[i * self.kl + (r - i - 1)] = m;
                self.ab[ri] = Complex64::new(0.0, 0.0);
                if m == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row_start = self.idx(r, i);
                for off in 1..=(last_col - i) {
                    let v = self.ab[pivot_start + off];
                    self.ab[row_start + off] -= m * v;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth of the factored matrix.
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let p = self.piv[i];
            if p != i {
                b.swap(i, p);
            }
            let bi = b[i];
            if bi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let last_row = (i + self.kl).min(n - 1);
            for r in i + 1..=last_row {
                b[r] -= self.lower[i * self.kl + (r - i - 1)] * bi;
            }
        }
        let reach = self.kl + self.ku;
        for i in (0..n).rev() {
            let start = self.idx(i, i);
            let last_col = (i + reach).min(n - 1);
            let mut s = b[i];
            for off in 1..=(last_col - i) {
                s -= self.ab[start + off] * b[i + off];
            }
            b[i] = s / self.ab[start];
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
