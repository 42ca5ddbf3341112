use nalgebra::{DMatrix, DVector};

use crate::linalg::{dense_lu, BandLu, CsrMatrix, DenseLu};
use crate::{Error, Result, C64};

/// Solver for `M̃(0) = [[Q, C], [C₂ᵀ, P]]` by eliminating the interior block:
/// `S = P − C₂ᵀQ⁻¹C` is dense of size `2n_z`, `Q` is banded after reordering.
#[derive(Debug, Clone)]
pub struct SchurPrecomputation {
    /// Factor of `Q` in the order `perm` (new index `i` is old `perm[i]`).
    q: BandLu,
    perm: Vec<usize>,
    /// `Q⁻¹C`, one column per boundary unknown.
    x: DMatrix<C64>,
    s: DenseLu,
    c2t: CsrMatrix<f64>,
}

/// `Q⁻¹b` in place, in the original ordering.
fn permuted_solve(q: &BandLu, perm: &[usize], b: &mut [C64]) {
    let mut t: Vec<C64> = perm.iter().map(|&i| b[i]).collect();
    q.solve_in_place(&mut t);
    for (&i, v) in perm.iter().zip(t) {
        b[i] = v;
    }
}

impl SchurPrecomputation {
    /// `perm` reorders the interior unknowns to narrow the band of `Q`; the
    /// identity when `None`.
    pub fn new(
        q: &CsrMatrix<C64>,
        c: &CsrMatrix<C64>,
        c2t: &CsrMatrix<f64>,
        p: DMatrix<C64>,
        perm: Option<Vec<usize>>,
    ) -> Result<Self> {
        let (ni, nb) = (q.nrows(), p.nrows());
        if c.nrows() != ni
            || c.ncols() != nb
            || c2t.nrows() != nb
            || c2t.ncols() != ni
            || !p.is_square()
        {
            return Err(Error::DimensionMismatch {
                expected: ni + nb,
                got: c.nrows() + c2t.nrows(),
            });
        }
        let perm = perm.unwrap_or_else(|| (0..ni).collect());
        let mut seen = vec![false; ni];
        if perm.len() != ni
            || !perm
                .iter()
                .all(|&i| i < ni && !std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidInput(
                "interior ordering is not a permutation".into(),
            ));
        }
        let q = BandLu::factor(&q.permuted(&perm))
            .map_err(|_| Error::Singular("interior block Q(γ₀)".into()))?;

        let ct = c.transpose();
        let mut x = DMatrix::<C64>::zeros(ni, nb);
        let mut col = vec![C64::new(0.0, 0.0); ni];
        for j in 0..nb {
            col.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (i, v) in ct.row(j) {
                col[i] = v;
            }
            permuted_solve(&q, &perm, &mut col);
            x.column_mut(j).copy_from_slice(&col);
        }

        let mut s = p;
        for j in 0..nb {
            let cx = c2t.apply(x.column(j).as_slice());
            for (i, v) in cx.into_iter().enumerate() {
                s[(i, j)] -= v;
            }
        }
        let s = dense_lu(s, "Schur complement P̃(0) − C₂ᵀQ(γ₀)⁻¹C₁(γ₀)")?;
        Ok(Self {
            q,
            perm,
            x,
            s,
            c2t: c2t.clone(),
        })
    }

    pub fn interior_dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn boundary_dim(&self) -> usize {
        self.x.ncols()
    }

    /// Half-bandwidths of the factored interior block.
    pub fn bandwidth(&self) -> (usize, usize) {
        self.q.bandwidth()
    }

    /// `M̃(0)⁻¹r`.
    pub fn solve(&self, r: &[C64]) -> Result<Vec<C64>> {
        let (ni, nb) = (self.interior_dim(), self.boundary_dim());
        if r.len() != ni + nb {
            return Err(Error::DimensionMismatch {
                expected: ni + nb,
                got: r.len(),
            });
        }
        let mut u = r[..ni].to_vec();
        permuted_solve(&self.q, &self.perm, &mut u);
        let cu = self.c2t.apply(&u);
        let rhs = DVector::from_iterator(nb, r[ni..].iter().zip(cu).map(|(a, b)| a - b));
        let b = self.s.solve(&rhs);
        let xb = &self.x * &b;
        for (ui, v) in u.iter_mut().zip(xb.iter()) {
            *ui -= v;
        }
        u.extend(b.iter());
        Ok(u)
    }
}
