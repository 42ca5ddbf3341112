use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::iar::check_start;
use super::{axpy, dotc, norm2, ArnoldiOptions, Breakdown, HessenbergState, PhaseTimes};
use crate::nep::NepProblem;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Compressed IAR basis: `q_{i,j} = Σ_ℓ a_{i,j,ℓ} z_ℓ` with orthonormal
/// `Z_k = [z_1 … z_k]`.
///
/// Indices are zero-based. The tensor is stored as `k` contiguous `k×k`
/// slabs, one per basis column `j`, each laid out row-major in `(i, ℓ)`.
#[derive(Debug, Clone)]
pub struct BasisTensor {
    n: usize,
    k: usize,
    z: Vec<C64>,
    a: Vec<C64>,
}

impl BasisTensor {
    /// Basis of a single normalized starting vector: `z₁ = x₁/‖x₁‖`,
    /// `a_{1,1,1} = 1`.
    pub fn from_start(x1: &DVector<C64>) -> Self {
        let norm = x1.norm();
        Self {
            n: x1.len(),
            k: 1,
            z: x1.iter().map(|v| v / norm).collect(),
            a: vec![C64::new(1.0, 0.0)],
        }
    }

    /// Builds a tensor from explicit parts; `z` is column-major `n×k` and `a`
    /// is indexed by `a[(j·k + i)·k + ℓ]`. Orthonormality of `z` is the
    /// caller's responsibility.
    pub fn from_parts(n: usize, k: usize, z: Vec<C64>, a: Vec<C64>) -> Result<Self> {
        if z.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                got: z.len(),
            });
        }
        if a.len() != k * k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k * k,
                got: a.len(),
            });
        }
        Ok(Self { n, k, z, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of basis columns `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize, l: usize) -> C64 {
        self.a[(j * self.k + i) * self.k + l]
    }

    /// Coefficients of column `j` as a row-major `k×k` slab in `(i, ℓ)`.
    pub fn slab(&self, j: usize) -> &[C64] {
        &self.a[j * self.k * self.k..(j + 1) * self.k * self.k]
    }

    pub fn z_column(&self, l: usize) -> &[C64] {
        &self.z[l * self.n..(l + 1) * self.n]
    }

    pub fn z_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(self.n, self.k, &self.z)
    }

    /// Complex numbers held by the representation: exactly `k·n + k³`.
    pub fn storage_len(&self) -> usize {
        self.z.len() + self.a.len()
    }

    /// Dense `(k·n)×k` basis `Q_k = Σ_ℓ [a_{i,j,ℓ}] ⊗ z_ℓ`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let (n, k) = (self.n, self.k);
        let mut q = DMatrix::zeros(k * n, k);
        for j in 0..k {
            for i in 0..k {
                let mut block = vec![ZERO; n];
                for l in 0..k {
                    let c = self.a(i, j, l);
                    if c != ZERO {
                        axpy(c, self.z_column(l), &mut block);
                    }
                }
                for (r, v) in block.into_iter().enumerate() {
                    q[(i * n + r, j)] = v;
                }
            }
        }
        q
    }

    /// `Σ_j s_j q_{1,j}`, the eigenvector approximation attached to a
    /// Hessenberg eigenvector `s`.
    pub fn first_block_combination(&self, s: &[C64]) -> DVector<C64> {
        assert!(s.len() <= self.k);
        let mut v = vec![ZERO; self.n];
        for l in 0..self.k {
            let c: C64 = s
                .iter()
                .enumerate()
                .map(|(j, sj)| self.a(0, j, l) * sj)
                .sum();
            if c != ZERO {
                axpy(c, self.z_column(l), &mut v);
            }
        }
        DVector::from_vec(v)
    }

    /// Appends `z_{k+1}` and the column `a_{·,k+1,·} = F/β`; every other new
    /// entry of the tensor is zero.
    fn expand(&mut self, z_new: &[C64], f: &DMatrix<C64>, beta: f64) {
        let (k, kn) = (self.k, self.k + 1);
        let mut a = vec![ZERO; kn * kn * kn];
        for j in 0..k {
            for i in 0..k {
                let src = (j * k + i) * k;
                let dst = (j * kn + i) * kn;
                a[dst..dst + k].copy_from_slice(&self.a[src..src + k]);
            }
        }
        let inv = 1.0 / beta;
        for i in 0..kn {
            for l in 0..kn {
                a[(k * kn + i) * kn + l] = f[(i, l)] * inv;
            }
        }
        self.a = a;
        self.z.extend_from_slice(z_new);
        self.k = kn;
    }
}

/// `[ỹ₂ … ỹ_{k+1}] = Z_k A_k` with `A_kᵀ = [a_{i,k,ℓ}]`, i.e. column `i` is
/// `q_{i,k}` reconstructed from the tensor.
pub fn tiar_y_tilde(t: &BasisTensor) -> DMatrix<C64> {
    let (n, k) = (t.n, t.k);
    let mut out = DMatrix::<C64>::zeros(n, k);
    let slab = t.slab(k - 1);
    for i in 0..k {
        let dst = &mut out.as_mut_slice()[i * n..(i + 1) * n];
        for l in 0..k {
            let c = slab[i * k + l];
            if c != ZERO {
                axpy(c, t.z_column(l), dst);
            }
        }
    }
    out
}

/// `y_j = ỹ_j / (j − 1)` for `j = 2, …, k+1`, as columns of an `n×k` matrix.
pub fn tiar_y_block(t: &BasisTensor) -> DMatrix<C64> {
    let mut y = tiar_y_tilde(t);
    for (i, mut col) in y.column_iter_mut().enumerate() {
        col /= C64::new((i + 1) as f64, 0.0);
    }
    y
}

/// Result of orthogonalizing `y₁` against `Z_k`.
#[derive(Debug, Clone)]
pub struct Orthogonalization {
    /// `t₁, …, t_{k+1}` with `y₁ = Σ t_ℓ z_ℓ`.
    pub t: DVector<C64>,
    /// `z_{k+1}`; `None` when `y₁ ∈ span(Z_k)` up to the tolerance.
    pub z_new: Option<DVector<C64>>,
    /// Norm of the orthogonal remainder.
    pub remainder: f64,
}

/// Classical Gram–Schmidt of `y₁` against `Z_k` with one reorthogonalization.
///
/// The phase of `z_{k+1}` is fixed so that its largest-magnitude entry is
/// real and positive.
pub fn tiar_orthogonalize(
    t: &BasisTensor,
    y1: &DVector<C64>,
    tol: f64,
) -> Result<Orthogonalization> {
    let (n, k) = (t.n, t.k);
    if y1.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y1.len(),
        });
    }
    if !y1.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::InvalidInput("y₁ is not finite".into()));
    }
    let y_norm = y1.norm();
    let mut r: Vec<C64> = y1.iter().copied().collect();
    let mut coeffs = vec![ZERO; k + 1];
    for _pass in 0..2 {
        let d: Vec<C64> = (0..k).map(|l| dotc(t.z_column(l), &r)).collect();
        for (l, dl) in d.iter().enumerate() {
            axpy(-dl, t.z_column(l), &mut r);
            coeffs[l] += dl;
        }
    }
    let remainder = norm2(&r);
    if !(remainder > tol * y_norm) || remainder == 0.0 {
        return Ok(Orthogonalization {
            t: DVector::from_vec(coeffs),
            z_new: None,
            remainder,
        });
    }
    let (imax, _) = r.iter().enumerate().fold((0, -1.0), |best, (i, v)| {
        if v.norm() > best.1 {
            (i, v.norm())
        } else {
            best
        }
    });
    let phase = r[imax] / r[imax].norm();
    let scale = phase.conj() / remainder;
    let z: Vec<C64> = r.iter().map(|v| v * scale).collect();
    coeffs[k] = phase * remainder;
    Ok(Orthogonalization {
        t: DVector::from_vec(coeffs),
        z_new: Some(DVector::from_vec(z)),
        remainder,
    })
}

/// `G = [g_{i,ℓ}] ∈ ℂ^{(k+1)×(k+1)}`: first row `t`, row `i ≥ 2` holds
/// `a_{i−1,k,ℓ}/(i−1)` and a zero in the last column.
pub fn tiar_build_g(t: &BasisTensor, coeffs: &DVector<C64>) -> Result<DMatrix<C64>> {
    let k = t.k;
    if coeffs.len() != k + 1 {
        return Err(Error::DimensionMismatch {
            expected: k + 1,
            got: coeffs.len(),
        });
    }
    let mut g = DMatrix::zeros(k + 1, k + 1);
    for l in 0..=k {
        g[(0, l)] = coeffs[l];
    }
    let slab = t.slab(k - 1);
    for i in 1..=k {
        let scale = 1.0 / i as f64;
        for l in 0..k {
            g[(i, l)] = slab[(i - 1) * k + l] * scale;
        }
    }
    Ok(g)
}

/// `h_j = Σ_ℓ Σ_i conj(a_{i,j,ℓ}) g_{i,ℓ}`, i.e. `Q̲_kᴴ y` without forming
/// `Q_k`.
pub fn tiar_h(t: &BasisTensor, g: &DMatrix<C64>) -> DVector<C64> {
    let k = t.k;
    assert!(
        g.nrows() == k + 1 && g.ncols() == k + 1,
        "G must be (k+1)×(k+1)"
    );
    DVector::from_iterator(
        k,
        (0..k).map(|j| {
            let slab = t.slab(j);
            let mut acc = ZERO;
            for i in 0..k {
                for l in 0..k {
                    let a = slab[i * k + l];
                    if a != ZERO {
                        acc += a.conj() * g[(i, l)];
                    }
                }
            }
            acc
        }),
    )
}

/// `F = G − [A; 0]·h` column by column (last column copied from `G`) and
/// `β = ‖F‖_F`.
pub fn tiar_f(t: &BasisTensor, g: &DMatrix<C64>, h: &DVector<C64>) -> (DMatrix<C64>, f64) {
    let k = t.k;
    assert!(g.nrows() == k + 1 && g.ncols() == k + 1 && h.len() == k);
    let mut f = g.clone();
    for (j, hj) in h.iter().enumerate() {
        if *hj == ZERO {
            continue;
        }
        let slab = t.slab(j);
        for i in 0..k {
            for l in 0..k {
                let a = slab[i * k + l];
                if a != ZERO {
                    f[(i, l)] -= a * hj;
                }
            }
        }
    }
    let beta = f.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    (f, beta)
}

/// Two-pass coefficient-space Gram–Schmidt: returns `(h, F, β)`.
pub fn tiar_gram_schmidt(t: &BasisTensor, g: &DMatrix<C64>) -> (DVector<C64>, DMatrix<C64>, f64) {
    let h1 = tiar_h(t, g);
    let (f1, _) = tiar_f(t, g, &h1);
    let dh = tiar_h(t, &f1);
    let (f2, beta) = tiar_f(t, &f1, &dh);
    (h1 + dh, f2, beta)
}

/// Source of the next direction `y₁` for a TIAR step.
///
/// The generic implementation [`FullVectors`] materializes `y₂, …, y_{k+1}`
/// and calls [`NepProblem::solve_step`]; structured problems can read the
/// tensor directly.
pub trait TensorAction: Sync {
    fn dim(&self) -> usize;

    fn next_y1(&self, basis: &BasisTensor, times: &mut PhaseTimes) -> Result<DVector<C64>>;
}

/// Adapter running TIAR on any [`NepProblem`] through full vectors.
pub struct FullVectors<'a, P: ?Sized>(pub &'a P);

impl<P: NepProblem + ?Sized> TensorAction for FullVectors<'_, P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn next_y1(&self, basis: &BasisTensor, times: &mut PhaseTimes) -> Result<DVector<C64>> {
        let clock = Instant::now();
        let ys = tiar_y_block(basis);
        times.y_block += clock.elapsed();
        let clock = Instant::now();
        let y1 = self.0.solve_step(&ys)?;
        times.y1_solve += clock.elapsed();
        Ok(y1)
    }
}

#[derive(Debug, Clone)]
pub struct TiarRun {
    pub hessenberg: HessenbergState,
    pub basis: BasisTensor,
    pub breakdown: Option<Breakdown>,
    pub times: PhaseTimes,
}

/// Runs `m` iterations of TIAR on a generic problem.
pub fn tiar_run<P: NepProblem + ?Sized>(
    problem: &P,
    x1: &DVector<C64>,
    m: usize,
    opts: &ArnoldiOptions,
) -> Result<TiarRun> {
    tiar_run_with(&FullVectors(problem), x1, m, opts, &mut |_, _| Ok(()))
}

/// TIAR driver for any [`TensorAction`]; `monitor` sees the state after every
/// completed iteration.
pub fn tiar_run_with<A: TensorAction + ?Sized>(
    action: &A,
    x1: &DVector<C64>,
    m: usize,
    opts: &ArnoldiOptions,
    monitor: &mut dyn FnMut(&HessenbergState, &BasisTensor) -> Result<()>,
) -> Result<TiarRun> {
    check_start(x1, action.dim(), m)?;
    let mut basis = BasisTensor::from_start(x1);
    let mut hess = HessenbergState::new();
    let mut times = PhaseTimes::default();
    let mut breakdown = None;

    for k in 1..=m {
        let y1 = action.next_y1(&basis, &mut times)?;

        let clock = Instant::now();
        let orth = tiar_orthogonalize(&basis, &y1, opts.breakdown_tol)?;
        let g = tiar_build_g(&basis, &orth.t)?;
        let y_norm = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let (h, f, beta) = tiar_gram_schmidt(&basis, &g);
        times.orthogonalization += clock.elapsed();

        hess.push(h.as_slice(), beta);
        if !(beta > opts.breakdown_tol * y_norm) {
            breakdown = Some(Breakdown::Krylov { iteration: k, beta });
            monitor(&hess, &basis)?;
            break;
        }
        match orth.z_new {
            Some(z) => basis.expand(z.as_slice(), &f, beta),
            None => {
                breakdown = Some(Breakdown::Basis { iteration: k });
                monitor(&hess, &basis)?;
                break;
            }
        }
        monitor(&hess, &basis)?;
    }

    Ok(TiarRun {
        hessenberg: hess,
        basis,
        breakdown,
        times,
    })
}
