use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{axpy, dotc, norm2, ArnoldiOptions, Breakdown, HessenbergState, PhaseTimes};
use crate::nep::NepProblem;
use crate::{Error, Result, C64};

/// Block upper-triangular basis `Q_k` of IAR. Column `j` stores its nonzero
/// blocks `q_{1,j}, …, q_{j,j}` contiguously; the zero blocks below the
/// diagonal are never stored.
#[derive(Debug, Clone)]
pub struct IarBasis {
    n: usize,
    columns: Vec<Vec<C64>>,
}

impl IarBasis {
    fn new(q1: Vec<C64>) -> Self {
        Self {
            n: q1.len(),
            columns: vec![q1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of basis columns `k`.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Block `q_{i,j}` (zero-based, `i ≤ j`).
    pub fn block(&self, i: usize, j: usize) -> &[C64] {
        assert!(i <= j, "block below the diagonal is structurally zero");
        &self.columns[j][i * self.n..(i + 1) * self.n]
    }

    /// Stored part of column `j`, of length `(j+1)·n`.
    pub fn column(&self, j: usize) -> &[C64] {
        &self.columns[j]
    }

    /// Dense `(k·n)×k` matrix including the zero blocks.
    pub fn dense(&self) -> DMatrix<C64> {
        let k = self.len();
        let mut q = DMatrix::zeros(k * self.n, k);
        for (j, col) in self.columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                q[(r, j)] = *v;
            }
        }
        q
    }

    /// Number of stored complex entries; a dense basis would hold `k²·n`.
    pub fn storage_len(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// First block row applied to `s`: `Σ_j s_j q_{1,j}`.
    pub fn first_block_combination(&self, s: &[C64]) -> DVector<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.n];
        for (j, sj) in s.iter().enumerate() {
            axpy(*sj, self.block(0, j), &mut v);
        }
        DVector::from_vec(v)
    }
}

#[derive(Debug, Clone)]
pub struct IarRun {
    pub hessenberg: HessenbergState,
    pub basis: IarBasis,
    pub breakdown: Option<Breakdown>,
    pub times: PhaseTimes,
}

/// Runs `m` iterations of the infinite Arnoldi method from `x1`.
pub fn iar_run<P: NepProblem + ?Sized>(
    problem: &P,
    x1: &DVector<C64>,
    m: usize,
    opts: &ArnoldiOptions,
) -> Result<IarRun> {
    iar_run_monitored(problem, x1, m, opts, &mut |_, _| Ok(()))
}

/// As [`iar_run`], calling `monitor` after every completed iteration.
pub fn iar_run_monitored<P: NepProblem + ?Sized>(
    problem: &P,
    x1: &DVector<C64>,
    m: usize,
    opts: &ArnoldiOptions,
    monitor: &mut dyn FnMut(&HessenbergState, &IarBasis) -> Result<()>,
) -> Result<IarRun> {
    let n = problem.dim();
    check_start(x1, n, m)?;
    let norm = x1.norm();
    let q1: Vec<C64> = x1.iter().map(|v| v / norm).collect();

    let mut basis = IarBasis::new(q1);
    let mut hess = HessenbergState::new();
    let mut times = PhaseTimes::default();
    let mut breakdown = None;

    for k in 1..=m {
        let clock = Instant::now();
        // y_{i+1} = q_{i,k} / i
        let last = k - 1;
        let mut ys = DMatrix::<C64>::zeros(n, k);
        for i in 0..k {
            let scale = 1.0 / (i + 1) as f64;
            for (dst, src) in ys.column_mut(i).iter_mut().zip(basis.block(i, last)) {
                *dst = src * scale;
            }
        }
        times.y_block += clock.elapsed();

        let clock = Instant::now();
        let y1 = problem.solve_step(&ys)?;
        times.y1_solve += clock.elapsed();

        let clock = Instant::now();
        let mut y = Vec::with_capacity((k + 1) * n);
        y.extend(y1.iter());
        y.extend(ys.iter());
        let y_norm = norm2(&y);

        let mut h = vec![C64::new(0.0, 0.0); k];
        for _pass in 0..2 {
            let dh: Vec<C64> = basis
                .columns
                .iter()
                .map(|col| dotc(col, &y[..col.len()]))
                .collect();
            for (col, c) in basis.columns.iter().zip(&dh) {
                axpy(-c, col, &mut y[..col.len()]);
            }
            for (hi, d) in h.iter_mut().zip(&dh) {
                *hi += d;
            }
        }
        let beta = norm2(&y);
        times.orthogonalization += clock.elapsed();

        hess.push(&h, beta);
        if !(beta > opts.breakdown_tol * y_norm) {
            breakdown = Some(Breakdown::Krylov { iteration: k, beta });
            monitor(&hess, &basis)?;
            break;
        }
        let inv = 1.0 / beta;
        y.iter_mut().for_each(|v| *v *= inv);
        basis.columns.push(y);
        monitor(&hess, &basis)?;
    }

    Ok(IarRun {
        hessenberg: hess,
        basis,
        breakdown,
        times,
    })
}

pub(crate) fn check_start(x1: &DVector<C64>, n: usize, m: usize) -> Result<()> {
    if x1.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x1.len(),
        });
    }
    if !(x1.norm() > 0.0) || !x1.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::InvalidInput(
            "starting vector must be finite and nonzero".into(),
        ));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!(
            "iteration count must satisfy 1 ≤ m ≤ n (m = {m}, n = {n})"
        )));
    }
    Ok(())
}
