//! Infinite Arnoldi iterations in Taylor form.
//!
//! [`iar_run`] keeps the full block upper-triangular basis and serves as the
//! reference; [`tiar_run`] stores the same basis as a coefficient tensor times
//! an orthonormal matrix and reproduces the Hessenberg matrix of IAR in exact
//! arithmetic while using `O(m³ + mn)` memory.
//!
//! Both iterations use classical Gram–Schmidt with exactly one unconditional
//! reorthogonalization pass.

mod hessenberg;
mod iar;
mod ritz;
mod tiar;

use std::time::Duration;

use serde::Serialize;

pub use hessenberg::HessenbergState;
pub use iar::{iar_run, iar_run_monitored, IarBasis, IarRun};
pub use ritz::{
    ritz_pairs, ritz_values, sort_ritz, ConvergenceHistory, IterationRecord, RitzPair, RitzReport,
    RitzValue,
};
pub use tiar::{
    tiar_build_g, tiar_f, tiar_gram_schmidt, tiar_h, tiar_orthogonalize, tiar_run, tiar_run_with,
    tiar_y_block, tiar_y_tilde, BasisTensor, FullVectors, Orthogonalization, TensorAction, TiarRun,
};

/// Default relative tolerance below which a Gram–Schmidt remainder counts as
/// a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// A remainder `β < tol · ‖y‖` terminates the run.
    pub breakdown_tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            breakdown_tol: BREAKDOWN_TOL,
        }
    }
}

/// Why a run stopped before the requested number of iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Breakdown {
    /// The Krylov space became invariant: `β` fell below the tolerance.
    Krylov { iteration: usize, beta: f64 },
    /// `y₁` lies in `span(z₁..z_k)`; the Hessenberg column of this iteration
    /// is still complete.
    Basis { iteration: usize },
}

/// Wall time spent in each phase of an Arnoldi run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    #[serde(serialize_with = "secs")]
    pub y_block: Duration,
    #[serde(serialize_with = "secs")]
    pub y1_solve: Duration,
    #[serde(serialize_with = "secs")]
    pub orthogonalization: Duration,
    #[serde(serialize_with = "secs")]
    pub hessenberg_eig: Duration,
}

impl PhaseTimes {
    pub fn total(&self) -> Duration {
        self.y_block + self.y1_solve + self.orthogonalization + self.hessenberg_eig
    }
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

use crate::C64;

#[inline]
pub(crate) fn dotc(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
