use std::cmp::Ordering;

use nalgebra::DVector;
use serde::Serialize;

use super::HessenbergState;
use crate::linalg::complex_eig;
use crate::nep::CayleyShift;
use crate::{Error, Result, C64};

/// One Ritz value `μ` with the eigenvalue approximation `1/μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RitzValue {
    #[serde(serialize_with = "complex")]
    pub mu: C64,
    #[serde(serialize_with = "complex")]
    pub approximation: C64,
    /// `cayley_inverse(1/μ)` when the run used a shift.
    #[serde(serialize_with = "opt_complex")]
    pub gamma: Option<C64>,
    pub residual: Option<f64>,
    pub iteration: usize,
}

impl RitzValue {
    /// The value in the coordinates of the original problem.
    pub fn target(&self) -> C64 {
        self.gamma.unwrap_or(self.approximation)
    }
}

/// A Ritz value together with its eigenvector `s` of the leading Hessenberg
/// block.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzPair {
    pub value: RitzValue,
    pub vector: DVector<C64>,
}

/// Ritz values of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ritz: Vec<RitzValue>,
}

/// Per-iteration Ritz history with the "three consecutive iterations below
/// tolerance" convergence rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
}

/// Consecutive iterations a value must stay below tolerance.
const STREAK: usize = 3;

impl ConvergenceHistory {
    pub fn push(&mut self, record: IterationRecord) {
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Values of the last record whose residual is below `tol` there and in
    /// the two preceding records, matched by proximity of [`RitzValue::target`].
    pub fn converged(&self, tol: f64, match_tol: f64) -> Vec<RitzValue> {
        let n = self.records.len();
        if n < STREAK {
            return Vec::new();
        }
        let below = |v: &RitzValue| v.residual.is_some_and(|r| r < tol);
        self.records[n - 1]
            .ritz
            .iter()
            .filter(|v| below(v))
            .filter(|v| {
                let g = v.target();
                self.records[n - STREAK..n - 1].iter().all(|rec| {
                    rec.ritz.iter().any(|w| {
                        below(w) && (w.target() - g).norm() <= match_tol * g.norm().max(1.0)
                    })
                })
            })
            .copied()
            .collect()
    }
}

/// Ritz values of one iteration plus the full history of the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RitzReport {
    pub values: Vec<RitzValue>,
    /// Ritz values `μ = 0` dropped because `1/μ` is infinite.
    pub excluded_zero: usize,
    pub history: ConvergenceHistory,
}

/// Eigenpairs of the leading `m×m` block of `H`, with approximations `1/μ`
/// and, given a shift, back-mapped `γ`.
///
/// Returns the pairs and the number of excluded zero Ritz values.
pub fn ritz_pairs(
    h: &HessenbergState,
    m: usize,
    shift: Option<&CayleyShift>,
) -> Result<(Vec<RitzPair>, usize)> {
    if m == 0 || m > h.iterations() {
        return Err(Error::InvalidInput(format!(
            "Ritz extraction needs 1 ≤ m ≤ {} (got {m})",
            h.iterations()
        )));
    }
    let square = h.square(m);
    let scale = square.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let eig = complex_eig(&square)?;
    let mut pairs = Vec::with_capacity(m);
    let mut excluded = 0;
    for (i, mu) in eig.values.iter().enumerate() {
        if mu.norm() <= f64::EPSILON * scale || *mu == C64::new(0.0, 0.0) {
            excluded += 1;
            continue;
        }
        let approximation = mu.inv();
        let gamma = match shift {
            Some(s) => Some(s.inverse(approximation)?),
            None => None,
        };
        pairs.push(RitzPair {
            value: RitzValue {
                mu: *mu,
                approximation,
                gamma,
                residual: None,
                iteration: m,
            },
            vector: eig.vectors.column(i).into_owned(),
        });
    }
    Ok((pairs, excluded))
}

/// As [`ritz_pairs`] without the eigenvectors.
pub fn ritz_values(
    h: &HessenbergState,
    m: usize,
    shift: Option<&CayleyShift>,
) -> Result<RitzReport> {
    let (pairs, excluded_zero) = ritz_pairs(h, m, shift)?;
    Ok(RitzReport {
        values: pairs.into_iter().map(|p| p.value).collect(),
        excluded_zero,
        history: ConvergenceHistory::default(),
    })
}

/// Ascending residual (missing residuals last), ties broken by distance of
/// the target value to the imaginary axis.
pub fn sort_ritz(values: &mut [RitzValue]) {
    values.sort_by(|a, b| {
        let ra = a.residual.unwrap_or(f64::INFINITY);
        let rb = b.residual.unwrap_or(f64::INFINITY);
        ra.partial_cmp(&rb)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                a.target()
                    .re
                    .abs()
                    .partial_cmp(&b.target().re.abs())
                    .unwrap_or(Ordering::Equal)
            })
    });
}

fn complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

fn opt_complex<S: serde::Serializer>(
    z: &Option<C64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match z {
        Some(z) => complex(z, s),
        None => s.serialize_none(),
    }
}
