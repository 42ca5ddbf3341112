//! Nonlinear eigenvalue problem abstraction, Cayley transform and polynomial
//! test problems.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{dense_lu, DenseLu};
use crate::{Error, Result, C64};

/// A nonlinear eigenvalue problem `M(λ) w = 0` as seen by the infinite
/// Arnoldi iterations.
///
/// Implementations cache whatever factorization of `M(0)` they need at
/// construction time; both methods take `&self` and must be reentrant.
pub trait NepProblem: Send + Sync {
    /// Size `n` of `M(λ)`.
    fn dim(&self) -> usize;

    /// Computes `y₁ = −M(0)⁻¹ Σ_{i=1}^{k} M⁽ⁱ⁾(0) y_{i+1}`.
    ///
    /// Column `i - 1` of `ys` holds `y_{i+1}`, so `k = ys.ncols()`.
    fn solve_step(&self, ys: &DMatrix<C64>) -> Result<DVector<C64>>;

    /// `M(λ) w`.
    fn evaluate(&self, lambda: C64, w: &DVector<C64>) -> Result<DVector<C64>>;

    /// `‖M(λ) w‖ / ‖w‖`.
    fn relative_residual(&self, lambda: C64, w: &DVector<C64>) -> Result<f64> {
        let norm = w.norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero vector has no residual".into()));
        }
        Ok(self.evaluate(lambda, w)?.norm() / norm)
    }
}

/// Shift `γ₀` of the Cayley map `λ = (γ − γ₀)/(γ + γ̄₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CayleyShift {
    gamma0: C64,
}

impl CayleyShift {
    /// Accepts any `γ₀` with `Re γ₀ ≠ 0` and `Im γ₀ ∉ 2πℤ`; both signs of the
    /// imaginary part are allowed.
    pub fn new(gamma0: C64) -> Result<Self> {
        if !(gamma0.re.is_finite() && gamma0.im.is_finite()) {
            return Err(Error::InvalidShift(format!("{gamma0} is not finite")));
        }
        if gamma0.re == 0.0 {
            return Err(Error::InvalidShift(format!("{gamma0} has zero real part")));
        }
        let turns = gamma0.im / (2.0 * PI);
        if (turns - turns.round()).abs() < 1e-12 {
            return Err(Error::InvalidShift(format!(
                "{gamma0} has imaginary part in 2πℤ"
            )));
        }
        Ok(Self { gamma0 })
    }

    pub fn gamma0(&self) -> C64 {
        self.gamma0
    }

    /// `λ = (γ − γ₀)/(γ + γ̄₀)`.
    pub fn forward(&self, gamma: C64) -> Result<C64> {
        let den = gamma + self.gamma0.conj();
        if den == C64::new(0.0, 0.0) {
            return Err(Error::CayleyPole(format!("γ = −γ̄₀ = {gamma}")));
        }
        Ok((gamma - self.gamma0) / den)
    }

    /// `γ = (γ₀ + λγ̄₀)/(1 − λ)`.
    pub fn inverse(&self, lambda: C64) -> Result<C64> {
        let den = C64::new(1.0, 0.0) - lambda;
        if den == C64::new(0.0, 0.0) {
            return Err(Error::CayleyPole("λ = 1".into()));
        }
        Ok((self.gamma0 + lambda * self.gamma0.conj()) / den)
    }
}

/// `M(λ) = Σ_i λⁱ B_i` with dense coefficients; `B₀` is factorized once.
#[derive(Debug, Clone)]
pub struct PolynomialNep {
    coeffs: Vec<DMatrix<C64>>,
    b0: DenseLu,
}

impl PolynomialNep {
    pub fn new(coeffs: Vec<DMatrix<C64>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial needs at least B₀".into()))?;
        let n = first.nrows();
        for b in &coeffs {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.nrows().max(b.ncols()),
                });
            }
        }
        let b0 = dense_lu(first.clone(), "B₀ of the polynomial problem")?;
        Ok(Self { coeffs, b0 })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[DMatrix<C64>] {
        &self.coeffs
    }
}

impl NepProblem for PolynomialNep {
    fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    fn solve_step(&self, ys: &DMatrix<C64>) -> Result<DVector<C64>> {
        let n = self.dim();
        if ys.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: ys.nrows(),
            });
        }
        // M⁽ⁱ⁾(0) = i!·B_i, and vanishes beyond the degree.
        let mut rhs = DVector::<C64>::zeros(n);
        let mut factorial = 1.0;
        for i in 1..=ys.ncols().min(self.degree()) {
            factorial *= i as f64;
            rhs += (&self.coeffs[i] * ys.column(i - 1)) * C64::new(factorial, 0.0);
        }
        Ok(-self.b0.solve(&rhs))
    }

    fn evaluate(&self, lambda: C64, w: &DVector<C64>) -> Result<DVector<C64>> {
        let n = self.dim();
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.len(),
            });
        }
        // Horner in λ.
        let mut acc = DVector::<C64>::zeros(n);
        for b in self.coeffs.iter().rev() {
            acc = acc * lambda + b * w;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn forward_of_shift_is_zero() {
        let s = CayleyShift::new(c(-3.0, PI)).unwrap();
        assert_eq!(s.forward(c(-3.0, PI)).unwrap(), c(0.0, 0.0));
        assert_eq!(s.inverse(c(0.0, 0.0)).unwrap(), c(-3.0, PI));
    }

    #[test]
    fn imaginary_axis_maps_to_unit_circle() {
        let s = CayleyShift::new(c(-3.0, PI)).unwrap();
        for t in [-7.0, -1.0, 0.0, 0.3, 2.5, 40.0] {
            let l = s.forward(c(0.0, t)).unwrap();
            assert!((l.norm() - 1.0).abs() < 1e-14);
        }
        for theta in [0.1_f64, 1.0, 3.0, -2.0] {
            let g = s.inverse(C64::from_polar(1.0, theta)).unwrap();
            assert!(g.re.abs() < 1e-13 * g.norm().max(1.0), "{g}");
        }
    }

    #[test]
    fn poles_are_reported() {
        let s = CayleyShift::new(c(-2.0, -PI)).unwrap();
        assert!(matches!(
            s.forward(-s.gamma0().conj()),
            Err(Error::CayleyPole(_))
        ));
        assert!(matches!(s.inverse(c(1.0, 0.0)), Err(Error::CayleyPole(_))));
    }

    #[test]
    fn inadmissible_shifts_are_rejected() {
        assert!(CayleyShift::new(c(0.0, 1.0)).is_err());
        assert!(CayleyShift::new(c(-1.0, 2.0 * PI)).is_err());
        assert!(CayleyShift::new(c(-1.0, 0.0)).is_err());
        assert!(CayleyShift::new(c(-2.0, -PI)).is_ok());
    }

    #[test]
    fn linear_identity_problem_step() {
        let i2 = DMatrix::<C64>::identity(2, 2);
        let p = PolynomialNep::new(vec![i2.clone(), i2]).unwrap();
        let ys = DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let y1 = p.solve_step(&ys).unwrap();
        assert_eq!(y1[0], c(-1.0, 0.0));
        assert_eq!(y1[1], c(0.0, 0.0));
        let zero = p.solve_step(&DMatrix::zeros(2, 3)).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn singular_b0_is_rejected() {
        let z = DMatrix::<C64>::zeros(3, 3);
        assert!(matches!(
            PolynomialNep::new(vec![z, DMatrix::identity(3, 3)]),
            Err(Error::Singular(_))
        ));
    }
}
