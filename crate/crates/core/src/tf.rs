use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Rational function in the Laplace variable `s`: the universal
/// plant/compensator/filter representation.
///
/// No pole-zero cancellation or symbolic simplification is ever performed;
/// the representation is exact up to a common scalar factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput(
                "transfer function denominator is the zero polynomial".into(),
            ));
        }
        Ok(Self { num, den })
    }

    /// Constant gain `k`.
    pub fn constant(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    /// Pure integrator `1/s`.
    pub fn integrator() -> Self {
        Self {
            num: Polynomial::one(),
            den: Polynomial::new([0.0, 1.0]),
        }
    }

    /// Evaluate at a complex point. Well-defined wherever `den(s) != 0`.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    /// Evaluate at `s = j*2*pi*f`; errors if the point sits on a pole.
    pub fn eval_at_hz(&self, freq_hz: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * freq_hz);
        let d = self.den.eval(s);
        let scale = self.den.max_abs_coeff().max(1.0);
        if d.norm() < f64::EPSILON * scale {
            return Err(Error::SingularSample { freq_hz });
        }
        Ok(self.num.eval(s) / d)
    }

    /// DC gain: value at `s = 0` (ratio of constant terms).
    pub fn dc_gain(&self) -> f64 {
        self.num.coeffs()[0] / self.den.coeffs()[0]
    }

    pub fn scale(&self, k: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }
}

/// Series interconnection: `a(s) * b(s)` as rational functions.
pub fn tf_series(a: &TransferFunction, b: &TransferFunction) -> TransferFunction {
    TransferFunction {
        num: a.num.mul(&b.num),
        den: a.den.mul(&b.den),
    }
}

/// Negative-feedback interconnection:
/// `forward / (1 + forward * feedback_path)` as a single rational function.
pub fn tf_feedback(
    forward: &TransferFunction,
    feedback_path: &TransferFunction,
) -> Result<TransferFunction> {
    let num = forward.num.mul(&feedback_path.den);
    let den = forward
        .den
        .mul(&feedback_path.den)
        .add(&forward.num.mul(&feedback_path.num));
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    TransferFunction::new(num, den)
}
