use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::TransferFunction;

/// Discrete transfer function in powers of `z^-1`:
/// `num_z[k]` and `den_z[k]` multiply `z^-k`. `den_z[0]` must be nonzero
/// (causal, normalizable).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTransferFunction {
    pub num_z: Vec<f64>,
    pub den_z: Vec<f64>,
    /// Sampling period in seconds.
    pub t_z: f64,
}

impl DiscreteTransferFunction {
    pub fn new(num_z: Vec<f64>, den_z: Vec<f64>, t_z: f64) -> Result<Self> {
        if !(t_z > 0.0) {
            return Err(Error::InvalidInput(format!("t_z must be > 0, got {t_z}")));
        }
        if den_z.first().map_or(true, |&d| d == 0.0) {
            return Err(Error::InvalidInput(
                "den_z[0] must be nonzero for a causal filter".into(),
            ));
        }
        Ok(Self { num_z, den_z, t_z })
    }

    /// Evaluate at a point of the z-plane.
    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        let zi = 1.0 / z;
        let horner = |c: &[f64]| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * zi + v);
        horner(&self.num_z) / horner(&self.den_z)
    }

    /// Evaluate on the unit circle at `z = e^{j*2*pi*f*t_z}`.
    pub fn eval_at_hz(&self, freq_hz: f64) -> Complex64 {
        let theta = 2.0 * std::f64::consts::PI * freq_hz * self.t_z;
        self.eval_z(Complex64::from_polar(1.0, theta))
    }
}

// (1 +- z^-1)^n as coefficients in z^-1
fn binom_pow(sign: f64, n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; out.len() + 1];
        for (i, &c) in out.iter().enumerate() {
            next[i] += c;
            next[i + 1] += sign * c;
        }
        out = next;
    }
    out
}

fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Tustin (bilinear) transform: substitutes `s = (2/t_z)*(1 - z^-1)/(1 + z^-1)`
/// into `tf_s` and clears denominators to polynomial form in `z^-1`.
///
/// No frequency pre-warping is applied. DC gain is preserved exactly:
/// `tf_s(0)` equals the result at `z = 1`. Improper transfer functions are
/// rejected (they would be non-causal after substitution).
pub fn tustin(tf_s: &TransferFunction, t_z: f64) -> Result<DiscreteTransferFunction> {
    if !(t_z > 0.0) {
        return Err(Error::InvalidInput(format!("t_z must be > 0, got {t_z}")));
    }
    let n_deg = tf_s.num.degree();
    let d_deg = tf_s.den.degree();
    if n_deg > d_deg {
        return Err(Error::ImproperTransferFunction { num: n_deg, den: d_deg });
    }
    let d = d_deg;
    let c = 2.0 / t_z;
    let expand = |poly: &Polynomial| -> Vec<f64> {
        let mut acc = vec![0.0; d + 1];
        for (k, &coeff) in poly.coeffs().iter().enumerate() {
            // coeff * c^k * (1 - z^-1)^k * (1 + z^-1)^(d-k)
            let term = conv(&binom_pow(-1.0, k), &binom_pow(1.0, d - k));
            let scale = coeff * c.powi(k as i32);
            for (i, &t) in term.iter().enumerate() {
                acc[i] += scale * t;
            }
        }
        acc
    };
    DiscreteTransferFunction::new(expand(&tf_s.num), expand(&tf_s.den), t_z)
}

/// Inverse Tustin map: substitutes `z = (1 + 0.5*s*t_z)/(1 - 0.5*s*t_z)`
/// (so `z^-1 = (1 - 0.5*s*t_z)/(1 + 0.5*s*t_z)`) and clears denominators.
///
/// The round trip `tustin` then `inverse_tustin` reproduces the original
/// rational function up to a common scalar factor.
pub fn inverse_tustin(dtf: &DiscreteTransferFunction) -> Result<TransferFunction> {
    let d = dtf.num_z.len().max(dtf.den_z.len()) - 1;
    let half_t = 0.5 * dtf.t_z;
    let expand = |c: &[f64]| -> Polynomial {
        let mut acc = vec![0.0; d + 1];
        for (k, &coeff) in c.iter().enumerate() {
            // coeff * (1 - 0.5*T*s)^k * (1 + 0.5*T*s)^(d-k), in powers of s
            let term = conv(&binom_pow(-half_t, k), &binom_pow(half_t, d - k));
            for (i, &t) in term.iter().enumerate() {
                acc[i] += coeff * t;
            }
        }
        Polynomial::new(acc)
    };
    TransferFunction::new(expand(&dtf.num_z), expand(&dtf.den_z))
}

/// Executable difference equation
/// `y[k] = sum_i a_i*y[k-i] + sum_i b_i*u[k-i]`
/// with memorized input/output history.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceFilter {
    /// Output-history coefficients `a_1..a_m`.
    a: Vec<f64>,
    /// Input coefficients `b_0..b_n`.
    b: Vec<f64>,
    /// `u[k-1], u[k-2], ...`
    u_hist: Vec<f64>,
    /// `y[k-1], y[k-2], ...`
    y_hist: Vec<f64>,
    t_z: f64,
}

impl RecurrenceFilter {
    pub fn new(a: Vec<f64>, b: Vec<f64>, t_z: f64) -> Result<Self> {
        if !(t_z > 0.0) {
            return Err(Error::InvalidInput(format!("t_z must be > 0, got {t_z}")));
        }
        if b.is_empty() {
            return Err(Error::InvalidInput("b coefficients must be nonempty".into()));
        }
        let m = a.len();
        let n = b.len().saturating_sub(1);
        Ok(Self { u_hist: vec![0.0; n], y_hist: vec![0.0; m], a, b, t_z })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn t_z(&self) -> f64 {
        self.t_z
    }

    /// Preload the output history with a known operating point and zero the
    /// input history (used to resume a controller mid-stream).
    pub fn preload(&mut self, y0: f64) {
        for y in &mut self.y_hist {
            *y = y0;
        }
        for u in &mut self.u_hist {
            *u = 0.0;
        }
    }

    pub fn reset(&mut self) {
        self.preload(0.0);
    }

    /// Advance one step: returns `y[k]` and shifts the histories.
    /// Non-finite inputs are rejected without advancing state.
    pub fn step(&mut self, u_k: f64) -> Result<f64> {
        if !u_k.is_finite() {
            return Err(Error::NonFiniteInput(u_k));
        }
        let mut y = self.b[0] * u_k;
        for (i, &bi) in self.b.iter().enumerate().skip(1) {
            y += bi * self.u_hist[i - 1];
        }
        for (i, &ai) in self.a.iter().enumerate() {
            y += ai * self.y_hist[i];
        }
        if !self.u_hist.is_empty() {
            self.u_hist.rotate_right(1);
            self.u_hist[0] = u_k;
        }
        if !self.y_hist.is_empty() {
            self.y_hist.rotate_right(1);
            self.y_hist[0] = y;
        }
        Ok(y)
    }

    /// Steady-state gain for a constant input: `sum(b) / (1 - sum(a))`.
    pub fn dc_gain(&self) -> f64 {
        let sb: f64 = self.b.iter().sum();
        let sa: f64 = self.a.iter().sum();
        sb / (1.0 - sa)
    }
}

/// Extract the recurrence relation from a discrete transfer function:
/// normalizes `den_z[0]` to one, then `a_i = -den_z[i]`, `b_i = num_z[i]`,
/// with fresh zeroed history.
pub fn to_recurrence(dtf: &DiscreteTransferFunction) -> Result<RecurrenceFilter> {
    let d0 = dtf.den_z[0];
    let a: Vec<f64> = dtf.den_z.iter().skip(1).map(|&c| -c / d0).collect();
    let b: Vec<f64> = dtf.num_z.iter().map(|&c| c / d0).collect();
    RecurrenceFilter::new(a, b, dtf.t_z)
}

/// Serialized coefficient set for deployment hand-off:
/// `{"t_z": ..., "a": [...], "b": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCoefficients {
    pub t_z: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl From<&RecurrenceFilter> for RecurrenceCoefficients {
    fn from(f: &RecurrenceFilter) -> Self {
        Self { t_z: f.t_z, a: f.a.clone(), b: f.b.clone() }
    }
}

impl RecurrenceCoefficients {
    pub fn into_filter(self) -> Result<RecurrenceFilter> {
        RecurrenceFilter::new(self.a, self.b, self.t_z)
    }
}
