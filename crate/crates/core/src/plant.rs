use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::{tf_feedback, tf_series, TransferFunction};

/// Parameters of the modeled spend plant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    /// Plant gain in $/(lambda * minute): incremental spend velocity per unit lambda.
    pub w_n: f64,
    /// Pacing interval in seconds (ZOH hold period).
    pub t_ps: f64,
    /// Sensing low-pass filter time constant in seconds.
    pub t_f: f64,
    /// Highest Taylor index kept when approximating `e^{-s*T_ps}`.
    pub taylor_order: u32,
}

impl PlantParams {
    pub const DEFAULT_TAYLOR_ORDER: u32 = 10;

    pub fn new(w_n: f64, t_ps: f64, t_f: f64) -> Result<Self> {
        Self::with_taylor_order(w_n, t_ps, t_f, Self::DEFAULT_TAYLOR_ORDER)
    }

    pub fn with_taylor_order(w_n: f64, t_ps: f64, t_f: f64, taylor_order: u32) -> Result<Self> {
        if !(w_n > 0.0) {
            return Err(Error::InvalidInput(format!("w_n must be > 0, got {w_n}")));
        }
        if !(t_ps > 0.0) {
            return Err(Error::InvalidInput(format!("t_ps must be > 0, got {t_ps}")));
        }
        if !(t_f > 0.0) {
            return Err(Error::InvalidInput(format!("t_f must be > 0, got {t_f}")));
        }
        if taylor_order < 2 {
            return Err(Error::InvalidInput(format!(
                "taylor_order must be >= 2, got {taylor_order}"
            )));
        }
        Ok(Self { w_n, t_ps, t_f, taylor_order })
    }

    /// Nyquist frequency of the pacing interval, 1/(2*t_ps) Hz.
    pub fn nyquist_hz(&self) -> f64 {
        1.0 / (2.0 * self.t_ps)
    }

    /// Same plant with a different gain; everything else unchanged.
    pub fn with_w_n(&self, w_n: f64) -> Result<Self> {
        Self::with_taylor_order(w_n, self.t_ps, self.t_f, self.taylor_order)
    }
}

/// Polynomial approximation of the zero-order hold `(1 - e^{-s*T_ps})/s`.
///
/// Substituting the Taylor series of `e^{-s*T_ps}` truncated at `taylor_order`
/// cancels the constant term, so the division by `s` is exact:
/// coefficient of `s^k` is `-(-T_ps)^(k+1)/(k+1)!`. The DC value is `t_ps`.
pub fn zoh_tf(t_ps: f64, taylor_order: u32) -> Result<TransferFunction> {
    if !(t_ps > 0.0) {
        return Err(Error::InvalidInput(format!("t_ps must be > 0, got {t_ps}")));
    }
    if taylor_order < 2 {
        return Err(Error::InvalidInput(format!(
            "taylor_order must be >= 2, got {taylor_order}"
        )));
    }
    let mut coeffs = Vec::with_capacity(taylor_order as usize);
    // c_k = -(-T)^(k+1)/(k+1)!, built incrementally to avoid factorial overflow
    let mut term = t_ps; // k = 0: T
    coeffs.push(term);
    for k in 1..taylor_order as usize {
        term *= -t_ps / (k as f64 + 1.0);
        coeffs.push(term);
    }
    TransferFunction::new(Polynomial::new(coeffs), Polynomial::one())
}

/// First-order sensing filter `1/(1 + s*t_f)`.
pub fn lpf_tf(t_f: f64) -> Result<TransferFunction> {
    if !(t_f > 0.0) {
        return Err(Error::InvalidInput(format!("t_f must be > 0, got {t_f}")));
    }
    TransferFunction::new(Polynomial::one(), Polynomial::new([1.0, t_f]))
}

/// Uncompensated open loop `ZOH * G * H` as one rational function.
/// DC gain equals `w_n * t_ps`.
pub fn plant_open_loop(p: &PlantParams) -> Result<TransferFunction> {
    let zoh = zoh_tf(p.t_ps, p.taylor_order)?;
    let gained = zoh.scale(p.w_n);
    Ok(tf_series(&gained, &lpf_tf(p.t_f)?))
}

/// Compensated open loop `Gc * ZOH * G * H`.
pub fn compensated_open_loop(gc: &TransferFunction, p: &PlantParams) -> Result<TransferFunction> {
    Ok(tf_series(gc, &plant_open_loop(p)?))
}

/// Reference-to-spend tracking closed loop
/// `T(s) = Gc*ZOH*G / (1 + Gc*ZOH*G*H)`.
pub fn closed_loop_tracking(gc: &TransferFunction, p: &PlantParams) -> Result<TransferFunction> {
    let forward = tf_series(gc, &zoh_tf(p.t_ps, p.taylor_order)?.scale(p.w_n));
    tf_feedback(&forward, &lpf_tf(p.t_f)?)
}
