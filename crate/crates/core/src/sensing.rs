use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::TransferFunction;

/// First-order low-pass filter coefficients for the difference equation
/// `y[k] = b*u[k] + b*u[k-1] - a*y[k-1]` with
/// `a = (T - 2*T_f)/(T + 2*T_f)` and `b = T/(T + 2*T_f)`.
///
/// `|a| < 1` holds for any positive `T`, `T_f`, so the filter is always
/// stable, with DC gain 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpfConfig {
    pub t_f: f64,
    pub t_sample: f64,
}

impl LpfConfig {
    pub fn new(t_f: f64, t_sample: f64) -> Result<Self> {
        if !(t_f > 0.0) {
            return Err(Error::InvalidInput(format!("t_f must be > 0, got {t_f}")));
        }
        if !(t_sample > 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_sample must be > 0, got {t_sample}"
            )));
        }
        Ok(Self { t_f, t_sample })
    }

    pub fn a(&self) -> f64 {
        (self.t_sample - 2.0 * self.t_f) / (self.t_sample + 2.0 * self.t_f)
    }

    pub fn b(&self) -> f64 {
        self.t_sample / (self.t_sample + 2.0 * self.t_f)
    }
}

/// Stateful spend-velocity low-pass filter; one per pacing cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPassFilter {
    pub cfg: LpfConfig,
    u_prev: f64,
    y_prev: f64,
}

impl LowPassFilter {
    pub fn new(cfg: LpfConfig) -> Self {
        Self { cfg, u_prev: 0.0, y_prev: 0.0 }
    }

    /// Set the state to a known operating value; the filter output then
    /// starts at `v` for a constant input `v` (DC gain is exactly 1).
    pub fn preload(&mut self, v: f64) {
        self.u_prev = v;
        self.y_prev = v;
    }

    pub fn output(&self) -> f64 {
        self.y_prev
    }

    /// One filter update. Non-finite inputs are rejected without advancing.
    pub fn step(&mut self, u_k: f64) -> Result<f64> {
        if !u_k.is_finite() {
            return Err(Error::NonFiniteInput(u_k));
        }
        let a = self.cfg.a();
        let b = self.cfg.b();
        let y = b * u_k + b * self.u_prev - a * self.y_prev;
        self.u_prev = u_k;
        self.y_prev = y;
        Ok(y)
    }
}

/// Exponential smoother `y[k] = beta*u[k] + (1 - beta)*y[k-1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmootherConfig {
    pub beta: f64,
    pub t_sample: f64,
}

impl SmootherConfig {
    pub fn new(beta: f64, t_sample: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "beta must be in (0, 1], got {beta}"
            )));
        }
        if !(t_sample > 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_sample must be > 0, got {t_sample}"
            )));
        }
        Ok(Self { beta, t_sample })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Smoother {
    pub cfg: SmootherConfig,
    y_prev: f64,
}

impl Smoother {
    pub fn new(cfg: SmootherConfig) -> Self {
        Self { cfg, y_prev: 0.0 }
    }

    pub fn preload(&mut self, v: f64) {
        self.y_prev = v;
    }

    pub fn step(&mut self, u_k: f64) -> Result<f64> {
        if !u_k.is_finite() {
            return Err(Error::NonFiniteInput(u_k));
        }
        let y = self.cfg.beta * u_k + (1.0 - self.cfg.beta) * self.y_prev;
        self.y_prev = y;
        Ok(y)
    }
}

/// Laplace-domain transfer function of the exponential smoother:
/// `H(s) = beta*(1 + 0.5*s*T) / ((1 - 0.5*beta)*s*T + beta)`.
/// DC gain is 1 for every beta.
pub fn smoother_to_laplace(cfg: &SmootherConfig) -> TransferFunction {
    let beta = cfg.beta;
    let t = cfg.t_sample;
    TransferFunction {
        num: Polynomial::new([beta, 0.5 * beta * t]),
        den: Polynomial::new([beta, (1.0 - 0.5 * beta) * t]),
    }
}

/// Irregularly-sampled spend-velocity observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub timestamps: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampleStream {
    pub fn new(timestamps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::InvalidInput(
                "timestamps and values must have equal length".into(),
            ));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("timestamps must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("values must be finite and >= 0".into()));
        }
        Ok(Self { timestamps, values })
    }
}

/// Quantize an irregular stream onto a uniform grid: the sampling period is
/// the median of successive timestamp differences (lower-middle element for
/// an even count, so the period is always an observed interval), and values
/// are linearly interpolated onto the grid spanning [first, last].
pub fn regularize(stream: &SampleStream) -> Result<(f64, Vec<f64>)> {
    let ts = &stream.timestamps;
    if ts.len() < 2 {
        return Err(Error::InvalidInput("regularize needs at least 2 samples".into()));
    }
    let mut intervals: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t_sample = intervals[(intervals.len() - 1) / 2];

    let span = ts[ts.len() - 1] - ts[0];
    let n = (span / t_sample + 1e-9).floor() as usize + 1;
    let mut values = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = ts[0] + k as f64 * t_sample;
        while j + 2 < ts.len() && ts[j + 1] < t {
            j += 1;
        }
        let (t0, t1) = (ts[j], ts[j + 1]);
        let (v0, v1) = (stream.values[j], stream.values[j + 1]);
        let frac = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        values.push(v0 + frac * (v1 - v0));
    }
    Ok((t_sample, values))
}
