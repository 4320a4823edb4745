use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const SECONDS_PER_DAY: f64 = 86400.0;

/// Uniformly sampled ad-request intensity curve, normalized so the day's
/// intensities sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficCurve {
    /// Sample spacing in seconds.
    pub resolution_s: f64,
    /// Non-negative intensities, one per sample, summing to 1.
    pub intensities: Vec<f64>,
}

impl TrafficCurve {
    /// Normalizes the given samples; rejects negatives and empty input.
    pub fn from_intensities(resolution_s: f64, raw: Vec<f64>) -> Result<Self> {
        if !(resolution_s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "resolution must be > 0, got {resolution_s}"
            )));
        }
        if raw.is_empty() {
            return Err(Error::InvalidInput("traffic curve must be nonempty".into()));
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("intensities must be finite and >= 0".into()));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("intensities must not all be zero".into()));
        }
        Ok(Self {
            resolution_s,
            intensities: raw.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Flat curve: every sample carries the same share.
    pub fn uniform(resolution_s: f64, horizon_s: f64) -> Result<Self> {
        let n = (horizon_s / resolution_s).round() as usize;
        Self::from_intensities(resolution_s, vec![1.0; n.max(1)])
    }

    /// Synthetic diurnal profile: daily fundamental plus harmonics with 1/k
    /// amplitude decay up to `harmonics` (8 by default puts the spectral
    /// ceiling at 8/86400 ~ 9.3e-5 Hz), floor-shifted positive and
    /// normalized. Peak lands at `peak_time_s` into the day.
    pub fn synthetic_diurnal(resolution_s: f64, horizon_s: f64, harmonics: u32) -> Result<Self> {
        let n = (horizon_s / resolution_s).round() as usize;
        if n < 2 {
            return Err(Error::InvalidInput("horizon too short for a traffic curve".into()));
        }
        let peak_time_s = 54000.0; // mid-afternoon
        let mut raw = vec![0.0; n];
        for (k, r) in raw.iter_mut().enumerate() {
            let t = k as f64 * resolution_s;
            let mut v = 0.0;
            for h in 1..=harmonics {
                let w = 2.0 * std::f64::consts::PI * h as f64 / SECONDS_PER_DAY;
                v += (w * (t - peak_time_s)).cos() / h as f64;
            }
            *r = v;
        }
        let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = 0.10 * (hi - lo);
        for r in &mut raw {
            *r = *r - lo + floor;
        }
        Self::from_intensities(resolution_s, raw)
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn horizon_s(&self) -> f64 {
        self.resolution_s * self.intensities.len() as f64
    }

    /// Sample index covering time `t` (clamped to the last sample).
    pub fn bucket_at(&self, t_s: f64) -> usize {
        ((t_s / self.resolution_s) as usize).min(self.intensities.len() - 1)
    }

    /// Suffix sums: `remaining[i] = sum(intensities[i..])`.
    pub fn remaining_from(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.intensities.len() + 1];
        for i in (0..self.intensities.len()).rev() {
            out[i] = out[i + 1] + self.intensities[i];
        }
        out
    }

    pub fn min_max(&self) -> (f64, f64) {
        let lo = self.intensities.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.intensities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// One-sided magnitude spectrum of a traffic curve.
#[derive(Debug, Clone)]
pub struct TrafficSpectrum {
    /// Bin frequencies in Hz (positive half, DC excluded).
    pub freqs_hz: Vec<f64>,
    /// Bin magnitudes of the mean-removed intensity sequence.
    pub magnitudes: Vec<f64>,
    /// Highest frequency whose magnitude exceeds the significance threshold.
    pub max_significant_hz: Option<f64>,
}

/// Magnitude spectrum of the mean-removed intensity sequence via FFT.
///
/// The significant set contains bins whose magnitude exceeds
/// `threshold_frac` of the peak magnitude (1% by default); a constant curve
/// has no significant bins because all its energy sits at the removed DC.
pub fn traffic_fft(curve: &TrafficCurve, threshold_frac: f64) -> Result<TrafficSpectrum> {
    let n = curve.intensities.len();
    if n < 16 {
        return Err(Error::InvalidInput(format!(
            "FFT needs at least 16 samples, got {n}"
        )));
    }
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::InvalidInput(format!(
            "threshold_frac must be in (0, 1), got {threshold_frac}"
        )));
    }
    let mean = curve.intensities.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = curve
        .intensities
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bin_hz = 1.0 / (curve.resolution_s * n as f64);
    let half = n / 2;
    let mut freqs_hz = Vec::with_capacity(half);
    let mut magnitudes = Vec::with_capacity(half);
    for k in 1..=half {
        freqs_hz.push(k as f64 * bin_hz);
        magnitudes.push(buf[k].norm());
    }
    // intensities sum to 1, so anything at round-off scale is no signal
    let peak = magnitudes.iter().cloned().fold(0.0, f64::max);
    let max_significant_hz = if peak > 1e-12 {
        let cut = threshold_frac * peak;
        freqs_hz
            .iter()
            .zip(&magnitudes)
            .filter(|(_, &m)| m > cut)
            .map(|(&f, _)| f)
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))
    } else {
        None
    };
    Ok(TrafficSpectrum { freqs_hz, magnitudes, max_significant_hz })
}
