use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::TransferFunction;

/// One point of a frequency sweep. Phases are unwrapped across the sweep:
/// consecutive samples differ by less than 180 degrees.
#[derive(Debug, Clone)]
pub struct FrequencyResponseSample {
    pub freq_hz: f64,
    pub magnitude_db: f64,
    /// Unwrapped phase in degrees.
    pub phase_deg: f64,
    pub complex_value: Complex64,
}

/// Log-spaced sweep settings for margin and bandwidth searches.
///
/// `f_max_hz = None` extends the sweep to 10x the Nyquist frequency of the
/// pacing interval: this plant family crosses unity gain and -180 degrees
/// in the band above Nyquist, so capping the search there would miss the
/// margins entirely. Crossovers found above Nyquist are flagged aliased in
/// the report.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub f_min_hz: f64,
    pub f_max_hz: Option<f64>,
    pub points_per_decade: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { f_min_hz: 1e-7, f_max_hz: None, points_per_decade: 600 }
    }
}

impl SweepConfig {
    pub fn resolve_max(&self, nyquist_hz: f64) -> f64 {
        self.f_max_hz.unwrap_or(10.0 * nyquist_hz)
    }
}

/// Gain margin, phase margin, cutoff gain, and closed-loop bandwidth for one
/// open-loop configuration. Missing crossovers leave the corresponding margin
/// absent; an absent gain margin means the margin is infinite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub gm_db: Option<f64>,
    pub pm_deg: Option<f64>,
    /// Closed-loop magnitude in dB at the highest traffic-spectrum frequency.
    pub cog_db: f64,
    /// Frequency where the closed-loop gain falls 3 dB below its DC value.
    pub clbw_hz: Option<f64>,
    pub gain_crossover_hz: Option<f64>,
    pub phase_crossover_hz: Option<f64>,
    pub nyquist_hz: f64,
    /// All unity-gain crossings found in the sweep, lowest first.
    #[serde(skip)]
    pub gain_crossovers_hz: Vec<f64>,
    /// All -180 degree crossings found in the sweep, lowest first.
    #[serde(skip)]
    pub phase_crossovers_hz: Vec<f64>,
}

impl StabilityReport {
    /// Gain margin with "no phase crossover" read as an infinite margin.
    pub fn gm_db_or_inf(&self) -> f64 {
        self.gm_db.unwrap_or(f64::INFINITY)
    }

    /// Phase margin with "no gain crossover" read as an infinite margin.
    pub fn pm_deg_or_inf(&self) -> f64 {
        self.pm_deg.unwrap_or(f64::INFINITY)
    }

    /// True when the reported gain crossover lies above Nyquist.
    pub fn gain_crossover_aliased(&self) -> bool {
        self.gain_crossover_hz.map_or(false, |f| f > self.nyquist_hz)
    }

    /// True when the reported phase crossover lies above Nyquist.
    pub fn phase_crossover_aliased(&self) -> bool {
        self.phase_crossover_hz.map_or(false, |f| f > self.nyquist_hz)
    }

    /// Both margins positive (missing margin counts as infinite).
    pub fn is_stable(&self) -> bool {
        self.gm_db_or_inf() > 0.0 && self.pm_deg_or_inf() > 0.0
    }
}

/// Log-spaced grid from `f_min` to `f_max` at the given density.
pub fn log_spaced(f_min: f64, f_max: f64, points_per_decade: usize) -> Vec<f64> {
    let lo = f_min.log10();
    let hi = f_max.log10();
    let n = ((hi - lo) * points_per_decade as f64).ceil() as usize + 1;
    let n = n.max(2);
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

fn unwrap_into(prev_deg: f64, raw_deg: f64) -> f64 {
    let k = ((prev_deg - raw_deg) / 360.0).round();
    raw_deg + 360.0 * k
}

/// Evaluate `tf` at `s = j*2*pi*f` for each frequency; phases unwrapped
/// across the sweep. Frequencies must be strictly increasing and positive.
pub fn freq_response(
    tf: &TransferFunction,
    freqs_hz: &[f64],
) -> Result<Vec<FrequencyResponseSample>> {
    if freqs_hz.is_empty() {
        return Err(Error::InvalidInput("empty frequency sweep".into()));
    }
    if freqs_hz[0] <= 0.0 || freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "frequencies must be strictly increasing and > 0".into(),
        ));
    }
    let mut out = Vec::with_capacity(freqs_hz.len());
    let mut prev_phase: Option<f64> = None;
    for &f in freqs_hz {
        let v = tf.eval_at_hz(f)?;
        let raw = v.arg().to_degrees();
        let phase = match prev_phase {
            None => raw,
            Some(p) => unwrap_into(p, raw),
        };
        prev_phase = Some(phase);
        out.push(FrequencyResponseSample {
            freq_hz: f,
            magnitude_db: 20.0 * v.norm().log10(),
            phase_deg: phase,
            complex_value: v,
        });
    }
    Ok(out)
}

const BISECT_REL_TOL: f64 = 1e-6;

/// Bisect in log-frequency for a sign change of `g`, assuming
/// `g(f_lo)` and `g(f_hi)` bracket a root.
fn bisect_log<F: Fn(f64) -> f64>(g: F, mut f_lo: f64, mut f_hi: f64) -> f64 {
    let mut g_lo = g(f_lo);
    while f_hi / f_lo - 1.0 > BISECT_REL_TOL {
        let f_mid = (f_lo * f_hi).sqrt();
        let g_mid = g(f_mid);
        if g_lo * g_mid <= 0.0 {
            f_hi = f_mid;
        } else {
            f_lo = f_mid;
            g_lo = g_mid;
        }
    }
    (f_lo * f_hi).sqrt()
}

/// Unwrapped phase of `tf` at `f`, anchored to the sweep sample at `anchor`.
fn phase_at(tf: &TransferFunction, f: f64, anchor_phase_deg: f64) -> f64 {
    let raw = tf.eval(Complex64::new(0.0, 2.0 * std::f64::consts::PI * f)).arg().to_degrees();
    unwrap_into(anchor_phase_deg, raw)
}

fn mag_db_at(tf: &TransferFunction, f: f64) -> f64 {
    20.0 * tf.eval(Complex64::new(0.0, 2.0 * std::f64::consts::PI * f)).norm().log10()
}

/// Locate Bode margins and closed-loop dynamics measurements.
///
/// Gain/phase crossovers are located by sign-change bracketing on the
/// log-spaced sweep followed by bisection to relative frequency tolerance
/// 1e-6. Margins are reported at the lowest-frequency crossover of each
/// kind; every crossing found is kept in the diagnostic lists.
pub fn stability_report(
    open_loop: &TransferFunction,
    closed_loop: &TransferFunction,
    t_ps: f64,
    f_traffic_max: f64,
) -> Result<StabilityReport> {
    stability_report_with_sweep(open_loop, closed_loop, t_ps, f_traffic_max, &SweepConfig::default())
}

pub fn stability_report_with_sweep(
    open_loop: &TransferFunction,
    closed_loop: &TransferFunction,
    t_ps: f64,
    f_traffic_max: f64,
    sweep: &SweepConfig,
) -> Result<StabilityReport> {
    if !(t_ps > 0.0) {
        return Err(Error::InvalidInput(format!("t_ps must be > 0, got {t_ps}")));
    }
    if !(f_traffic_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "f_traffic_max must be > 0, got {f_traffic_max}"
        )));
    }
    let nyquist_hz = 1.0 / (2.0 * t_ps);
    let freqs = log_spaced(sweep.f_min_hz, sweep.resolve_max(nyquist_hz), sweep.points_per_decade);
    let resp = freq_response(open_loop, &freqs)?;

    let mut gain_crossovers = Vec::new();
    let mut phase_crossovers = Vec::new();
    let mut pm_deg = None;
    for w in resp.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.magnitude_db == 0.0 || a.magnitude_db * b.magnitude_db < 0.0 {
            let f = if a.magnitude_db == 0.0 {
                a.freq_hz
            } else {
                bisect_log(|f| mag_db_at(open_loop, f), a.freq_hz, b.freq_hz)
            };
            if pm_deg.is_none() {
                pm_deg = Some(180.0 + phase_at(open_loop, f, a.phase_deg));
            }
            gain_crossovers.push(f);
        }
        let (pa, pb) = (a.phase_deg + 180.0, b.phase_deg + 180.0);
        if pa == 0.0 || pa * pb < 0.0 {
            let f = if pa == 0.0 {
                a.freq_hz
            } else {
                // bisect on phase, unwrapping each probe against the left anchor
                let anchor = a.phase_deg;
                bisect_log(|f| phase_at(open_loop, f, anchor) + 180.0, a.freq_hz, b.freq_hz)
            };
            phase_crossovers.push(f);
        }
    }
    let gm_db = phase_crossovers.first().map(|&f| -mag_db_at(open_loop, f));

    // Closed-loop bandwidth: first -3 dB crossing below the DC gain.
    let dc_db = 20.0 * closed_loop.dc_gain().abs().log10();
    let target = dc_db - 20.0 * 2f64.sqrt().log10();
    let cl_resp = freq_response(closed_loop, &freqs)?;
    let mut clbw_hz = None;
    for w in cl_resp.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.magnitude_db - target) * (b.magnitude_db - target) < 0.0 {
            clbw_hz = Some(bisect_log(
                |f| mag_db_at(closed_loop, f) - target,
                a.freq_hz,
                b.freq_hz,
            ));
            break;
        }
    }
    let cog_db = 20.0 * closed_loop.eval_at_hz(f_traffic_max)?.norm().log10();

    Ok(StabilityReport {
        gm_db,
        pm_deg,
        cog_db,
        clbw_hz,
        gain_crossover_hz: gain_crossovers.first().copied(),
        phase_crossover_hz: phase_crossovers.first().copied(),
        nyquist_hz,
        gain_crossovers_hz: gain_crossovers,
        phase_crossovers_hz: phase_crossovers,
    })
}
