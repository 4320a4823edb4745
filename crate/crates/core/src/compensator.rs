use serde::{Deserialize, Serialize};

use crate::bode::{stability_report_with_sweep, StabilityReport, SweepConfig};
use crate::error::{Error, Result};
use crate::plant::{closed_loop_tracking, compensated_open_loop, PlantParams};
use crate::poly::Polynomial;
use crate::tf::TransferFunction;

/// Smallest lambda the runtime ever emits; keeps the controller alive while
/// honoring the half-open output range (0, 1].
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// PID gains. `k_i` is per second, `k_d` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidSpec {
    pub k_p: f64,
    pub k_i: f64,
    #[serde(default)]
    pub k_d: f64,
}

impl PidSpec {
    pub fn pi(k_p: f64, k_i: f64) -> Self {
        Self { k_p, k_i, k_d: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_p < 0.0 || self.k_i < 0.0 || self.k_d < 0.0 {
            return Err(Error::InvalidInput("PID gains must be non-negative".into()));
        }
        if self.k_p == 0.0 && self.k_i == 0.0 && self.k_d == 0.0 {
            return Err(Error::InvalidInput("PID gains must not all be zero".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { k_p: self.k_p * c, k_i: self.k_i * c, k_d: self.k_d * c }
    }
}

/// Zero-pole-gain compensator description. Zeros and poles are written as
/// positive corner frequencies in rad/s (left-half-plane factors
/// `s/z + 1` and `s/p + 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoleSpec {
    pub k_c: f64,
    pub zeros: Vec<f64>,
    pub poles: Vec<f64>,
}

impl ZeroPoleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_c > 0.0) {
            return Err(Error::InvalidInput("k_c must be > 0".into()));
        }
        if self.zeros.iter().chain(self.poles.iter()).any(|&w| w <= 0.0) {
            return Err(Error::InvalidInput(
                "zero/pole corner frequencies must be > 0 rad/s".into(),
            ));
        }
        Ok(())
    }
}

/// `Gc(s) = (K_d*s^2 + K_p*s + K_i)/s`.
pub fn pid_tf(spec: &PidSpec) -> Result<TransferFunction> {
    spec.validate()?;
    TransferFunction::new(
        Polynomial::new([spec.k_i, spec.k_p, spec.k_d]),
        Polynomial::new([0.0, 1.0]),
    )
}

/// Expands `K_c * prod(s/z_i + 1) / prod(s/p_i + 1)` into a rational
/// transfer function. DC gain equals `K_c`.
pub fn zero_pole_tf(spec: &ZeroPoleSpec) -> Result<TransferFunction> {
    spec.validate()?;
    let mut num = Polynomial::constant(spec.k_c);
    for &z in &spec.zeros {
        num = num.mul(&Polynomial::new([1.0, 1.0 / z]));
    }
    let mut den = Polynomial::one();
    for &p in &spec.poles {
        den = den.mul(&Polynomial::new([1.0, 1.0 / p]));
    }
    TransferFunction::new(num, den)
}

/// Either compensator family, convertible to a transfer function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompensatorSpec {
    Pid(PidSpec),
    ZeroPole(ZeroPoleSpec),
}

impl CompensatorSpec {
    pub fn to_tf(&self) -> Result<TransferFunction> {
        match self {
            CompensatorSpec::Pid(s) => pid_tf(s),
            CompensatorSpec::ZeroPole(s) => zero_pole_tf(s),
        }
    }
}

/// Live anti-windup PI state: one per pacing cohort.
///
/// The integrator is conditionally activated: it only accumulates while the
/// lumped output sits strictly inside (0, 1), and is clamped to
/// `integrator_bounds` afterwards. The emitted lambda is clamped to
/// `(LAMBDA_FLOOR, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiController {
    pub k_p: f64,
    pub k_i: f64,
    pub integrator: f64,
    pub last_lambda: f64,
    pub integrator_bounds: (f64, f64),
}

impl PiController {
    pub fn new(k_p: f64, k_i: f64) -> Self {
        Self {
            k_p,
            k_i,
            integrator: 0.0,
            last_lambda: LAMBDA_FLOOR,
            integrator_bounds: (0.0, 0.5),
        }
    }

    /// Preload the integrator with a known operating lambda (clamped to the
    /// integrator bounds) so the loop resumes near equilibrium.
    pub fn with_preload(mut self, lambda0: f64) -> Self {
        self.integrator = lambda0.clamp(self.integrator_bounds.0, self.integrator_bounds.1);
        self.last_lambda = lambda0.clamp(LAMBDA_FLOOR, 1.0);
        self
    }

    /// One control update. `error` is in $/minute, `dt` in seconds.
    /// Returns the emitted lambda. Non-finite errors are rejected with the
    /// state unchanged.
    pub fn step(&mut self, error: f64, dt: f64) -> Result<f64> {
        if !error.is_finite() {
            return Err(Error::NonFiniteInput(error));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
        }
        let lumped = self.k_p * error + self.integrator;
        if lumped > 0.0 && lumped < 1.0 {
            self.integrator = (self.integrator + self.k_i * error * dt)
                .clamp(self.integrator_bounds.0, self.integrator_bounds.1);
        }
        let lambda = lumped.clamp(LAMBDA_FLOOR, 1.0);
        self.last_lambda = lambda;
        Ok(lambda)
    }
}

/// One grid-search cell: the PI gains, the stability reports at both plant
/// gain extremes, and feasibility (positive GM and PM at max W_n).
#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub k_p: f64,
    pub k_i: f64,
    pub report_max_wn: StabilityReport,
    pub report_min_wn: StabilityReport,
    pub feasible: bool,
}

/// Reports for an arbitrary compensator at both plant gain extremes.
pub fn evaluate_compensator(
    gc: &TransferFunction,
    plant_max: &PlantParams,
    plant_min: &PlantParams,
    f_traffic_max: f64,
    sweep: &SweepConfig,
) -> Result<(StabilityReport, StabilityReport, bool)> {
    let report = |p: &PlantParams| -> Result<StabilityReport> {
        let open = compensated_open_loop(gc, p)?;
        let closed = closed_loop_tracking(gc, p)?;
        stability_report_with_sweep(&open, &closed, p.t_ps, f_traffic_max, sweep)
    };
    let rmax = report(plant_max)?;
    let rmin = report(plant_min)?;
    let feasible = rmax.is_stable();
    Ok((rmax, rmin, feasible))
}

/// Evaluates every `(k_p, k_i)` pair against both plant gain extremes.
/// Results are ordered as the Cartesian product in input order
/// (`k_p` outer, `k_i` inner); infeasible cells are reported, not dropped.
pub fn grid_search(
    k_p_set: &[f64],
    k_i_set: &[f64],
    plant_max: &PlantParams,
    plant_min: &PlantParams,
    f_traffic_max: f64,
) -> Result<Vec<GridSearchResult>> {
    if k_p_set.is_empty() || k_i_set.is_empty() {
        return Err(Error::InvalidInput("grid search gain sets must be nonempty".into()));
    }
    if !(plant_max.w_n > plant_min.w_n) {
        return Err(Error::InvalidInput(
            "plant_max.w_n must exceed plant_min.w_n".into(),
        ));
    }
    let sweep = SweepConfig::default();
    let mut out = Vec::with_capacity(k_p_set.len() * k_i_set.len());
    for &k_p in k_p_set {
        for &k_i in k_i_set {
            let gc = pid_tf(&PidSpec::pi(k_p, k_i))?;
            let (report_max_wn, report_min_wn, feasible) =
                evaluate_compensator(&gc, plant_max, plant_min, f_traffic_max, &sweep)?;
            out.push(GridSearchResult { k_p, k_i, report_max_wn, report_min_wn, feasible });
        }
    }
    Ok(out)
}

/// Picks the preferred cell: among feasible cells at max W_n, the one with
/// the largest PM at min W_n; ties broken by larger GM at max W_n.
pub fn select_best(results: &[GridSearchResult]) -> Option<&GridSearchResult> {
    results
        .iter()
        .filter(|r| r.feasible)
        .max_by(|a, b| {
            let pm_a = a.report_min_wn.pm_deg_or_inf();
            let pm_b = b.report_min_wn.pm_deg_or_inf();
            pm_a.partial_cmp(&pm_b)
                .unwrap()
                .then(
                    a.report_max_wn
                        .gm_db_or_inf()
                        .partial_cmp(&b.report_max_wn.gm_db_or_inf())
                        .unwrap(),
                )
        })
}
