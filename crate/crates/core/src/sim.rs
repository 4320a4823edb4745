use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::compensator::{CompensatorSpec, PiController, LAMBDA_FLOOR};
use crate::discrete::{to_recurrence, tustin, RecurrenceFilter};
use crate::error::{Error, Result};
use crate::sensing::{LowPassFilter, LpfConfig};
use crate::traffic::TrafficCurve;

/// Relay controller with a fixed step: stand-in for step-based legacy pacing.
/// `lambda <- clamp(lambda + delta*sign(error))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStepController {
    pub lambda: f64,
    pub delta: f64,
}

impl BaselineStepController {
    pub const DEFAULT_DELTA: f64 = 0.01;

    pub fn new(lambda0: f64, delta: f64) -> Self {
        Self { lambda: lambda0.clamp(LAMBDA_FLOOR, 1.0), delta }
    }

    pub fn step(&mut self, error: f64) -> f64 {
        let sign = if error > 0.0 {
            1.0
        } else if error < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.lambda = (self.lambda + self.delta * sign).clamp(LAMBDA_FLOOR, 1.0);
        self.lambda
    }
}

/// Which controller paces the cohort.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerKind {
    Compensator(CompensatorSpec),
    BaselineStep { delta: f64 },
}

/// Full description of one closed-loop pacing experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    /// Daily budget in $.
    pub daily_budget: f64,
    /// Preload for the controller, also the lambda held before the first update.
    pub initial_lambda: f64,
    /// Plant gain bounds in $/(lambda*minute).
    pub w_n_max: f64,
    pub w_n_min: f64,
    /// Pacing (compensator) interval, seconds.
    pub t_ps: f64,
    /// Auction pricing interval (plant/sensing tick), seconds.
    pub t_as: f64,
    /// Sensing LPF time constant, seconds.
    pub t_f: f64,
    /// Gaussian noise sigma as a fraction of the nominal tick spend.
    pub noise_frac: f64,
    pub controller: ControllerKind,
    pub seed: u64,
    /// Simulated horizon, seconds.
    pub horizon_s: f64,
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.daily_budget > 0.0) {
            return Err(Error::InvalidInput("daily_budget must be > 0".into()));
        }
        if !(self.initial_lambda > 0.0 && self.initial_lambda <= 1.0) {
            return Err(Error::InvalidInput("initial_lambda must be in (0, 1]".into()));
        }
        if !(self.w_n_max >= self.w_n_min && self.w_n_min > 0.0) {
            return Err(Error::InvalidInput("need w_n_max >= w_n_min > 0".into()));
        }
        if !(self.t_ps > 0.0 && self.t_as > 0.0 && self.t_f > 0.0) {
            return Err(Error::InvalidInput("t_ps, t_as, t_f must be > 0".into()));
        }
        if !(self.noise_frac >= 0.0) {
            return Err(Error::InvalidInput("noise_frac must be >= 0".into()));
        }
        if !(self.horizon_s >= self.t_ps) {
            return Err(Error::InvalidInput("horizon must cover at least one pacing cycle".into()));
        }
        Ok(())
    }
}

/// One record per pacing cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub desired_v: f64,
    pub true_v: f64,
    pub observed_v: f64,
    pub lambda: f64,
    pub integrator: f64,
    pub cum_spend: f64,
    pub remaining_budget: f64,
}

/// Time series output of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    pub total_spend: f64,
    /// Set when the budget ran out before the horizon; lambda is forced to
    /// the floor from that moment on.
    pub budget_exhausted_at_s: Option<f64>,
}

/// Desired spending velocity in $/minute:
/// `remaining_budget * current_traffic / remaining_traffic`, converted using
/// the traffic-sample resolution. Zero remaining traffic is the end-of-day
/// signal and yields zero.
pub fn desired_velocity(
    remaining_budget: f64,
    current_traffic: f64,
    remaining_traffic: f64,
    resolution_s: f64,
) -> f64 {
    if remaining_traffic <= 0.0 || remaining_budget <= 0.0 {
        return 0.0;
    }
    remaining_budget * current_traffic / remaining_traffic / (resolution_s / 60.0)
}

/// One plant tick: nominal spend `w_n_t * lambda * dt`, plus Gaussian noise
/// with sigma equal to `noise_frac` of the nominal, floored at zero and
/// capped at the remaining budget.
pub fn plant_step(
    w_n_t: f64,
    lambda: f64,
    dt_min: f64,
    noise_frac: f64,
    remaining_budget: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let nominal = w_n_t * lambda * dt_min;
    let spend = if noise_frac > 0.0 && nominal > 0.0 {
        let normal = Normal::new(0.0, noise_frac * nominal).expect("sigma is finite");
        (nominal + normal.sample(rng)).max(0.0)
    } else {
        nominal
    };
    spend.min(remaining_budget.max(0.0))
}

enum Runtime {
    Pi(PiController),
    Recurrence(RecurrenceFilter),
    Baseline(BaselineStepController),
}

impl Runtime {
    fn build(cfg: &CohortConfig) -> Result<Self> {
        // The pacing hold contributes its DC gain t_ps to the analyzed open
        // loop (the hold block is (1 - e^{-s*t_ps})/s), so the deployed
        // compensator drive includes that factor; without it the realized
        // loop would sit 20*log10(t_ps) dB below the designed one.
        let drive = cfg.t_ps;
        match &cfg.controller {
            ControllerKind::Compensator(CompensatorSpec::Pid(p)) => {
                if p.k_d != 0.0 {
                    return Err(Error::InvalidInput(
                        "derivative term is not supported by the pacing runtime".into(),
                    ));
                }
                Ok(Runtime::Pi(
                    PiController::new(p.k_p * drive, p.k_i * drive)
                        .with_preload(cfg.initial_lambda),
                ))
            }
            ControllerKind::Compensator(CompensatorSpec::ZeroPole(z)) => {
                let gc = crate::compensator::zero_pole_tf(z)?.scale(drive);
                let mut filt = to_recurrence(&tustin(&gc, cfg.t_ps)?)?;
                filt.preload(cfg.initial_lambda);
                Ok(Runtime::Recurrence(filt))
            }
            ControllerKind::BaselineStep { delta } => {
                Ok(Runtime::Baseline(BaselineStepController::new(cfg.initial_lambda, *delta)))
            }
        }
    }

    fn step(&mut self, error: f64, dt: f64) -> Result<f64> {
        match self {
            Runtime::Pi(pi) => pi.step(error, dt),
            Runtime::Recurrence(f) => Ok(f.step(error)?.clamp(LAMBDA_FLOOR, 1.0)),
            Runtime::Baseline(b) => Ok(b.step(error)),
        }
    }

    fn integrator(&self) -> f64 {
        match self {
            Runtime::Pi(pi) => pi.integrator,
            _ => 0.0,
        }
    }
}

/// Run the closed pacing loop: the plant spends every `t_as` tick, the
/// sensing filter follows each tick, and the controller recomputes lambda at
/// every pacing-cycle boundary (`t_ps`), which the hold keeps constant in
/// between. One trace row is recorded per pacing cycle. Bit-reproducible for
/// a fixed seed.
pub fn run_closed_loop(cfg: &CohortConfig, traffic: &TrafficCurve) -> Result<SimTrace> {
    cfg.validate()?;
    if traffic.horizon_s() + 1e-9 < cfg.horizon_s {
        return Err(Error::InvalidInput(format!(
            "traffic curve covers {}s, simulation horizon is {}s",
            traffic.horizon_s(),
            cfg.horizon_s
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut controller = Runtime::build(cfg)?;
    let mut lpf = LowPassFilter::new(LpfConfig::new(cfg.t_f, cfg.t_as)?);
    let remaining_traffic = traffic.remaining_from();
    let (c_lo, c_hi) = traffic.min_max();

    let n_ticks = (cfg.horizon_s / cfg.t_as) as usize;
    let dt_min = cfg.t_as / 60.0;
    let mut lambda = cfg.initial_lambda;
    let mut cum_spend = 0.0;
    let mut last_cycle: i64 = -1;
    let mut last_pace_t = 0.0;
    let mut exhausted_at: Option<f64> = None;
    let mut rows = Vec::with_capacity((cfg.horizon_s / cfg.t_ps) as usize + 1);

    for k in 0..n_ticks {
        let t = k as f64 * cfg.t_as;
        let bucket = traffic.bucket_at(t);
        let intensity = traffic.intensities[bucket];
        // plant gain tracks the impression-opportunity intensity linearly
        // between its calibrated extremes
        let w_n_t = if c_hi - c_lo < f64::EPSILON {
            cfg.w_n_max
        } else {
            cfg.w_n_min + (cfg.w_n_max - cfg.w_n_min) * (intensity - c_lo) / (c_hi - c_lo)
        };

        let spend = plant_step(
            w_n_t,
            lambda,
            dt_min,
            cfg.noise_frac,
            cfg.daily_budget - cum_spend,
            &mut rng,
        );
        let true_v = spend / dt_min;
        if k == 0 {
            lpf.preload(true_v);
        }
        let observed_v = lpf.step(true_v)?;
        cum_spend += spend;

        let cycle = (t / cfg.t_ps) as i64;
        if cycle > last_cycle {
            last_cycle = cycle;
            let remaining_budget = cfg.daily_budget - cum_spend;
            if remaining_budget <= 0.0 && exhausted_at.is_none() {
                exhausted_at = Some(t);
            }
            let dv = desired_velocity(
                remaining_budget,
                intensity,
                remaining_traffic[bucket],
                traffic.resolution_s,
            );
            let dt_pace = if k == 0 { cfg.t_ps } else { t - last_pace_t };
            last_pace_t = t;
            lambda = if exhausted_at.is_some() {
                LAMBDA_FLOOR
            } else {
                controller.step(dv - observed_v, dt_pace)?
            };
            rows.push(TraceRow {
                time_s: t,
                desired_v: dv,
                true_v,
                observed_v,
                lambda,
                integrator: controller.integrator(),
                cum_spend,
                remaining_budget,
            });
        }
    }
    Ok(SimTrace { rows, total_spend: cum_spend, budget_exhausted_at_s: exhausted_at })
}

/// Estimate the local plant gain from a synthetic bid landscape by finite
/// difference of the spend-velocity curve: auctions are drawn at a fixed
/// opportunity rate, our paced bid wins when it beats the competing top bid,
/// and the winner pays the runner-up price. Common random numbers are used
/// for the two lambda levels.
pub fn estimate_w_n(
    lambda: f64,
    delta_lambda: f64,
    opportunities_per_min: f64,
    minutes: f64,
    seed: u64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda + delta_lambda <= 1.0 && delta_lambda > 0.0) {
        return Err(Error::InvalidInput("need 0 < lambda < lambda+delta <= 1".into()));
    }
    let spend_velocity = |lam: f64| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (opportunities_per_min * minutes) as usize;
        let our_bid: Normal<f64> = Normal::new(1.0, 0.2).expect("finite");
        let top_bid: Normal<f64> = Normal::new(0.35, 0.15).expect("finite");
        let mut paid = 0.0;
        for _ in 0..n {
            let ours = lam * our_bid.sample(&mut rng).max(0.0);
            let theirs = top_bid.sample(&mut rng).max(0.0);
            if ours > theirs {
                paid += theirs; // second price
            }
        }
        paid / minutes
    };
    Ok((spend_velocity(lambda + delta_lambda) - spend_velocity(lambda)) / delta_lambda)
}
