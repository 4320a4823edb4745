//! Run configuration: one human-editable TOML file with units embedded in
//! the key names (unit mistakes are the dominant failure mode in control
//! code, so every time is suffixed `_s`, every gain carries its dimension).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pacekit::{CompensatorSpec, PidSpec, PlantParams, ZeroPoleSpec};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub plant: PlantSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensator: Option<CompensatorSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gridsearch: Option<GridSection>,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlantSection {
    pub w_n_max_dollar_per_lambda_min: f64,
    pub w_n_min_dollar_per_lambda_min: f64,
    pub t_ps_s: f64,
    pub t_f_s: f64,
    #[serde(default = "default_taylor_order")]
    pub taylor_order: u32,
}

fn default_taylor_order() -> u32 {
    PlantParams::DEFAULT_TAYLOR_ORDER
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompensatorSection {
    Pi {
        k_p: f64,
        k_i: f64,
        #[serde(default)]
        k_d: f64,
    },
    ZeroPole {
        k_c: f64,
        zeros_rad_s: Vec<f64>,
        poles_rad_s: Vec<f64>,
    },
}

impl CompensatorSection {
    pub fn to_spec(&self) -> CompensatorSpec {
        match self {
            CompensatorSection::Pi { k_p, k_i, k_d } => {
                CompensatorSpec::Pid(PidSpec { k_p: *k_p, k_i: *k_i, k_d: *k_d })
            }
            CompensatorSection::ZeroPole { k_c, zeros_rad_s, poles_rad_s } => {
                CompensatorSpec::ZeroPole(ZeroPoleSpec {
                    k_c: *k_c,
                    zeros: zeros_rad_s.clone(),
                    poles: poles_rad_s.clone(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepSection {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// Total number of emitted rows for `bode`.
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { f_min_hz: 1e-6, f_max_hz: 5e-2, points: 600 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisSection {
    /// COG is the closed-loop gain at this frequency.
    pub f_traffic_max_hz: f64,
    /// Margins command: analyze the max-W_n plant (true) or min-W_n (false).
    #[serde(default = "default_true")]
    pub use_max_w_n: bool,
}

fn default_true() -> bool {
    true
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { f_traffic_max_hz: 9.3e-5, use_max_w_n: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSection {
    pub k_p_set: Vec<f64>,
    pub k_i_set: Vec<f64>,
    #[serde(default)]
    pub zero_pole: Vec<ZeroPoleRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ZeroPoleRow {
    #[serde(default = "default_unity")]
    pub k_c: f64,
    pub zeros_rad_s: Vec<f64>,
    pub poles_rad_s: Vec<f64>,
}

fn default_unity() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimSection {
    pub daily_budget_dollar: f64,
    pub initial_lambda: f64,
    pub t_as_s: f64,
    pub noise_frac: f64,
    pub horizon_s: f64,
    pub seed: u64,
    /// Path to a `time_s,intensity` CSV; empty selects the synthetic
    /// diurnal curve.
    #[serde(default)]
    pub traffic_csv: String,
    pub traffic_resolution_s: f64,
    #[serde(default = "default_baseline_delta")]
    pub baseline_delta: f64,
    /// Extra cohorts for multi-cohort runs; when empty, the single cohort
    /// described by this section runs alone.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cohorts: Vec<CohortRow>,
}

fn default_baseline_delta() -> f64 {
    pacekit::BaselineStepController::DEFAULT_DELTA
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CohortRow {
    pub daily_budget_dollar: f64,
    pub initial_lambda: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            daily_budget_dollar: 387.5,
            initial_lambda: 0.05,
            t_as_s: 0.87,
            noise_frac: 0.05,
            horizon_s: 86400.0,
            seed: 42,
            traffic_csv: String::new(),
            traffic_resolution_s: 60.0,
            baseline_delta: default_baseline_delta(),
            cohorts: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    fn validate(&self, base: &Path) -> Result<(), CliError> {
        let p = &self.plant;
        if !(p.w_n_max_dollar_per_lambda_min >= p.w_n_min_dollar_per_lambda_min
            && p.w_n_min_dollar_per_lambda_min > 0.0)
        {
            return Err(CliError::Config(
                "plant: need w_n_max >= w_n_min > 0 ($/lambda-min)".into(),
            ));
        }
        if !(p.t_ps_s > 0.0 && p.t_f_s > 0.0) {
            return Err(CliError::Config("plant: t_ps_s and t_f_s must be > 0".into()));
        }
        if p.taylor_order < 2 {
            return Err(CliError::Config("plant: taylor_order must be >= 2".into()));
        }
        if !(self.sweep.f_min_hz > 0.0 && self.sweep.f_max_hz > self.sweep.f_min_hz) {
            return Err(CliError::Config("sweep: need 0 < f_min_hz < f_max_hz".into()));
        }
        if self.sweep.points < 2 {
            return Err(CliError::Config("sweep: points must be >= 2".into()));
        }
        if !(self.analysis.f_traffic_max_hz > 0.0) {
            return Err(CliError::Config("analysis: f_traffic_max_hz must be > 0".into()));
        }
        if let Some(g) = &self.gridsearch {
            if g.k_p_set.is_empty() || g.k_i_set.is_empty() {
                return Err(CliError::Config(
                    "gridsearch: k_p_set and k_i_set must be nonempty".into(),
                ));
            }
        }
        let s = &self.sim;
        if !(s.daily_budget_dollar > 0.0
            && s.initial_lambda > 0.0
            && s.initial_lambda <= 1.0
            && s.t_as_s > 0.0
            && s.horizon_s > 0.0
            && s.noise_frac >= 0.0
            && s.traffic_resolution_s > 0.0)
        {
            return Err(CliError::Config("sim: parameter out of range".into()));
        }
        if !s.traffic_csv.is_empty() {
            let path = self.traffic_csv_path(base);
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "sim.traffic_csv: {} does not exist",
                    path.display()
                )));
            }
        }
        for c in &s.cohorts {
            if !(c.daily_budget_dollar > 0.0
                && c.initial_lambda > 0.0
                && c.initial_lambda <= 1.0)
            {
                return Err(CliError::Config("sim.cohorts: parameter out of range".into()));
            }
        }
        Ok(())
    }

    /// Traffic CSV path resolved against the config file location.
    pub fn traffic_csv_path(&self, base: &Path) -> PathBuf {
        let raw = Path::new(&self.sim.traffic_csv);
        if raw.is_absolute() {
            raw.to_path_buf()
        } else {
            base.join(raw)
        }
    }

    pub fn plant_max(&self) -> Result<PlantParams, CliError> {
        PlantParams::with_taylor_order(
            self.plant.w_n_max_dollar_per_lambda_min,
            self.plant.t_ps_s,
            self.plant.t_f_s,
            self.plant.taylor_order,
        )
        .map_err(CliError::from)
    }

    pub fn plant_min(&self) -> Result<PlantParams, CliError> {
        PlantParams::with_taylor_order(
            self.plant.w_n_min_dollar_per_lambda_min,
            self.plant.t_ps_s,
            self.plant.t_f_s,
            self.plant.taylor_order,
        )
        .map_err(CliError::from)
    }
}
