use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use pacekit::{
    closed_loop_tracking, compensated_open_loop, evaluate_compensator, freq_response,
    pacing_error, plant_open_loop, run_closed_loop, stability_report, tf_feedback,
    to_recurrence, traffic_fft, tustin, zoh_tf, CohortConfig, CohortVelocities, CompensatorSpec,
    ControllerKind, PacingErrorReport, RecurrenceCoefficients, SimTrace, StabilityReport,
    SweepConfig, TrafficCurve, TransferFunction,
};

use crate::config::RunConfig;
use crate::io::{
    csv_header, load_sample_stream_csv, load_traffic_csv, write_atomic, SAMPLE_STREAM_HEADER,
    TRAFFIC_HEADER,
};
use crate::CliError;

/// Log grid with an exact total point count spanning [f_min, f_max].
fn log_grid(f_min: f64, f_max: f64, points: usize) -> Vec<f64> {
    let lo = f_min.log10();
    let hi = f_max.log10();
    (0..points)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Open loop to analyze: compensated when a compensator is configured,
/// otherwise the bare plant.
fn open_loop(cfg: &RunConfig) -> Result<TransferFunction, CliError> {
    let plant = if cfg.analysis.use_max_w_n { cfg.plant_max()? } else { cfg.plant_min()? };
    match &cfg.compensator {
        Some(c) => compensated_open_loop(&c.to_spec().to_tf()?, &plant).map_err(CliError::from),
        None => plant_open_loop(&plant).map_err(CliError::from),
    }
}

fn closed_loop(cfg: &RunConfig) -> Result<TransferFunction, CliError> {
    let plant = if cfg.analysis.use_max_w_n { cfg.plant_max()? } else { cfg.plant_min()? };
    match &cfg.compensator {
        Some(c) => closed_loop_tracking(&c.to_spec().to_tf()?, &plant).map_err(CliError::from),
        None => {
            // plant-only tracking loop: forward = ZOH*G, feedback = LPF
            let forward = zoh_tf(plant.t_ps, plant.taylor_order)?.scale(plant.w_n);
            tf_feedback(&forward, &pacekit::lpf_tf(plant.t_f)?).map_err(CliError::from)
        }
    }
}

pub fn cmd_bode(
    cfg: &RunConfig,
    out: &Path,
    emit_closed_loop: bool,
    format_json: bool,
) -> Result<(), CliError> {
    let tf = if emit_closed_loop { closed_loop(cfg)? } else { open_loop(cfg)? };
    let freqs = log_grid(cfg.sweep.f_min_hz, cfg.sweep.f_max_hz, cfg.sweep.points);
    let resp = freq_response(&tf, &freqs)?;
    let nyquist = 1.0 / (2.0 * cfg.plant.t_ps_s);
    let body = if format_json {
        let rows: Vec<_> = resp
            .iter()
            .map(|s| {
                json!({
                    "freq_hz": s.freq_hz,
                    "mag_db": s.magnitude_db,
                    "phase_deg": s.phase_deg,
                    "aliased": (s.freq_hz > nyquist) as u8,
                })
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("json") + "\n"
    } else {
        let mut body = String::from("freq_hz,mag_db,phase_deg,aliased\n");
        for s in &resp {
            let aliased = u8::from(s.freq_hz > nyquist);
            writeln!(body, "{},{},{},{}", s.freq_hz, s.magnitude_db, s.phase_deg, aliased)
                .expect("string write");
        }
        body
    };
    write_atomic(out, &body)
}

pub fn cmd_margins(cfg: &RunConfig) -> Result<String, CliError> {
    let open = open_loop(cfg)?;
    let closed = closed_loop(cfg)?;
    let report =
        stability_report(&open, &closed, cfg.plant.t_ps_s, cfg.analysis.f_traffic_max_hz)?;
    Ok(serde_json::to_string_pretty(&report).expect("json"))
}

fn fmt_rad_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn grid_csv_row(
    kind: &str,
    k_p: &str,
    k_i: &str,
    k_c: &str,
    zeros: &str,
    poles: &str,
    rmax: &StabilityReport,
    rmin: &StabilityReport,
    feasible: bool,
) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{kind},{k_p},{k_i},{k_c},{zeros},{poles},{},{},{},{},{},{},{},{},{}\n",
        opt(rmax.gm_db),
        opt(rmax.pm_deg),
        rmax.cog_db,
        opt(rmax.clbw_hz),
        opt(rmin.gm_db),
        opt(rmin.pm_deg),
        rmin.cog_db,
        opt(rmin.clbw_hz),
        u8::from(feasible)
    )
}

pub fn cmd_gridsearch(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let grid = cfg
        .gridsearch
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [gridsearch] section".into()))?;
    let plant_max = cfg.plant_max()?;
    let plant_min = cfg.plant_min()?;
    let cells = pacekit::grid_search(
        &grid.k_p_set,
        &grid.k_i_set,
        &plant_max,
        &plant_min,
        cfg.analysis.f_traffic_max_hz,
    )?;
    let mut body = String::from(
        "kind,k_p,k_i,k_c,zeros_rad_s,poles_rad_s,gm_max_db,pm_max_deg,cog_max_db,clbw_max_hz,gm_min_db,pm_min_deg,cog_min_db,clbw_min_hz,feasible\n",
    );
    for c in &cells {
        body.push_str(&grid_csv_row(
            "pi",
            &c.k_p.to_string(),
            &c.k_i.to_string(),
            "",
            "",
            "",
            &c.report_max_wn,
            &c.report_min_wn,
            c.feasible,
        ));
    }
    let sweep = SweepConfig::default();
    for zp in &grid.zero_pole {
        let spec = pacekit::ZeroPoleSpec {
            k_c: zp.k_c,
            zeros: zp.zeros_rad_s.clone(),
            poles: zp.poles_rad_s.clone(),
        };
        let gc = pacekit::zero_pole_tf(&spec)?;
        let (rmax, rmin, feasible) =
            evaluate_compensator(&gc, &plant_max, &plant_min, cfg.analysis.f_traffic_max_hz, &sweep)?;
        body.push_str(&grid_csv_row(
            "zero_pole",
            "",
            "",
            &zp.k_c.to_string(),
            &fmt_rad_list(&zp.zeros_rad_s),
            &fmt_rad_list(&zp.poles_rad_s),
            &rmax,
            &rmin,
            feasible,
        ));
    }
    write_atomic(out, &body)?;
    let best = pacekit::select_best(&cells);
    if let Some(b) = best {
        eprintln!("best feasible cell: k_p={}, k_i={}", b.k_p, b.k_i);
    }
    Ok(())
}

fn resolve_traffic(cfg: &RunConfig, base: &Path) -> Result<TrafficCurve, CliError> {
    if cfg.sim.traffic_csv.is_empty() {
        TrafficCurve::synthetic_diurnal(cfg.sim.traffic_resolution_s, cfg.sim.horizon_s, 8)
            .map_err(CliError::from)
    } else {
        load_traffic_csv(&cfg.traffic_csv_path(base))
    }
}

fn cohort_config(
    cfg: &RunConfig,
    controller: ControllerKind,
    budget: f64,
    lambda0: f64,
    seed: u64,
) -> CohortConfig {
    CohortConfig {
        daily_budget: budget,
        initial_lambda: lambda0,
        w_n_max: cfg.plant.w_n_max_dollar_per_lambda_min,
        w_n_min: cfg.plant.w_n_min_dollar_per_lambda_min,
        t_ps: cfg.plant.t_ps_s,
        t_as: cfg.sim.t_as_s,
        t_f: cfg.plant.t_f_s,
        noise_frac: cfg.sim.noise_frac,
        controller,
        seed,
        horizon_s: cfg.sim.horizon_s,
    }
}

pub fn trace_csv(trace: &SimTrace) -> String {
    let mut body = String::new();
    if let Some(t) = trace.budget_exhausted_at_s {
        writeln!(body, "# budget_exhausted_at_s={t}").expect("string write");
    }
    body.push_str("time_s,desired_v,true_v,observed_v,lambda,integrator,cum_spend\n");
    for r in &trace.rows {
        writeln!(
            body,
            "{},{},{},{},{},{},{}",
            r.time_s, r.desired_v, r.true_v, r.observed_v, r.lambda, r.integrator, r.cum_spend
        )
        .expect("string write");
    }
    body
}

fn report_json(report: &PacingErrorReport) -> serde_json::Value {
    json!({
        "pe": report.pe,
        "swpe": report.swpe,
        "cohorts": report
            .per_cohort_errors
            .iter()
            .zip(&report.weights)
            .enumerate()
            .map(|(i, (e, w))| json!({"index": i, "pe": e, "weight": w}))
            .collect::<Vec<_>>(),
        "excluded_pairs": report.excluded_pairs,
    })
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    base: &Path,
    out_dir: &Path,
    compare_baseline: bool,
    seed_override: Option<u64>,
) -> Result<String, CliError> {
    let spec = cfg
        .compensator
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a [compensator] section".into()))?
        .to_spec();
    let traffic = resolve_traffic(cfg, base)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let seed0 = seed_override.unwrap_or(cfg.sim.seed);

    let cohorts: Vec<(f64, f64)> = if cfg.sim.cohorts.is_empty() {
        vec![(cfg.sim.daily_budget_dollar, cfg.sim.initial_lambda)]
    } else {
        cfg.sim
            .cohorts
            .iter()
            .map(|c| (c.daily_budget_dollar, c.initial_lambda))
            .collect()
    };

    let run_set = |controller: &dyn Fn() -> ControllerKind,
                   tag: &str|
     -> Result<Vec<CohortVelocities>, CliError> {
        let mut series = Vec::with_capacity(cohorts.len());
        for (i, &(budget, lambda0)) in cohorts.iter().enumerate() {
            let cc = cohort_config(cfg, controller(), budget, lambda0, seed0 + i as u64);
            let trace = run_closed_loop(&cc, &traffic)?;
            let name = if cohorts.len() == 1 {
                format!("trace{tag}.csv")
            } else {
                format!("trace{tag}_cohort{i}.csv")
            };
            write_atomic(&out_dir.join(name), &trace_csv(&trace))?;
            series.push(CohortVelocities::from_trace(&trace));
        }
        Ok(series)
    };

    let compensated = run_set(&|| ControllerKind::Compensator(spec.clone()), "")?;
    let comp_report = pacing_error(&compensated)?;
    let report_value = if compare_baseline {
        let baseline = run_set(
            &|| ControllerKind::BaselineStep { delta: cfg.sim.baseline_delta },
            "_baseline",
        )?;
        let base_report = pacing_error(&baseline)?;
        json!({
            "compensated": report_json(&comp_report),
            "baseline": report_json(&base_report),
        })
    } else {
        report_json(&comp_report)
    };
    let report_text = serde_json::to_string_pretty(&report_value).expect("json") + "\n";
    write_atomic(&out_dir.join("report.json"), &report_text)?;
    Ok(report_text)
}

pub fn cmd_fft(
    cfg: Option<&RunConfig>,
    base: &Path,
    traffic_path: Option<&Path>,
    out: &Path,
    format_json: bool,
) -> Result<String, CliError> {
    let curve = match traffic_path {
        Some(p) => {
            // accept either the uniform traffic schema or an irregular
            // sample stream, which gets regularized onto its median interval
            let header = csv_header(p)?;
            if header == SAMPLE_STREAM_HEADER {
                let stream = load_sample_stream_csv(p)?;
                let (t, values) = pacekit::regularize(&stream)?;
                TrafficCurve::from_intensities(t, values)?
            } else if header == TRAFFIC_HEADER {
                load_traffic_csv(p)?
            } else {
                return Err(CliError::Config(format!(
                    "{}: expected header `{TRAFFIC_HEADER}` or `{SAMPLE_STREAM_HEADER}`",
                    p.display()
                )));
            }
        }
        None => {
            let cfg = cfg.ok_or_else(|| {
                CliError::Config("fft needs --traffic <csv> or --config".into())
            })?;
            resolve_traffic(cfg, base)?
        }
    };
    let spectrum = traffic_fft(&curve, 0.01)?;
    let body = if format_json {
        let rows: Vec<_> = spectrum
            .freqs_hz
            .iter()
            .zip(&spectrum.magnitudes)
            .map(|(f, m)| json!({"freq_hz": f, "magnitude": m}))
            .collect();
        serde_json::to_string_pretty(&rows).expect("json") + "\n"
    } else {
        let mut body = String::from("freq_hz,magnitude\n");
        for (f, m) in spectrum.freqs_hz.iter().zip(&spectrum.magnitudes) {
            writeln!(body, "{f},{m}").expect("string write");
        }
        body
    };
    write_atomic(out, &body)?;
    Ok(serde_json::to_string(&json!({
        "max_significant_hz": spectrum.max_significant_hz,
    }))
    .expect("json"))
}

pub fn cmd_discretize(cfg: &RunConfig, t_z: Option<f64>) -> Result<String, CliError> {
    let spec = cfg
        .compensator
        .as_ref()
        .ok_or_else(|| CliError::Config("discretize needs a [compensator] section".into()))?
        .to_spec();
    let t_z = t_z.unwrap_or(cfg.plant.t_ps_s);
    let gc = match &spec {
        CompensatorSpec::Pid(p) if p.k_d != 0.0 => {
            return Err(CliError::Numerical(
                "a PID with derivative action is improper; deploy PI or zero-pole".into(),
            ))
        }
        other => other.to_tf()?,
    };
    let filt = to_recurrence(&tustin(&gc, t_z)?)?;
    let coeffs = RecurrenceCoefficients::from(&filt);
    Ok(serde_json::to_string_pretty(&coeffs).expect("json"))
}

