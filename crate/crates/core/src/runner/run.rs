use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::config::{CheckName, ScenarioConfig};
use super::output::{
    series_anchor, series_csv, write_manifest, write_report, CheckSummary, Manifest, TrajectoryInfo, SERIES_FILE,
};
use crate::error::{Error, Result};
use crate::flow::{
    calibrate_dilation, rescale_trajectory, run_trajectory, series, Calibration, FlowTrajectory, MapDirection, Picture,
    Recorders,
};
use crate::gaussian::{almost_monotone_j, f_value, j_samples, FunctionalConfig};
use crate::loja::{
    check_cauchy_decrease, check_discrete_loja, check_distance_decay, check_extension_phi_bound, check_l2_control,
    check_mean_value, check_monotonicity_compact, check_quadratic_bound, CheckReport, Verdict,
};
use crate::mesh::make_model_surface;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_VACUOUS: i32 = 3;

/// Exit status from a set of verdicts: any failure gives 2, all vacuous
/// gives 3, otherwise 0.
pub fn exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().any(|v| *v == Verdict::Fail) {
        EXIT_FAIL
    } else if !verdicts.is_empty() && verdicts.iter().all(|v| *v == Verdict::Vacuous) {
        EXIT_VACUOUS
    } else {
        EXIT_PASS
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub dir: PathBuf,
    pub calibration: Option<Calibration>,
    pub trajectory: FlowTrajectory,
    pub reports: Vec<(CheckName, CheckReport)>,
    /// Checks that raised an error instead of producing a report.
    pub errors: Vec<(CheckName, String)>,
    pub manifest: Manifest,
}

/// Calibrated initial slice and the calibration record, if requested.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<(crate::mesh::SurfaceState, Option<Calibration>)> {
    if !cfg.perturbation.calibrate {
        return Ok((cfg.initial_with_offset(0.0)?, None));
    }
    let mk = |c: f64| cfg.initial_with_offset(c);
    let [lo, hi] = cfg.perturbation.calibration_bracket;
    let cal = calibrate_dilation(
        &mk,
        &cfg.forcing,
        (cfg.t_start, cfg.t_end + cfg.perturbation.calibration_margin),
        cfg.dt,
        &cfg.step_options(),
        (lo, hi),
        80,
    )?;
    Ok((cfg.initial_with_offset(cal.offset)?, Some(cal)))
}

/// Integrates the scenario without running checks or writing files.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(FlowTrajectory, Option<Calibration>)> {
    cfg.validate()?;
    let (s, cal) = initial_state(cfg)?;
    let rec = Recorders {
        cfg: cfg.functional_config()?,
        model: Some(cfg.model()),
        graph_radius: cfg.params.graph_radius.unwrap_or(f64::INFINITY),
    };
    let traj = run_trajectory(&s, &cfg.forcing, cfg.picture, (cfg.t_start, cfg.t_end), cfg.dt, cfg.record_every, &rec, &cfg.step_options())?;
    Ok((traj, cal))
}

fn first_sample_with(traj: &FlowTrajectory, name: &str, pred: impl Fn(f64) -> bool) -> Option<f64> {
    let v = traj.get(name).ok()?;
    v.iter().position(|x| pred(*x)).map(|k| traj.times[k])
}

/// Evaluates one check on a finished trajectory.
pub fn run_check(cfg: &ScenarioConfig, fcfg: &FunctionalConfig, traj: &FlowTrajectory, check: CheckName) -> Result<CheckReport> {
    let model = cfg.model();
    let radius = cfg.params.graph_radius.unwrap_or(f64::INFINITY);
    let last = *traj.times.last().ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    match check {
        CheckName::MonotonicityCompact => check_monotonicity_compact(traj),
        CheckName::L2Control => check_l2_control(traj, traj.times[0], last, false),
        CheckName::L2ControlLocalized => {
            // The localized functional is monotone only once mu(t) <= 2.
            let t1 = first_sample_with(traj, series::MU_LOCALIZED, |m| m <= 2.0).unwrap_or(traj.times[0]);
            let t1 = if t1 >= last { traj.times[0] } else { t1 };
            check_l2_control(traj, t1, last, true)
        }
        CheckName::AlmostMonotoneJ => {
            let un = match traj.picture {
                Picture::Rescaled => rescale_trajectory(traj, MapDirection::ToUnrescaled)?,
                Picture::Unrescaled => traj.clone(),
            };
            let samples = j_samples(&un.states, [0.0; 3], 0.0, fcfg)?;
            almost_monotone_j(&samples, [0.0; 3], 0.0, fcfg, cfg.params.j_tolerance)
        }
        CheckName::MeanValue => {
            let p = cfg.params.mean_value.ok_or_else(|| Error::Config("missing mean_value params".into()))?;
            check_mean_value(traj, (p.t1, p.t2), p.beta, p.radius)
        }
        CheckName::DiscreteLoja => check_discrete_loja(traj, &model, &cfg.params.mu_grid),
        CheckName::DistanceDecay => check_distance_decay(traj, &model, radius, cfg.params.distance_max_states),
        CheckName::CauchyDecrease => check_cauchy_decrease(traj, &model, radius, &cfg.params.cauchy_times),
        CheckName::ExtensionPhiBound => {
            let p = cfg.params.extension.ok_or_else(|| Error::Config("missing extension params".into()))?;
            check_extension_phi_bound(traj, &model, p.radius, p.mu, cfg.functional.lambda0, p.eps, p.stride)
        }
        CheckName::QuadraticBound => {
            let p = cfg.params.quadratic.as_ref().ok_or_else(|| Error::Config("missing quadratic params".into()))?;
            let shape = super::config::Perturbation::new(std::slice::from_ref(&p.mode), cfg.geometry.family, cfg.seed);
            check_quadratic_bound(&model, cfg.resolution, &|u| shape.eval(u), &p.eps)
        }
    }
}

fn constants(cfg: &ScenarioConfig, fcfg: &FunctionalConfig) -> Result<BTreeMap<String, f64>> {
    let model = cfg.model();
    let loc = fcfg.localized_constants();
    let f_model = f_value(&make_model_surface(&model, cfg.resolution, None, 0.0)?);
    Ok(BTreeMap::from([
        ("F(Gamma)".to_string(), f_model),
        ("F(Gamma) exact".to_string(), model.f_value),
        ("K".to_string(), cfg.forcing.k),
        ("K1".to_string(), loc.k1),
        ("K2".to_string(), loc.k2),
        ("K3".to_string(), loc.k3),
        ("C_n".to_string(), loc.c_n),
        ("K_psi".to_string(), fcfg.k_psi),
        ("c(K_psi,n)".to_string(), fcfg.c_psi),
        ("gamma".to_string(), fcfg.gamma()),
        ("lambda0".to_string(), fcfg.lambda0),
        ("r0".to_string(), fcfg.r0),
        ("n".to_string(), fcfg.n as f64),
    ]))
}

fn constant_anchors() -> BTreeMap<String, String> {
    let mut a: BTreeMap<String, String> = [
        ("F(Gamma)", "F of the discretised model shrinker"),
        ("F(Gamma) exact", "F of the round shrinker, sqrt(2 pi / e)"),
        ("K", "sup of |F|, |DF|, |D^2 F| for the forcing field"),
        ("K1", "K1 = K^2 + 2 K_psi^2 r0^{-2} + K K_psi / r0 (r0^{+2} under the paper exponent)"),
        ("K2", "K2 = 4 K_psi C_n lambda0 (12 pi r0)^{n/2}"),
        ("K3", "K3 = 4 K2 / n"),
        ("gamma", "gamma = lambda0 r0^{-n-2} c(K_psi, n)"),
        ("calibration offset", "constant normal offset that removes the dilation mode"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    for name in [
        "t",
        series::F,
        series::PHI_SQ,
        series::PHI_SQ_BALL,
        series::MU_COMPACT,
        series::F_TILDE_COMPACT,
        series::F_HAT,
        series::MU_LOCALIZED,
        series::F_TILDE_LOCALIZED,
        series::F_PSI,
        series::MAX_A,
        series::GRAPH_C0,
        series::GRAPH_C2ALPHA,
        series::GRAPH_L2,
    ] {
        a.insert(format!("series {name}"), series_anchor(name).to_string());
    }
    a
}

fn now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Runs a scenario and writes `series.csv`, `reports/<check>.json` and
/// `manifest.json` into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<RunOutcome> {
    let (traj, calibration) = simulate(cfg)?;
    let fcfg = cfg.functional_config()?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(SERIES_FILE), series_csv(&traj))?;
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut summaries = Vec::new();
    let mut anchors = constant_anchors();
    for &check in &cfg.checks {
        match run_check(cfg, &fcfg, &traj, check) {
            Ok(r) => {
                let file = write_report(dir, check.as_str(), &r)?;
                anchors.insert(format!("check {}", check.as_str()), r.anchor.clone());
                summaries.push(CheckSummary {
                    name: check.as_str().into(),
                    anchor: r.anchor.clone(),
                    verdict: Some(r.verdict),
                    min_slack: r.min_slack,
                    file: Some(file),
                    error: None,
                });
                reports.push((check, r));
            }
            Err(e) => {
                summaries.push(CheckSummary {
                    name: check.as_str().into(),
                    anchor: String::new(),
                    verdict: None,
                    min_slack: None,
                    file: None,
                    error: Some(e.to_string()),
                });
                errors.push((check, e.to_string()));
            }
        }
    }
    let verdicts: Vec<Verdict> = reports.iter().map(|(_, r)| r.verdict).collect();
    let code = if errors.is_empty() { exit_code(&verdicts) } else { EXIT_ERROR };
    let mut consts = constants(cfg, &fcfg)?;
    if let Some(c) = &calibration {
        consts.insert("calibration offset".into(), c.offset);
    }
    let manifest = Manifest {
        scenario: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        g_rescaling: cfg.conventions.g_rescaling.as_str().into(),
        k1_exponent: cfg.conventions.k1_exponent.as_str().into(),
        exit_code: code,
        config: cfg.clone(),
        calibration,
        constants: consts,
        trajectory: Some(TrajectoryInfo {
            samples: traj.len(),
            t_first: traj.times[0],
            t_last: *traj.times.last().unwrap_or(&traj.times[0]),
            truncation: traj.truncation.clone(),
        }),
        checks: summaries,
        anchors,
        timestamp: now(),
    };
    write_manifest(dir, &manifest)?;
    Ok(RunOutcome { exit_code: code, dir: dir.to_path_buf(), calibration, trajectory: traj, reports, errors, manifest })
}

/// Runs a scenario and maps every error to exit status 1, writing a manifest
/// with the diagnostic when possible.
pub fn run_scenario_status(cfg: &ScenarioConfig, dir: &Path) -> (i32, Option<RunOutcome>, Option<String>) {
    match run_scenario(cfg, dir) {
        Ok(o) => (o.exit_code, Some(o), None),
        Err(e) => {
            let msg = e.to_string();
            if std::fs::create_dir_all(dir).is_ok() {
                let m = Manifest {
                    scenario: cfg.name.clone(),
                    version: env!("CARGO_PKG_VERSION").into(),
                    seed: cfg.seed,
                    g_rescaling: cfg.conventions.g_rescaling.as_str().into(),
                    k1_exponent: cfg.conventions.k1_exponent.as_str().into(),
                    exit_code: EXIT_ERROR,
                    config: cfg.clone(),
                    calibration: None,
                    constants: BTreeMap::new(),
                    trajectory: None,
                    checks: vec![CheckSummary {
                        name: "run".into(),
                        anchor: String::new(),
                        verdict: None,
                        min_slack: None,
                        file: None,
                        error: Some(msg.clone()),
                    }],
                    anchors: BTreeMap::new(),
                    timestamp: now(),
                };
                let _ = write_manifest(dir, &m);
            }
            (EXIT_ERROR, None, Some(msg))
        }
    }
}
