use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::forcing::ForcingSpec;
use super::stepper::{step, step_bound, Picture, StepOptions};
use crate::error::{Error, Result};
use crate::gaussian::{
    compact_mu, cutoff_functional, f_value, localized_from_f_hat, weighted_l2_sq, FunctionalConfig,
};
use crate::mesh::{curvature_data, graph_over_model, shrinker_quantity_with, ShrinkerModel, SurfaceState};

/// Names of the recorded series.
pub mod series {
    /// `F = F_{0,1}`.
    pub const F: &str = "F";
    /// `int rho |phi|^2` over the whole slice.
    pub const PHI_SQ: &str = "phi_sq";
    /// `int rho |phi|^2` over `B_{3 e^{t/2} r_0}`.
    pub const PHI_SQ_BALL: &str = "phi_sq_ball";
    /// Compact modified functional `mu F` and its weight.
    pub const F_TILDE_COMPACT: &str = "F_tilde_compact";
    pub const MU_COMPACT: &str = "mu_compact";
    /// `F^ = int psi_t^2 rho`.
    pub const F_HAT: &str = "F_hat";
    pub const F_TILDE_LOCALIZED: &str = "F_tilde_localized";
    pub const MU_LOCALIZED: &str = "mu_localized";
    /// `F^psi_{0,-s}(M_s)` on the unrescaled slice `M_s`.
    pub const F_PSI: &str = "F_psi";
    /// Largest `|A|`.
    pub const MAX_A: &str = "max_A";
    /// Graph norms over the model.
    pub const GRAPH_C0: &str = "graph_c0";
    pub const GRAPH_C2ALPHA: &str = "graph_c2alpha";
    pub const GRAPH_L2: &str = "graph_l2";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recorders {
    pub cfg: FunctionalConfig,
    pub model: Option<ShrinkerModel>,
    /// Ball radius for the graph norms.
    pub graph_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub time: f64,
    pub reason: String,
}

/// States and scalar series sampled every `step` time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub picture: Picture,
    pub states: Vec<SurfaceState>,
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    /// Sample spacing.
    pub step: f64,
    /// Integrator step.
    pub dt: f64,
    pub forcing: ForcingSpec,
    pub options: StepOptions,
    pub truncation: Option<Truncation>,
}

impl FlowTrajectory {
    pub fn get(&self, name: &str) -> Result<&[f64]> {
        self.series
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::InsufficientData(format!("series {name} not recorded")))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the sample closest to `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.times.is_empty() {
            return None;
        }
        let k = ((t - self.times[0]) / self.step).round();
        (k >= 0.0 && (k as usize) < self.times.len()).then_some(k as usize)
    }
}

/// Evaluates every recorder on one slice.
pub fn record(s: &SurfaceState, picture: Picture, rec: &Recorders) -> Result<Vec<(&'static str, f64)>> {
    let t = s.time;
    let curv = curvature_data(s)?;
    let max_a = curv.iter().map(|c| c.norm_a_sq().sqrt()).fold(0.0, f64::max);
    let f = f_value(s);
    let mut out = vec![(series::F, f), (series::MAX_A, max_a)];
    match picture {
        Picture::Rescaled => {
            let phi = shrinker_quantity_with(s, &curv);
            let ball = 3.0 * (t / 2.0).exp() * rec.cfg.r0;
            let mu = compact_mu(t, rec.cfg.k);
            let f_hat = cutoff_functional(s, &rec.cfg, [0.0; 3], 1.0, 2, (-t / 2.0).exp())?.value;
            let loc = localized_from_f_hat(t, f_hat, &rec.cfg);
            let f_psi = cutoff_functional(s, &rec.cfg, [0.0; 3], 1.0, 1, (-t / 2.0).exp())?.value;
            out.extend([
                (series::PHI_SQ, weighted_l2_sq(s, &phi.scalar, None)),
                (series::PHI_SQ_BALL, weighted_l2_sq(s, &phi.scalar, Some(ball))),
                (series::MU_COMPACT, mu),
                (series::F_TILDE_COMPACT, mu * f),
                (series::F_HAT, f_hat),
                (series::MU_LOCALIZED, loc.mu),
                (series::F_TILDE_LOCALIZED, loc.value),
                (series::F_PSI, f_psi),
            ]);
        }
        Picture::Unrescaled => {
            let f_psi = if t < 0.0 {
                cutoff_functional(s, &rec.cfg, [0.0; 3], -t, 1, 1.0)?.value
            } else {
                f64::NAN
            };
            out.push((series::F_PSI, f_psi));
        }
    }
    if let Some(model) = &rec.model {
        let (c0, c2a, l2) = match graph_over_model(s, model, rec.graph_radius) {
            Ok(g) => (g.norms.c0, g.norms.c2_alpha(), g.gaussian_l2()),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        out.extend([(series::GRAPH_C0, c0), (series::GRAPH_C2ALPHA, c2a), (series::GRAPH_L2, l2)]);
    }
    Ok(out)
}

/// Integrates from `t_span.0` to `t_span.1` with step `dt`, recording every
/// `record_every` steps. A singularity or a step that becomes unstable
/// mid-run ends the trajectory with a truncation record.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory(
    initial: &SurfaceState,
    forcing: &ForcingSpec,
    picture: Picture,
    t_span: (f64, f64),
    dt: f64,
    record_every: usize,
    recorders: &Recorders,
    opts: &StepOptions,
) -> Result<FlowTrajectory> {
    initial.validate()?;
    let bound = step_bound(initial, opts);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let steps = ((t_span.1 - t_span.0) / dt).round() as usize;
    let every = record_every.max(1);
    let mut traj = FlowTrajectory {
        picture,
        states: Vec::new(),
        times: Vec::new(),
        series: BTreeMap::new(),
        step: dt * every as f64,
        dt,
        forcing: *forcing,
        options: *opts,
        truncation: None,
    };
    let mut s = initial.clone();
    s.time = t_span.0;
    let push = |traj: &mut FlowTrajectory, s: &SurfaceState| -> Result<()> {
        for (name, v) in record(s, picture, recorders)? {
            traj.series.entry(name.to_string()).or_default().push(v);
        }
        traj.times.push(s.time);
        traj.states.push(s.clone());
        Ok(())
    };
    push(&mut traj, &s)?;
    for k in 0..steps {
        let t = t_span.0 + k as f64 * dt;
        match step(&s, forcing, picture, t, dt, opts) {
            Ok(mut next) => {
                next.time = t_span.0 + (k + 1) as f64 * dt;
                s = next;
            }
            Err(Error::Singular { time, reason }) => {
                traj.truncation = Some(Truncation { time, reason });
                break;
            }
            Err(Error::StepTooLarge { dt, bound }) => {
                traj.truncation =
                    Some(Truncation { time: t, reason: format!("step {dt} exceeds stability bound {bound}") });
                break;
            }
            Err(e) => return Err(e),
        }
        if (k + 1) % every == 0 {
            if let Err(e) = push(&mut traj, &s) {
                traj.truncation = Some(Truncation { time: s.time, reason: e.to_string() });
                break;
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    /// `Sigma_t = e^{t/2} M_s`, `t = -ln(-s)`.
    ToRescaled,
    /// `M_s = e^{-t/2} Sigma_t`, `s = -e^{-t}`.
    ToUnrescaled,
}

pub fn rescale_time(time: f64, dir: MapDirection) -> Result<f64> {
    match dir {
        MapDirection::ToRescaled => {
            if !(time < 0.0) {
                return Err(Error::InvalidInput(format!("unrescaled time must be negative, got {time}")));
            }
            Ok(-(-time).ln())
        }
        MapDirection::ToUnrescaled => Ok(-(-time).exp()),
    }
}

pub fn rescale_state(s: &SurfaceState, dir: MapDirection) -> Result<SurfaceState> {
    let t = rescale_time(s.time, dir)?;
    let factor = match dir {
        MapDirection::ToRescaled => (-s.time).powf(-0.5),
        MapDirection::ToUnrescaled => (-s.time / 2.0).exp(),
    };
    let mut out = s.scaled(factor);
    out.time = t;
    Ok(out)
}

/// Maps states and time stamps; series values are kept and re-indexed by
/// the mapped times, which are no longer uniformly spaced.
pub fn rescale_trajectory(traj: &FlowTrajectory, dir: MapDirection) -> Result<FlowTrajectory> {
    let expected = match dir {
        MapDirection::ToRescaled => Picture::Unrescaled,
        MapDirection::ToUnrescaled => Picture::Rescaled,
    };
    if traj.picture != expected {
        return Err(Error::InvalidInput("trajectory is already in the target picture".into()));
    }
    let states = traj.states.iter().map(|s| rescale_state(s, dir)).collect::<Result<Vec<_>>>()?;
    let times = states.iter().map(|s| s.time).collect();
    Ok(FlowTrajectory {
        picture: match dir {
            MapDirection::ToRescaled => Picture::Rescaled,
            MapDirection::ToUnrescaled => Picture::Unrescaled,
        },
        states,
        times,
        series: traj.series.clone(),
        step: f64::NAN,
        dt: traj.dt,
        forcing: traj.forcing,
        options: traj.options,
        truncation: traj.truncation.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Constant normal offset added to the initial graph.
    pub offset: f64,
    pub shots: usize,
    /// Final bracket width.
    pub width: f64,
}

/// Finds the constant offset `c` of the initial graph for which the
/// rescaled flow neither expands nor collapses over `t_span`. The dilation
/// mode grows like `e^t`, so the sign of the late-time radial drift is
/// monotone in `c` and bisection applies.
pub fn calibrate_dilation(
    make_initial: &dyn Fn(f64) -> Result<SurfaceState>,
    forcing: &ForcingSpec,
    t_span: (f64, f64),
    dt: f64,
    opts: &StepOptions,
    bracket: (f64, f64),
    max_shots: usize,
) -> Result<Calibration> {
    let shoot = |c: f64| -> Result<f64> {
        let mut s = make_initial(c)?;
        let steps = ((t_span.1 - t_span.0) / dt).round() as usize;
        let r0 = central_radius(&s);
        let base = crate::mesh::SHRINKER_RADIUS;
        for k in 0..steps {
            let t = t_span.0 + k as f64 * dt;
            match step(&s, forcing, Picture::Rescaled, t, dt, opts) {
                Ok(n) => s = n,
                Err(Error::Singular { .. }) => return Ok(-1.0),
                Err(e) => return Err(e),
            }
            let d = central_radius(&s) - base;
            if d.abs() > 0.25 + (r0 - base).abs() {
                return Ok(d);
            }
        }
        Ok(central_radius(&s) - base)
    };
    let (mut lo, mut hi) = bracket;
    let (flo, fhi) = (shoot(lo)?, shoot(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "calibration bracket [{lo}, {hi}] does not straddle the shrinker ({flo}, {fhi})"
        )));
    }
    let mut shots = 2;
    while shots < max_shots && hi - lo > 1e-16 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shoot(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        shots += 1;
    }
    Ok(Calibration { offset: 0.5 * (lo + hi), shots, width: hi - lo })
}

/// Mean distance from the origin (curves) or Gaussian-weighted mean radius
/// (profiles). The weight `e^{-z^2/4}` makes the profile average blind to
/// the non-constant Hermite modes, in particular the neutral `z^2 - 2`.
pub fn central_radius(s: &SurfaceState) -> f64 {
    let (mut acc, mut m) = (0.0, 0.0);
    for i in 0..s.len() {
        if s.is_profile() {
            let z = s.z(i);
            let w = (-0.25 * z * z).exp();
            acc += w * s.point(i)[0];
            m += w;
        } else {
            acc += s.norm_sq(i).sqrt();
            m += 1.0;
        }
    }
    if m > 0.0 { acc / m } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_model_surface;
    use std::f64::consts::SQRT_2;

    fn recorders(model: ShrinkerModel) -> Recorders {
        Recorders { cfg: FunctionalConfig::new(1.0, 0.0, 2.0, model.dim()).unwrap(), model: Some(model), graph_radius: 10.0 }
    }

    #[test]
    fn static_shrinker_keeps_f() {
        let m = ShrinkerModel::circle();
        let s = make_model_surface(&m, 64, None, 0.0).unwrap();
        let tr = run_trajectory(&s, &ForcingSpec::none(), Picture::Rescaled, (0.0, 1.0), 1e-3, 100, &recorders(m), &StepOptions::default()).unwrap();
        assert_eq!(tr.len(), 11);
        let f = tr.get(series::F).unwrap();
        for v in f {
            assert!((v - f[0]).abs() < 1e-12);
        }
        assert!(tr.truncation.is_none());
        for (_, v) in &tr.series {
            assert_eq!(v.len(), tr.len());
        }
    }

    #[test]
    fn pinch_is_a_truncation_record() {
        let radii: Vec<f64> = (0..81).map(|i| {
            let z = -4.0 + 0.1 * i as f64;
            0.3 + 0.7 * (z * z / 4.0).min(1.0)
        }).collect();
        let s = SurfaceState::profile(radii, -4.0, 0.1, -1.0);
        let rec = Recorders { cfg: FunctionalConfig::new(1.0, 0.0, 2.0, 2).unwrap(), model: None, graph_radius: 1.0 };
        let tr = run_trajectory(&s, &ForcingSpec::none(), Picture::Unrescaled, (-1.0, 0.0), 1e-3, 10, &rec, &StepOptions::default()).unwrap();
        let tr_reason = tr.truncation.expect("truncated").reason;
        assert!(tr_reason.contains("pinch"));
    }

    #[test]
    fn rescale_round_trip() {
        let s = make_model_surface(&ShrinkerModel::circle(), 32, None, -1.0).unwrap();
        let r = rescale_state(&s, MapDirection::ToRescaled).unwrap();
        assert_eq!(r.time, 0.0);
        assert_eq!(r, SurfaceState { time: 0.0, ..s.clone() });
        let circle = s.scaled(0.5);
        let mut c = circle.clone();
        c.time = -0.25;
        let r = rescale_state(&c, MapDirection::ToRescaled).unwrap();
        for i in 0..r.len() {
            assert!((r.norm_sq(i).sqrt() - SQRT_2).abs() < 1e-14);
        }
        assert!((r.time - 4f64.ln()).abs() < 1e-15);
        let back = rescale_state(&r, MapDirection::ToUnrescaled).unwrap();
        assert!((back.time + 0.25).abs() < 1e-15);
        assert!(rescale_state(&SurfaceState { time: 0.0, ..s }, MapDirection::ToRescaled).is_err());
    }

    #[test]
    fn calibration_recovers_the_shrinker_offset() {
        // Round circle of radius sqrt(2) + c: the balanced offset is 0.
        let m = ShrinkerModel::circle();
        let make = |c: f64| make_model_surface(&m, 32, Some(&move |_| c), 0.0);
        let cal = calibrate_dilation(&make, &ForcingSpec::none(), (0.0, 4.0), 5e-3, &StepOptions::default(), (-0.1, 0.07), 60).unwrap();
        assert!(cal.offset.abs() < 1e-12, "{cal:?}");
    }
}
