use serde::{Deserialize, Serialize};

use super::forcing::{ForcingSpec, Vec3};
use crate::error::{Error, Result};
use crate::mesh::{curvature_data, lagrange4, profile_slope, Geometry, SurfaceState};

/// How the rescaled field `G` is obtained from the ambient forcing `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GConvention {
    /// `G(x, t) = F(e^{-t/2} x)`: a point `x` of the rescaled slice sits at
    /// `e^{-t/2} x` on the unrescaled flow.
    #[default]
    Derived,
    /// `G(x, t) = F(e^{t/2} x)`, the formula as printed.
    Paper,
}

impl GConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            GConvention::Derived => "derived",
            GConvention::Paper => "paper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    /// MCFf in time `s`.
    Unrescaled,
    /// RMCFf in time `t = -ln(-s)`.
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub g_convention: GConvention,
    /// Curves: explicit stability factor, `dt <= curve_cfl * h_min^2`.
    pub curve_cfl: f64,
    /// Profiles: semi-implicit step cap.
    pub profile_dt_max: f64,
    /// Curves are redistributed once max/min spacing exceeds this ratio.
    pub redistribute_ratio: f64,
    /// Profile pinch threshold.
    pub r_min: f64,
    /// Curve spacing collapse: min spacing below mean / factor.
    pub collapse_factor: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            g_convention: GConvention::Derived,
            curve_cfl: 0.2,
            profile_dt_max: 0.1,
            redistribute_ratio: 1.2,
            r_min: 1e-3,
            collapse_factor: 10.0,
        }
    }
}

/// The normal forcing acting on a slice: prefactor and evaluation point map.
#[derive(Debug, Clone, Copy)]
pub struct FieldView<'a> {
    pub forcing: &'a ForcingSpec,
    /// `1` for MCFf, `e^{-t/2}` for RMCFf.
    pub prefactor: f64,
    /// The field is evaluated at `point_scale * x`.
    pub point_scale: f64,
}

impl<'a> FieldView<'a> {
    pub fn new(forcing: &'a ForcingSpec, picture: Picture, t: f64, conv: GConvention) -> Self {
        match picture {
            Picture::Unrescaled => Self { forcing, prefactor: 1.0, point_scale: 1.0 },
            Picture::Rescaled => Self {
                forcing,
                prefactor: (-t / 2.0).exp(),
                point_scale: match conv {
                    GConvention::Derived => (-t / 2.0).exp(),
                    GConvention::Paper => (t / 2.0).exp(),
                },
            },
        }
    }

    /// `G(x)` (without the prefactor).
    pub fn g(&self, x: Vec3) -> Vec3 {
        let s = self.point_scale;
        self.forcing.eval([s * x[0], s * x[1], s * x[2]])
    }

    /// `DG(x) = point_scale * DF(point_scale x)`.
    pub fn dg(&self, x: Vec3) -> [[f64; 3]; 3] {
        let s = self.point_scale;
        let mut j = self.forcing.jacobian([s * x[0], s * x[1], s * x[2]]);
        for row in j.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        j
    }
}

/// One MCFf step `dx/ds = H + F^perp`.
pub fn step_mcff(s: &SurfaceState, forcing: &ForcingSpec, ds: f64) -> Result<SurfaceState> {
    step(s, forcing, Picture::Unrescaled, s.time, ds, &StepOptions::default())
}

/// One RMCFf step `dx/dt = phi + e^{-t/2} G^perp` from time `t`.
pub fn step_rmcff(s: &SurfaceState, forcing: &ForcingSpec, t: f64, dt: f64) -> Result<SurfaceState> {
    step(s, forcing, Picture::Rescaled, t, dt, &StepOptions::default())
}

/// Stability bound on the step for the given state.
pub fn step_bound(s: &SurfaceState, opts: &StepOptions) -> f64 {
    match s.geometry {
        Geometry::Curve { .. } => opts.curve_cfl * s.grid_spacing().powi(2),
        Geometry::Profile { .. } => opts.profile_dt_max,
    }
}

pub fn step(
    s: &SurfaceState,
    forcing: &ForcingSpec,
    picture: Picture,
    t: f64,
    dt: f64,
    opts: &StepOptions,
) -> Result<SurfaceState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {dt}")));
    }
    let bound = step_bound(s, opts);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let view = FieldView::new(forcing, picture, t, opts.g_convention);
    let rescaled = picture == Picture::Rescaled;
    let next = match &s.geometry {
        Geometry::Curve { closed: true, .. } => curve_step(s, &view, rescaled, t, dt, opts)?,
        Geometry::Curve { closed: false, .. } => {
            return Err(Error::InvalidInput("open curves are not evolved".into()))
        }
        Geometry::Profile { radii, z_min, dz } => {
            profile_step(radii, *z_min, *dz, &view, rescaled, t, dt, opts)?
        }
    };
    Ok(next)
}

/// Normal forcing speed `prefactor * G . nu`, checked against the declared
/// bound `K * prefactor`.
fn normal_forcing(view: &FieldView, x: Vec3, nu: Vec3) -> Result<f64> {
    if view.forcing.is_none() {
        return Ok(0.0);
    }
    let g = view.g(x);
    let v = view.prefactor * (g[0] * nu[0] + g[1] * nu[1] + g[2] * nu[2]);
    if v.abs() > view.forcing.k * view.prefactor * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "forcing speed {v} exceeds K e^{{-t/2}} = {}",
            view.forcing.k * view.prefactor
        )));
    }
    Ok(v)
}

fn curve_step(
    s: &SurfaceState,
    view: &FieldView,
    rescaled: bool,
    t: f64,
    dt: f64,
    opts: &StepOptions,
) -> Result<SurfaceState> {
    let Geometry::Curve { points, .. } = &s.geometry else { unreachable!() };
    let curv = curvature_data(s)?;
    let mut next = Vec::with_capacity(points.len());
    for (p, c) in points.iter().zip(&curv) {
        let nu = c.normal;
        let mut v = -c.mean;
        if rescaled {
            v += 0.5 * (p[0] * nu[0] + p[1] * nu[1]);
        }
        v += normal_forcing(view, [p[0], p[1], 0.0], [nu[0], nu[1], 0.0])?;
        next.push([p[0] + dt * v * nu[0], p[1] + dt * v * nu[1]]);
    }
    let mut out = SurfaceState::curve(next, t + dt);
    let sp = out.spacings();
    let mean = sp.iter().sum::<f64>() / sp.len() as f64;
    let (min, max) = sp.iter().fold((f64::MAX, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if !(min > mean / opts.collapse_factor) || !min.is_finite() {
        return Err(Error::Singular { time: t + dt, reason: format!("spacing collapse: {min} vs mean {mean}") });
    }
    if max / min > opts.redistribute_ratio {
        out = redistribute(&out);
    }
    Ok(out)
}

/// Moves the nodes of a closed curve to uniform chord arclength, keeping
/// node 0 fixed, by 4-point interpolation of position against arclength.
pub fn redistribute(s: &SurfaceState) -> SurfaceState {
    let Geometry::Curve { points, closed: true } = &s.geometry else {
        return s.clone();
    };
    let n = points.len();
    let sp = s.spacings();
    let mut acc = vec![0.0; n + 1];
    for i in 0..n {
        acc[i + 1] = acc[i] + sp[i];
    }
    let total = acc[n];
    let arc = |k: isize| -> f64 {
        let m = k.div_euclid(n as isize);
        acc[k.rem_euclid(n as isize) as usize] + total * m as f64
    };
    let pt = |k: isize| points[k.rem_euclid(n as isize) as usize];
    let mut out = Vec::with_capacity(n);
    out.push(points[0]);
    let mut k = 0isize;
    for j in 1..n {
        let target = total * j as f64 / n as f64;
        while arc(k + 1) <= target {
            k += 1;
        }
        let xs = [arc(k - 1), arc(k), arc(k + 1), arc(k + 2)];
        let mut p = [0.0; 2];
        for a in 0..2 {
            let ys = [pt(k - 1)[a], pt(k)[a], pt(k + 1)[a], pt(k + 2)[a]];
            p[a] = lagrange4(&xs, &ys, target);
        }
        out.push(p);
    }
    SurfaceState::curve(out, s.time)
}

#[allow(clippy::too_many_arguments)]
fn profile_step(
    radii: &[f64],
    z_min: f64,
    dz: f64,
    view: &FieldView,
    rescaled: bool,
    t: f64,
    dt: f64,
    opts: &StepOptions,
) -> Result<SurfaceState> {
    let n = radii.len();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let (lin, drift) = if rescaled { (0.5, 0.5) } else { (0.0, 0.0) };
    for i in 0..n {
        let z = z_min + i as f64 * dz;
        let rz = profile_slope(radii, dz, i);
        let g = (1.0 + rz * rz).sqrt();
        let a = 1.0 / (g * g);
        let diff = dt * a / (dz * dz);
        let adv = dt * drift * z / (2.0 * dz);
        diag[i] = 1.0 + 2.0 * diff - dt * lin;
        let (lo, up) = (-diff - adv, -diff + adv);
        if i == 0 {
            upper[i] = lo + up;
        } else if i == n - 1 {
            lower[i] = lo + up;
        } else {
            lower[i] = lo;
            upper[i] = up;
        }
        let nu = [1.0 / g, 0.0, -rz / g];
        let f = normal_forcing(view, [radii[i], 0.0, z], nu)?;
        rhs[i] = radii[i] + dt * (-1.0 / radii[i] + g * f);
    }
    let r = thomas(&lower, &diag, &upper, &rhs);
    if let Some(i) = r.iter().position(|&v| !(v > opts.r_min)) {
        return Err(Error::Singular { time: t + dt, reason: format!("pinch at node {i}: r = {}", r[i]) });
    }
    Ok(SurfaceState::profile(r, z_min, dz, t + dt))
}

/// Tridiagonal solve; `lower[0]` and `upper[n-1]` are ignored.
pub(crate) fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
