use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::model::{ModelKind, ShrinkerModel};
use super::state::{Geometry, SurfaceState};
use crate::error::{Error, Result};

/// Hoelder exponent of the discrete `C^{2,alpha}` proxy.
pub const HOLDER_ALPHA: f64 = 0.5;

/// Cumulative discrete norms: `c1 >= c0` includes `c0`, and so on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphNorms {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Max ratio of consecutive second-difference increments to `h^alpha`.
    pub holder: f64,
}

impl GraphNorms {
    /// The `C^{2,alpha}` proxy `c2 + holder`.
    pub fn c2_alpha(&self) -> f64 {
        self.c2 + self.holder
    }
}

/// Normal graph `U` over a model shrinker, sampled on the model's
/// parametrization (polar angle for the circle, `z` for the cylinder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub base: ShrinkerModel,
    /// Model parameter of each sample.
    pub coords: Vec<f64>,
    /// Normal offset `U`.
    pub samples: Vec<f64>,
    /// Model arclength spacing of the samples.
    pub spacing: f64,
    pub domain_radius: f64,
    pub norms: GraphNorms,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl GraphFunction {
    /// Builds the graph from samples on the model grid and restricts it to
    /// `B_R`.
    pub fn from_samples(
        base: ShrinkerModel,
        coords: Vec<f64>,
        samples: Vec<f64>,
        domain_radius: f64,
    ) -> Result<Self> {
        if samples.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidInput("non-finite graph sample".into()));
        }
        if !(domain_radius > 0.0) {
            return Err(Error::InvalidInput("domain radius must be positive".into()));
        }
        let n = samples.len();
        let periodic = base.kind == ModelKind::Circle;
        let spacing = match base.kind {
            ModelKind::Circle => base.radius * 2.0 * PI / n as f64,
            ModelKind::Cylinder => coords[1] - coords[0],
        };
        let at = |i: isize| -> f64 {
            if periodic {
                samples[i.rem_euclid(n as isize) as usize]
            } else if i < 0 {
                samples[(-i) as usize]
            } else if i >= n as isize {
                samples[2 * (n - 1) - i as usize]
            } else {
                samples[i as usize]
            }
        };
        let first = (0..n as isize)
            .map(|i| (at(i + 1) - at(i - 1)) / (2.0 * spacing))
            .collect();
        let second = (0..n as isize)
            .map(|i| (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (spacing * spacing))
            .collect();
        let mut g = Self {
            base,
            coords,
            samples,
            spacing,
            domain_radius,
            norms: GraphNorms::default(),
            first,
            second,
        };
        g.norms = g.norms_on(domain_radius);
        Ok(g)
    }

    /// Whether sample `j` lies in `B_R`. For the circle this is the distance
    /// of the graph point from the origin; for the cylinder the axial
    /// distance `|z|`, with the graph taken over the whole axis window.
    pub fn in_ball(&self, j: usize, radius: f64) -> bool {
        match self.base.kind {
            ModelKind::Circle => self.base.radius + self.samples[j] <= radius,
            ModelKind::Cylinder => self.coords[j].abs() <= radius,
        }
    }

    /// Norms of the restriction to `B_R`. Derivatives are taken on the full
    /// graph, so shrinking `R` never increases a norm.
    pub fn norms_on(&self, radius: f64) -> GraphNorms {
        let n = self.samples.len();
        let mut c0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        let mut d2: f64 = 0.0;
        let mut holder: f64 = 0.0;
        let periodic = self.base.kind == ModelKind::Circle;
        let scale = self.spacing.powf(HOLDER_ALPHA);
        for j in 0..n {
            if !self.in_ball(j, radius) {
                continue;
            }
            c0 = c0.max(self.samples[j].abs());
            d1 = d1.max(self.first[j].abs());
            d2 = d2.max(self.second[j].abs());
            let k = if periodic { Some((j + 1) % n) } else { (j + 1 < n).then_some(j + 1) };
            if let Some(k) = k {
                if self.in_ball(k, radius) {
                    holder = holder.max((self.second[k] - self.second[j]).abs() / scale);
                }
            }
        }
        GraphNorms { c0, c1: c0 + d1, c2: c0 + d1 + d2, holder }
    }

    pub fn restrict(&self, radius: f64) -> Self {
        let mut g = self.clone();
        g.domain_radius = radius;
        g.norms = self.norms_on(radius);
        g
    }

    /// Gaussian measure of each model sample: `rho` times the model's area
    /// element.
    pub fn model_weights(&self) -> Vec<f64> {
        let r = self.base.radius;
        match self.base.kind {
            ModelKind::Circle => {
                let w = (4.0 * PI).powf(-0.5) * (-r * r / 4.0).exp() * self.spacing;
                vec![w; self.samples.len()]
            }
            ModelKind::Cylinder => {
                let n = self.samples.len();
                (0..n)
                    .map(|j| {
                        let z = self.coords[j];
                        let end = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                        end * (4.0 * PI).recip()
                            * (-(r * r + z * z) / 4.0).exp()
                            * 2.0
                            * PI
                            * r
                            * self.spacing
                    })
                    .collect()
            }
        }
    }

    /// Gaussian-weighted `L^2` norm of `U` over the domain ball.
    pub fn gaussian_l2(&self) -> f64 {
        self.model_weights()
            .iter()
            .enumerate()
            .filter(|(j, _)| self.in_ball(*j, self.domain_radius))
            .map(|(j, w)| w * self.samples[j] * self.samples[j])
            .sum::<f64>()
            .sqrt()
    }

    /// Gaussian-weighted `L^2` distance to another graph on the same grid,
    /// over the intersection of both domain balls.
    pub fn gaussian_l2_distance(&self, other: &Self) -> Result<f64> {
        if self.samples.len() != other.samples.len() || self.base.kind != other.base.kind {
            return Err(Error::InvalidInput("graphs live on different grids".into()));
        }
        let radius = self.domain_radius.min(other.domain_radius);
        Ok(self
            .model_weights()
            .iter()
            .enumerate()
            .filter(|(j, _)| self.in_ball(*j, radius) && other.in_ball(*j, radius))
            .map(|(j, w)| {
                let d = self.samples[j] - other.samples[j];
                w * d * d
            })
            .sum::<f64>()
            .sqrt())
    }
}

/// Writes `s` as a normal graph over `model`, restricted to `B_R`.
pub fn graph_over_model(
    s: &SurfaceState,
    model: &ShrinkerModel,
    ball_radius: f64,
) -> Result<GraphFunction> {
    match (&s.geometry, model.kind) {
        (Geometry::Curve { points, closed: true }, ModelKind::Circle) => {
            let (coords, samples) = radial_resample(points, model.radius)?;
            GraphFunction::from_samples(*model, coords, samples, ball_radius)
        }
        (Geometry::Profile { radii, .. }, ModelKind::Cylinder) => {
            let coords = (0..radii.len()).map(|i| s.z(i)).collect();
            let samples = radii.iter().map(|r| r - model.radius).collect();
            GraphFunction::from_samples(*model, coords, samples, ball_radius)
        }
        _ => Err(Error::InvalidInput("surface family does not match the model".into())),
    }
}

/// Radial offset of a star-shaped closed polygon, sampled at uniform polar
/// angles by cubic interpolation of `r(theta)` through the nodes.
fn radial_resample(points: &[[f64; 2]], radius: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = points.len();
    let mut theta = Vec::with_capacity(n + 1);
    let mut r = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let ri = p[0].hypot(p[1]);
        if ri < 1e-12 {
            return Err(Error::NotGraphical { node: i });
        }
        r.push(ri);
    }
    theta.push(points[0][1].atan2(points[0][0]));
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let cross = a[0] * b[1] - a[1] * b[0];
        let dot = a[0] * b[0] + a[1] * b[1];
        let d = cross.atan2(dot);
        if !(d > 0.0) {
            return Err(Error::NotGraphical { node: (i + 1) % n });
        }
        theta.push(theta[i] + d);
    }
    if (theta[n] - theta[0] - 2.0 * PI).abs() > 1e-9 {
        return Err(Error::NotGraphical { node: 0 });
    }
    // Periodic extension helpers.
    let ang = |k: isize| -> f64 {
        let m = k.div_euclid(n as isize);
        let j = k.rem_euclid(n as isize) as usize;
        theta[j] + 2.0 * PI * m as f64
    };
    let rad = |k: isize| r[k.rem_euclid(n as isize) as usize];
    let mut coords = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    for j in 0..n {
        let target0 = 2.0 * PI * j as f64 / n as f64;
        let t = theta[0] + (target0 - theta[0]).rem_euclid(2.0 * PI);
        // theta[k] <= t < theta[k+1]
        let k = match theta[..=n].binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(k) => k.min(n - 1),
            Err(k) => k - 1,
        } as isize;
        let xs = [ang(k - 1), ang(k), ang(k + 1), ang(k + 2)];
        let ys = [rad(k - 1), rad(k), rad(k + 1), rad(k + 2)];
        coords.push(target0);
        samples.push(lagrange4(&xs, &ys, t) - radius);
    }
    Ok((coords, samples))
}

pub(crate) fn lagrange4(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += l * ys[i];
    }
    acc
}
