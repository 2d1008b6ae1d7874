use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::model::{ModelKind, ShrinkerModel};
use crate::error::{Error, Result};

/// Smallest admissible node count for a curve.
pub const MIN_CURVE_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    /// Planar polygon, counter-clockwise when closed.
    Curve { points: Vec<[f64; 2]>, closed: bool },
    /// Surface of revolution `r(z)` about the `z`-axis on the uniform grid
    /// `z_i = z_min + i dz`, homogeneous Neumann at both ends.
    Profile { radii: Vec<f64>, z_min: f64, dz: f64 },
}

/// A discrete hypersurface at a given flow time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceState {
    pub geometry: Geometry,
    pub time: f64,
}

impl SurfaceState {
    pub fn curve(points: Vec<[f64; 2]>, time: f64) -> Self {
        Self { geometry: Geometry::Curve { points, closed: true }, time }
    }

    pub fn profile(radii: Vec<f64>, z_min: f64, dz: f64, time: f64) -> Self {
        Self { geometry: Geometry::Profile { radii, z_min, dz }, time }
    }

    /// Open straight segment through the origin, sampled uniformly. Used as
    /// the flat reference for the Gaussian normalisation.
    pub fn line(direction: [f64; 2], half_length: f64, nodes: usize) -> Self {
        let norm = direction[0].hypot(direction[1]);
        let d = [direction[0] / norm, direction[1] / norm];
        let h = 2.0 * half_length / (nodes - 1) as f64;
        let points = (0..nodes)
            .map(|i| {
                let s = -half_length + i as f64 * h;
                [s * d[0], s * d[1]]
            })
            .collect();
        Self { geometry: Geometry::Curve { points, closed: false }, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        match self.geometry {
            Geometry::Curve { .. } => 1,
            Geometry::Profile { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        match &self.geometry {
            Geometry::Curve { points, .. } => points.len(),
            Geometry::Profile { radii, .. } => radii.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_profile(&self) -> bool {
        matches!(self.geometry, Geometry::Profile { .. })
    }

    /// Axial coordinate of profile node `i` (zero for curves).
    pub fn z(&self, i: usize) -> f64 {
        match &self.geometry {
            Geometry::Profile { z_min, dz, .. } => z_min + i as f64 * dz,
            Geometry::Curve { .. } => 0.0,
        }
    }

    /// Ambient position of node `i`. Profiles report the meridian point in
    /// the `xz`-plane, `(r, 0, z)`.
    pub fn point(&self, i: usize) -> [f64; 3] {
        match &self.geometry {
            Geometry::Curve { points, .. } => [points[i][0], points[i][1], 0.0],
            Geometry::Profile { radii, .. } => [radii[i], 0.0, self.z(i)],
        }
    }

    /// Position in the plane that carries the geometry: `(x, y)` for curves,
    /// `(r, z)` for profiles.
    pub fn planar(&self, i: usize) -> [f64; 2] {
        match &self.geometry {
            Geometry::Curve { points, .. } => points[i],
            Geometry::Profile { radii, .. } => [radii[i], self.z(i)],
        }
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        let p = self.planar(i);
        p[0] * p[0] + p[1] * p[1]
    }

    /// Per-node surface measure. Curves use half the adjacent chord lengths,
    /// profiles `2 pi r sqrt(1 + r_z^2) dz` with trapezoid halves at the ends.
    pub fn weights(&self) -> Vec<f64> {
        match &self.geometry {
            Geometry::Curve { points, closed } => {
                let n = points.len();
                let seg = |a: usize, b: usize| {
                    (points[b][0] - points[a][0]).hypot(points[b][1] - points[a][1])
                };
                (0..n)
                    .map(|i| {
                        if *closed {
                            0.5 * (seg((i + n - 1) % n, i) + seg(i, (i + 1) % n))
                        } else if i == 0 {
                            0.5 * seg(0, 1)
                        } else if i == n - 1 {
                            0.5 * seg(n - 2, n - 1)
                        } else {
                            0.5 * (seg(i - 1, i) + seg(i, i + 1))
                        }
                    })
                    .collect()
            }
            Geometry::Profile { radii, dz, .. } => {
                let n = radii.len();
                (0..n)
                    .map(|i| {
                        let rz = profile_slope(radii, *dz, i);
                        let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                        end * 2.0 * PI * radii[i] * (1.0 + rz * rz).sqrt() * dz
                    })
                    .collect()
            }
        }
    }

    pub fn area(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// Chord lengths `|x_{i+1} - x_i|` of a curve (closing segment included
    /// for closed curves).
    pub fn spacings(&self) -> Vec<f64> {
        match &self.geometry {
            Geometry::Curve { points, closed } => {
                let n = points.len();
                let m = if *closed { n } else { n - 1 };
                (0..m)
                    .map(|i| {
                        let j = (i + 1) % n;
                        (points[j][0] - points[i][0]).hypot(points[j][1] - points[i][1])
                    })
                    .collect()
            }
            Geometry::Profile { radii, dz, .. } => vec![*dz; radii.len().saturating_sub(1)],
        }
    }

    /// Characteristic grid spacing used in stability bounds and tolerances.
    pub fn grid_spacing(&self) -> f64 {
        let s = self.spacings();
        s.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Homothety `x -> factor x` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        let geometry = match &self.geometry {
            Geometry::Curve { points, closed } => Geometry::Curve {
                points: points.iter().map(|p| [p[0] * factor, p[1] * factor]).collect(),
                closed: *closed,
            },
            Geometry::Profile { radii, z_min, dz } => Geometry::Profile {
                radii: radii.iter().map(|r| r * factor).collect(),
                z_min: z_min * factor,
                dz: dz * factor,
            },
        };
        Self { geometry, time: self.time }
    }

    /// Checks the structural invariants of the family.
    pub fn validate(&self) -> Result<()> {
        match &self.geometry {
            Geometry::Curve { points, closed } => {
                if *closed && points.len() < MIN_CURVE_NODES {
                    return Err(Error::InvalidInput(format!(
                        "curve needs at least {MIN_CURVE_NODES} nodes, got {}",
                        points.len()
                    )));
                }
                if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(Error::InvalidInput("non-finite curve node".into()));
                }
                let s = self.spacings();
                if let Some(i) = s.iter().position(|&d| d <= 0.0) {
                    return Err(Error::Geometry { node: i, reason: "coincident nodes".into() });
                }
                Ok(())
            }
            Geometry::Profile { radii, dz, .. } => {
                if radii.len() < 3 || *dz <= 0.0 {
                    return Err(Error::InvalidInput("profile needs >= 3 nodes and dz > 0".into()));
                }
                if let Some(i) = radii.iter().position(|&r| !(r > 0.0) || !r.is_finite()) {
                    return Err(Error::Geometry { node: i, reason: "non-positive radius".into() });
                }
                Ok(())
            }
        }
    }
}

/// Centered slope of a profile with the even reflection at the ends.
pub(crate) fn profile_slope(radii: &[f64], dz: f64, i: usize) -> f64 {
    let n = radii.len();
    if i == 0 || i == n - 1 {
        0.0
    } else {
        (radii[i + 1] - radii[i - 1]) / (2.0 * dz)
    }
}

/// Centered second difference of a profile with the even reflection at the
/// ends.
pub(crate) fn profile_second(radii: &[f64], dz: f64, i: usize) -> f64 {
    let n = radii.len();
    let (l, r) = if i == 0 {
        (radii[1], radii[1])
    } else if i == n - 1 {
        (radii[n - 2], radii[n - 2])
    } else {
        (radii[i - 1], radii[i + 1])
    };
    (l - 2.0 * radii[i] + r) / (dz * dz)
}

/// Samples the model (or its normal graph under `perturbation`) at
/// `resolution` nodes. The perturbation is a function of the model's
/// parameter: the polar angle for the circle, `z` for the cylinder.
pub fn make_model_surface(
    model: &ShrinkerModel,
    resolution: usize,
    perturbation: Option<&dyn Fn(f64) -> f64>,
    time: f64,
) -> Result<SurfaceState> {
    if resolution < MIN_CURVE_NODES {
        return Err(Error::InvalidInput(format!(
            "resolution must be at least {MIN_CURVE_NODES}, got {resolution}"
        )));
    }
    let offset = |u: f64| perturbation.map_or(0.0, |f| f(u));
    let limit = model.radius / 2.0;
    let check = |u: f64| -> Result<f64> {
        let v = offset(u);
        if !v.is_finite() || v.abs() >= limit {
            Err(Error::InvalidInput(format!(
                "perturbation {v} at parameter {u} exceeds radius/2 = {limit}"
            )))
        } else {
            Ok(v)
        }
    };
    match model.kind {
        ModelKind::Circle => {
            let points = (0..resolution)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / resolution as f64;
                    let r = model.radius + check(th)?;
                    Ok([r * th.cos(), r * th.sin()])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SurfaceState::curve(points, time))
        }
        ModelKind::Cylinder => {
            let z_min = -model.half_length;
            let dz = 2.0 * model.half_length / (resolution - 1) as f64;
            let radii = (0..resolution)
                .map(|i| Ok(model.radius + check(z_min + i as f64 * dz)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(SurfaceState::profile(radii, z_min, dz, time))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn unperturbed_circle_is_round() {
        let s = make_model_surface(&ShrinkerModel::circle(), 256, None, 0.0).unwrap();
        for i in 0..s.len() {
            assert!((s.norm_sq(i).sqrt() - SQRT_2).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_offset_cylinder() {
        let u = |_z: f64| 0.1;
        let s = make_model_surface(&ShrinkerModel::cylinder(), 256, Some(&u), 0.0).unwrap();
        match &s.geometry {
            Geometry::Profile { radii, .. } => {
                assert!(radii.iter().all(|r| (r - SQRT_2 - 0.1).abs() < 1e-15))
            }
            _ => panic!("expected profile"),
        }
    }

    #[test]
    fn cos2_perturbation_has_stated_deviation() {
        let u = |th: f64| 0.05 * (2.0 * th).cos();
        let s = make_model_surface(&ShrinkerModel::circle(), 128, Some(&u), 0.0).unwrap();
        let dev = (0..s.len())
            .map(|i| (s.norm_sq(i).sqrt() - SQRT_2).abs())
            .fold(0.0, f64::max);
        assert!((dev - 0.05).abs() < 1e-14);
    }

    #[test]
    fn oversized_perturbation_rejected() {
        let u = |_t: f64| -0.8;
        assert!(make_model_surface(&ShrinkerModel::circle(), 64, Some(&u), 0.0).is_err());
        assert!(make_model_surface(&ShrinkerModel::circle(), 8, None, 0.0).is_err());
    }

    #[test]
    fn weights_sum_to_measure() {
        let s = make_model_surface(&ShrinkerModel::circle(), 512, None, 0.0).unwrap();
        let exact = 2.0 * PI * SQRT_2;
        assert!(s.weights().iter().all(|w| *w > 0.0));
        assert!((s.area() - exact).abs() < 1e-4);
        let c = make_model_surface(&ShrinkerModel::cylinder_with_window(3.0), 301, None, 0.0)
            .unwrap();
        assert!((c.area() - 2.0 * PI * SQRT_2 * 6.0).abs() < 1e-10);
    }
}
