use super::curvature::{curvature_data, NodeCurvature};
use super::state::{Geometry, SurfaceState};
use crate::error::{Error, Result};

/// Results of applying the intrinsic operators to a nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftLaplacian {
    /// Laplace-Beltrami `Delta f`.
    pub laplacian: Vec<f64>,
    /// Drift Laplacian `Delta f - <x, grad f>/2`.
    pub drift: Vec<f64>,
    /// Stability operator `drift + f/2 + |A|^2 f`.
    pub full: Vec<f64>,
}

pub fn laplacian(s: &SurfaceState, field: &[f64]) -> Result<Vec<f64>> {
    Ok(apply_drift_laplacian(s, field)?.laplacian)
}

pub fn apply_drift_laplacian(s: &SurfaceState, field: &[f64]) -> Result<DriftLaplacian> {
    let curv = curvature_data(s)?;
    apply_with(s, &curv, field)
}

pub(crate) fn apply_with(
    s: &SurfaceState,
    curv: &[NodeCurvature],
    field: &[f64],
) -> Result<DriftLaplacian> {
    if field.len() != s.len() {
        return Err(Error::InvalidInput(format!(
            "field has {} values for {} nodes",
            field.len(),
            s.len()
        )));
    }
    let (lap, grad) = match &s.geometry {
        Geometry::Curve { points, closed } => curve_derivatives(points, *closed, field),
        Geometry::Profile { radii, dz, .. } => profile_derivatives(radii, *dz, curv, field),
    };
    let n = field.len();
    let mut drift = Vec::with_capacity(n);
    let mut full = Vec::with_capacity(n);
    for i in 0..n {
        let p = s.planar(i);
        let t = curv[i].tangent;
        let xt = p[0] * t[0] + p[1] * t[1];
        let d = lap[i] - 0.5 * xt * grad[i];
        drift.push(d);
        full.push(d + 0.5 * field[i] + curv[i].norm_a_sq() * field[i]);
    }
    Ok(DriftLaplacian { laplacian: lap, drift, full })
}

/// Second and first arclength derivatives on a polygon, using chord
/// lengths as the local spacing.
fn curve_derivatives(points: &[[f64; 2]], closed: bool, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let dist = |i: usize, j: usize| (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
    let mut lap = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let range = if closed { 0..n } else { 1..n - 1 };
    for i in range {
        let im = (i + n - 1) % n;
        let ip = (i + 1) % n;
        let a = dist(i, im);
        let b = dist(ip, i);
        lap[i] = 2.0 * ((f[ip] - f[i]) / b - (f[i] - f[im]) / a) / (a + b);
        grad[i] = (a * a * f[ip] - b * b * f[im] + (b * b - a * a) * f[i]) / (a * b * (a + b));
    }
    if !closed {
        lap[0] = lap[1];
        grad[0] = grad[1];
        lap[n - 1] = lap[n - 2];
        grad[n - 1] = grad[n - 2];
    }
    (lap, grad)
}

/// Profile operators in divergence form, `(1/(r g)) d/dz (r/g f_z)` with
/// `g = sqrt(1 + r_z^2)`, and the arclength derivative `f_z / g`. Ends are
/// reflected evenly.
fn profile_derivatives(
    radii: &[f64],
    dz: f64,
    curv: &[NodeCurvature],
    f: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = radii.len();
    // 1/g is the z-component of the unit tangent.
    let coef: Vec<f64> = (0..n).map(|i| radii[i] * curv[i].tangent[1]).collect();
    let mirror = |i: isize| -> usize {
        if i < 0 {
            (-i) as usize
        } else if i >= n as isize {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        }
    };
    let flux = |i: isize| -> f64 {
        // Flux between nodes i and i+1.
        let (a, b) = (mirror(i), mirror(i + 1));
        0.5 * (coef[a] + coef[b]) * (f[b] - f[a]) / dz
    };
    let mut lap = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let ii = i as isize;
        let inv_g = curv[i].tangent[1];
        lap.push((flux(ii) - flux(ii - 1)) / dz * inv_g / radii[i]);
        let fz = (f[mirror(ii + 1)] - f[mirror(ii - 1)]) / (2.0 * dz);
        grad.push(fz * inv_g);
    }
    (lap, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_model_surface, ShrinkerModel};
    use std::f64::consts::PI;

    fn circle(r: f64, n: usize) -> SurfaceState {
        SurfaceState::curve(
            (0..n)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    [r * t.cos(), r * t.sin()]
                })
                .collect(),
            0.0,
        )
    }

    #[test]
    fn constants_on_shrinker_circle() {
        let s = make_model_surface(&ShrinkerModel::circle(), 64, None, 0.0).unwrap();
        let out = apply_drift_laplacian(&s, &vec![3.0; 64]).unwrap();
        for i in 0..64 {
            assert!(out.drift[i].abs() < 1e-10);
            // L c = (1/2 + |A|^2) c = c on the circle of radius sqrt 2.
            assert!((out.full[i] - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cosine_on_unit_circle_is_an_eigenfunction() {
        // On a regular polygon the chord-length stencil reproduces this
        // eigenfunction exactly: 2 cos h - 2 = -(2 sin(h/2))^2.
        let err = |n: usize| {
            let s = circle(1.0, n);
            let f: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
            let lap = laplacian(&s, &f).unwrap();
            (0..n).map(|j| (lap[j] + f[j]).abs()).fold(0.0, f64::max)
        };
        assert!(err(64) < 1e-10);
        assert!(err(128) < 1e-10);
    }

    #[test]
    fn drift_of_height_on_flat_profile() {
        let s = SurfaceState::profile(vec![1.0; 41], -4.0, 0.2, 0.0);
        let f: Vec<f64> = (0..41).map(|i| s.z(i)).collect();
        let out = apply_drift_laplacian(&s, &f).unwrap();
        for i in 1..40 {
            assert!((out.drift[i] + 0.5 * f[i]).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn profile_laplacian_of_quadratic_on_cylinder() {
        let s = SurfaceState::profile(vec![2.0; 41], -4.0, 0.2, 0.0);
        let f: Vec<f64> = (0..41).map(|i| s.z(i) * s.z(i)).collect();
        let lap = laplacian(&s, &f).unwrap();
        for v in &lap[1..40] {
            assert!((v - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let s = circle(1.0, 32);
        assert!(apply_drift_laplacian(&s, &[0.0; 3]).is_err());
    }
}
