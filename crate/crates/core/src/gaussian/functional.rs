use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{Geometry, SurfaceState};

/// Gaussian kernel `rho_{y,sigma}(x) = (4 pi sigma)^{-n/2} exp(-|x-y|^2 / (4 sigma))`.
pub fn gaussian_kernel(dist_sq: f64, sigma: f64, n: usize) -> f64 {
    (4.0 * PI * sigma).powf(-(n as f64) / 2.0) * (-dist_sq / (4.0 * sigma)).exp()
}

/// Per-node contributions `w_i rho_{y,sigma}` whose sum is `F_{y,sigma}`.
///
/// Curves live in the plane `x_3 = 0`. For profiles the parallel circle
/// through each node is integrated exactly in angle when `y` is on the axis
/// and by the periodic trapezoid rule otherwise.
pub fn gaussian_weights(s: &SurfaceState, y: [f64; 3], sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {sigma}")));
    }
    let n = s.dim();
    let w = s.weights();
    match &s.geometry {
        Geometry::Curve { .. } => Ok((0..s.len())
            .map(|i| {
                let p = s.planar(i);
                let d = (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2) + y[2] * y[2];
                w[i] * gaussian_kernel(d, sigma, n)
            })
            .collect()),
        Geometry::Profile { radii, .. } => {
            let b = y[0].hypot(y[1]);
            Ok((0..s.len())
                .map(|i| {
                    let r = radii[i];
                    let dz = s.z(i) - y[2];
                    let base = gaussian_kernel((r - b).powi(2) + dz * dz, sigma, n);
                    w[i] * base * mean_exp_cos(r * b / (2.0 * sigma))
                })
                .collect())
        }
    }
}

/// `(1/2pi) int_0^{2pi} exp(c (cos a - 1)) da`, the scaled Bessel `I_0`.
fn mean_exp_cos(c: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    // The trapezoid rule is spectrally accurate here; the integrand is
    // concentrated in a window of width ~ 1/sqrt(c).
    let m = (64 + 16 * c.sqrt().ceil() as usize).min(1 << 14);
    (0..m)
        .map(|k| (c * ((2.0 * PI * k as f64 / m as f64).cos() - 1.0)).exp())
        .sum::<f64>()
        / m as f64
}

pub fn f_functional(s: &SurfaceState, y: [f64; 3], sigma: f64) -> Result<f64> {
    Ok(gaussian_weights(s, y, sigma)?.iter().sum())
}

/// The distinguished functional `F = F_{0,1}`.
pub fn f_value(s: &SurfaceState) -> f64 {
    gaussian_weights(s, [0.0; 3], 1.0).map(|w| w.iter().sum()).unwrap_or(f64::NAN)
}

/// Gaussian-weighted `int |phi|^2 rho` over the nodes with `|x| <= radius`
/// (all nodes when `radius` is `None`).
pub fn weighted_l2_sq(s: &SurfaceState, field: &[f64], radius: Option<f64>) -> f64 {
    let w = gaussian_weights(s, [0.0; 3], 1.0).expect("unit scale");
    let r2 = radius.map(|r| r * r);
    (0..s.len())
        .filter(|&i| r2.map_or(true, |r2| s.norm_sq(i) <= r2))
        .map(|i| w[i] * field[i] * field[i])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_model_surface, ShrinkerModel};
    use std::f64::consts::{E, SQRT_2};

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
    fn round_circle_matches_closed_form() {
        let exact = (2.0 * PI / E).sqrt();
        let f = f_functional(&circle(SQRT_2, 512), [0.0; 3], 1.0).unwrap();
        assert!((f - exact).abs() < 1e-4);
        for r in [0.5, 1.0, 2.0, 3.0] {
            let f = f_value(&circle(r, 1024));
            assert!((f - ShrinkerModel::round_f_value(r)).abs() < 1e-4);
        }
    }

    #[test]
    fn line_has_unit_gaussian_area() {
        let s = SurfaceState::line([1.0, 0.0], 20.0, 2001);
        assert!((f_value(&s) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cylinder_is_circle_times_line() {
        let s = make_model_surface(&ShrinkerModel::cylinder(), 512, None, 0.0).unwrap();
        assert!((f_value(&s) - (2.0 * PI / E).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn off_axis_center_agrees_with_brute_force() {
        // Independent oracle: explicit angular sum over the surface of revolution.
        let s = SurfaceState::profile(vec![1.2; 201], -6.0, 0.06, 0.0);
        let y = [0.7, -0.4, 0.3];
        let sigma = 0.8;
        let mut brute = 0.0;
        let m = 2000;
        for i in 0..201 {
            let z = s.z(i);
            let end = if i == 0 || i == 200 { 0.5 } else { 1.0 };
            for k in 0..m {
                let a = 2.0 * PI * k as f64 / m as f64;
                let x = [1.2 * a.cos(), 1.2 * a.sin(), z];
                let d = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                brute += end * 1.2 * 0.06 * (2.0 * PI / m as f64) * gaussian_kernel(d, sigma, 2);
            }
        }
        let f = f_functional(&s, y, sigma).unwrap();
        assert!((f - brute).abs() < 1e-10 * brute.max(1.0), "{f} {brute}");
    }

    #[test]
    fn rejects_nonpositive_scale() {
        assert!(f_functional(&circle(1.0, 32), [0.0; 3], 0.0).is_err());
    }
}
