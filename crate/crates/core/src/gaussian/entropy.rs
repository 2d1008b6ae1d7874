use serde::{Deserialize, Serialize};

use super::functional::f_functional;
use crate::error::Result;
use crate::mesh::{Geometry, SurfaceState};

/// Budget of the entropy search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySearch {
    /// Grid points per spatial axis.
    pub grid_points: usize,
    /// Log-spaced grid points in `sigma` over `[1e-2, 1e2]`.
    pub sigma_points: usize,
    /// Bounding box inflation, in units of the diameter.
    pub inflation: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EntropySearch {
    fn default() -> Self {
        Self { grid_points: 11, sigma_points: 21, inflation: 2.0, max_iter: 600, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Best value found; a lower bound for the entropy.
    pub lambda: f64,
    pub y: [f64; 3],
    pub sigma: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Lower bound for `sup_{y, sigma} F_{y,sigma}(s)`: a coarse grid followed
/// by Nelder-Mead in `(y, ln sigma)`.
///
/// Curves search `y` in their plane. Profiles are invariant under rotation
/// about the axis, so the search runs over the distance `b` from the axis
/// and the height of `y`.
pub fn entropy_estimate(s: &SurfaceState, search: &EntropySearch) -> Result<EntropyEstimate> {
    let profile = matches!(s.geometry, Geometry::Profile { .. });
    let to_y = |p: &[f64; 3]| if profile { [p[0].abs(), 0.0, p[1]] } else { [p[0], p[1], 0.0] };
    let mut evaluations = 0usize;
    let mut eval = |p: &[f64; 3]| -> f64 {
        evaluations += 1;
        f_functional(s, to_y(p), p[2].exp()).unwrap_or(f64::NEG_INFINITY)
    };

    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for i in 0..s.len() {
        let q = s.planar(i);
        for a in 0..2 {
            lo[a] = lo[a].min(q[a]);
            hi[a] = hi[a].max(q[a]);
        }
    }
    if profile {
        lo[0] = -hi[0];
    }
    let diam = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let pad = search.inflation * diam;
    let axis = |a: usize| -> Vec<f64> {
        let (l, h) = (lo[a] - pad, hi[a] + pad);
        let m = search.grid_points.max(2);
        (0..m).map(|k| l + (h - l) * k as f64 / (m - 1) as f64).collect()
    };
    let (ax0, ax1) = (axis(0), axis(1));
    let ms = search.sigma_points.max(2);
    let sig: Vec<f64> = (0..ms).map(|k| (-2.0 + 4.0 * k as f64 / (ms - 1) as f64) * 10f64.ln()).collect();

    // The origin at unit scale is always a candidate, so the result dominates F.
    let mut best = [0.0, 0.0, 0.0];
    let mut best_v = eval(&best);
    for &a in &ax0 {
        for &b in &ax1 {
            for &l in &sig {
                let p = [a, b, l];
                let v = eval(&p);
                if v > best_v {
                    best_v = v;
                    best = p;
                }
            }
        }
    }
    let step = [
        (ax0[1] - ax0[0]).abs() * 0.5,
        (ax1[1] - ax1[0]).abs() * 0.5,
        (sig[1] - sig[0]).abs() * 0.5,
    ];
    let (p, v, converged) = nelder_mead_max(&mut eval, best, step, search.max_iter, search.tol);
    let (p, v) = if v > best_v { (p, v) } else { (best, best_v) };
    Ok(EntropyEstimate { lambda: v, y: to_y(&p), sigma: p[2].exp(), evaluations, converged })
}

/// Maximizes `f` over `R^3` by Nelder-Mead from `x0` with initial simplex
/// steps `step`. Returns the best vertex, its value and whether the simplex
/// value spread fell below `tol`.
pub(crate) fn nelder_mead_max(
    f: &mut impl FnMut(&[f64; 3]) -> f64,
    x0: [f64; 3],
    step: [f64; 3],
    max_iter: usize,
    tol: f64,
) -> ([f64; 3], f64, bool) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((x0, -f(&x0)));
    for a in 0..3 {
        let mut x = x0;
        x[a] += step[a];
        simplex.push((x, -f(&x)));
    }
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[3].1 - simplex[0].1).abs() <= tol * (1.0 + simplex[0].1.abs()) {
            converged = true;
            break;
        }
        let mut c = [0.0; 3];
        for v in &simplex[..3] {
            for a in 0..3 {
                c[a] += v.0[a] / 3.0;
            }
        }
        let worst = simplex[3];
        let xr = lerp(&c, &worst.0, -1.0);
        let fr = -f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&c, &worst.0, -2.0);
            let fe = -f(&xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = lerp(&c, &worst.0, -0.5);
                (x, -f(&x))
            } else {
                let x = lerp(&c, &worst.0, 0.5);
                (x, -f(&x))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&b, &v.0, 0.5);
                    v.1 = -f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, -simplex[0].1, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::f_value;
    use crate::mesh::{make_model_surface, ShrinkerModel};
    use std::f64::consts::{E, PI, SQRT_2};

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

    /// Independent oracle: dense scan in `sigma` at `y = 0`.
    fn scan(s: &SurfaceState) -> (f64, f64) {
        (0..4000)
            .map(|k| {
                let sigma = 0.05 * (1.0 + k as f64 * 2e-3).powi(2);
                (f_functional(s, [0.0; 3], sigma).unwrap(), sigma)
            })
            .fold((f64::MIN, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    }

    #[test]
    fn shrinker_circle_entropy() {
        let s = circle(SQRT_2, 512);
        let e = entropy_estimate(&s, &EntropySearch::default()).unwrap();
        assert!((e.lambda - (2.0 * PI / E).sqrt()).abs() < 1e-4);
        assert!((e.sigma - 1.0).abs() < 1e-3);
        assert!(e.y[0].hypot(e.y[1]) < 1e-3);
        let (v, _) = scan(&s);
        assert!(e.lambda >= v - 1e-12);
    }

    #[test]
    fn radius_two_maximizer_is_sigma_two() {
        let s = circle(2.0, 512);
        let e = entropy_estimate(&s, &EntropySearch::default()).unwrap();
        assert!((e.lambda - (2.0 * PI / E).sqrt()).abs() < 1e-4);
        assert!((e.sigma - 2.0).abs() < 1e-3);
        let (_, sig) = scan(&s);
        assert!((sig - 2.0).abs() < 1e-2);
    }

    #[test]
    fn entropy_dominates_f() {
        let u = |t: f64| 0.3 * (3.0 * t).cos();
        let s = make_model_surface(&ShrinkerModel::circle(), 128, Some(&u), 0.0).unwrap();
        let e = entropy_estimate(&s, &EntropySearch::default()).unwrap();
        assert!(e.lambda >= f_value(&s));
    }

    #[test]
    fn entropy_is_dilation_invariant() {
        let u = |t: f64| 0.2 * (2.0 * t).cos();
        let s = make_model_surface(&ShrinkerModel::circle(), 256, Some(&u), 0.0).unwrap();
        let a = entropy_estimate(&s, &EntropySearch::default()).unwrap();
        let b = entropy_estimate(&s.scaled(2.7), &EntropySearch::default()).unwrap();
        assert!((a.lambda - b.lambda).abs() < 1e-3);
    }

    #[test]
    fn cylinder_entropy_on_axis() {
        let s = make_model_surface(&ShrinkerModel::cylinder(), 257, None, 0.0).unwrap();
        let e = entropy_estimate(&s, &EntropySearch::default()).unwrap();
        assert!((e.lambda - (2.0 * PI / E).sqrt()).abs() < 1e-4, "{e:?}");
    }
}
