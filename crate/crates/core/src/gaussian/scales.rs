use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleFlag {
    Finite,
    /// The defining integral vanished.
    Infinite,
    /// The defining quantity exceeded 1, so no real scale solves the identity.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleReadout {
    pub t: f64,
    /// Shrinker scale: `e^{-R_T^2/2}` equals `phi_window_integral`.
    pub r_t: Option<f64>,
    pub r_t_flag: ScaleFlag,
    /// Localisation scale `2 sqrt(T + 1)`.
    pub r_loc: f64,
    /// Combined scale: `e^{-R_*^2/2} = e^{-R_T^2/2} + e^{-T/2}`.
    pub r_star: Option<f64>,
    pub r_star_flag: ScaleFlag,
    /// `int_{T-1}^{T+1} ||phi||^2 dt`.
    pub phi_window_integral: f64,
}

pub fn localisation_scale(t: f64) -> f64 {
    2.0 * (t + 1.0).sqrt()
}

/// Solves `e^{-R^2/2} = q` for `R >= 0`.
fn invert(q: f64) -> (Option<f64>, ScaleFlag) {
    if q <= 0.0 {
        (None, ScaleFlag::Infinite)
    } else if q > 1.0 {
        (None, ScaleFlag::Undefined)
    } else {
        (Some((-2.0 * q.ln()).max(0.0).sqrt()), ScaleFlag::Finite)
    }
}

/// Integrates the piecewise-linear interpolant of `values` over `[a, b]`,
/// which is the trapezoid rule when `a` and `b` are sample times.
pub fn trapezoid_window(times: &[f64], values: &[f64], a: f64, b: f64) -> Result<f64> {
    let n = times.len();
    if n < 2 || values.len() != n {
        return Err(Error::InsufficientData("need at least two aligned samples".into()));
    }
    let slack = 1e-9 * (times[1] - times[0]).abs();
    if times[0] > a + slack || times[n - 1] < b - slack {
        return Err(Error::InsufficientData(format!(
            "samples cover [{}, {}], need [{a}, {b}]",
            times[0],
            times[n - 1]
        )));
    }
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let (t0, t1) = (times[k], times[k + 1]);
        let (l, r) = (t0.max(a), t1.min(b));
        if r <= l {
            continue;
        }
        let at = |t: f64| values[k] + (values[k + 1] - values[k]) * (t - t0) / (t1 - t0);
        acc += 0.5 * (at(l) + at(r)) * (r - l);
    }
    Ok(acc)
}

/// Scales at time `T` from the series `||phi||^2` restricted to the growing
/// balls `B_{3 e^{t/2} r_0}`.
pub fn shrinker_scale(times: &[f64], phi_sq: &[f64], t: f64) -> Result<ScaleReadout> {
    let integral = trapezoid_window(times, phi_sq, t - 1.0, t + 1.0)?;
    let (r_t, r_t_flag) = invert(integral);
    let (r_star, r_star_flag) = invert(integral + (-t / 2.0).exp());
    Ok(ScaleReadout {
        t,
        r_t,
        r_t_flag,
        r_loc: localisation_scale(t),
        r_star,
        r_star_flag,
        phi_window_integral: integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t0: f64, t1: f64, m: usize) -> Vec<f64> {
        (0..=m).map(|k| t0 + (t1 - t0) * k as f64 / m as f64).collect()
    }

    #[test]
    fn static_shrinker_scales() {
        let ts = grid(0.0, 6.0, 600);
        let r = shrinker_scale(&ts, &vec![0.0; ts.len()], 4.0).unwrap();
        assert_eq!(r.r_t_flag, ScaleFlag::Infinite);
        assert!((r.r_star.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_phi_norm() {
        let ts = grid(0.0, 6.0, 600);
        let c = 0.1;
        let r = shrinker_scale(&ts, &vec![c; ts.len()], 3.0).unwrap();
        assert!((r.phi_window_integral - 2.0 * c).abs() < 1e-12);
        let expect = (-2.0 * (2.0 * c).ln()).sqrt();
        assert!((r.r_t.unwrap() - expect).abs() < 1e-12);
        assert!((-r.r_t.unwrap().powi(2) / 2.0).exp() - r.phi_window_integral < 1e-15);
        assert!(r.r_star.unwrap() <= r.r_t.unwrap());
        assert!(r.r_star.unwrap() <= 3f64.sqrt());
    }

    #[test]
    fn large_integral_is_flagged() {
        let ts = grid(0.0, 6.0, 60);
        let r = shrinker_scale(&ts, &vec![0.8; ts.len()], 3.0).unwrap();
        assert_eq!(r.r_t_flag, ScaleFlag::Undefined);
        assert!(r.r_t.is_none());
    }

    #[test]
    fn localisation_scale_value() {
        assert_eq!(localisation_scale(3.0), 4.0);
    }

    #[test]
    fn coverage_is_required() {
        let ts = grid(0.0, 2.0, 20);
        assert!(shrinker_scale(&ts, &vec![0.0; 21], 1.5).is_err());
    }

    #[test]
    fn unaligned_window_matches_quadrature() {
        // int_{T-1}^{T+1} t dt = 2T for a linear series, exact for any grid.
        let ts = grid(0.0, 5.0, 37);
        let v: Vec<f64> = ts.clone();
        let r = shrinker_scale(&ts, &v.iter().map(|x| x * 0.01).collect::<Vec<_>>(), 2.3).unwrap();
        assert!((r.phi_window_integral - 0.046).abs() < 1e-14);
    }
}
