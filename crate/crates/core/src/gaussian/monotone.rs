use super::config::FunctionalConfig;
use super::cutoff::cutoff_functional;
use crate::error::{Error, Result};
use crate::loja::{CheckReport, Provenance};
use crate::mesh::SurfaceState;

const J_ANCHOR: &str = "J(s) = e^{K^2(sbar-s)/2} F^psi_{y,sbar-s}(M_s) + (2 gamma/K^2)(e^{K^2(sbar-s)/2} - 1) is monotone in s";

/// `J_{y,sbar}(s)` from the cutoff functional `F^psi_{y,sbar-s}(M_s)`.
/// At `K = 0` the second term is replaced by its limit `gamma (sbar - s)`.
pub fn j_value(f_psi: f64, s: f64, sigma_bar: f64, k: f64, gamma: f64) -> f64 {
    let d = sigma_bar - s;
    let a = 0.5 * k * k * d;
    let tail = if a == 0.0 { gamma * d } else { 2.0 * gamma / (k * k) * a.exp_m1() };
    a.exp() * f_psi + tail
}

/// Samples `(s, F^psi_{y,sbar-s}(M_s))` along unrescaled slices.
pub fn j_samples(
    states: &[SurfaceState],
    y: [f64; 3],
    sigma_bar: f64,
    cfg: &FunctionalConfig,
) -> Result<Vec<(f64, f64)>> {
    states
        .iter()
        .map(|m| {
            if !(sigma_bar > m.time) {
                return Err(Error::InvalidInput(format!(
                    "sigma_bar {sigma_bar} must exceed sample time {}",
                    m.time
                )));
            }
            let v = cutoff_functional(m, cfg, y, sigma_bar - m.time, 1, 1.0)?;
            Ok((m.time, v.value))
        })
        .collect()
}

/// Checks that `J` does not increase between consecutive samples:
/// slack `J(s_k) - J(s_{k+1}) >= -tol`.
pub fn almost_monotone_j(
    samples: &[(f64, f64)],
    y: [f64; 3],
    sigma_bar: f64,
    cfg: &FunctionalConfig,
    tol: f64,
) -> Result<CheckReport> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData("J needs at least two samples".into()));
    }
    let gamma = cfg.gamma();
    let j: Vec<f64> = samples.iter().map(|&(s, f)| j_value(f, s, sigma_bar, cfg.k, gamma)).collect();
    let slacks = j.windows(2).map(|w| w[0] - w[1]).collect();
    let times = samples[1..].iter().map(|p| p.0).collect();
    let mut report = CheckReport::new("almost_monotone_J", J_ANCHOR)
        .with_slacks(times, slacks, tol)
        .constant("K", cfg.k, Provenance::Configured, "forcing bound")
        .constant("K_psi", cfg.k_psi, Provenance::Measured, "sampled cutoff derivative bound")
        .constant("r0", cfg.r0, Provenance::Configured, "localisation radius")
        .constant("c(K_psi,n)", cfg.c_psi, Provenance::Formula, "max of the error profile over z > 0")
        .constant("gamma", gamma, Provenance::Formula, "lambda0 r0^{-n-2} c(K_psi,n)")
        .constant("sigma_bar", sigma_bar, Provenance::Configured, "terminal scale");
    if y[0].hypot(y[1]).hypot(y[2]) >= cfg.r0 {
        report = report.vacuous(None, "center y outside B_{r0}");
    }
    Ok(report.note("J is checked as non-increasing in s, the direction that yields J(s) <= J(s_*)"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loja::Verdict;
    use std::f64::consts::PI;

    #[test]
    fn small_k_matches_limit() {
        // Taylor oracle: (2 gamma / K^2)(e^{K^2 d/2} - 1) = gamma d + gamma K^2 d^2/4 + ...
        let (f, s, sb, g) = (1.3, -0.7, 0.0, 0.4);
        let lim = j_value(f, s, sb, 0.0, g);
        assert!((lim - (f + g * 0.7)).abs() < 1e-15);
        let small = j_value(f, s, sb, 1e-4, g);
        assert!((small - lim).abs() < 1e-6);
        let taylor = f * (1.0 + 0.5e-8 * 0.7) + g * 0.7 + g * 1e-8 * 0.49 / 4.0;
        assert!((small - taylor).abs() < 1e-14);
    }

    #[test]
    fn exact_shrinking_circle_is_monotone() {
        let cfg = FunctionalConfig::new(2.0, 0.0, 1.0, 1).unwrap();
        let states: Vec<SurfaceState> = (0..20)
            .map(|k| {
                let s = -1.0 + 0.04 * k as f64;
                let r = (-2.0 * s).sqrt();
                let pts = (0..256)
                    .map(|j| {
                        let a = 2.0 * PI * j as f64 / 256.0;
                        [r * a.cos(), r * a.sin()]
                    })
                    .collect();
                SurfaceState::curve(pts, s)
            })
            .collect();
        let samples = j_samples(&states, [0.0; 3], 0.0, &cfg).unwrap();
        // Self-similar: the Gaussian area part is constant.
        for w in samples.windows(2) {
            assert!((w[0].1 - w[1].1).abs() < 1e-12);
        }
        let r = almost_monotone_j(&samples, [0.0; 3], 0.0, &cfg, 0.0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn single_sample_is_an_error() {
        let cfg = FunctionalConfig::new(1.0, 0.0, 1.0, 1).unwrap();
        assert!(almost_monotone_j(&[(0.0, 1.0)], [0.0; 3], 1.0, &cfg, 0.0).is_err());
    }

    #[test]
    fn increasing_area_fails() {
        let cfg = FunctionalConfig::new(1.0, 0.0, 1.0, 1).unwrap();
        let samples = [(-1.0, 1.0), (-0.9, 1.5)];
        let r = almost_monotone_j(&samples, [0.0; 3], 0.0, &cfg, 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }
}
