use serde::{Deserialize, Serialize};

use super::config::{FunctionalConfig, LocalizedConstants};
use super::cutoff::cutoff_functional;
use super::functional::f_value;
use crate::error::Result;
use crate::mesh::SurfaceState;

/// `F~ = mu F` with `mu(t) = exp(K^2 e^{-t})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactModified {
    pub value: f64,
    pub mu: f64,
    pub f: f64,
}

/// `F~ = mu F^ + K_3 e^{-nt/2}` with `mu(t) = exp(K_1 e^{-t})` and
/// `F^ = int psi_t^2 rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedModified {
    pub value: f64,
    pub f_hat: f64,
    pub mu: f64,
    pub constants: LocalizedConstants,
}

pub fn compact_mu(t: f64, k: f64) -> f64 {
    (k * k * (-t).exp()).exp()
}

pub fn modified_functional_compact(t: f64, s: &SurfaceState, k: f64) -> CompactModified {
    let f = f_value(s);
    let mu = compact_mu(t, k);
    CompactModified { value: mu * f, mu, f }
}

/// Localized modified functional from a precomputed `F^`.
pub fn localized_from_f_hat(t: f64, f_hat: f64, cfg: &FunctionalConfig) -> LocalizedModified {
    let constants = cfg.localized_constants();
    let mu = (constants.k1 * (-t).exp()).exp();
    let tail = constants.k3 * (-(cfg.n as f64) * t / 2.0).exp();
    LocalizedModified { value: mu * f_hat + tail, f_hat, mu, constants }
}

/// `F^(t)`: the `psi_t^2`-weighted Gaussian area of a rescaled slice.
pub fn f_hat(t: f64, s: &SurfaceState, cfg: &FunctionalConfig) -> Result<f64> {
    Ok(cutoff_functional(s, cfg, [0.0; 3], 1.0, 2, (-t / 2.0).exp())?.value)
}

pub fn modified_functional_localized(
    t: f64,
    s: &SurfaceState,
    cfg: &FunctionalConfig,
) -> Result<LocalizedModified> {
    Ok(localized_from_f_hat(t, f_hat(t, s, cfg)?, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_model_surface, ShrinkerModel};
    use std::f64::consts::E;

    fn circle() -> SurfaceState {
        make_model_surface(&ShrinkerModel::circle(), 256, None, 0.0).unwrap()
    }

    #[test]
    fn compact_reduces_to_f() {
        let s = circle();
        let m = modified_functional_compact(0.3, &s, 0.0);
        assert_eq!(m.value, m.f);
        let m = modified_functional_compact(60.0, &s, 1.0);
        assert!((m.value - m.f).abs() < 1e-20);
    }

    #[test]
    fn compact_unit_forcing_at_time_zero() {
        assert!((compact_mu(0.0, 1.0) - E).abs() < 1e-15);
        assert!((compact_mu(0.0, 1.0) * 1.5 - 4.0774).abs() < 1e-4);
    }

    #[test]
    fn localized_reduces_to_f_without_constants() {
        let s = circle();
        let cfg = FunctionalConfig::with_constants(10.0, 0.0, 0.0, 1.0, 1, 1.0).unwrap();
        let m = modified_functional_localized(0.0, &s, &cfg).unwrap();
        assert_eq!(m.constants.k3, 0.0);
        assert!((m.value - f_value(&s)).abs() < 1e-15);
    }

    #[test]
    fn localized_tends_to_f_at_late_times() {
        let s = circle();
        let cfg = FunctionalConfig::new(1.0, 0.1, 2.0, 1).unwrap();
        let m = modified_functional_localized(80.0, &s, &cfg).unwrap();
        assert!((m.value - f_value(&s)).abs() < 1e-12);
    }
}
