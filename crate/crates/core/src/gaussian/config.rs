use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which `r_0` exponent to use in the `K_psi^2` term of `K_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum K1Variant {
    /// `2 K_psi^2 r_0^{-2}`, as produced by the bound on `|D psi|^2`.
    #[default]
    Derivation,
    /// `2 K_psi^2 r_0^{2}`, as printed in the constant's definition.
    Paper,
}

impl K1Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            K1Variant::Derivation => "derivation",
            K1Variant::Paper => "paper",
        }
    }
}

/// Constants of the localized modified functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub c_n: f64,
    pub variant: K1Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalConfig {
    /// Localisation radius `r_0`.
    pub r0: f64,
    /// Forcing bound `K`.
    pub k: f64,
    /// Cutoff derivative bound `K_psi`.
    pub k_psi: f64,
    /// Area-ratio bound `lambda_0`.
    pub lambda0: f64,
    /// Intrinsic dimension `n`.
    pub n: usize,
    /// `c(K_psi, n)`, the sup of the almost-monotonicity error profile.
    pub c_psi: f64,
    /// Area-bound constant `C_n` entering `K_2`.
    pub c_n: f64,
    pub k1_variant: K1Variant,
}

impl FunctionalConfig {
    /// Config with `K_psi` measured on the built-in cutoff and `c`, `C_n`
    /// from the error-profile maximization.
    pub fn new(r0: f64, k: f64, lambda0: f64, n: usize) -> Result<Self> {
        let k_psi = sampled_k_psi();
        let c = error_profile_max(k_psi, n).0;
        Self::with_constants(r0, k, k_psi, lambda0, n, c)
    }

    pub fn with_constants(
        r0: f64,
        k: f64,
        k_psi: f64,
        lambda0: f64,
        n: usize,
        c_n: f64,
    ) -> Result<Self> {
        let cfg = Self {
            r0,
            k,
            k_psi,
            lambda0,
            n,
            c_psi: error_profile_max(k_psi, n).0,
            c_n,
            k1_variant: K1Variant::Derivation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.r0 > 0.0 && self.lambda0 > 0.0) || !ok(self.k) || !ok(self.k_psi) || !ok(self.c_n) {
            return Err(Error::Config(format!("invalid functional config {self:?}")));
        }
        if self.n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(())
    }

    /// Cutoff `psi` at distance `rho` from the origin.
    pub fn psi(&self, rho: f64) -> f64 {
        cutoff_profile((rho - 3.0 * self.r0) / self.r0)[0]
    }

    /// `gamma = lambda_0 r_0^{-n-2} c(K_psi, n)`, with `lambda_0` standing in
    /// for the global area bound.
    pub fn gamma(&self) -> f64 {
        self.lambda0 * self.r0.powi(-(self.n as i32) - 2) * self.c_psi
    }

    pub fn localized_constants(&self) -> LocalizedConstants {
        let nf = self.n as f64;
        let r0_term = match self.k1_variant {
            K1Variant::Derivation => self.r0.powi(-2),
            K1Variant::Paper => self.r0.powi(2),
        };
        let k1 = self.k * self.k + 2.0 * self.k_psi * self.k_psi * r0_term + self.k * self.k_psi / self.r0;
        let k2 = 4.0 * self.k_psi * self.c_n * self.lambda0 * (12.0 * PI * self.r0).powf(nf / 2.0);
        LocalizedConstants { k1, k2, k3: 4.0 * k2 / nf, c_n: self.c_n, variant: self.k1_variant }
    }
}

/// Radial cutoff as a function of `s = (|x| - 3 r_0) / r_0`: returns
/// `[chi, chi', chi'']`, with `chi = 1` for `s <= 0` and `0` for `s >= 1`.
pub fn cutoff_profile(s: f64) -> [f64; 3] {
    if s <= 1e-20 {
        return [1.0, 0.0, 0.0];
    }
    if s >= 1.0 - 1e-20 {
        return [0.0, 0.0, 0.0];
    }
    let g = |x: f64| [(-1.0 / x).exp(), (-1.0 / x).exp() / (x * x), (-1.0 / x).exp() * (1.0 / x.powi(4) - 2.0 / x.powi(3))];
    let [u, u1, u2] = g(s);
    let [v, gv1, gv2] = g(1.0 - s);
    let (v1, v2) = (-gv1, gv2);
    let d = u + v;
    let step = u / d;
    let num = u1 * v - u * v1;
    let step1 = num / (d * d);
    let num1 = u2 * v - u * v2;
    let step2 = (num1 * d - 2.0 * num * (u1 + v1)) / (d * d * d);
    [1.0 - step, -step1, -step2]
}

/// `max(r_0|D psi| + r_0^2|D^2 psi|)` sampled on the transition annulus,
/// inflated by 1%. The radial and tangential Hessian eigenvalues are
/// `chi''/r_0^2` and `chi'/(r_0 |x|)`; the result does not depend on `r_0`.
pub fn sampled_k_psi() -> f64 {
    let m = 20_000;
    let mut best: f64 = 0.0;
    for k in 1..m {
        let s = k as f64 / m as f64;
        let [_, d1, d2] = cutoff_profile(s);
        best = best.max(d1.abs() + d2.abs().max(d1.abs() / (3.0 + s)));
    }
    1.01 * best
}

/// Maximum over `z > 0` of
/// `(1/16 + K_psi/z) z^{-n/2} e^{-1/z} (4 pi)^{-n/2}` and its maximizer.
pub fn error_profile_max(k_psi: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let h = |z: f64| (1.0 / 16.0 + k_psi / z) * z.powf(-nf / 2.0) * (-1.0 / z).exp() * (4.0 * PI).powf(-nf / 2.0);
    // Log grid then golden-section refinement on the bracketing cell.
    let grid: Vec<f64> = (0..=400).map(|k| 10f64.powf(-3.0 + 7.0 * k as f64 / 400.0)).collect();
    let (mut ib, mut best) = (0, f64::MIN);
    for (i, &z) in grid.iter().enumerate() {
        if h(z) > best {
            best = h(z);
            ib = i;
        }
    }
    let (mut a, mut b) = (grid[ib.saturating_sub(1)], grid[(ib + 1).min(grid.len() - 1)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if h(c) > h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let z = 0.5 * (a + b);
    (h(z).max(best), z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff_profile(-1.0)[0], 1.0);
        assert_eq!(cutoff_profile(2.0)[0], 0.0);
        assert!((cutoff_profile(0.5)[0] - 0.5).abs() < 1e-15);
        let cfg = FunctionalConfig::new(2.0, 0.1, 1.0, 1).unwrap();
        assert_eq!(cfg.psi(5.9), 1.0);
        assert_eq!(cfg.psi(8.0), 0.0);
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let h = 1e-5;
        for s in [0.1, 0.3, 0.5, 0.77, 0.9] {
            let [f, d1, d2] = cutoff_profile(s);
            let fp = cutoff_profile(s + h)[0];
            let fm = cutoff_profile(s - h)[0];
            assert!((d1 - (fp - fm) / (2.0 * h)).abs() < 1e-6);
            assert!((d2 - (fp - 2.0 * f + fm) / (h * h)).abs() < 1e-3);
        }
    }

    #[test]
    fn k_psi_bounds_the_cutoff() {
        let k = sampled_k_psi();
        for r0 in [0.5, 1.0, 3.0] {
            // Independent check on a shifted grid with finite differences.
            let h = 1e-4 * r0;
            for j in 0..997 {
                let rho = r0 * (3.0 + (j as f64 + 0.5) / 997.0);
                let f = |x: f64| cutoff_profile((x - 3.0 * r0) / r0)[0];
                let d1 = (f(rho + h) - f(rho - h)) / (2.0 * h);
                let d2 = (f(rho + h) - 2.0 * f(rho) + f(rho - h)) / (h * h);
                let hess = d2.abs().max(d1.abs() / rho);
                assert!(r0 * d1.abs() + r0 * r0 * hess <= k);
            }
        }
    }

    #[test]
    fn error_profile_maximum_dominates_grid() {
        let (c, z) = error_profile_max(3.0, 2);
        let h = |z: f64| (1.0 / 16.0 + 3.0 / z) * z.powf(-1.0) * (-1.0 / z).exp() / (4.0 * PI);
        assert!((h(z) - c).abs() < 1e-14);
        for k in 1..10000 {
            assert!(h(k as f64 * 1e-3) <= c + 1e-15);
        }
    }

    #[test]
    fn unit_constants() {
        let cfg = FunctionalConfig::with_constants(1.0, 1.0, 1.0, 1.0, 1, 1.0).unwrap();
        let c = cfg.localized_constants();
        assert!((c.k1 - 4.0).abs() < 1e-15);
        assert!((c.k2 - 4.0 * (12.0 * PI).sqrt()).abs() < 1e-12);
        assert!((c.k2 / 24.558 - 1.0).abs() < 1e-4);
        assert!((c.k3 / 98.23 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn k1_variants_differ_off_unit_radius() {
        let mut cfg = FunctionalConfig::with_constants(2.0, 0.0, 1.0, 1.0, 1, 1.0).unwrap();
        assert!((cfg.localized_constants().k1 - 0.5).abs() < 1e-15);
        cfg.k1_variant = K1Variant::Paper;
        assert!((cfg.localized_constants().k1 - 8.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(FunctionalConfig::new(0.0, 0.1, 1.0, 1).is_err());
        assert!(FunctionalConfig::new(1.0, -0.1, 1.0, 1).is_err());
    }
}
