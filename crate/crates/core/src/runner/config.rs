use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{step_bound, ForcingSpec, GConvention, Picture, StepOptions};
use crate::gaussian::{FunctionalConfig, K1Variant};
use crate::mesh::{make_model_surface, ModelKind, ShrinkerModel, SurfaceState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub family: ModelKind,
    /// Cylinder half length; the default window is `|z| <= 4 pi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

impl GeometryConfig {
    pub fn model(&self) -> ShrinkerModel {
        match (self.family, self.window) {
            (ModelKind::Circle, _) => ShrinkerModel::circle(),
            (ModelKind::Cylinder, None) => ShrinkerModel::cylinder(),
            (ModelKind::Cylinder, Some(w)) => ShrinkerModel::cylinder_with_window(w),
        }
    }
}

/// One term of the initial normal graph, as a function of the model
/// parameter `u` (polar angle on the circle, `z` on the cylinder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    Constant { amplitude: f64 },
    /// `amplitude cos(k u)`.
    Cos { k: f64, amplitude: f64 },
    /// `amplitude sin(k u)`.
    Sin { k: f64, amplitude: f64 },
    /// `amplitude exp(-(u / width)^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `count` seeded modes with coefficients uniform in
    /// `[-amplitude, amplitude] / j^2`: `cos((j+1) u)` and `sin((j+1) u)` on
    /// the circle, `cos(j u / 2)` on the cylinder.
    Random { count: usize, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub modes: Vec<Mode>,
    /// Add the constant offset that suppresses the dilation mode.
    #[serde(default)]
    pub calibrate: bool,
    /// The calibration integrates this much past `t_end`.
    #[serde(default = "default_margin")]
    pub calibration_margin: f64,
    #[serde(default = "default_bracket")]
    pub calibration_bracket: [f64; 2],
}

fn default_margin() -> f64 {
    4.0
}

fn default_bracket() -> [f64; 2] {
    [-0.2, 0.2]
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self { modes: Vec::new(), calibrate: false, calibration_margin: default_margin(), calibration_bracket: default_bracket() }
    }
}

/// Seeded coefficients expanded once, so that evaluation is a pure function.
#[derive(Debug, Clone)]
pub struct Perturbation {
    terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy)]
enum Term {
    Constant(f64),
    Cos(f64, f64),
    Sin(f64, f64),
    Gaussian(f64, f64),
}

impl Perturbation {
    pub fn new(modes: &[Mode], family: ModelKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for m in modes {
            match *m {
                Mode::Constant { amplitude } => terms.push(Term::Constant(amplitude)),
                Mode::Cos { k, amplitude } => terms.push(Term::Cos(k, amplitude)),
                Mode::Sin { k, amplitude } => terms.push(Term::Sin(k, amplitude)),
                Mode::Gaussian { amplitude, width } => terms.push(Term::Gaussian(amplitude, width)),
                Mode::Random { count, amplitude } => {
                    for j in 1..=count {
                        let scale = amplitude / (j * j) as f64;
                        let a = rng.gen_range(-1.0..=1.0) * scale;
                        match family {
                            ModelKind::Circle => {
                                let b = rng.gen_range(-1.0..=1.0) * scale;
                                terms.push(Term::Cos((j + 1) as f64, a));
                                terms.push(Term::Sin((j + 1) as f64, b));
                            }
                            ModelKind::Cylinder => terms.push(Term::Cos(0.5 * j as f64, a)),
                        }
                    }
                }
            }
        }
        Self { terms }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                Term::Constant(a) => a,
                Term::Cos(k, a) => a * (k * u).cos(),
                Term::Sin(k, a) => a * (k * u).sin(),
                Term::Gaussian(a, w) => a * (-(u / w) * (u / w)).exp(),
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSettings {
    pub r0: f64,
    pub lambda0: f64,
    /// Overrides the cutoff derivative bound measured on the built-in cutoff.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_psi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    #[serde(default)]
    pub g_rescaling: GConvention,
    #[serde(default)]
    pub k1_exponent: K1Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    MonotonicityCompact,
    L2Control,
    L2ControlLocalized,
    AlmostMonotoneJ,
    MeanValue,
    DiscreteLoja,
    DistanceDecay,
    CauchyDecrease,
    ExtensionPhiBound,
    QuadraticBound,
}

impl CheckName {
    pub const ALL: [CheckName; 10] = [
        CheckName::MonotonicityCompact,
        CheckName::L2Control,
        CheckName::L2ControlLocalized,
        CheckName::AlmostMonotoneJ,
        CheckName::MeanValue,
        CheckName::DiscreteLoja,
        CheckName::DistanceDecay,
        CheckName::CauchyDecrease,
        CheckName::ExtensionPhiBound,
        CheckName::QuadraticBound,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::MonotonicityCompact => "monotonicity_compact",
            CheckName::L2Control => "l2_control",
            CheckName::L2ControlLocalized => "l2_control_localized",
            CheckName::AlmostMonotoneJ => "almost_monotone_j",
            CheckName::MeanValue => "mean_value",
            CheckName::DiscreteLoja => "discrete_loja",
            CheckName::DistanceDecay => "distance_decay",
            CheckName::CauchyDecrease => "cauchy_decrease",
            CheckName::ExtensionPhiBound => "extension_phi_bound",
            CheckName::QuadraticBound => "quadratic_bound",
        }
    }

    /// Checks that read the unrescaled slices only.
    pub fn allows_unrescaled(&self) -> bool {
        matches!(self, CheckName::AlmostMonotoneJ | CheckName::QuadraticBound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanValueParams {
    pub t1: f64,
    pub t2: f64,
    pub beta: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionParams {
    pub radius: f64,
    pub mu: f64,
    pub eps: f64,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub mode: Mode,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default = "default_mu_grid")]
    pub mu_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_value: Option<MeanValueParams>,
    #[serde(default = "default_cauchy_times")]
    pub cauchy_times: Vec<f64>,
    #[serde(default = "default_max_states")]
    pub distance_max_states: usize,
    /// Ball radius for graph norms and distances; absent means the whole
    /// slice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticParams>,
    #[serde(default = "default_j_tolerance")]
    pub j_tolerance: f64,
}

fn default_mu_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
}

fn default_cauchy_times() -> Vec<f64> {
    vec![2.0, 4.0, 6.0]
}

fn default_max_states() -> usize {
    200
}

fn default_j_tolerance() -> f64 {
    1e-9
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            mu_grid: default_mu_grid(),
            mean_value: None,
            cauchy_times: default_cauchy_times(),
            distance_max_states: default_max_states(),
            graph_radius: None,
            extension: None,
            quadratic: None,
            j_tolerance: default_j_tolerance(),
        }
    }
}

/// A complete, self-describing scenario. Serialized as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub picture: Picture,
    pub resolution: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    pub forcing: ForcingSpec,
    pub functional: FunctionalSettings,
    #[serde(default)]
    pub conventions: Conventions,
    #[serde(default)]
    pub params: CheckParams,
}

fn default_record_every() -> usize {
    1
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn model(&self) -> ShrinkerModel {
        self.geometry.model()
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions { g_convention: self.conventions.g_rescaling, ..StepOptions::default() }
    }

    pub fn functional_config(&self) -> Result<FunctionalConfig> {
        let n = self.model().dim();
        let mut cfg = match self.functional.k_psi {
            None => FunctionalConfig::new(self.functional.r0, self.forcing.k, self.functional.lambda0, n)?,
            Some(kp) => {
                let base = FunctionalConfig::new(self.functional.r0, self.forcing.k, self.functional.lambda0, n)?;
                FunctionalConfig::with_constants(self.functional.r0, self.forcing.k, kp, self.functional.lambda0, n, base.c_n)?
            }
        };
        cfg.k1_variant = self.conventions.k1_exponent;
        Ok(cfg)
    }

    pub fn perturbation(&self) -> Perturbation {
        Perturbation::new(&self.perturbation.modes, self.geometry.family, self.seed)
    }

    /// Initial slice with an extra constant normal offset.
    pub fn initial_with_offset(&self, offset: f64) -> Result<SurfaceState> {
        let p = self.perturbation();
        let u = move |x: f64| offset + p.eval(x);
        make_model_surface(&self.model(), self.resolution, Some(&u), self.t_start)
    }

    /// Structural validation, including the stepper's stability bound.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.trim().is_empty() {
            return bad("empty scenario name".into());
        }
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return bad(format!("time span [{}, {}] is empty", self.t_start, self.t_end));
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        if self.picture == Picture::Unrescaled {
            if self.perturbation.calibrate {
                return bad("dilation calibration needs the rescaled picture".into());
            }
            if let Some(c) = self.checks.iter().find(|c| !c.allows_unrescaled()) {
                return bad(format!("check {} needs the rescaled picture", c.as_str()));
            }
            if self.t_end >= 0.0 {
                return bad("unrescaled runs must end before the singular time s = 0".into());
            }
        }
        if self.checks.contains(&CheckName::MeanValue) && self.params.mean_value.is_none() {
            return bad("mean_value check needs [params.mean_value]".into());
        }
        if self.checks.contains(&CheckName::ExtensionPhiBound) && self.params.extension.is_none() {
            return bad("extension_phi_bound check needs [params.extension]".into());
        }
        if self.checks.contains(&CheckName::QuadraticBound) && self.params.quadratic.is_none() {
            return bad("quadratic_bound check needs [params.quadratic]".into());
        }
        let mut seen = self.checks.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.checks.len() {
            return bad("duplicate check".into());
        }
        self.forcing.check_bound(4.0)?;
        self.functional_config()?;
        let s = self.initial_with_offset(0.0)?;
        let bound = step_bound(&s, &self.step_options());
        if !(self.dt > 0.0) || self.dt > bound * (1.0 + 1e-12) {
            return bad(format!(
                "dt = {} exceeds the stability bound {bound:e} at resolution {}",
                self.dt, self.resolution
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{preset, PRESETS};
    use proptest::prelude::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg, "{name}");
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = preset("circle-perturbed").unwrap().to_toml().unwrap();
        let bad = format!("colour = \"red\"\n{text}");
        assert!(matches!(ScenarioConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn step_above_the_stability_bound_is_rejected() {
        let mut cfg = preset("circle-shrinker-static").unwrap();
        let h = 2.0 * std::f64::consts::PI * crate::mesh::SHRINKER_RADIUS / cfg.resolution as f64;
        cfg.dt = 0.3 * h * h;
        let e = cfg.validate().unwrap_err();
        assert!(e.to_string().contains("stability bound"), "{e}");
    }

    #[test]
    fn unrescaled_restrictions() {
        let mut cfg = preset("circle-shrinker-static").unwrap();
        cfg.picture = Picture::Unrescaled;
        cfg.t_start = -1.0;
        cfg.t_end = -0.5;
        assert!(cfg.validate().is_err());
        cfg.checks = vec![CheckName::MonotonicityCompact];
        assert!(cfg.validate().is_err());
        cfg.checks = vec![CheckName::AlmostMonotoneJ];
        cfg.validate().unwrap();
        cfg.t_end = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_parameters_and_duplicates() {
        let mut cfg = preset("circle-shrinker-static").unwrap();
        cfg.params.mean_value = None;
        assert!(cfg.validate().is_err());
        let mut cfg = preset("circle-shrinker-static").unwrap();
        cfg.checks.push(CheckName::L2Control);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mode_shapes() {
        let p = Perturbation::new(
            &[Mode::Cos { k: 2.0, amplitude: 0.1 }, Mode::Gaussian { amplitude: -0.02, width: 2.0 }, Mode::Constant { amplitude: 0.5 }],
            ModelKind::Cylinder,
            0,
        );
        let u: f64 = 1.3;
        let expect = 0.1 * (2.0 * u).cos() - 0.02 * (-(u / 2.0).powi(2)).exp() + 0.5;
        assert!((p.eval(u) - expect).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn random_modes_follow_the_seed(seed in any::<u64>(), count in 1usize..6, u in -3.0f64..3.0) {
            let modes = [Mode::Random { count, amplitude: 0.1 }];
            let a = Perturbation::new(&modes, ModelKind::Circle, seed);
            let b = Perturbation::new(&modes, ModelKind::Circle, seed);
            prop_assert_eq!(a.eval(u).to_bits(), b.eval(u).to_bits());
            // Coefficients are bounded by amplitude / j^2 per cos/sin pair.
            let bound: f64 = (1..=count).map(|j| 0.2 / (j * j) as f64).sum();
            prop_assert!(a.eval(u).abs() <= bound + 1e-15);
        }
    }
}
