use super::config::{
    CheckName, CheckParams, Conventions, ExtensionParams, FunctionalSettings, GeometryConfig, MeanValueParams, Mode,
    PerturbationConfig, QuadraticParams, ScenarioConfig,
};
use crate::error::{Error, Result};
use crate::flow::{ForcingSpec, Picture};
use crate::mesh::ModelKind;

pub const PRESETS: [&str; 6] = [
    "circle-shrinker-static",
    "cylinder-shrinker-static",
    "circle-perturbed",
    "circle-perturbed-forced",
    "cylinder-perturbed",
    "cylinder-perturbed-forced",
];

/// Forcing used by the forced presets: `0.05 x / sqrt(|x|^2 + 1)`, whose
/// value and first two derivatives stay below `0.1`.
pub fn preset_forcing() -> ForcingSpec {
    ForcingSpec::radial_mollified(0.05, 1.0, 0.1)
}

fn base(name: &str, family: ModelKind) -> ScenarioConfig {
    let (resolution, dt, record_every) = match family {
        ModelKind::Circle => (64, 1e-3, 10),
        ModelKind::Cylinder => (257, 1e-2, 10),
    };
    ScenarioConfig {
        name: name.into(),
        seed: 0,
        picture: Picture::Rescaled,
        resolution,
        t_start: 0.0,
        t_end: 4.0,
        dt,
        record_every,
        checks: Vec::new(),
        output_dir: None,
        geometry: GeometryConfig { family, window: None },
        perturbation: PerturbationConfig::default(),
        forcing: ForcingSpec::none(),
        functional: FunctionalSettings { r0: 4.0, lambda0: 2.0, k_psi: None },
        conventions: Conventions::default(),
        params: CheckParams {
            mean_value: Some(MeanValueParams { t1: 1.0, t2: 4.0, beta: 0.5, radius: 1.5 }),
            ..CheckParams::default()
        },
    }
}

const MONOTONE: [CheckName; 4] = [
    CheckName::MonotonicityCompact,
    CheckName::L2Control,
    CheckName::L2ControlLocalized,
    CheckName::AlmostMonotoneJ,
];

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let mut cfg = match name {
        "circle-shrinker-static" | "cylinder-shrinker-static" => {
            let family = if name.starts_with("circle") { ModelKind::Circle } else { ModelKind::Cylinder };
            let mut c = base(name, family);
            c.checks = MONOTONE.to_vec();
            c.checks.extend([CheckName::MeanValue, CheckName::DiscreteLoja]);
            c
        }
        "circle-perturbed" | "circle-perturbed-forced" => {
            let mut c = base(name, ModelKind::Circle);
            c.t_end = 10.0;
            c.perturbation.modes = vec![Mode::Cos { k: 2.0, amplitude: 0.05 }];
            c.perturbation.calibrate = true;
            c.checks = MONOTONE.to_vec();
            c.checks.extend([
                CheckName::MeanValue,
                CheckName::CauchyDecrease,
                CheckName::DistanceDecay,
                CheckName::ExtensionPhiBound,
                CheckName::QuadraticBound,
            ]);
            c.params.extension = Some(ExtensionParams { radius: 1.0, mu: 0.5, eps: 1.0, stride: 10 });
            c.params.quadratic =
                Some(QuadraticParams { mode: Mode::Cos { k: 2.0, amplitude: 1.0 }, eps: vec![0.01, 0.02, 0.04] });
            c
        }
        "cylinder-perturbed" | "cylinder-perturbed-forced" => {
            let mut c = base(name, ModelKind::Cylinder);
            c.t_end = 20.0;
            // A neck: the attracting sign of the neutral z^2 - 2 direction.
            c.perturbation.modes = vec![Mode::Gaussian { amplitude: -0.02, width: 2.0 }];
            c.perturbation.calibrate = true;
            c.checks = MONOTONE.to_vec();
            c.checks.extend([
                CheckName::MeanValue,
                CheckName::DiscreteLoja,
                CheckName::DistanceDecay,
                CheckName::QuadraticBound,
            ]);
            c.params.quadratic =
                Some(QuadraticParams { mode: Mode::Cos { k: 0.5, amplitude: 1.0 }, eps: vec![0.01, 0.02, 0.04] });
            c
        }
        _ => return Err(Error::Config(format!("unknown preset {name}; known: {}", PRESETS.join(", ")))),
    };
    if name.ends_with("-forced") {
        cfg.forcing = preset_forcing();
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_variants_differ_only_in_forcing() {
        for base in ["circle-perturbed", "cylinder-perturbed"] {
            let a = preset(base).unwrap();
            let mut b = preset(&format!("{base}-forced")).unwrap();
            assert!(b.forcing.k <= 0.1);
            b.forcing = a.forcing;
            b.name = a.name.clone();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("sphere"), Err(Error::Config(_))));
    }
}
