use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI, SQRT_2};

/// Radius of the round shrinkers: the positive root of `1/r = r/2`.
pub const SHRINKER_RADIUS: f64 = SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Round circle of radius `sqrt(2)` in the plane (n = 1).
    Circle,
    /// Round cylinder `S^1_{sqrt 2} x R` in space (n = 2), axis along `z`.
    Cylinder,
}

/// Reference critical point of the Gaussian area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerModel {
    pub kind: ModelKind,
    pub radius: f64,
    /// Axis direction; `None` for the circle.
    pub axis: Option<[f64; 3]>,
    /// Exact Gaussian area `F(Gamma)`.
    pub f_value: f64,
    /// Half-length of the axis window used to discretise the cylinder.
    pub half_length: f64,
}

impl ShrinkerModel {
    pub fn circle() -> Self {
        Self {
            kind: ModelKind::Circle,
            radius: SHRINKER_RADIUS,
            axis: None,
            f_value: (2.0 * PI / E).sqrt(),
            half_length: 0.0,
        }
    }

    /// Cylinder discretised on `|z| <= 4 pi`, a whole number of periods of
    /// `cos z` so that even perturbations satisfy the Neumann end condition.
    pub fn cylinder() -> Self {
        Self::cylinder_with_window(4.0 * PI)
    }

    pub fn cylinder_with_window(half_length: f64) -> Self {
        Self {
            kind: ModelKind::Cylinder,
            radius: SHRINKER_RADIUS,
            axis: Some([0.0, 0.0, 1.0]),
            f_value: (2.0 * PI / E).sqrt(),
            half_length,
        }
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::Circle => 1,
            ModelKind::Cylinder => 2,
        }
    }

    /// Closed-form Gaussian area of a round circle of radius `r`:
    /// `sqrt(pi) r exp(-r^2/4)`. The cylinder factors as this times the
    /// unit Gaussian area of the axis line.
    pub fn round_f_value(r: f64) -> f64 {
        PI.sqrt() * r * (-r * r / 4.0).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_solves_shrinker_equation() {
        let r = ShrinkerModel::circle().radius;
        assert!((1.0 / r - r / 2.0).abs() < 1e-15);
    }

    #[test]
    fn f_value_matches_round_formula() {
        for m in [ShrinkerModel::circle(), ShrinkerModel::cylinder()] {
            assert!((m.f_value - ShrinkerModel::round_f_value(m.radius)).abs() < 1e-15);
            assert!((m.f_value - 1.520_346_901_066_281).abs() < 1e-12);
        }
    }

    #[test]
    fn round_f_is_maximised_at_shrinker_radius() {
        let best = (5..=30)
            .map(|k| k as f64 / 10.0)
            .max_by(|a, b| {
                ShrinkerModel::round_f_value(*a)
                    .partial_cmp(&ShrinkerModel::round_f_value(*b))
                    .unwrap()
            })
            .unwrap();
        assert!((best - 1.4).abs() < 1e-12);
    }
}
