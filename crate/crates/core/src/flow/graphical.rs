use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::{graph_over_model, ModelKind, ShrinkerModel, SurfaceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphicalFlag {
    /// The whole discretised slice is an `eps`-small graph.
    Full,
    Partial,
    /// Not an `eps`-small graph even on `B_1`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphicalScale {
    pub radius: f64,
    /// `C^{2,alpha}` proxy of the graph on `B_radius`.
    pub norm: f64,
    pub flag: GraphicalFlag,
}

/// Largest ball radius `R` on which `s` is a graph over `model` with
/// `C^{2,alpha}` proxy at most `eps`. The graph domain only changes at
/// node distances, so the candidate radii are scanned exactly.
pub fn graphical_scale(s: &SurfaceState, model: &ShrinkerModel, eps: f64) -> Result<GraphicalScale> {
    let zero = GraphicalScale { radius: 0.0, norm: f64::INFINITY, flag: GraphicalFlag::Zero };
    let full_radius = match model.kind {
        ModelKind::Cylinder => model.half_length.max(s.z(s.len() - 1).abs()),
        ModelKind::Circle => (0..s.len()).map(|i| s.norm_sq(i).sqrt()).fold(0.0, f64::max),
    };
    let g = match graph_over_model(s, model, full_radius) {
        Ok(g) => g,
        Err(_) => return Ok(zero),
    };
    if g.norms.c2_alpha() <= eps {
        return Ok(GraphicalScale { radius: full_radius, norm: g.norms.c2_alpha(), flag: GraphicalFlag::Full });
    }
    let unit = g.norms_on(1.0).c2_alpha();
    if unit > eps {
        return Ok(GraphicalScale { norm: unit, ..zero });
    }
    let mut radii: Vec<f64> = (0..g.samples.len())
        .map(|j| match model.kind {
            ModelKind::Cylinder => g.coords[j].abs(),
            ModelKind::Circle => model.radius + g.samples[j],
        })
        .filter(|&r| r >= 1.0)
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let (mut best, mut norm) = (1.0, unit);
    for r in radii {
        let v = g.norms_on(r).c2_alpha();
        if v > eps {
            break;
        }
        best = r;
        norm = v;
    }
    Ok(GraphicalScale { radius: best, norm, flag: GraphicalFlag::Partial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_model_surface;

    #[test]
    fn model_is_graphical_on_the_full_window() {
        let m = ShrinkerModel::cylinder();
        let s = make_model_surface(&m, 257, None, 0.0).unwrap();
        let g = graphical_scale(&s, &m, 0.01).unwrap();
        assert_eq!(g.flag, GraphicalFlag::Full);
        assert!((g.radius - m.half_length).abs() < 1e-12);
    }

    #[test]
    fn constructed_crossing_is_found_within_a_cell() {
        // U vanishes on |z| <= 4 and grows like (|z| - 4)^3 beyond.
        let m = ShrinkerModel::cylinder();
        let ramp = |z: f64| 1e-3 * (z.abs() - 4.0).max(0.0).powi(3);
        let s = make_model_surface(&m, 1001, Some(&ramp), 0.0).unwrap();
        let dz = 2.0 * m.half_length / 1000.0;
        // Analytic C^2 norm on |z| <= 5 plus the Holder quotient of u'' = 6e-3 a.
        let eps = 1e-3 + 3e-3 + 6e-3 + 6e-3 * dz.sqrt();
        let g = graphical_scale(&s, &m, eps).unwrap();
        assert_eq!(g.flag, GraphicalFlag::Partial);
        assert!((g.radius - 5.0).abs() < 2.0 * dz, "{}", g.radius);
    }

    #[test]
    fn heavy_perturbation_has_zero_scale() {
        let m = ShrinkerModel::cylinder();
        let u = |z: f64| 0.5 * (3.0 * z).cos();
        let s = make_model_surface(&m, 513, Some(&u), 0.0).unwrap();
        assert_eq!(graphical_scale(&s, &m, 0.1).unwrap().flag, GraphicalFlag::Zero);
    }
}
