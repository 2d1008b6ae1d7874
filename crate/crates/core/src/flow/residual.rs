use serde::{Deserialize, Serialize};

use super::forcing::ForcingSpec;
use super::stepper::{FieldView, GConvention, Picture};
use crate::error::{Error, Result};
use crate::gaussian::gaussian_weights;
use crate::mesh::{apply_with, curvature_data, shrinker_quantity, shrinker_quantity_with, SurfaceState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiResidual {
    /// `d_t phi - L phi` per node of the middle state.
    pub lhs: Vec<f64>,
    /// Forcing terms per node.
    pub rhs: Vec<f64>,
    /// `lhs - rhs`; zero within unit distance of a profile's window ends.
    pub residual: Vec<f64>,
    /// Gaussian-weighted `L^2` norm of the residual.
    pub norm: f64,
    pub max: f64,
}

/// Residual of the evolution equation of the outward scalar `phi` along a
/// rescaled flow, on the middle of three consecutive equally spaced states:
///
/// `d_t phi - L phi = e^{-t/2} (Delta g + |A|^2 g + g/2
///     - (1/2) <nu, DG x^T> - (1/2) A(x^T, G^T))`, with `g = G . nu`.
///
/// The time derivative follows normal lines of the middle state: neighbor
/// states are intersected with them and their `phi` interpolated there.
/// `G` is treated as time-independent, which is exact for constant fields.
pub fn evolution_residual_phi(
    window: [&SurfaceState; 3],
    forcing: &ForcingSpec,
    conv: GConvention,
) -> Result<PhiResidual> {
    let [prev, mid, next] = window;
    let dt = 0.5 * (next.time - prev.time);
    if !(dt > 0.0) || ((mid.time - prev.time) - (next.time - mid.time)).abs() > 1e-9 * dt {
        return Err(Error::InvalidInput("residual window must be equally spaced in time".into()));
    }
    let curv = curvature_data(mid)?;
    let phi = shrinker_quantity_with(mid, &curv);
    let phi_prev = shrinker_quantity(prev)?.scalar;
    let phi_next = shrinker_quantity(next)?.scalar;
    let view = FieldView::new(forcing, Picture::Rescaled, mid.time, conv);
    let n = mid.len();
    let lphi = apply_with(mid, &curv, &phi.scalar)?.full;
    let mut g = vec![0.0; n];
    let mut extra = vec![0.0; n];
    for i in 0..n {
        let p = mid.point(i);
        let c = &curv[i];
        let (nu, tan) = lift(mid, c.normal, c.tangent);
        let gv = view.g(p);
        let dg = view.dg(p);
        g[i] = dot(gv, nu);
        let xt = dot(p, tan);
        let dgt = [
            dg[0][0] * tan[0] + dg[0][1] * tan[1] + dg[0][2] * tan[2],
            dg[1][0] * tan[0] + dg[1][1] * tan[1] + dg[1][2] * tan[2],
            dg[2][0] * tan[0] + dg[2][1] * tan[1] + dg[2][2] * tan[2],
        ];
        extra[i] = -0.5 * xt * dot(nu, dgt) - 0.5 * xt * dot(gv, tan) * c.principal[0];
    }
    let lap_g = apply_with(mid, &curv, &g)?.laplacian;
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    for i in 0..n {
        let x = mid.planar(i);
        let nu = curv[i].normal;
        let a = transported(prev, &phi_prev, x, nu)
            .ok_or(Error::Geometry { node: i, reason: "no correspondence with previous state".into() })?;
        let b = transported(next, &phi_next, x, nu)
            .ok_or(Error::Geometry { node: i, reason: "no correspondence with next state".into() })?;
        let l = (b - a) / (2.0 * dt) - lphi[i];
        let r = view.prefactor * (lap_g[i] + curv[i].norm_a_sq() * g[i] + 0.5 * g[i] + extra[i]);
        lhs.push(l);
        rhs.push(r);
        // x . nu is not even across a profile's window ends: the mirrored
        // end conditions leave a thin layer there which is not part of the
        // surface evolution.
        let end = mid.is_profile() && mid.z(i).abs() > mid.z(n - 1).abs().max(mid.z(0).abs()) - 1.0;
        residual.push(if end { 0.0 } else { l - r });
    }
    let w = gaussian_weights(mid, [0.0; 3], 1.0)?;
    let norm = residual.iter().zip(&w).map(|(r, w)| w * r * r).sum::<f64>().sqrt();
    let max = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(PhiResidual { lhs, rhs, residual, norm, max })
}

/// Lifts planar frame vectors to space: curves live in `x_3 = 0`, profile
/// meridians in the `(x_1, x_3)` half-plane.
fn lift(s: &SurfaceState, nu: [f64; 2], tan: [f64; 2]) -> ([f64; 3], [f64; 3]) {
    if s.is_profile() {
        ([nu[0], 0.0, nu[1]], [tan[0], 0.0, tan[1]])
    } else {
        ([nu[0], nu[1], 0.0], [tan[0], tan[1], 0.0])
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Value of `field` (nodal on `s`) where the line `x + lambda nu` meets the
/// polyline of `s`, choosing the crossing with the smallest `|lambda|`.
fn transported(s: &SurfaceState, field: &[f64], x: [f64; 2], nu: [f64; 2]) -> Option<f64> {
    let n = s.len();
    let closed = !s.is_profile();
    let segs = if closed { n } else { n - 1 };
    let mut best: Option<(f64, f64)> = None;
    for k in 0..segs {
        let k1 = (k + 1) % n;
        let p = s.planar(k);
        let q = s.planar(k1);
        let d = [q[0] - p[0], q[1] - p[1]];
        // x + lambda nu = p + mu d
        let det = nu[0] * (-d[1]) - nu[1] * (-d[0]);
        if det.abs() < 1e-300 {
            continue;
        }
        let r = [p[0] - x[0], p[1] - x[1]];
        let lambda = (r[0] * (-d[1]) - r[1] * (-d[0])) / det;
        let mu = (nu[0] * r[1] - nu[1] * r[0]) / det;
        if !(-1e-12..=1.0 + 1e-12).contains(&mu) {
            continue;
        }
        if best.map_or(true, |(l, _)| lambda.abs() < l.abs()) {
            best = Some((lambda, field[k] + mu * (field[k1] - field[k])));
        }
    }
    best.map(|b| b.1)
}
