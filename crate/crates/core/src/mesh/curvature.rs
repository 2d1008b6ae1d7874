use super::state::{profile_second, profile_slope, Geometry, SurfaceState};
use crate::error::{Error, Result};

/// Pointwise curvature data. Vectors live in the plane carrying the
/// geometry: `(x, y)` for curves, the meridian `(r, z)` for profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCurvature {
    /// Principal curvatures with respect to the outward normal, positive on
    /// convex pieces. Curves use only the first slot; profiles store
    /// (meridian, parallel).
    pub principal: [f64; 2],
    /// Scalar mean curvature `h = sum of principal curvatures`; the mean
    /// curvature vector is `H = -h nu`.
    pub mean: f64,
    /// Outward unit normal `nu`.
    pub normal: [f64; 2],
    /// Unit tangent (direction of increasing node index).
    pub tangent: [f64; 2],
}

impl NodeCurvature {
    /// `|A|^2`.
    pub fn norm_a_sq(&self) -> f64 {
        self.principal[0] * self.principal[0] + self.principal[1] * self.principal[1]
    }

    /// Mean curvature vector `H = -trace A`.
    pub fn h_vector(&self) -> [f64; 2] {
        [-self.mean * self.normal[0], -self.mean * self.normal[1]]
    }
}

/// Curvature at every node. Curves use the circumscribed-circle (Menger)
/// curvature through consecutive nodes, which is exact on regular polygons
/// inscribed in a circle and second order on smooth near-uniform samples.
/// Profiles use centered differences with the even reflection at the ends.
pub fn curvature_data(s: &SurfaceState) -> Result<Vec<NodeCurvature>> {
    match &s.geometry {
        Geometry::Curve { points, closed } => curve_curvature(points, *closed),
        Geometry::Profile { radii, dz, .. } => {
            if let Some(i) = radii.iter().position(|&r| !(r > 0.0)) {
                return Err(Error::Geometry { node: i, reason: "non-positive radius".into() });
            }
            Ok((0..radii.len())
                .map(|i| {
                    let rz = profile_slope(radii, *dz, i);
                    let rzz = profile_second(radii, *dz, i);
                    let g = (1.0 + rz * rz).sqrt();
                    let k_mer = -rzz / (g * g * g);
                    let k_par = 1.0 / (radii[i] * g);
                    NodeCurvature {
                        principal: [k_mer, k_par],
                        mean: k_mer + k_par,
                        normal: [1.0 / g, -rz / g],
                        tangent: [rz / g, 1.0 / g],
                    }
                })
                .collect())
        }
    }
}

fn curve_curvature(points: &[[f64; 2]], closed: bool) -> Result<Vec<NodeCurvature>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidInput("curve needs at least 3 nodes".into()));
    }
    let interior = |im: usize, i: usize, ip: usize| -> Result<NodeCurvature> {
        let a = [points[i][0] - points[im][0], points[i][1] - points[im][1]];
        let b = [points[ip][0] - points[i][0], points[ip][1] - points[i][1]];
        let la = a[0].hypot(a[1]);
        let lb = b[0].hypot(b[1]);
        let lc = (a[0] + b[0]).hypot(a[1] + b[1]);
        if la == 0.0 || lb == 0.0 || lc == 0.0 {
            return Err(Error::Geometry { node: i, reason: "coincident nodes".into() });
        }
        let cross = a[0] * b[1] - a[1] * b[0];
        let kappa = 2.0 * cross / (la * lb * lc);
        let t = [a[0] / la + b[0] / lb, a[1] / la + b[1] / lb];
        let lt = t[0].hypot(t[1]);
        if lt == 0.0 {
            return Err(Error::Geometry { node: i, reason: "cusp".into() });
        }
        let tangent = [t[0] / lt, t[1] / lt];
        Ok(NodeCurvature {
            principal: [kappa, 0.0],
            mean: kappa,
            normal: [tangent[1], -tangent[0]],
            tangent,
        })
    };
    if closed {
        (0..n).map(|i| interior((i + n - 1) % n, i, (i + 1) % n)).collect()
    } else {
        let mut out = Vec::with_capacity(n);
        for i in 1..n - 1 {
            out.push(interior(i - 1, i, i + 1)?);
        }
        let first = out[0];
        let last = out[out.len() - 1];
        out.insert(0, first);
        out.push(last);
        Ok(out)
    }
}

/// Shrinker mean curvature `phi = H + x^perp / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiField {
    /// Outward scalar component: `phi = scalar * nu`, equal to
    /// `r/2 - 1/r` on a round circle of radius `r`.
    pub scalar: Vec<f64>,
    /// The vector `phi` in the geometry's plane.
    pub vector: Vec<[f64; 2]>,
}

impl PhiField {
    pub fn magnitude(&self) -> Vec<f64> {
        self.scalar.iter().map(|v| v.abs()).collect()
    }
}

pub fn shrinker_quantity(s: &SurfaceState) -> Result<PhiField> {
    let curv = curvature_data(s)?;
    Ok(shrinker_quantity_with(s, &curv))
}

pub(crate) fn shrinker_quantity_with(s: &SurfaceState, curv: &[NodeCurvature]) -> PhiField {
    let scalar: Vec<f64> = curv
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = s.planar(i);
            0.5 * (p[0] * c.normal[0] + p[1] * c.normal[1]) - c.mean
        })
        .collect();
    let vector = scalar
        .iter()
        .zip(curv)
        .map(|(v, c)| [v * c.normal[0], v * c.normal[1]])
        .collect();
    PhiField { scalar, vector }
}
