use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analytic families of ambient forcing fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcingKind {
    None,
    Constant { vector: [f64; 3] },
    /// `c x / sqrt(|x|^2 + eps^2)`.
    RadialMollified { c: f64, eps: f64 },
    /// `a beta(|x|/w) x / w` with the standard bump `beta(u) = exp(-1/(1-u^2))`.
    RadialBump { amplitude: f64, width: f64 },
}

/// A bounded ambient vector field with a declared bound `K` on its `C^k`
/// norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    pub k: f64,
}

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Sampled sup norms and finite-difference agreement of a forcing field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingSelfTest {
    pub max_value: f64,
    pub max_jacobian: f64,
    pub max_hessian: f64,
    pub jacobian_fd_error: f64,
    pub hessian_fd_error: f64,
}

impl ForcingSpec {
    pub fn none() -> Self {
        Self { kind: ForcingKind::None, k: 0.0 }
    }

    pub fn constant(vector: Vec3, k: f64) -> Self {
        Self { kind: ForcingKind::Constant { vector }, k }
    }

    pub fn radial_mollified(c: f64, eps: f64, k: f64) -> Self {
        Self { kind: ForcingKind::RadialMollified { c, eps }, k }
    }

    pub fn radial_bump(amplitude: f64, width: f64, k: f64) -> Self {
        Self { kind: ForcingKind::RadialBump { amplitude, width }, k }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, ForcingKind::None)
    }

    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self.kind {
            ForcingKind::None => [0.0; 3],
            ForcingKind::Constant { vector } => vector,
            ForcingKind::RadialMollified { c, eps } => {
                let q = (dot(x, x) + eps * eps).sqrt().recip();
                [c * x[0] * q, c * x[1] * q, c * x[2] * q]
            }
            ForcingKind::RadialBump { amplitude, width } => {
                let (b, _, _) = bump(dot(x, x) / (width * width));
                let g = amplitude * b / width;
                [g * x[0], g * x[1], g * x[2]]
            }
        }
    }

    /// `J[i][j] = d F_i / d x_j`.
    pub fn jacobian(&self, x: Vec3) -> Mat3 {
        let mut j = [[0.0; 3]; 3];
        match self.kind {
            ForcingKind::None | ForcingKind::Constant { .. } => {}
            ForcingKind::RadialMollified { c, eps } => {
                let q = (dot(x, x) + eps * eps).sqrt().recip();
                for a in 0..3 {
                    for b in 0..3 {
                        j[a][b] = c * (delta(a, b) * q - x[a] * x[b] * q * q * q);
                    }
                }
            }
            ForcingKind::RadialBump { amplitude, width } => {
                let w2 = width * width;
                let (b0, b1, _) = bump(dot(x, x) / w2);
                let g = amplitude * b0 / width;
                let dg = |k: usize| amplitude * b1 * 2.0 * x[k] / (w2 * width);
                for a in 0..3 {
                    for b in 0..3 {
                        j[a][b] = g * delta(a, b) + x[a] * dg(b);
                    }
                }
            }
        }
        j
    }

    /// `H[i][j][k] = d^2 F_i / d x_j d x_k`.
    pub fn hessian(&self, x: Vec3) -> [Mat3; 3] {
        let mut h = [[[0.0; 3]; 3]; 3];
        match self.kind {
            ForcingKind::None | ForcingKind::Constant { .. } => {}
            ForcingKind::RadialMollified { c, eps } => {
                let q = (dot(x, x) + eps * eps).sqrt().recip();
                let (q3, q5) = (q * q * q, q * q * q * q * q);
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            h[i][j][k] = c
                                * (-(delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i]) * q3
                                    + 3.0 * x[i] * x[j] * x[k] * q5);
                        }
                    }
                }
            }
            ForcingKind::RadialBump { amplitude, width } => {
                let w2 = width * width;
                let (_, b1, b2) = bump(dot(x, x) / w2);
                let dg = |k: usize| amplitude * b1 * 2.0 * x[k] / (w2 * width);
                let ddg = |j: usize, k: usize| {
                    amplitude * (b2 * 4.0 * x[j] * x[k] / w2 + 2.0 * b1 * delta(j, k)) / (w2 * width)
                };
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            h[i][j][k] = dg(k) * delta(i, j) + delta(i, k) * dg(j) + x[i] * ddg(j, k);
                        }
                    }
                }
            }
        }
        h
    }

    /// Samples `|F|`, `|DF|`, `|D^2 F|` (max entry norms) on a grid over the
    /// cube `[-radius, radius]^3` and compares the derivative evaluators
    /// against centered differences with step `h`.
    pub fn self_test(&self, radius: f64, points: usize, h: f64) -> ForcingSelfTest {
        let mut out = ForcingSelfTest {
            max_value: 0.0,
            max_jacobian: 0.0,
            max_hessian: 0.0,
            jacobian_fd_error: 0.0,
            hessian_fd_error: 0.0,
        };
        let m = points.max(2);
        let coord = |k: usize| -radius + 2.0 * radius * (k as f64 + 0.37) / m as f64;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let x = [coord(a), coord(b), coord(c)];
                    let f = self.eval(x);
                    let jac = self.jacobian(x);
                    let hes = self.hessian(x);
                    out.max_value = out.max_value.max(dot(f, f).sqrt());
                    for k in 0..3 {
                        let mut xp = x;
                        let mut xm = x;
                        xp[k] += h;
                        xm[k] -= h;
                        let (fp, fm) = (self.eval(xp), self.eval(xm));
                        let (jp, jm) = (self.jacobian(xp), self.jacobian(xm));
                        for i in 0..3 {
                            let fd = (fp[i] - fm[i]) / (2.0 * h);
                            out.jacobian_fd_error = out.jacobian_fd_error.max((fd - jac[i][k]).abs());
                            out.max_jacobian = out.max_jacobian.max(jac[i][k].abs());
                            for j in 0..3 {
                                let fd = (jp[i][j] - jm[i][j]) / (2.0 * h);
                                out.hessian_fd_error = out.hessian_fd_error.max((fd - hes[i][j][k]).abs());
                                out.max_hessian = out.max_hessian.max(hes[i][j][k].abs());
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Spot-checks the declared bound: sampled `|F|`, `|DF|`, `|D^2F|` must
    /// not exceed `K`.
    pub fn check_bound(&self, radius: f64) -> Result<ForcingSelfTest> {
        let t = self.self_test(radius, 9, 1e-4);
        let worst = t.max_value.max(t.max_jacobian).max(t.max_hessian);
        if worst > self.k * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "forcing exceeds its declared bound: sampled {worst} > K = {}",
                self.k
            )));
        }
        Ok(t)
    }
}

/// `beta(v) = exp(-1/(1-v))` for `v < 1` as a function of `v = |x|^2/w^2`,
/// with its first two derivatives.
fn bump(v: f64) -> (f64, f64, f64) {
    if v >= 1.0 - 1e-12 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 / (1.0 - v);
    let b = (-u).exp();
    (b, -b * u * u, b * (u.powi(4) - 2.0 * u.powi(3)))
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_evaluators_are_second_order() {
        for f in [
            ForcingSpec::radial_mollified(0.05, 1.0, 0.1),
            ForcingSpec::radial_bump(0.3, 2.5, 1.0),
            ForcingSpec::constant([0.1, 0.0, 0.0], 0.1),
        ] {
            let e1 = f.self_test(3.0, 5, 1e-2);
            let e2 = f.self_test(3.0, 5, 5e-3);
            assert!(e1.jacobian_fd_error < 1e-3 && e1.hessian_fd_error < 1e-2);
            if e1.jacobian_fd_error > 1e-12 {
                let r = e1.jacobian_fd_error / e2.jacobian_fd_error;
                assert!((3.5..4.5).contains(&r), "{f:?}: {r}");
            }
            if e1.hessian_fd_error > 1e-12 {
                let r = e1.hessian_fd_error / e2.hessian_fd_error;
                assert!((3.5..4.5).contains(&r), "{f:?}: {r}");
            }
        }
    }

    #[test]
    fn declared_bounds_hold() {
        ForcingSpec::radial_mollified(0.05, 1.0, 0.1).check_bound(20.0).unwrap();
        ForcingSpec::constant([0.05, 0.0, 0.0], 0.05).check_bound(5.0).unwrap();
        assert!(ForcingSpec::radial_mollified(0.5, 1.0, 0.1).check_bound(5.0).is_err());
    }

    #[test]
    fn radial_field_far_value() {
        let f = ForcingSpec::radial_mollified(0.05, 1.0, 0.1);
        let v = f.eval([1e6, 0.0, 0.0]);
        assert!((v[0] - 0.05).abs() < 1e-12);
        assert_eq!(f.eval([0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let f = ForcingSpec::radial_bump(1.0, 2.0, 1.0);
        assert_eq!(f.eval([2.5, 0.0, 0.0]), [0.0; 3]);
        assert!(f.eval([1.0, 0.0, 0.0])[0] > 0.0);
    }
}
