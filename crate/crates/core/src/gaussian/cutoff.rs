use super::config::FunctionalConfig;
use super::functional::gaussian_weights;
use crate::error::{Error, Result};
use crate::mesh::SurfaceState;

/// A cutoff functional with its sandwich bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValue {
    pub value: f64,
    /// `F_{y,sigma}` of the part inside the region where the cutoff is 1.
    pub inner: f64,
    /// `F_{y,sigma}` of the part inside the support of the cutoff.
    pub outer: f64,
}

/// `int psi^p rho_{y,sigma}` with the cutoff evaluated at `dilation * x`.
/// Unrescaled slices use `dilation = 1`; rescaled slices at time `t` use
/// `dilation = e^{-t/2}`, i.e. `psi_t(x) = psi(e^{-t/2} x)`.
pub fn cutoff_functional(
    s: &SurfaceState,
    cfg: &FunctionalConfig,
    y: [f64; 3],
    sigma: f64,
    power: u32,
    dilation: f64,
) -> Result<CutoffValue> {
    if !(power == 1 || power == 2) {
        return Err(Error::InvalidInput(format!("cutoff power must be 1 or 2, got {power}")));
    }
    if !(dilation > 0.0) {
        return Err(Error::InvalidInput("dilation must be positive".into()));
    }
    let w = gaussian_weights(s, y, sigma)?;
    let (mut value, mut inner, mut outer) = (0.0, 0.0, 0.0);
    for (i, wi) in w.iter().enumerate() {
        let rho = dilation * s.norm_sq(i).sqrt();
        let psi = cfg.psi(rho).powi(power as i32);
        value += psi * wi;
        if rho <= 3.0 * cfg.r0 {
            inner += wi;
        }
        if rho < 4.0 * cfg.r0 {
            outer += wi;
        }
    }
    let slack = 1e-12 * outer.abs().max(1e-300);
    assert!(
        inner <= value + slack && value <= outer + slack,
        "cutoff sandwich violated: {inner} <= {value} <= {outer}"
    );
    Ok(CutoffValue { value, inner, outer })
}
