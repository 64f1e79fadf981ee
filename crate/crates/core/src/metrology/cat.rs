//! Closed forms for a pair of well-separated Gaussian lobes at `±ω_o`.

use serde::{Deserialize, Serialize};

use super::{coincidence_probability, fisher_information, VisibilityModel};
use crate::error::{Error, Result};
use crate::wigner::{CutModel, CutPoint};

/// Lobe separation (in lobe widths) below which the closed form is only approximate.
pub const SEPARATION_WARN: f64 = 5.0;

/// `W(0,τ) = cos(2ω_o τ) e^{-τ²σ²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatClosedForm {
    pub omega_o: f64,
    pub sigma: f64,
}

impl CatClosedForm {
    pub fn new(omega_o: f64, sigma: f64) -> Result<Self> {
        if !(omega_o > 0.0 && sigma > 0.0 && omega_o.is_finite() && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "cat closed form needs ω_o, σ > 0 (got {omega_o}, {sigma})"
            )));
        }
        let c = Self { omega_o, sigma };
        if !c.well_separated() {
            log::warn!("cat lobes overlap (ω_o = {omega_o} < {SEPARATION_WARN} σ); closed form is approximate");
        }
        Ok(c)
    }

    pub fn well_separated(&self) -> bool {
        self.omega_o >= SEPARATION_WARN * self.sigma
    }

    /// `-W''(0) = 4ω_o² + 2σ²`.
    pub fn qfi(&self) -> f64 {
        4.0 * self.omega_o * self.omega_o + 2.0 * self.sigma * self.sigma
    }
}

impl CutModel for CatClosedForm {
    fn eval(&self, tau: f64) -> Result<CutPoint> {
        let (o, s2) = (2.0 * self.omega_o, self.sigma * self.sigma);
        let e = (-tau * tau * s2).exp();
        let (sn, cs) = (o * tau).sin_cos();
        // envelope derivatives
        let e1 = -2.0 * tau * s2 * e;
        let e2 = (4.0 * tau * tau * s2 * s2 - 2.0 * s2) * e;
        Ok(CutPoint {
            w: cs * e,
            w1: -o * sn * e + cs * e1,
            w2: -o * o * cs * e - 2.0 * o * sn * e1 + cs * e2,
        })
    }

    fn search_tau_max(&self) -> Result<f64> {
        Ok((6.0 / self.qfi().sqrt()).max(3.0 * std::f64::consts::PI / self.omega_o))
    }
}

/// `½ [1 - V cos(2ω_o τ) e^{-τ²σ²}]`.
pub fn cat_closed_form_pc(
    omega_o: f64,
    sigma: f64,
    vis: &VisibilityModel,
    tau: f64,
) -> Result<f64> {
    coincidence_probability(&CatClosedForm::new(omega_o, sigma)?, vis, tau)
}

/// Fisher information of the closed-form coincidence probability.
pub fn cat_closed_form_fi(
    omega_o: f64,
    sigma: f64,
    vis: &VisibilityModel,
    tau: f64,
) -> Result<f64> {
    Ok(fisher_information(&CatClosedForm::new(omega_o, sigma)?, vis, tau)?.value)
}

/// Envelope that multiplies the carrier Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatEnvelope {
    /// `e^{-2τ²σ²}`
    Gaussian,
    /// Broad lobes: envelope dropped.
    Flat,
}

/// `V² (4ω_o² + 2σ²) × envelope`: the oscillation-averaged Fisher
/// information of the lobe pair.
pub fn cat_fi_envelope(
    omega_o: f64,
    sigma: f64,
    vis: &VisibilityModel,
    tau: f64,
    envelope: CatEnvelope,
) -> Result<f64> {
    let c = CatClosedForm::new(omega_o, sigma)?;
    let env = match envelope {
        CatEnvelope::Gaussian => (-2.0 * tau * tau * sigma * sigma).exp(),
        CatEnvelope::Flat => 1.0,
    };
    Ok(vis.v * vis.v * c.qfi() * env)
}
