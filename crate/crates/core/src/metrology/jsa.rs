//! Coincidence probability for a general two-photon joint spectrum with
//! partially distinguishable polarization.

use super::VisibilityModel;
use crate::error::{Error, Result};
use crate::spectra::{exchange_overlap, Jsa2D};

/// Visibility `sin²θ · Re 𝒱_m`, with `𝒱_m` the exchange overlap of the JSA.
pub fn jsa_visibility(jsa: &Jsa2D, theta: f64) -> Result<VisibilityModel> {
    let overlap = exchange_overlap(jsa)?;
    if overlap.im.abs() > 1e-9 {
        log::warn!("exchange overlap has imaginary part {:.3e}", overlap.im);
    }
    let vm = overlap.re;
    if !(0.0..=1.0 + 1e-9).contains(&vm) {
        return Err(Error::Degenerate(format!(
            "exchange overlap {vm} outside [0, 1]; an antisymmetric spectrum anti-bunches"
        )));
    }
    VisibilityModel::from_polarization(theta, vm.min(1.0))
}

/// `½ (1 - sin²θ · Re ∬ e^{iω₋τ} f(ω₁,ω₂) f*(ω₂,ω₁))`.
pub fn general_pc_from_jsa(jsa: &Jsa2D, theta: f64, tau: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::invalid("polarization angle must be finite"));
    }
    let i = jsa.exchange_integral(tau)?;
    Ok(0.5 * (1.0 - theta.sin().powi(2) * i.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;
    use crate::metrology::coincidence_probability;
    use crate::spectra::StateDescriptor;
    use crate::wigner::AnalyticCut;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_2;

    /// Anticorrelated JSA whose difference-frequency marginal is Gaussian.
    fn anticorrelated(sigma: f64) -> Jsa2D {
        let g = UniformGrid::symmetric(0.05, 241).unwrap();
        Jsa2D::from_fn(g, g, |a, b| {
            let sum = a + b;
            let diff = 0.5 * (a - b);
            Complex64::new(
                (-sum * sum / 0.5 - diff * diff / (4.0 * sigma * sigma)).exp(),
                0.0,
            )
        })
        .unwrap()
    }

    #[test]
    fn reduces_to_the_single_mode_expression() {
        let jsa = anticorrelated(1.0);
        let vis = jsa_visibility(&jsa, FRAC_PI_2).unwrap();
        assert!((vis.v - 1.0).abs() < 1e-9);
        let p0 = general_pc_from_jsa(&jsa, FRAC_PI_2, 0.0).unwrap();
        assert!(p0.abs() < 1e-9);
        // difference-frequency intensity has std σ in ω₋/2 units; check
        // against the single-mode Gaussian cut of matching width
        let p = general_pc_from_jsa(&jsa, FRAC_PI_2, 0.4).unwrap();
        let cut = AnalyticCut::new(&StateDescriptor::Gauss { sigma: 2.0 }).unwrap();
        let q = coincidence_probability(&cut, &vis, 0.4).unwrap();
        assert!((p - q).abs() < 1e-6, "{p} vs {q}");
    }

    #[test]
    fn polarization_scales_the_dip() {
        let jsa = anticorrelated(1.0);
        let p = general_pc_from_jsa(&jsa, FRAC_PI_2 / 2.0, 0.0).unwrap();
        assert!((p - 0.25).abs() < 1e-9);
        let p = general_pc_from_jsa(&jsa, 0.0, 0.0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }
}
