//! Coincidence probability under finite visibility, classical and quantum
//! Fisher information, and the scaling of the best attainable Fisher
//! information with visibility.
//!
//! With `P_c(τ) = ½ - (V/2) W(0,τ)` the Fisher information of the
//! coincidence/anti-coincidence outcome is
//! `F(V,τ) = V² W'(τ)² / (1 - V² W(τ)²)`. At unit visibility and a point
//! where `|W| = 1` the ratio is a 0/0 limit, evaluated from the leading
//! Taylor coefficients as `-W''/W`.

mod cat;
mod jsa;
mod time_resolved;

pub use cat::{
    cat_closed_form_fi, cat_closed_form_pc, cat_fi_envelope, CatClosedForm, CatEnvelope,
};
pub use jsa::{general_pc_from_jsa, jsa_visibility};
pub use time_resolved::{
    gaussian_interference_closed_form, time_resolved_pc, time_resolved_profile,
    time_resolved_terms, GaussianPulse, SampledPulse, TemporalAmplitude, TimeResolvedTerms,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::scan_then_refine;
use crate::spectra::{moments, SpectralAmplitude, SpectralMoments, StateDescriptor};
use crate::wigner::{
    AnalyticCut, CosineReference, CutModel, CutPoint, CutSource, NumericCut, WignerCut,
};

/// `1 - |W|` below which unit-visibility evaluation switches to the limit branch.
pub const SINGULAR_GAP: f64 = 1e-10;
/// Number of coarse samples in the maximum search.
pub const SCAN_POINTS: usize = 2001;
/// Relative delay tolerance of the golden-section refinement.
pub const REFINE_REL_TOL: f64 = 1e-8;
/// `|W(τ_M)|` below which the maximum is treated as a zero crossing.
pub const ZERO_CROSSING_TOL: f64 = 1e-6;

/// Interferometric visibility, optionally derived from a polarization angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityModel {
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
}

impl VisibilityModel {
    pub fn new(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!(
                "visibility must lie in [0, 1], got {v}"
            )));
        }
        Ok(Self {
            v,
            theta: None,
            v_max: None,
        })
    }

    /// `V = V_max sin²θ` for a wave plate at angle `theta` in one arm.
    pub fn from_polarization(theta: f64, v_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v_max) {
            return Err(Error::invalid(format!(
                "intrinsic overlap must lie in [0, 1], got {v_max}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("polarization angle must be finite"));
        }
        let s = theta.sin();
        Ok(Self {
            v: v_max * s * s,
            theta: Some(theta),
            v_max: Some(v_max),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.v) {
            return Err(Error::invalid(format!(
                "visibility must lie in [0, 1], got {}",
                self.v
            )));
        }
        if let (Some(theta), Some(vm)) = (self.theta, self.v_max) {
            let expect = vm * theta.sin().powi(2);
            if (expect - self.v).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "visibility {} inconsistent with v_max sin²θ = {expect}",
                    self.v
                )));
            }
        }
        Ok(())
    }
}

/// Fisher information at one delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherPoint {
    /// ps⁻²
    pub value: f64,
    /// The unit-visibility 0/0 limit was taken instead of dividing.
    pub limit: bool,
}

/// `½ - (V/2) W(0,τ)`.
pub fn coincidence_probability<C: CutModel + ?Sized>(
    cut: &C,
    vis: &VisibilityModel,
    tau: f64,
) -> Result<f64> {
    let p = cut.eval(tau)?;
    Ok(0.5 - 0.5 * vis.v * p.w)
}

fn fisher_from_point(p: CutPoint, v: f64) -> FisherPoint {
    if v == 1.0 && 1.0 - p.w.abs() <= SINGULAR_GAP {
        return FisherPoint {
            value: (-p.w2 / p.w).max(0.0),
            limit: true,
        };
    }
    let num = v * v * p.w1 * p.w1;
    if num == 0.0 {
        return FisherPoint {
            value: 0.0,
            limit: false,
        };
    }
    let den = 1.0 - v * v * p.w * p.w;
    FisherPoint {
        value: num / den,
        limit: false,
    }
}

/// `V² W'² / (1 - V² W²)`, with the limit branch at unit visibility.
pub fn fisher_information<C: CutModel + ?Sized>(
    cut: &C,
    vis: &VisibilityModel,
    tau: f64,
) -> Result<FisherPoint> {
    Ok(fisher_from_point(cut.eval(tau)?, vis.v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMode {
    /// Photons maximally correlated in `ω₋` (fixed pump frequency).
    Correlated,
    /// Separable photon pair.
    Separable,
}

/// Quantum Fisher information for a delay on one arm.
pub fn qfi(mom: &SpectralMoments, mode: QfiMode) -> f64 {
    match mode {
        QfiMode::Correlated => mom.variance,
        QfiMode::Separable => 2.0 * mom.variance,
    }
}

/// Location and value of `max_τ F(V,τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMax {
    pub tau_m: f64,
    pub f_tilde: f64,
    /// Unit visibility: the value is the `τ → 0` limit.
    pub limit: bool,
}

fn is_even<C: CutModel + ?Sized>(cut: &C, tau_max: f64) -> Result<bool> {
    let (lo, _) = cut.domain();
    if lo > -tau_max {
        return Ok(true);
    }
    for k in 1..=4 {
        let t = tau_max * k as f64 / 7.0;
        let (a, b) = (cut.eval(t)?.w, cut.eval(-t)?.w);
        if (a - b).abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Global scan over `[0, τ_max]` (both signs for cuts that are not even)
/// followed by golden-section refinement.
pub fn max_fisher<C: CutModel + ?Sized>(cut: &C, vis: &VisibilityModel) -> Result<FisherMax> {
    vis.validate()?;
    let v = vis.v;
    if v <= 0.0 {
        return Err(Error::invalid(
            "maximum Fisher information needs a positive visibility",
        ));
    }
    if v == 1.0 {
        let p0 = cut.eval(0.0)?;
        if 1.0 - p0.w.abs() <= SINGULAR_GAP {
            let f = fisher_from_point(p0, 1.0);
            return Ok(FisherMax {
                tau_m: 0.0,
                f_tilde: f.value,
                limit: true,
            });
        }
    }
    let tau_max = cut.search_tau_max()?;
    let (dlo, dhi) = cut.domain();
    let hi = tau_max.min(dhi);
    let lo = if is_even(cut, tau_max)? {
        0.0f64.max(dlo)
    } else {
        (-tau_max).max(dlo)
    };
    if !(hi > lo) {
        return Err(Error::Grid(format!(
            "empty delay search window [{lo}, {hi}]"
        )));
    }
    let points: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let f = |t: f64| {
        fisher_information(cut, vis, t)
            .map(|p| p.value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let best = scan_then_refine(f, &points, REFINE_REL_TOL).ok_or_else(|| {
        Error::Degenerate("Fisher information is undefined on the search window".into())
    })?;
    if !(best.value > 0.0) {
        return Err(Error::Degenerate(
            "Fisher information vanishes on the whole window (flat cut)".into(),
        ));
    }
    if best.coarse_index + 1 == points.len() {
        return Err(Error::Degenerate(format!(
            "no interior maximum: Fisher information still rising at the window edge τ = {hi} ps"
        )));
    }
    Ok(FisherMax {
        tau_m: best.x,
        f_tilde: best.value,
        limit: false,
    })
}

/// Certificate that `τ_M` is a stationary point of `F(V,·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stationarity {
    /// `|F̃ + W''/W| / F̃` at `τ_M`.
    Residual {
        tau_m: f64,
        f_tilde: f64,
        residual: f64,
    },
    /// `W(τ_M) = 0`: the ratio form is undefined; the maximum sits on a zero
    /// crossing with non-zero slope.
    ZeroCrossing {
        tau_m: f64,
        f_tilde: f64,
        w: f64,
        w1: f64,
        satisfied: bool,
    },
}

impl Stationarity {
    pub fn holds(&self, tol: f64) -> bool {
        match *self {
            Stationarity::Residual { residual, .. } => residual <= tol,
            Stationarity::ZeroCrossing { satisfied, .. } => satisfied,
        }
    }
}

pub fn stationarity_residual<C: CutModel + ?Sized>(
    cut: &C,
    vis: &VisibilityModel,
) -> Result<Stationarity> {
    if !(vis.v < 1.0) {
        return Err(Error::invalid(
            "stationarity applies to visibilities below one",
        ));
    }
    let m = max_fisher(cut, vis)?;
    let p = cut.eval(m.tau_m)?;
    if p.w.abs() <= ZERO_CROSSING_TOL {
        let best_scaling = vis.v * vis.v * p.w1 * p.w1;
        let satisfied = p.w1 != 0.0 && ((m.f_tilde - best_scaling) / m.f_tilde).abs() <= 1e-9;
        return Ok(Stationarity::ZeroCrossing {
            tau_m: m.tau_m,
            f_tilde: m.f_tilde,
            w: p.w,
            w1: p.w1,
            satisfied,
        });
    }
    let residual = ((m.f_tilde + p.w2 / p.w) / m.f_tilde).abs();
    Ok(Stationarity::Residual {
        tau_m: m.tau_m,
        f_tilde: m.f_tilde,
        residual,
    })
}

/// A cut paired with its quantum Fisher information.
pub struct Probe {
    label: String,
    cut: Box<dyn CutModel + Send>,
    qfi: f64,
    source: CutSource,
}

impl std::fmt::Debug for Probe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Probe")
            .field("label", &self.label)
            .field("qfi", &self.qfi)
            .finish()
    }
}

impl Probe {
    /// Closed-form cut; `ℱ` is the analytic intensity variance.
    pub fn analytic(desc: &StateDescriptor) -> Result<Self> {
        let cut = AnalyticCut::new(desc)?;
        Ok(Self {
            label: desc.label().to_string(),
            qfi: desc
                .analytic_variance()
                .expect("closed-form kinds have a variance"),
            cut: Box::new(cut),
            source: CutSource::Analytic,
        })
    }

    /// Quadrature cut; `ℱ` is the variance of the sampled intensity.
    pub fn numeric(amp: &SpectralAmplitude, label: impl Into<String>) -> Result<Self> {
        let mom = moments(amp)?;
        Ok(Self {
            label: label.into(),
            cut: Box::new(NumericCut::new(amp)?),
            qfi: qfi(&mom, QfiMode::Correlated),
            source: CutSource::Numeric,
        })
    }

    pub fn cosine(a: f64) -> Result<Self> {
        let c = CosineReference::new(a)?;
        Ok(Self {
            label: "cosine".into(),
            qfi: 2.0 * a,
            cut: Box::new(c),
            source: CutSource::Analytic,
        })
    }

    /// A tabulated cut with externally supplied `ℱ`.
    pub fn tabulated(cut: WignerCut, qfi: f64, label: impl Into<String>) -> Result<Self> {
        if !(qfi > 0.0) {
            return Err(Error::invalid(
                "quantum Fisher information must be positive",
            ));
        }
        let source = cut.source;
        Ok(Self {
            label: label.into(),
            cut: Box::new(cut),
            qfi,
            source,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn qfi(&self) -> f64 {
        self.qfi
    }

    pub fn source(&self) -> CutSource {
        self.source
    }

    pub fn cut(&self) -> &dyn CutModel {
        self.cut.as_ref()
    }
}

impl CutModel for Probe {
    fn eval(&self, tau: f64) -> Result<CutPoint> {
        self.cut.eval(tau)
    }

    fn domain(&self) -> (f64, f64) {
        self.cut.domain()
    }

    fn search_tau_max(&self) -> Result<f64> {
        self.cut.search_tau_max()
    }
}

/// Fisher information over a delay grid at one visibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherScan {
    pub v: f64,
    pub tau_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub tau_m: f64,
    pub f_tilde: f64,
    pub qfi: f64,
    pub ratio: f64,
}

pub fn fisher_scan(probe: &Probe, vis: &VisibilityModel, tau_grid: &[f64]) -> Result<FisherScan> {
    let f_values = tau_grid
        .iter()
        .map(|&t| fisher_information(probe, vis, t).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    let m = max_fisher(probe, vis)?;
    Ok(FisherScan {
        v: vis.v,
        tau_grid: tau_grid.to_vec(),
        f_values,
        tau_m: m.tau_m,
        f_tilde: m.f_tilde,
        qfi: probe.qfi(),
        ratio: m.f_tilde / probe.qfi(),
    })
}

/// `F̃_V / ℱ` against visibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub state_label: String,
    pub v_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub tau_m: Vec<f64>,
    /// Ratios are non-decreasing along the (increasing) visibility grid.
    pub monotone: bool,
    /// Largest `ratio - V²` (non-positive when the quadratic bound holds).
    pub max_bound_excess: f64,
}

impl RatioCurve {
    pub fn bound_holds(&self, tol: f64) -> bool {
        self.max_bound_excess <= tol
    }
}

pub fn ratio_curve(probe: &Probe, v_grid: &[f64]) -> Result<RatioCurve> {
    if v_grid.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::invalid("visibility grid must lie in (0, 1]"));
    }
    let maxima = v_grid
        .par_iter()
        .map(|&v| max_fisher(probe, &VisibilityModel::new(v)?))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = maxima.iter().map(|m| m.f_tilde / probe.qfi()).collect();
    let increasing = v_grid.windows(2).all(|w| w[1] > w[0]);
    let monotone = increasing && ratios.windows(2).all(|r| r[1] >= r[0]);
    if !monotone {
        log::warn!(
            "ratio curve for {} is not monotone on the sampled grid",
            probe.label()
        );
    }
    let max_bound_excess = v_grid
        .iter()
        .zip(&ratios)
        .map(|(v, r)| r - v * v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_bound_excess > 1e-9 {
        log::warn!(
            "ratio curve for {} exceeds the V² bound by {max_bound_excess:.3e}",
            probe.label()
        );
    }
    Ok(RatioCurve {
        state_label: probe.label().to_string(),
        v_grid: v_grid.to_vec(),
        ratios,
        tau_m: maxima.iter().map(|m| m.tau_m).collect(),
        monotone,
        max_bound_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{make_state_default, StateDescriptor as S};
    use crate::wigner::wigner_cut_analytic;

    fn gauss() -> Probe {
        Probe::analytic(&S::Gauss { sigma: 1.0 }).unwrap()
    }

    fn vis(v: f64) -> VisibilityModel {
        VisibilityModel::new(v).unwrap()
    }

    #[test]
    fn coincidence_examples() {
        let g = gauss();
        assert_eq!(coincidence_probability(&g, &vis(1.0), 0.0).unwrap(), 0.0);
        assert!((coincidence_probability(&g, &vis(0.95), 0.0).unwrap() - 0.025).abs() < 1e-15);
        let expect = 0.5 - 0.45 * (-0.5f64).exp();
        assert!((coincidence_probability(&g, &vis(0.9), 1.0).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.22706).abs() < 1e-5);
    }

    #[test]
    fn coincidence_rejects_delays_outside_a_sampled_cut() {
        let cut = wigner_cut_analytic(&S::Gauss { sigma: 1.0 }, &[0.0, 0.5, 1.0]).unwrap();
        assert!(coincidence_probability(&cut, &vis(0.9), 2.0).is_err());
    }

    #[test]
    fn visibility_from_polarization() {
        let m = VisibilityModel::from_polarization(std::f64::consts::FRAC_PI_4, 0.98).unwrap();
        assert!((m.v - 0.49).abs() < 1e-12);
        m.validate().unwrap();
        assert!(VisibilityModel::new(1.2).is_err());
        let bad = VisibilityModel {
            v: 0.5,
            theta: Some(0.1),
            v_max: Some(1.0),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fisher_examples() {
        let g = gauss();
        let f = fisher_information(&g, &vis(0.9), 0.0).unwrap();
        assert_eq!(f.value, 0.0);
        let f = fisher_information(&g, &vis(1.0), 0.0).unwrap();
        assert!(f.limit && (f.value - 1.0).abs() < 1e-15);
        // 0.9801 (0.5 e^{-1/8})² / (1 - 0.9801 e^{-1/4})
        let expect = 0.9801 * (0.5 * (-0.125f64).exp()).powi(2) / (1.0 - 0.9801 * (-0.25f64).exp());
        let f = fisher_information(&g, &vis(0.99), 0.5).unwrap();
        assert!((f.value - expect).abs() < 1e-14);
        assert!((f.value - 0.806).abs() < 1e-3);
    }

    #[test]
    fn qfi_modes() {
        let m = moments(&make_state_default(&S::Gauss { sigma: 1.0 }).unwrap()).unwrap();
        assert!((qfi(&m, QfiMode::Correlated) - 1.0).abs() < 1e-9);
        assert!((qfi(&m, QfiMode::Separable) - 2.0).abs() < 1e-9);
        let m = moments(&make_state_default(&S::Rect { delta_omega: 12.0 }).unwrap()).unwrap();
        assert!((qfi(&m, QfiMode::Correlated) - 12.0).abs() < 1e-9);
    }

    /// 1-D brute force of V² u e^{-u} / (1 - V² e^{-u}) over u = σ²τ².
    fn gauss_ratio_oracle(v: f64) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        for i in 1..=2_000_000 {
            let u = i as f64 * 1e-5;
            let r = v * v * u * (-u).exp() / (1.0 - v * v * (-u).exp());
            if r > best.0 {
                best = (r, u);
            }
        }
        best
    }

    #[test]
    fn max_fisher_gauss_matches_brute_force() {
        for (v, expect, tol) in [(0.994, 0.853, 0.005), (0.83, 0.365, 0.01)] {
            let (oracle, u) = gauss_ratio_oracle(v);
            let m = max_fisher(&gauss(), &vis(v)).unwrap();
            assert!(
                (m.f_tilde - oracle).abs() < 1e-8,
                "{v}: {} vs {oracle}",
                m.f_tilde
            );
            assert!((m.tau_m * m.tau_m - u).abs() < 1e-4);
            assert!((m.f_tilde - expect).abs() < tol);
        }
        let (_, u) = gauss_ratio_oracle(0.994);
        assert!((u - 0.14).abs() < 0.01);
    }

    #[test]
    fn unit_visibility_returns_the_limit() {
        for desc in [
            S::Gauss { sigma: 2.0 },
            S::Rect { delta_omega: 12.0 },
            S::Cat {
                omega_prime: 10.0,
                delta_omega_prime: 2.0,
            },
        ] {
            let p = Probe::analytic(&desc).unwrap();
            let m = max_fisher(&p, &vis(1.0)).unwrap();
            assert!(m.limit);
            assert_eq!(m.tau_m, 0.0);
            assert!((m.f_tilde - p.qfi()).abs() < 1e-9 * p.qfi());
        }
    }

    #[test]
    fn stationarity_examples() {
        let s = stationarity_residual(&gauss(), &vis(0.9)).unwrap();
        assert!(
            matches!(s, Stationarity::Residual { residual, .. } if residual <= 1e-6),
            "{s:?}"
        );
        let rect = Probe::analytic(&S::Rect { delta_omega: 12.0 }).unwrap();
        let s = stationarity_residual(&rect, &vis(0.95)).unwrap();
        assert!(s.holds(1e-5), "{s:?}");
        let amp = make_state_default(&S::Rect { delta_omega: 12.0 }).unwrap();
        let s = stationarity_residual(&Probe::numeric(&amp, "rect").unwrap(), &vis(0.95)).unwrap();
        assert!(s.holds(1e-5), "{s:?}");
        for v in [0.6, 0.9, 0.99] {
            let s = stationarity_residual(&Probe::cosine(0.7).unwrap(), &vis(v)).unwrap();
            assert!(
                matches!(
                    s,
                    Stationarity::ZeroCrossing {
                        satisfied: true,
                        ..
                    }
                ),
                "{s:?}"
            );
        }
        assert!(stationarity_residual(&gauss(), &vis(1.0)).is_err());
    }

    #[test]
    fn flat_cut_is_degenerate() {
        let taus: Vec<f64> = (0..101).map(|i| i as f64 * 0.05).collect();
        let n = taus.len();
        let cut = WignerCut {
            tau_grid: taus,
            w: vec![1.0; n],
            w1: vec![0.0; n],
            w2: vec![0.0; n],
            source: crate::wigner::CutSource::Analytic,
            reference_only: true,
            max_imag_residue: 0.0,
            intensity_asymmetry: 0.0,
        };
        assert!(matches!(
            max_fisher(&cut, &vis(0.9)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ratio_curve_examples() {
        let cat = Probe::analytic(
            &crate::spectra::cat_from_channels(1530.0, 1560.0, 5.0, 1544.8).unwrap(),
        )
        .unwrap();
        let c = ratio_curve(&cat, &[0.83, 0.994, 1.0]).unwrap();
        assert!((c.ratios[0] - 0.64).abs() <= 0.03, "{:?}", c.ratios);
        assert!((c.ratios[1] - 0.97).abs() <= 0.02, "{:?}", c.ratios);
        assert!((c.ratios[2] - 1.0).abs() < 1e-12);
        assert!(c.monotone && c.bound_holds(1e-9));
        assert!(ratio_curve(&cat, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn bound_holds_pointwise() {
        let probes = [
            gauss(),
            Probe::analytic(&S::Rect { delta_omega: 12.0 }).unwrap(),
            Probe::analytic(&S::Cat {
                omega_prime: 23.7,
                delta_omega_prime: 7.9,
            })
            .unwrap(),
        ];
        for p in &probes {
            for v in [0.3, 0.8, 0.97] {
                for i in 1..200 {
                    let t = i as f64 * 0.01;
                    let a = fisher_information(p, &vis(v), t).unwrap().value;
                    let b = fisher_information(p, &vis(1.0), t).unwrap().value;
                    assert!(a <= v * v * b * (1.0 + 1e-9) + 1e-300, "{p:?} v={v} t={t}");
                }
            }
        }
    }
}
