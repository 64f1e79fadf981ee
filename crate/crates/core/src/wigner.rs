//! The `μ = 0` cut of the chronocyclic Wigner function,
//! `W(0,τ) = Re ∫ f(ω) f*(-ω) e^{iωτ} dω`, and its first two delay derivatives.
//!
//! Derivatives are obtained by weighting the integrand with `iω` and `-ω²`
//! rather than by finite differences.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{sinc, sinc_d1, sinc_d2};
use crate::spectra::{moments, Sampling, SpectralAmplitude, StateDescriptor};

/// Imaginary residue above which the cut is flagged as coming from an
/// asymmetric intensity spectrum.
pub const IMAG_RESIDUE_WARN: f64 = 1e-8;

/// Value and derivatives of the cut at one delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutPoint {
    pub w: f64,
    /// dW/dτ, ps⁻¹
    pub w1: f64,
    /// d²W/dτ², ps⁻²
    pub w2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSource {
    Analytic,
    Numeric,
}

/// Anything that can evaluate the Wigner cut at an arbitrary delay.
pub trait CutModel: Sync {
    fn eval(&self, tau: f64) -> Result<CutPoint>;

    /// Delay interval on which `eval` is defined.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Upper end of the delay window searched for the Fisher maximum.
    fn search_tau_max(&self) -> Result<f64> {
        let p = self.eval(0.0)?;
        let curvature = -p.w2 / p.w;
        if !(curvature.is_finite() && curvature > 0.0) {
            return Err(Error::Degenerate(format!(
                "cut has no curvature at τ = 0 ({curvature})"
            )));
        }
        // three periods of a sinusoid with the same curvature; also exceeds 6/√F
        Ok(3.0 * 2.0 * PI / curvature.sqrt())
    }
}

/// Closed forms for the Gaussian, rectangular and two-block states.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCut {
    desc: StateDescriptor,
}

impl AnalyticCut {
    pub fn new(desc: &StateDescriptor) -> Result<Self> {
        desc.validate()?;
        match desc {
            StateDescriptor::Gauss { .. }
            | StateDescriptor::Rect { .. }
            | StateDescriptor::Cat { .. } => Ok(Self { desc: desc.clone() }),
            other => Err(Error::Unsupported(format!(
                "{} has no closed-form cut; use the numeric path",
                other.label()
            ))),
        }
    }

    pub fn descriptor(&self) -> &StateDescriptor {
        &self.desc
    }
}

impl CutModel for AnalyticCut {
    fn eval(&self, tau: f64) -> Result<CutPoint> {
        Ok(match self.desc {
            StateDescriptor::Gauss { sigma } => {
                let s2 = sigma * sigma;
                let w = (-0.5 * tau * tau * s2).exp();
                CutPoint {
                    w,
                    w1: -tau * s2 * w,
                    w2: (tau * tau * s2 * s2 - s2) * w,
                }
            }
            StateDescriptor::Rect { delta_omega } => {
                let k = 0.5 * delta_omega;
                let x = k * tau;
                CutPoint {
                    w: sinc(x),
                    w1: k * sinc_d1(x),
                    w2: k * k * sinc_d2(x),
                }
            }
            StateDescriptor::Cat {
                omega_prime,
                delta_omega_prime,
            } => {
                let k = 0.5 * delta_omega_prime;
                let x = k * tau;
                let (s, s1, s2) = (sinc(x), k * sinc_d1(x), k * k * sinc_d2(x));
                let (sn, cs) = (omega_prime * tau).sin_cos();
                let o = omega_prime;
                CutPoint {
                    w: s * cs,
                    w1: s1 * cs - o * s * sn,
                    w2: s2 * cs - 2.0 * o * s1 * sn - o * o * s * cs,
                }
            }
            _ => unreachable!("constructor admits only closed-form kinds"),
        })
    }

    fn search_tau_max(&self) -> Result<f64> {
        let var = self.desc.analytic_variance().unwrap();
        let base = 6.0 / var.sqrt();
        Ok(match self.desc {
            StateDescriptor::Cat { omega_prime, .. } => base.max(3.0 * 2.0 * PI / omega_prime),
            _ => base,
        })
    }
}

/// Quadrature of the cut for an arbitrary amplitude on a grid symmetric about zero.
#[derive(Debug, Clone)]
pub struct NumericCut {
    omegas: Vec<f64>,
    /// `f(ω) f*(-ω)` times the quadrature weight (point sampling) or the plain product (cell sampling).
    weighted: Vec<Complex64>,
    sampling: Sampling,
    step: f64,
}

impl NumericCut {
    pub fn new(amp: &SpectralAmplitude) -> Result<Self> {
        amp.check_normalized()?;
        let g = amp.reflected_product()?;
        let weighted = match amp.sampling() {
            Sampling::Point => g
                .iter()
                .enumerate()
                .map(|(i, v)| v * amp.weight(i))
                .collect(),
            Sampling::Cell => g,
        };
        // drop empty samples; they contribute nothing
        let (omegas, weighted): (Vec<f64>, Vec<Complex64>) = weighted
            .into_iter()
            .enumerate()
            .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
            .map(|(i, v)| (amp.grid().at(i), v))
            .unzip();
        if omegas.is_empty() {
            return Err(Error::Degenerate("f(ω)f*(-ω) vanishes everywhere".into()));
        }
        Ok(Self {
            omegas,
            weighted,
            sampling: amp.sampling(),
            step: amp.grid().step,
        })
    }

    /// Complex sums `Σ g e^{iωτ}`, `Σ g iω e^{iωτ}`, `Σ g (-ω²) e^{iωτ}`, with the
    /// exact cell kernel folded in for cell sampling.
    pub fn complex_eval(&self, tau: f64) -> [Complex64; 3] {
        let mut a = [Complex64::new(0.0, 0.0); 3];
        // phases by recurrence, re-anchored periodically to bound drift
        const ANCHOR: usize = 64;
        let rot = Complex64::from_polar(1.0, self.step * tau);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut last = f64::NAN;
        for (j, (&w, &g)) in self.omegas.iter().zip(&self.weighted).enumerate() {
            if j % ANCHOR == 0 || (w - last - self.step).abs() > 1e-9 * self.step {
                phase = Complex64::from_polar(1.0, w * tau);
            } else {
                phase *= rot;
            }
            last = w;
            let t = g * phase;
            a[0] += t;
            a[1] += Complex64::new(-t.im * w, t.re * w);
            a[2] -= t * (w * w);
        }
        match self.sampling {
            Sampling::Point => a,
            Sampling::Cell => {
                // ∫cell e^{iωτ} = e^{iω_jτ} S(τ), S = h sinc(hτ/2)
                let h = self.step;
                let x = 0.5 * h * tau;
                let s0 = h * sinc(x);
                let s1 = h * 0.5 * h * sinc_d1(x);
                let s2 = h * 0.25 * h * h * sinc_d2(x);
                [
                    a[0] * s0,
                    a[1] * s0 + a[0] * s1,
                    a[2] * s0 + a[1] * (2.0 * s1) + a[0] * s2,
                ]
            }
        }
    }
}

impl CutModel for NumericCut {
    fn eval(&self, tau: f64) -> Result<CutPoint> {
        let [a0, a1, a2] = self.complex_eval(tau);
        Ok(CutPoint {
            w: a0.re,
            w1: a1.re,
            w2: a2.re,
        })
    }
}

/// `W(0,τ) = cos(√(2a) τ)`: the cut that yields a delay-independent Fisher
/// information at unit visibility. Not the cut of any normalizable state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineReference {
    pub a: f64,
}

impl CosineReference {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(format!(
                "cosine reference needs a > 0, got {a}"
            )));
        }
        Ok(Self { a })
    }

    pub fn frequency(&self) -> f64 {
        (2.0 * self.a).sqrt()
    }
}

impl CutModel for CosineReference {
    fn eval(&self, tau: f64) -> Result<CutPoint> {
        let k = self.frequency();
        let (s, c) = (k * tau).sin_cos();
        Ok(CutPoint {
            w: c,
            w1: -k * s,
            w2: -k * k * c,
        })
    }

    fn search_tau_max(&self) -> Result<f64> {
        Ok(3.0 * 2.0 * PI / self.frequency())
    }
}

/// A cut tabulated on a delay grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerCut {
    pub tau_grid: Vec<f64>,
    pub w: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub source: CutSource,
    /// Unphysical reference cut (not attached to a normalizable state).
    #[serde(default)]
    pub reference_only: bool,
    /// Largest `|Im ∫ f f*(-ω) e^{iωτ}|` on the grid (numeric cuts only).
    /// Zero in exact arithmetic; a quadrature health check.
    #[serde(default)]
    pub max_imag_residue: f64,
    /// `∫ | |f(ω)|² - |f(-ω)|² | dω` (numeric cuts only); non-zero for a
    /// displaced symmetry centre.
    #[serde(default)]
    pub intensity_asymmetry: f64,
}

impl WignerCut {
    /// Evaluate `model` on `tau_grid` (finite, strictly increasing).
    pub fn tabulate<C: CutModel + ?Sized>(
        model: &C,
        tau_grid: &[f64],
        source: CutSource,
    ) -> Result<Self> {
        validate_delays(tau_grid)?;
        let mut cut = WignerCut {
            tau_grid: tau_grid.to_vec(),
            w: Vec::with_capacity(tau_grid.len()),
            w1: Vec::with_capacity(tau_grid.len()),
            w2: Vec::with_capacity(tau_grid.len()),
            source,
            reference_only: false,
            max_imag_residue: 0.0,
            intensity_asymmetry: 0.0,
        };
        for &t in tau_grid {
            let p = model.eval(t)?;
            cut.w.push(p.w);
            cut.w1.push(p.w1);
            cut.w2.push(p.w2);
        }
        Ok(cut)
    }

    pub fn len(&self) -> usize {
        self.tau_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_grid.is_empty()
    }

    pub fn point(&self, i: usize) -> CutPoint {
        CutPoint {
            w: self.w[i],
            w1: self.w1[i],
            w2: self.w2[i],
        }
    }

    fn is_increasing(&self) -> bool {
        self.tau_grid.windows(2).all(|w| w[1] > w[0])
    }
}

fn validate_delays(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::Grid("delay grid is empty".into()));
    }
    if tau_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Grid("delay grid contains non-finite values".into()));
    }
    Ok(())
}

/// Cubic Hermite interpolation of `w` (using `w1`) and of `w1` (using `w2`);
/// `w2` is interpolated linearly. Nodes are returned exactly.
impl CutModel for WignerCut {
    fn eval(&self, tau: f64) -> Result<CutPoint> {
        let (lo, hi) = self.domain();
        if !(tau >= lo && tau <= hi) || self.is_empty() || !self.is_increasing() {
            return Err(Error::OutOfRange { tau, lo, hi });
        }
        let i = match self
            .tau_grid
            .binary_search_by(|t| t.partial_cmp(&tau).unwrap())
        {
            Ok(i) => return Ok(self.point(i)),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.tau_grid[i], self.tau_grid[i + 1]);
        let h = t1 - t0;
        let s = (tau - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let herm =
            |y0: f64, y1: f64, d0: f64, d1: f64| h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        Ok(CutPoint {
            w: herm(self.w[i], self.w[i + 1], self.w1[i], self.w1[i + 1]),
            w1: herm(self.w1[i], self.w1[i + 1], self.w2[i], self.w2[i + 1]),
            w2: self.w2[i] + s * (self.w2[i + 1] - self.w2[i]),
        })
    }

    fn domain(&self) -> (f64, f64) {
        match (self.tau_grid.first(), self.tau_grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (f64::NAN, f64::NAN),
        }
    }

    fn search_tau_max(&self) -> Result<f64> {
        let (_, hi) = self.domain();
        if !(hi > 0.0) {
            return Err(Error::Grid(
                "cut grid does not extend to positive delays".into(),
            ));
        }
        Ok(hi)
    }
}

/// Quadrature cut for an arbitrary normalized amplitude.
pub fn wigner_cut_numeric(amp: &SpectralAmplitude, tau_grid: &[f64]) -> Result<WignerCut> {
    let model = NumericCut::new(amp)?;
    let mut cut = WignerCut::tabulate(&model, tau_grid, CutSource::Numeric)?;
    cut.max_imag_residue = tau_grid
        .iter()
        .map(|&t| model.complex_eval(t)[0].im.abs())
        .fold(0.0, f64::max);
    if cut.max_imag_residue > IMAG_RESIDUE_WARN {
        log::warn!(
            "Wigner cut has imaginary quadrature residue {:.3e}",
            cut.max_imag_residue
        );
    }
    let v = amp.values();
    cut.intensity_asymmetry = (0..v.len())
        .map(|i| amp.weight(i) * (v[i].norm_sqr() - v[amp.mirror(i)].norm_sqr()).abs())
        .sum();
    if cut.intensity_asymmetry > IMAG_RESIDUE_WARN {
        log::warn!(
            "|f(ω)|² is not symmetric about zero (asymmetry {:.3e}); the cut peak drops below one",
            cut.intensity_asymmetry
        );
    }
    Ok(cut)
}

/// Closed-form cut for the Gaussian, rectangular and two-block states.
pub fn wigner_cut_analytic(desc: &StateDescriptor, tau_grid: &[f64]) -> Result<WignerCut> {
    WignerCut::tabulate(&AnalyticCut::new(desc)?, tau_grid, CutSource::Analytic)
}

/// `cos(√(2a) τ)` reference cut.
pub fn cosine_reference_cut(a: f64, tau_grid: &[f64]) -> Result<WignerCut> {
    let mut cut = WignerCut::tabulate(&CosineReference::new(a)?, tau_grid, CutSource::Analytic)?;
    cut.reference_only = true;
    Ok(cut)
}

/// Curvature `-W''(0)` of a numeric cut next to the intensity variance, for diagnostics.
pub fn curvature_and_variance(amp: &SpectralAmplitude) -> Result<(f64, f64)> {
    let p = NumericCut::new(amp)?.eval(0.0)?;
    Ok((-p.w2, moments(amp)?.variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{make_state_default, StateDescriptor as S};

    fn delays(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn numeric_examples() {
        let g = make_state_default(&S::Gauss { sigma: 1.0 }).unwrap();
        let c = wigner_cut_numeric(&g, &[0.0]).unwrap();
        assert!((c.w[0] - 1.0).abs() < 1e-9);

        let r = make_state_default(&S::Rect { delta_omega: 12.0 }).unwrap();
        let c = wigner_cut_numeric(&r, &[0.5]).unwrap();
        assert!((c.w[0] - 3f64.sin() / 3.0).abs() < 1e-9);
        assert!((c.w[0] - 0.04704).abs() < 1e-5);

        let cat = make_state_default(&S::Cat {
            omega_prime: 10.0,
            delta_omega_prime: 2.0,
        })
        .unwrap();
        let c = wigner_cut_numeric(&cat, &[0.3]).unwrap();
        let closed = 0.3f64.sin() / 0.3 * 3f64.cos();
        assert!((c.w[0] - closed).abs() < 1e-9);
        assert!((c.w[0] + 0.97521).abs() < 1e-5);
    }

    #[test]
    fn analytic_examples() {
        let c = wigner_cut_analytic(&S::Gauss { sigma: 2.0 }, &[1.0]).unwrap();
        assert!((c.w[0] - (-2f64).exp()).abs() < 1e-15);
        assert!((c.w[0] - 0.13534).abs() < 1e-5);
        let c = wigner_cut_analytic(&S::Rect { delta_omega: 7.3 }, &[0.0]).unwrap();
        assert_eq!(c.w[0], 1.0);
        let c = wigner_cut_analytic(
            &S::Cat {
                omega_prime: 10.0,
                delta_omega_prime: 2.0,
            },
            &[PI / 20.0],
        )
        .unwrap();
        assert!(c.w[0].abs() < 1e-15);
        assert!(wigner_cut_analytic(
            &S::SincPm {
                a: 1e-3,
                b: 0.0,
                c: 0.0
            },
            &[0.0]
        )
        .is_err());
    }

    #[test]
    fn cosine_reference_examples() {
        let c = cosine_reference_cut(0.5, &[0.0, PI]).unwrap();
        assert_eq!(c.w[0], 1.0);
        assert!((c.w[1] + 1.0).abs() < 1e-15);
        assert!(c.reference_only);
        let c = cosine_reference_cut(2.0, &[PI / 4.0]).unwrap();
        assert!(c.w[0].abs() < 1e-15);
        assert!(cosine_reference_cut(0.0, &[0.0]).is_err());
    }

    #[test]
    fn analytic_and_numeric_agree_on_default_grids() {
        let cases = [
            (S::Gauss { sigma: 1.0 }, 8.0),
            (S::Gauss { sigma: 5.03 }, 2.0),
            (S::Rect { delta_omega: 12.0 }, 3.0),
            (S::Rect { delta_omega: 11.84 }, 3.0),
            (
                S::Cat {
                    omega_prime: 10.0,
                    delta_omega_prime: 2.0,
                },
                3.0,
            ),
            (
                S::Cat {
                    omega_prime: 23.7,
                    delta_omega_prime: 7.9,
                },
                1.5,
            ),
        ];
        for (desc, tmax) in cases {
            let taus = delays(-tmax, tmax, 801);
            let a = wigner_cut_analytic(&desc, &taus).unwrap();
            let n = wigner_cut_numeric(&make_state_default(&desc).unwrap(), &taus).unwrap();
            let scale = desc.analytic_variance().unwrap();
            for (i, t) in taus.iter().enumerate() {
                assert!((a.w[i] - n.w[i]).abs() <= 1e-7, "{desc:?} w at {t}");
                assert!(
                    (a.w2[i] - n.w2[i]).abs() <= 1e-5 * scale,
                    "{desc:?} w2 at {t}"
                );
            }
        }
    }

    #[test]
    fn curvature_equals_variance() {
        for desc in [
            S::Gauss { sigma: 1.3 },
            S::Rect { delta_omega: 12.0 },
            S::Cat {
                omega_prime: 23.7,
                delta_omega_prime: 7.9,
            },
            S::SincPm {
                a: 3.5e-4,
                b: 0.0,
                c: 0.0,
            },
        ] {
            let amp = make_state_default(&desc).unwrap();
            let (curv, var) = curvature_and_variance(&amp).unwrap();
            assert!(
                ((curv - var) / var).abs() < 1e-4,
                "{desc:?}: {curv} vs {var}"
            );
        }
    }

    #[test]
    fn symmetric_states_give_even_bounded_cuts() {
        let taus = delays(-2.0, 2.0, 401);
        for desc in [
            S::Gauss { sigma: 1.0 },
            S::SincPm {
                a: 3.5e-4,
                b: 0.0,
                c: 0.0,
            },
        ] {
            let c = wigner_cut_numeric(&make_state_default(&desc).unwrap(), &taus).unwrap();
            assert!((c.w[200] - 1.0).abs() < 1e-9);
            assert!(c.w1[200].abs() < 1e-9);
            for i in 0..taus.len() {
                assert!(c.w[i].abs() <= 1.0 + 1e-9);
                assert!((c.w[i] - c.w[400 - i]).abs() < 1e-9);
            }
            assert!(c.max_imag_residue < IMAG_RESIDUE_WARN);
            assert!(c.intensity_asymmetry < IMAG_RESIDUE_WARN);
        }
    }

    #[test]
    fn asymmetric_spectrum_is_flagged_but_cut_stays_real() {
        let amp = make_state_default(&S::SincPm {
            a: 3.5e-4,
            b: 0.01,
            c: 0.0,
        })
        .unwrap();
        let c = wigner_cut_numeric(&amp, &delays(0.0, 0.2, 21)).unwrap();
        assert!(c.w[0] < 1.0 - 1e-6);
        assert!(c.intensity_asymmetry > IMAG_RESIDUE_WARN);
        // g(-ω) = g(ω)* pairs up the quadrature, so the imaginary part cancels
        assert!(c.max_imag_residue < 1e-12);
    }

    #[test]
    fn asymmetric_grid_is_rejected() {
        let grid = crate::grid::UniformGrid::new(-1.0, 0.01, 600).unwrap();
        let values = grid
            .points()
            .iter()
            .map(|w| Complex64::new((-w * w).exp(), 0.0))
            .collect();
        let amp = SpectralAmplitude::from_samples(grid, values, Sampling::Point).unwrap();
        assert!(matches!(
            wigner_cut_numeric(&amp, &[0.0]),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for desc in [
            S::Gauss { sigma: 1.0 },
            S::Rect { delta_omega: 12.0 },
            S::Cat {
                omega_prime: 10.0,
                delta_omega_prime: 2.0,
            },
        ] {
            let amp = make_state_default(&desc).unwrap();
            let model = NumericCut::new(&amp).unwrap();
            let h = 1e-3 / desc.analytic_variance().unwrap().sqrt();
            for &t in &[0.05, 0.2, 0.7] {
                let (m, p0, pp) = (
                    model.eval(t - h).unwrap(),
                    model.eval(t).unwrap(),
                    model.eval(t + h).unwrap(),
                );
                let d1 = (pp.w - m.w) / (2.0 * h);
                let d2 = (pp.w - 2.0 * p0.w + m.w) / (h * h);
                let scale1 = p0.w1.abs().max(1e-3);
                let scale2 = p0.w2.abs().max(1e-3);
                assert!(((d1 - p0.w1) / scale1).abs() < 1e-5, "{desc:?} w1 at {t}");
                assert!(((d2 - p0.w2) / scale2).abs() < 1e-5, "{desc:?} w2 at {t}");
            }
        }
    }

    #[test]
    fn sampled_cut_interpolates_and_bounds_its_domain() {
        let taus = delays(0.0, 3.0, 601);
        let cut = wigner_cut_analytic(&S::Gauss { sigma: 1.0 }, &taus).unwrap();
        let p = cut.eval(1.2345).unwrap();
        assert!((p.w - (-0.5f64 * 1.2345 * 1.2345).exp()).abs() < 1e-9);
        assert!(matches!(cut.eval(3.5), Err(Error::OutOfRange { .. })));
    }
}
