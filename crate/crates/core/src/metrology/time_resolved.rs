//! Forward model for time-resolved coincidence detection with a Gaussian
//! detector jitter of standard deviation `Δ`.
//!
//! The (unnormalized) coincidence density at detection-time difference `τ̄` is
//! `∫ dt e^{-(t+τ̄)²/2Δ²} |f(t-τ) - f(-t-τ)|²`, which reduces to
//! `|f(-τ̄-τ) - f(τ̄-τ)|²` for a perfect detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, UniformGrid};

/// Detector jitter window, in units of `Δ`.
const JITTER_SPAN: f64 = 12.0;
const MIN_QUAD_POINTS: usize = 2001;
const MAX_QUAD_POINTS: usize = 400_001;

/// Biphoton amplitude in the difference-time variable.
pub trait TemporalAmplitude: Sync {
    fn eval(&self, t: f64) -> Complex64;
    /// Interval outside which the amplitude is negligible.
    fn support(&self) -> (f64, f64);
    /// Shortest time scale on which the amplitude varies.
    fn resolution(&self) -> f64;
}

/// `f(t) = (2/πδ²)^{1/4} e^{-t²/δ²}`, unit-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub delta: f64,
}

impl GaussianPulse {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!(
                "pulse width must be positive, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    fn norm_const(&self) -> f64 {
        (2.0 / (std::f64::consts::PI * self.delta * self.delta)).powf(0.25)
    }
}

impl TemporalAmplitude for GaussianPulse {
    fn eval(&self, t: f64) -> Complex64 {
        let x = t / self.delta;
        Complex64::new(self.norm_const() * (-x * x).exp(), 0.0)
    }

    fn support(&self) -> (f64, f64) {
        (-8.0 * self.delta, 8.0 * self.delta)
    }

    fn resolution(&self) -> f64 {
        self.delta
    }
}

/// Amplitude samples on a uniform time grid, linearly interpolated and zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPulse {
    grid: UniformGrid,
    values: Vec<Complex64>,
}

impl SampledPulse {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len || grid.len < 2 {
            return Err(Error::Grid(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.len
            )));
        }
        let norm: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
        let n = trapezoid(&norm, grid.step);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Degenerate(
                "temporal amplitude is not square-integrable on its grid".into(),
            ));
        }
        Ok(Self { grid, values })
    }
}

impl TemporalAmplitude for SampledPulse {
    fn eval(&self, t: f64) -> Complex64 {
        let x = (t - self.grid.start) / self.grid.step;
        if !(x >= 0.0 && x <= (self.grid.len - 1) as f64) {
            return Complex64::new(0.0, 0.0);
        }
        let i = (x.floor() as usize).min(self.grid.len - 2);
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    fn support(&self) -> (f64, f64) {
        (self.grid.start, self.grid.end())
    }

    fn resolution(&self) -> f64 {
        self.grid.step
    }
}

/// Decomposition `density = direct - interference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeResolvedTerms {
    /// `∫ w (|f(t-τ)|² + |f(-t-τ)|²)`
    pub direct: f64,
    /// `2 Re ∫ w f(t-τ) f*(-t-τ)`
    pub interference: f64,
}

impl TimeResolvedTerms {
    pub fn density(&self) -> f64 {
        (self.direct - self.interference).max(0.0)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "detector resolution must be ≥ 0, got {delta}"
        )));
    }
    Ok(())
}

pub fn time_resolved_terms<A: TemporalAmplitude + ?Sized>(
    amp: &A,
    delta: f64,
    tau_bar: f64,
    tau: f64,
) -> Result<TimeResolvedTerms> {
    check_delta(delta)?;
    if delta == 0.0 {
        let (a, b) = (amp.eval(-tau_bar - tau), amp.eval(tau_bar - tau));
        return Ok(TimeResolvedTerms {
            direct: a.norm_sqr() + b.norm_sqr(),
            interference: 2.0 * (a * b.conj()).re,
        });
    }
    // t-window where the jitter kernel and either displaced copy of f overlap
    let (slo, shi) = amp.support();
    let (lo, hi) = ((slo + tau).min(-shi - tau), (shi + tau).max(-slo - tau));
    let lo = lo.max(-tau_bar - JITTER_SPAN * delta);
    let hi = hi.min(-tau_bar + JITTER_SPAN * delta);
    if !(hi > lo) {
        return Ok(TimeResolvedTerms {
            direct: 0.0,
            interference: 0.0,
        });
    }
    let step = delta.min(amp.resolution()) / 40.0;
    let n = (((hi - lo) / step).ceil() as usize + 1).clamp(MIN_QUAD_POINTS, MAX_QUAD_POINTS);
    let h = (hi - lo) / (n - 1) as f64;
    let (mut direct, mut inter) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let t = lo + k as f64 * h;
        let w = (-(t + tau_bar).powi(2) / (2.0 * delta * delta)).exp();
        let (a, b) = (amp.eval(t - tau), amp.eval(-t - tau));
        direct.push(w * (a.norm_sqr() + b.norm_sqr()));
        inter.push(w * 2.0 * (a * b.conj()).re);
    }
    Ok(TimeResolvedTerms {
        direct: trapezoid(&direct, h),
        interference: trapezoid(&inter, h),
    })
}

/// Unnormalized coincidence density at `(τ̄, τ)`.
pub fn time_resolved_pc<A: TemporalAmplitude + ?Sized>(
    amp: &A,
    delta: f64,
    tau_bar: f64,
    tau: f64,
) -> Result<f64> {
    Ok(time_resolved_terms(amp, delta, tau_bar, tau)?.density())
}

/// Density over a uniform `τ̄` grid at fixed `τ`, optionally normalized to unit area.
pub fn time_resolved_profile<A: TemporalAmplitude + ?Sized>(
    amp: &A,
    delta: f64,
    tau_bars: &[f64],
    tau: f64,
    normalize: bool,
) -> Result<Vec<f64>> {
    let mut out = tau_bars
        .iter()
        .map(|&tb| time_resolved_pc(amp, delta, tb, tau))
        .collect::<Result<Vec<_>>>()?;
    if normalize {
        let grid = UniformGrid::from_points(tau_bars, 1e-6)?;
        let area = trapezoid(&out, grid.step);
        if !(area > 0.0) {
            return Err(Error::Degenerate(format!(
                "coincidence density vanishes over the τ̄ grid at τ = {tau}"
            )));
        }
        out.iter_mut().for_each(|v| *v /= area);
    }
    Ok(out)
}

/// Interference term for the Gaussian pulse:
/// `2N² √(π/A) e^{-2τ̄²/(4Δ²+δ²)} e^{-2τ²/δ²}`, `A = 1/2Δ² + 2/δ²`.
pub fn gaussian_interference_closed_form(
    pulse: &GaussianPulse,
    delta: f64,
    tau_bar: f64,
    tau: f64,
) -> Result<f64> {
    check_delta(delta)?;
    let d = pulse.delta;
    let n2 = pulse.norm_const().powi(2);
    let env = (-2.0 * tau * tau / (d * d)).exp();
    if delta == 0.0 {
        return Ok(2.0 * n2 * (-2.0 * tau_bar * tau_bar / (d * d)).exp() * env);
    }
    let a = 1.0 / (2.0 * delta * delta) + 2.0 / (d * d);
    Ok(2.0
        * n2
        * (std::f64::consts::PI / a).sqrt()
        * (-2.0 * tau_bar * tau_bar / (4.0 * delta * delta + d * d)).exp()
        * env)
}
