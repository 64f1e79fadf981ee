//! Spectral amplitudes `f(ω₋)` over the frequency-difference variable.
//!
//! Frequencies are angular detunings in rad/ps. The Gaussian `sigma` is the
//! standard deviation of the intensity spectrum `|f|²`, not of the amplitude.
//!
//! Amplitudes are stored on a uniform grid symmetric about zero with one of
//! two sampling models:
//!
//! * [`Sampling::Point`]: values are point samples of a smooth function and
//!   integrals use the trapezoid rule.
//! * [`Sampling::Cell`]: values are constant over cells `[ω_j - h/2, ω_j + h/2]`
//!   and integrals are evaluated exactly cell by cell. Rectangular and
//!   two-block states use this model with the block edges placed on cell
//!   boundaries, which makes their quadrature exact rather than first order.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;
/// Speed of light in mm/ps.
pub const SPEED_OF_LIGHT_MM_PER_PS: f64 = 0.299_792_458;

pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const DEFAULT_SPAN_SIGMAS: f64 = 8.0;
pub const MIN_GRID_POINTS: usize = 512;
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-10;
/// Minimum grid half-span, in intensity standard deviations, on each side of the mean.
pub const MIN_SUPPORT_SIGMAS: f64 = 8.0;
const TEMPORAL_ZERO_PADDING: usize = 4;

/// Parametric description of `f(ω₋)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDescriptor {
    /// Gaussian; `sigma` is the intensity standard deviation (rad/ps).
    Gauss { sigma: f64 },
    /// Indicator on `[-delta_omega/2, delta_omega/2]`.
    Rect { delta_omega: f64 },
    /// Two indicator blocks of width `delta_omega_prime` centered at `±omega_prime`.
    Cat {
        omega_prime: f64,
        delta_omega_prime: f64,
    },
    /// `sinc(a ω² + b ω + c)` with `sinc(x) = sin(x)/x`.
    SincPm { a: f64, b: f64, c: f64 },
    /// User-supplied samples on a uniform grid.
    Tabulated {
        grid: UniformGrid,
        values: Vec<Complex64>,
    },
}

impl StateDescriptor {
    pub fn label(&self) -> &'static str {
        match self {
            StateDescriptor::Gauss { .. } => "gauss",
            StateDescriptor::Rect { .. } => "rect",
            StateDescriptor::Cat { .. } => "cat",
            StateDescriptor::SincPm { .. } => "sinc_pm",
            StateDescriptor::Tabulated { .. } => "tabulated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        }
        match *self {
            StateDescriptor::Gauss { sigma } => positive("sigma", sigma),
            StateDescriptor::Rect { delta_omega } => positive("delta_omega", delta_omega),
            StateDescriptor::Cat {
                omega_prime,
                delta_omega_prime,
            } => {
                positive("omega_prime", omega_prime)?;
                positive("delta_omega_prime", delta_omega_prime)?;
                if omega_prime <= 0.5 * delta_omega_prime {
                    return Err(Error::invalid(format!(
                        "cat blocks overlap: omega_prime = {omega_prime} must exceed delta_omega_prime/2 = {}",
                        0.5 * delta_omega_prime
                    )));
                }
                Ok(())
            }
            StateDescriptor::SincPm { a, b, c } => {
                if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                    return Err(Error::invalid("sinc_pm coefficients must be finite"));
                }
                if a == 0.0 {
                    return Err(Error::invalid(
                        "sinc_pm quadratic coefficient a must be non-zero (finite spectral variance)",
                    ));
                }
                Ok(())
            }
            StateDescriptor::Tabulated {
                ref grid,
                ref values,
            } => {
                if grid.len != values.len() {
                    return Err(Error::Grid(format!(
                        "tabulated grid has {} points but {} values",
                        grid.len,
                        values.len()
                    )));
                }
                if values
                    .iter()
                    .any(|v| !(v.re.is_finite() && v.im.is_finite()))
                {
                    return Err(Error::invalid(
                        "tabulated amplitude contains non-finite values",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Closed-form intensity variance, where one exists.
    pub fn analytic_variance(&self) -> Option<f64> {
        match *self {
            StateDescriptor::Gauss { sigma } => Some(sigma * sigma),
            StateDescriptor::Rect { delta_omega } => Some(delta_omega * delta_omega / 12.0),
            StateDescriptor::Cat {
                omega_prime,
                delta_omega_prime,
            } => Some(omega_prime * omega_prime + delta_omega_prime * delta_omega_prime / 12.0),
            _ => None,
        }
    }
}

/// How grid values are to be integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Point,
    Cell,
}

/// Normalized amplitude samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    grid: UniformGrid,
    values: Vec<Complex64>,
    sampling: Sampling,
    norm_tolerance: f64,
}

impl SpectralAmplitude {
    /// Build from raw samples, normalizing so that the integral of `|f|²` is one.
    pub fn from_samples(
        grid: UniformGrid,
        values: Vec<Complex64>,
        sampling: Sampling,
    ) -> Result<Self> {
        if grid.len != values.len() {
            return Err(Error::Grid(format!(
                "grid has {} points but {} values were supplied",
                grid.len,
                values.len()
            )));
        }
        let amp = Self {
            grid,
            values,
            sampling,
            norm_tolerance: DEFAULT_NORM_TOLERANCE,
        };
        amp.normalized()
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    /// Quadrature weight of sample `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        match self.sampling {
            Sampling::Cell => self.grid.step,
            Sampling::Point => {
                if i == 0 || i + 1 == self.grid.len {
                    0.5 * self.grid.step
                } else {
                    self.grid.step
                }
            }
        }
    }

    /// Integral of `|f|²`.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v.norm_sqr() * self.weight(i))
            .sum()
    }

    /// Rescale to unit norm. Amplitudes already normalized to within a few
    /// ulps are returned unchanged so that normalization is idempotent.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Degenerate(format!(
                "amplitude has zero or non-finite norm ({norm})"
            )));
        }
        if (norm - 1.0).abs() > 4.0 * f64::EPSILON * self.grid.len as f64 {
            let scale = norm.sqrt().recip();
            for v in &mut self.values {
                *v *= scale;
            }
        }
        Ok(self)
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > self.norm_tolerance {
            return Err(Error::NotNormalized {
                norm,
                tolerance: self.norm_tolerance,
            });
        }
        Ok(())
    }

    /// Index of the grid point mirrored through zero; requires a symmetric grid.
    #[inline]
    pub(crate) fn mirror(&self, i: usize) -> usize {
        self.grid.len - 1 - i
    }

    /// `f(ω) f*(-ω)` on the grid. Fails if the grid is not symmetric about zero.
    pub fn reflected_product(&self) -> Result<Vec<Complex64>> {
        if !self.grid.is_symmetric() {
            return Err(Error::Grid(format!(
                "amplitude grid [{}, {}] is not symmetric about zero; f*(-ω) is undefined on it",
                self.grid.start,
                self.grid.end()
            )));
        }
        Ok((0..self.grid.len)
            .map(|i| self.values[i] * self.values[self.mirror(i)].conj())
            .collect())
    }

    /// Largest `|f(ω) - f(-ω)|` on a symmetric grid.
    pub fn parity_defect(&self) -> Result<f64> {
        if !self.grid.is_symmetric() {
            return Err(Error::Grid("grid is not symmetric about zero".into()));
        }
        Ok((0..self.grid.len)
            .map(|i| (self.values[i] - self.values[self.mirror(i)]).norm())
            .fold(0.0, f64::max))
    }
}

/// Mean and variances of an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    /// Mean of `|f|²`, rad/ps.
    pub mean: f64,
    /// Variance of `|f|²`, rad²/ps².
    pub variance: f64,
    /// Variance of the squared modulus of the Fourier transform, ps².
    pub temporal_variance: f64,
    /// Product `variance * temporal_variance`.
    pub phase_space_area: f64,
}

/// Build and normalize an amplitude from a descriptor.
pub fn make_state(
    desc: &StateDescriptor,
    grid_points: usize,
    span_sigmas: f64,
) -> Result<SpectralAmplitude> {
    desc.validate()?;
    if !matches!(desc, StateDescriptor::Tabulated { .. }) && grid_points < MIN_GRID_POINTS {
        return Err(Error::Grid(format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }
    if !(span_sigmas.is_finite() && span_sigmas > 0.0) {
        return Err(Error::invalid(format!(
            "span_sigmas must be positive, got {span_sigmas}"
        )));
    }
    let amp = match *desc {
        StateDescriptor::Gauss { sigma } => {
            let half = span_sigmas * sigma;
            let grid =
                UniformGrid::symmetric(2.0 * half / (grid_points as f64 - 1.0), grid_points)?;
            let values = grid
                .points()
                .into_iter()
                .map(|w| Complex64::new((-w * w / (4.0 * sigma * sigma)).exp(), 0.0))
                .collect();
            SpectralAmplitude::from_samples(grid, values, Sampling::Point)?
        }
        StateDescriptor::Rect { delta_omega } => {
            let n = even(grid_points);
            let half = span_sigmas * delta_omega / 12f64.sqrt();
            let h0 = 2.0 * half / n as f64;
            let cells = ((0.5 * delta_omega / h0).floor() as usize).max(1);
            let h = 0.5 * delta_omega / cells as f64;
            let grid = UniformGrid::symmetric(h, n)?;
            let values = fill_blocks(&grid, &[(-0.5 * delta_omega, 0.5 * delta_omega)]);
            SpectralAmplitude::from_samples(grid, values, Sampling::Cell)?
        }
        StateDescriptor::Cat {
            omega_prime,
            delta_omega_prime,
        } => {
            let n = even(grid_points);
            let std = desc.analytic_variance().unwrap().sqrt();
            let h0 = 2.0 * span_sigmas * std / n as f64;
            let inner = omega_prime - 0.5 * delta_omega_prime;
            let outer = omega_prime + 0.5 * delta_omega_prime;
            let h = commensurate_step(inner, delta_omega_prime, h0).unwrap_or_else(|| {
                log::info!(
                    "cat edges {inner}, {outer} are not commensurate with any nearby grid step; \
                     partial cells carry fractional weight and quadrature is second order"
                );
                delta_omega_prime / ((delta_omega_prime / h0).floor().max(1.0))
            });
            let grid = UniformGrid::symmetric(h, n)?;
            let values = fill_blocks(&grid, &[(-outer, -inner), (inner, outer)]);
            SpectralAmplitude::from_samples(grid, values, Sampling::Cell)?
        }
        StateDescriptor::SincPm { a, b, c } => {
            sinc_pm_amplitude(a, b, c, grid_points, span_sigmas)?
        }
        StateDescriptor::Tabulated {
            ref grid,
            ref values,
        } => SpectralAmplitude::from_samples(*grid, values.clone(), Sampling::Point)?,
    };
    check_support(&amp, MIN_SUPPORT_SIGMAS)?;
    Ok(amp)
}

/// Default grid (4096 points, ±8 intensity standard deviations).
pub fn make_state_default(desc: &StateDescriptor) -> Result<SpectralAmplitude> {
    make_state(desc, DEFAULT_GRID_POINTS, DEFAULT_SPAN_SIGMAS)
}

fn even(n: usize) -> usize {
    n + (n & 1)
}

/// Largest cell width `h >= h0` (within a factor of two) such that both
/// `inner` and `inner + width` are integer multiples of `h`.
fn commensurate_step(inner: f64, width: f64, h0: f64) -> Option<f64> {
    let m_max = (width / h0).floor() as usize;
    if m_max == 0 {
        return None;
    }
    let m_min = (m_max / 2).max(1);
    (m_min..=m_max).rev().find_map(|m| {
        let h = width / m as f64;
        let k = inner / h;
        ((k - k.round()).abs() <= 1e-9 * k.abs().max(1.0)).then_some(h)
    })
}

/// Cell values for a union of indicator blocks. Partially covered cells get
/// `sqrt(coverage)` so that cell integrals of `|f|²` stay exact.
fn fill_blocks(grid: &UniformGrid, blocks: &[(f64, f64)]) -> Vec<Complex64> {
    let h = grid.step;
    (0..grid.len)
        .map(|i| {
            let centre = grid.at(i);
            let (lo, hi) = (centre - 0.5 * h, centre + 0.5 * h);
            let covered: f64 = blocks
                .iter()
                .map(|&(a, b)| (hi.min(b) - lo.max(a)).max(0.0))
                .sum();
            let frac = covered / h;
            let frac = if frac < 1e-9 {
                0.0
            } else if frac > 1.0 - 1e-9 {
                1.0
            } else {
                frac
            };
            Complex64::new(frac.sqrt(), 0.0)
        })
        .collect()
}

fn sinc_pm_value(a: f64, b: f64, c: f64, w: f64) -> f64 {
    crate::special::sinc(a * w * w + b * w + c)
}

fn sinc_pm_amplitude(
    a: f64,
    b: f64,
    c: f64,
    grid_points: usize,
    span_sigmas: f64,
) -> Result<SpectralAmplitude> {
    let centre = -b / (2.0 * a);
    let offset = c - b * b / (4.0 * a);
    let lobe = ((PI + offset.abs()) / a.abs()).sqrt();
    let mut half = centre.abs() + span_sigmas * lobe;
    for _ in 0..12 {
        let step = 2.0 * half / (grid_points as f64 - 1.0);
        // local oscillation period of the sinc argument at the grid edge
        let slope = (2.0 * a * (half + centre.abs())).abs() + b.abs();
        if step > 2.0 * PI / slope / 6.0 {
            return Err(Error::Grid(format!(
                "{grid_points} points cannot resolve the sinc_pm oscillations over ±{half:.1} rad/ps; \
                 increase grid_points"
            )));
        }
        let grid = UniformGrid::symmetric(step, grid_points)?;
        let values = grid
            .points()
            .into_iter()
            .map(|w| Complex64::new(sinc_pm_value(a, b, c, w), 0.0))
            .collect();
        let amp = SpectralAmplitude::from_samples(grid, values, Sampling::Point)?;
        let (mean, var) = intensity_moments(&amp);
        let need = mean.abs() + span_sigmas * var.sqrt();
        if half >= need {
            return Ok(amp);
        }
        half = (1.25 * half).max(1.05 * need);
    }
    Err(Error::Grid(
        "sinc_pm support did not converge; spectrum tails too heavy for the grid".into(),
    ))
}

fn check_support(amp: &SpectralAmplitude, sigmas: f64) -> Result<()> {
    let (mean, var) = intensity_moments(amp);
    let std = var.sqrt();
    let g = amp.grid();
    let (lo, hi) = match amp.sampling {
        Sampling::Point => (g.start, g.end()),
        Sampling::Cell => (g.start - 0.5 * g.step, g.end() + 0.5 * g.step),
    };
    // relative slack absorbs round-off when span_sigmas sits exactly at the limit
    let need = sigmas * std * (1.0 - 1e-9);
    if mean - lo < need || hi - mean < need {
        return Err(Error::Grid(format!(
            "grid [{lo:.4}, {hi:.4}] does not hold {sigmas} standard deviations ({std:.4}) on each side of the mean {mean:.4}"
        )));
    }
    Ok(())
}

fn intensity_moments(amp: &SpectralAmplitude) -> (f64, f64) {
    let g = amp.grid();
    let cell_extra = match amp.sampling {
        Sampling::Cell => g.step * g.step / 12.0,
        Sampling::Point => 0.0,
    };
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, v) in amp.values.iter().enumerate() {
        let p = v.norm_sqr() * amp.weight(i);
        let w = g.at(i);
        m0 += p;
        m1 += p * w;
        m2 += p * (w * w + cell_extra);
    }
    let mean = m1 / m0;
    (mean, m2 / m0 - mean * mean)
}

/// Mean, variance, temporal variance and phase-space area of a normalized amplitude.
pub fn moments(amp: &SpectralAmplitude) -> Result<SpectralMoments> {
    amp.check_normalized()?;
    let (mean, variance) = intensity_moments(amp);
    let temporal_variance = temporal_variance(amp);
    if !(variance > 0.0 && temporal_variance > 0.0) {
        return Err(Error::Degenerate(format!(
            "non-positive variance (spectral {variance}, temporal {temporal_variance})"
        )));
    }
    Ok(SpectralMoments {
        mean,
        variance,
        temporal_variance,
        phase_space_area: variance * temporal_variance,
    })
}

/// Variance of `|FT f|²` from a zero-padded DFT of the samples.
fn temporal_variance(amp: &SpectralAmplitude) -> f64 {
    let n = amp.values.len();
    let m = TEMPORAL_ZERO_PADDING * n;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(&amp.values);
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut buf);
    let dt = 2.0 * PI / (m as f64 * amp.grid.step);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (k, x) in buf.iter().enumerate() {
        let kk = if k < m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        };
        let t = kk * dt;
        let p = x.norm_sqr();
        m0 += p;
        m1 += p * t;
        m2 += p * t * t;
    }
    let mean = m1 / m0;
    m2 / m0 - mean * mean
}

/// Angular-frequency detuning `2πc (1/λ - 1/λ_ref)` in rad/ps, wavelengths in nm.
pub fn wavelength_to_detuning(lambda_nm: f64, lambda_ref_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0 && lambda_ref_nm > 0.0) {
        return Err(Error::invalid(format!(
            "wavelengths must be positive, got {lambda_nm} and {lambda_ref_nm}"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS * (1.0 / lambda_nm - 1.0 / lambda_ref_nm))
}

/// Angular-frequency width of a filter of `width_nm` centred at `centre_nm`.
pub fn bandwidth_to_angular(width_nm: f64, centre_nm: f64) -> Result<f64> {
    if !(width_nm > 0.0 && centre_nm > 0.0) {
        return Err(Error::invalid("filter width and centre must be positive"));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS * width_nm / (centre_nm * centre_nm))
}

/// Rectangular state for a filter of `width_nm` centred at `centre_nm`.
pub fn rect_from_filter(width_nm: f64, centre_nm: f64) -> Result<StateDescriptor> {
    Ok(StateDescriptor::Rect {
        delta_omega: bandwidth_to_angular(width_nm, centre_nm)?,
    })
}

/// Gaussian state whose intensity FWHM equals a filter of `fwhm_nm`.
pub fn gauss_from_filter(fwhm_nm: f64, centre_nm: f64) -> Result<StateDescriptor> {
    let fwhm = bandwidth_to_angular(fwhm_nm, centre_nm)?;
    Ok(StateDescriptor::Gauss {
        sigma: fwhm / (8.0 * 2f64.ln()).sqrt(),
    })
}

/// Two-block state from a pair of energy-matched channels of width
/// `width_nm` centred at `lambda_a_nm` and `lambda_b_nm`, about `lambda_ref_nm`.
///
/// The block separation is the `ω₋` distance between the channel centres;
/// the block width is twice the single-photon channel width because
/// `ω₋ = ω₁ - ω₂` moves twice as fast as either photon under strict energy
/// conservation.
pub fn cat_from_channels(
    lambda_a_nm: f64,
    lambda_b_nm: f64,
    width_nm: f64,
    lambda_ref_nm: f64,
) -> Result<StateDescriptor> {
    let da = wavelength_to_detuning(lambda_a_nm, lambda_ref_nm)?;
    let db = wavelength_to_detuning(lambda_b_nm, lambda_ref_nm)?;
    let desc = StateDescriptor::Cat {
        omega_prime: (da - db).abs(),
        delta_omega_prime: 2.0 * bandwidth_to_angular(width_nm, lambda_ref_nm)?,
    };
    desc.validate()?;
    Ok(desc)
}

/// A `sinc_pm` descriptor together with its symmetry centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SincPmDesign {
    pub descriptor: StateDescriptor,
    /// Frequency about which the phase-matching function is symmetric, rad/ps.
    pub symmetry_center: f64,
}

/// Phase-matching coefficients from waveguide optics.
///
/// The argument `(L/c)[ω₊Δn_m - ω₋(Δn_b/2 + (ω₋/2) dn/dω)]` expands to
/// `a ω₋² + b ω₋ + c` with `a = -(L/c)(dn/dω)/2`, `b = -(L/c)Δn_b/2`,
/// `c = (L/c) ω₊ Δn_m`. The symmetry centre is `-Δn_b / (2 dn/dω)`.
///
/// `length_mm` in mm, `chrom_disp` (dn/dω) in ps, `omega_plus` in rad/ps.
pub fn sinc_pm_from_optics(
    length_mm: f64,
    dn_modal: f64,
    dn_biref: f64,
    chrom_disp: f64,
    omega_plus: f64,
) -> Result<SincPmDesign> {
    if !(length_mm > 0.0) {
        return Err(Error::invalid(format!(
            "waveguide length must be positive, got {length_mm}"
        )));
    }
    if chrom_disp == 0.0 || !chrom_disp.is_finite() {
        return Err(Error::invalid(
            "chromatic dispersion must be non-zero; symmetry centre undefined",
        ));
    }
    let t = length_mm / SPEED_OF_LIGHT_MM_PER_PS;
    let descriptor = StateDescriptor::SincPm {
        a: -0.5 * t * chrom_disp,
        b: -0.5 * t * dn_biref,
        c: t * omega_plus * dn_modal,
    };
    descriptor.validate()?;
    Ok(SincPmDesign {
        descriptor,
        symmetry_center: -dn_biref / (2.0 * chrom_disp),
    })
}

/// Two-dimensional joint spectral amplitude `f(ω₁, ω₂)`, row-major in `ω₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jsa2D {
    grid1: UniformGrid,
    grid2: UniformGrid,
    values: Vec<Complex64>,
}

impl Jsa2D {
    /// Normalizing constructor; `values[i * grid2.len + j] = f(ω₁_i, ω₂_j)`.
    pub fn new(grid1: UniformGrid, grid2: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid1.len * grid2.len {
            return Err(Error::Grid(format!(
                "expected {}x{} values, got {}",
                grid1.len,
                grid2.len,
                values.len()
            )));
        }
        let mut jsa = Self {
            grid1,
            grid2,
            values,
        };
        let norm = jsa.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Degenerate(
                "joint spectral amplitude has zero norm".into(),
            ));
        }
        let s = norm.sqrt().recip();
        jsa.values.iter_mut().for_each(|v| *v *= s);
        Ok(jsa)
    }

    pub fn from_fn(
        grid1: UniformGrid,
        grid2: UniformGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid1.len * grid2.len);
        for i in 0..grid1.len {
            for j in 0..grid2.len {
                values.push(f(grid1.at(i), grid2.at(j)));
            }
        }
        Self::new(grid1, grid2, values)
    }

    pub fn grid1(&self) -> &UniformGrid {
        &self.grid1
    }

    pub fn grid2(&self) -> &UniformGrid {
        &self.grid2
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid2.len + j]
    }

    #[inline]
    fn weight(grid: &UniformGrid, i: usize) -> f64 {
        if i == 0 || i + 1 == grid.len {
            0.5 * grid.step
        } else {
            grid.step
        }
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.grid1.len {
            let wi = Self::weight(&self.grid1, i);
            for j in 0..self.grid2.len {
                s += wi * Self::weight(&self.grid2, j) * self.at(i, j).norm_sqr();
            }
        }
        s
    }

    fn require_square(&self) -> Result<()> {
        let (a, b) = (&self.grid1, &self.grid2);
        let same = a.len == b.len
            && (a.step - b.step).abs() <= 1e-12 * a.step
            && (a.start - b.start).abs() <= 1e-9 * a.step;
        if same {
            Ok(())
        } else {
            Err(Error::Grid(
                "exchange overlap needs identical ω₁ and ω₂ grids".into(),
            ))
        }
    }

    /// `∬ e^{iω₋τ} f(ω₁,ω₂) f*(ω₂,ω₁) dω₁dω₂`.
    pub fn exchange_integral(&self, tau: f64) -> Result<Complex64> {
        self.require_square()?;
        let n = self.grid1.len;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let wi = Self::weight(&self.grid1, i);
            let w1 = self.grid1.at(i);
            for j in 0..n {
                let w = wi * Self::weight(&self.grid2, j);
                let phase = Complex64::from_polar(1.0, (w1 - self.grid2.at(j)) * tau);
                acc += w * phase * self.at(i, j) * self.at(j, i).conj();
            }
        }
        Ok(acc)
    }
}

/// Exchange overlap `∬ f(ω₁,ω₂) f*(ω₂,ω₁)`; its modulus bounds the visibility.
pub fn exchange_overlap(jsa: &Jsa2D) -> Result<Complex64> {
    jsa.exchange_integral(0.0)
}
