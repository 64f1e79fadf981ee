//! Weighted least-squares fit of `P_c(τ) = ½ - (v/2) W(τ - τ₀)` to observed
//! coincidence fractions, by Levenberg-Marquardt from a profiled coarse scan.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CountsRecord;
use crate::error::{Error, Result};
use crate::spectra::StateDescriptor;
use crate::wigner::{AnalyticCut, CutModel};

pub const MIN_FIT_POINTS: usize = 5;
const MAX_ITER: usize = 200;
const COARSE_SCALES: usize = 60;
const CAT_SHAPE_RATIOS: [f64; 8] = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 1.6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    Gauss,
    Rect,
    Cat,
}

impl FitFamily {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            FitFamily::Gauss => &["sigma"],
            FitFamily::Rect => &["delta_omega"],
            FitFamily::Cat => &["omega_prime", "delta_omega_prime"],
        }
    }

    pub fn descriptor(&self, shape: &[f64]) -> StateDescriptor {
        match self {
            FitFamily::Gauss => StateDescriptor::Gauss { sigma: shape[0] },
            FitFamily::Rect => StateDescriptor::Rect {
                delta_omega: shape[0],
            },
            FitFamily::Cat => StateDescriptor::Cat {
                omega_prime: shape[0],
                delta_omega_prime: shape[1],
            },
        }
    }

    pub fn shape_of(desc: &StateDescriptor) -> Option<(FitFamily, Vec<f64>)> {
        match *desc {
            StateDescriptor::Gauss { sigma } => Some((FitFamily::Gauss, vec![sigma])),
            StateDescriptor::Rect { delta_omega } => Some((FitFamily::Rect, vec![delta_omega])),
            StateDescriptor::Cat {
                omega_prime,
                delta_omega_prime,
            } => Some((FitFamily::Cat, vec![omega_prime, delta_omega_prime])),
            _ => None,
        }
    }
}

/// Which parameters are adjusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeMask {
    pub v: bool,
    pub shape: bool,
    /// Delay offset of the dip centre.
    pub tau0: bool,
}

impl Default for FreeMask {
    fn default() -> Self {
        Self {
            v: true,
            shape: true,
            tau0: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub family: FitFamily,
    pub free: FreeMask,
    /// Starting (or, when fixed, actual) shape parameters; scanned if absent.
    pub shape: Option<Vec<f64>>,
    /// Starting (or fixed) visibility; profiled if absent.
    pub v: Option<f64>,
    pub tau0: f64,
}

impl FitOptions {
    pub fn new(family: FitFamily) -> Self {
        Self {
            family,
            free: FreeMask::default(),
            shape: None,
            v: None,
            tau0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: FitFamily,
    pub v_hat: f64,
    pub param_names: Vec<String>,
    pub param_hat: Vec<f64>,
    pub tau0_hat: f64,
    /// Names of the free parameters, in covariance order.
    pub free_names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_per_dof: f64,
    /// `chi2/dof` beyond five standard deviations of its sampling distribution.
    pub model_mismatch: bool,
    pub at_bounds: Vec<String>,
    pub iterations: usize,
}

impl FitResult {
    pub fn descriptor(&self) -> StateDescriptor {
        self.family.descriptor(&self.param_hat)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        let i = self.free_names.iter().position(|n| n == name)?;
        Some(self.covariance[i][i].sqrt())
    }
}

/// Weighted data: delays, fractions, standard deviations.
struct Data {
    tau: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
}

/// Full parameter vector: `[v, shape..., tau0]`.
#[derive(Clone)]
struct Params {
    v: f64,
    shape: Vec<f64>,
    tau0: f64,
}

struct Problem<'a> {
    data: &'a Data,
    family: FitFamily,
    free: FreeMask,
}

impl Problem<'_> {
    fn cut_values(&self, shape: &[f64], tau0: f64) -> Option<Vec<f64>> {
        let desc = self.family.descriptor(shape);
        let cut = AnalyticCut::new(&desc).ok()?;
        self.data
            .tau
            .iter()
            .map(|&t| cut.eval(t - tau0).ok().map(|p| p.w))
            .collect()
    }

    fn chi2_of(&self, p: &Params) -> Option<f64> {
        let w = self.cut_values(&p.shape, p.tau0)?;
        Some(
            self.data
                .y
                .iter()
                .zip(&self.data.s)
                .zip(&w)
                .map(|((y, s), w)| ((y - (0.5 - 0.5 * p.v * w)) / s).powi(2))
                .sum(),
        )
    }

    /// Weighted linear least squares for `v` at fixed shape, clamped to `[0, 1]`.
    fn profile_v(&self, shape: &[f64], tau0: f64) -> Option<f64> {
        let w = self.cut_values(shape, tau0)?;
        let (mut num, mut den) = (0.0, 0.0);
        for ((y, s), w) in self.data.y.iter().zip(&self.data.s).zip(&w) {
            let a = 0.5 * w / (s * s);
            num += (0.5 - y) * a;
            den += 0.5 * w * a;
        }
        (den > 0.0).then(|| (num / den).clamp(0.0, 1.0))
    }

    /// Internal coordinates: `v`, log shape, `tau0`, restricted to the free mask.
    fn pack(&self, p: &Params) -> Vec<f64> {
        let mut x = Vec::new();
        if self.free.v {
            x.push(p.v);
        }
        if self.free.shape {
            x.extend(p.shape.iter().map(|s| s.ln()));
        }
        if self.free.tau0 {
            x.push(p.tau0);
        }
        x
    }

    fn unpack(&self, x: &[f64], base: &Params) -> Params {
        let mut p = base.clone();
        let mut i = 0;
        if self.free.v {
            p.v = x[i];
            i += 1;
        }
        if self.free.shape {
            for s in p.shape.iter_mut() {
                *s = x[i].exp();
                i += 1;
            }
        }
        if self.free.tau0 {
            p.tau0 = x[i];
        }
        p
    }

    fn residuals(&self, p: &Params) -> Option<DVector<f64>> {
        let w = self.cut_values(&p.shape, p.tau0)?;
        Some(DVector::from_iterator(
            w.len(),
            self.data
                .y
                .iter()
                .zip(&self.data.s)
                .zip(&w)
                .map(|((y, s), w)| (y - (0.5 - 0.5 * p.v * w)) / s),
        ))
    }

    fn jacobian(&self, x: &[f64], base: &Params) -> Option<DMatrix<f64>> {
        let n = self.data.tau.len();
        let mut j = DMatrix::zeros(n, x.len());
        for c in 0..x.len() {
            let h = 1e-6 * x[c].abs().max(1e-3);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += h;
            xm[c] -= h;
            let rp = self.residuals(&self.unpack(&xp, base))?;
            let rm = self.residuals(&self.unpack(&xm, base))?;
            j.set_column(c, &((rp - rm) / (2.0 * h)));
        }
        Some(j)
    }
}

fn prepare(tau: &[f64], y: &[f64], trials: &[f64]) -> Result<Data> {
    if tau.len() != y.len() || tau.len() != trials.len() {
        return Err(Error::Grid(
            "delays, fractions and trials must align".into(),
        ));
    }
    let mut d = Data {
        tau: Vec::new(),
        y: Vec::new(),
        s: Vec::new(),
    };
    for i in 0..tau.len() {
        let nu = trials[i];
        if !(nu > 0.0) || !y[i].is_finite() {
            continue;
        }
        if !(0.0..=1.0).contains(&y[i]) {
            return Err(Error::invalid(format!(
                "fraction {} at τ = {} outside [0, 1]",
                y[i], tau[i]
            )));
        }
        // p(1-p)/ν, floored at 1/ν² so that empty or saturated cells keep finite weight
        let var = (y[i] * (1.0 - y[i])).max(1.0 / nu) / nu;
        d.tau.push(tau[i]);
        d.y.push(y[i]);
        d.s.push(var.sqrt());
    }
    if d.tau.len() < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "need at least {MIN_FIT_POINTS} delays with recorded trials, got {}",
            d.tau.len()
        )));
    }
    Ok(d)
}

fn coarse_start(prob: &Problem, opts: &FitOptions) -> Result<Params> {
    let data = prob.data;
    let tau0 = if opts.free.tau0 {
        // dip centre: delay of the lowest observed fraction
        let i = (0..data.y.len())
            .min_by(|&a, &b| data.y[a].total_cmp(&data.y[b]))
            .unwrap();
        data.tau[i]
    } else {
        opts.tau0
    };
    let shapes: Vec<Vec<f64>> = match &opts.shape {
        Some(s) => vec![s.clone()],
        None => {
            let span = data
                .tau
                .iter()
                .map(|t| (t - tau0).abs())
                .fold(0.0, f64::max);
            let mut sorted = data.tau.clone();
            sorted.sort_by(f64::total_cmp);
            let step = sorted
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|d| *d > 0.0)
                .fold(f64::INFINITY, f64::min);
            if !(span > 0.0 && step.is_finite()) {
                return Err(Error::invalid("delays must span a non-zero range"));
            }
            // spectral widths from one dip across the whole window to one dip per sample
            let (lo, hi) = (0.5 / span, 2.0 / step);
            let scales = (0..COARSE_SCALES)
                .map(|i| lo * (hi / lo).powf(i as f64 / (COARSE_SCALES - 1) as f64));
            match opts.family {
                FitFamily::Gauss => scales.map(|s| vec![s]).collect(),
                FitFamily::Rect => scales.map(|s| vec![2.0 * 3f64.sqrt() * s]).collect(),
                FitFamily::Cat => scales
                    .flat_map(|s| CAT_SHAPE_RATIOS.iter().map(move |r| vec![s, r * s]))
                    .collect(),
            }
        }
    };
    let mut best: Option<(f64, Params)> = None;
    for shape in shapes {
        let v = match opts.v {
            Some(v) if !opts.free.v => v,
            _ => match prob.profile_v(&shape, tau0) {
                Some(v) => v,
                None => continue,
            },
        };
        let p = Params { v, shape, tau0 };
        if let Some(c) = prob.chi2_of(&p) {
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, p));
            }
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::NonConvergence("no admissible starting point".into()))
}

/// Fit observed fractions `y` with `trials` pairs per delay.
pub fn fit_hom_fractions(
    tau: &[f64],
    y: &[f64],
    trials: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    let data = prepare(tau, y, trials)?;
    if let Some(s) = &opts.shape {
        if s.len() != opts.family.param_names().len() {
            return Err(Error::invalid(format!(
                "{:?} takes {} shape parameters",
                opts.family,
                opts.family.param_names().len()
            )));
        }
        opts.family.descriptor(s).validate()?;
    } else if !opts.free.shape {
        return Err(Error::invalid("fixed shape requires shape parameters"));
    }
    if !opts.free.v && opts.v.is_none() {
        return Err(Error::invalid("fixed visibility requires a value"));
    }
    let prob = Problem {
        data: &data,
        family: opts.family,
        free: opts.free,
    };
    let base = coarse_start(&prob, opts)?;
    let mut x = prob.pack(&base);
    let mut chi2 = prob
        .chi2_of(&base)
        .ok_or_else(|| Error::NonConvergence("invalid start".into()))?;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = x.is_empty();
    while !converged {
        if iterations >= MAX_ITER {
            return Err(Error::NonConvergence(format!(
                "no convergence after {MAX_ITER} iterations (chi2 = {chi2})"
            )));
        }
        iterations += 1;
        let p = prob.unpack(&x, &base);
        let r = prob
            .residuals(&p)
            .ok_or_else(|| Error::NonConvergence("model left its domain".into()))?;
        let j = prob
            .jacobian(&x, &base)
            .ok_or_else(|| Error::NonConvergence("model left its domain".into()))?;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= 1e-12 * (1.0 + chi2) {
            break;
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if opts.free.v {
                xn[0] = xn[0].clamp(0.0, 1.0);
            }
            let pn = prob.unpack(&xn, &base);
            match prob.chi2_of(&pn) {
                Some(c) if c <= chi2 => {
                    let rel = (chi2 - c) / chi2.max(f64::MIN_POSITIVE);
                    let small_step = step
                        .iter()
                        .zip(&x)
                        .all(|(s, x)| s.abs() <= 1e-10 * x.abs().max(1e-3));
                    converged = rel < 1e-12 || small_step || c == 0.0;
                    x = xn;
                    chi2 = c;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !accepted {
            // no downhill step at any damping: stationary to working precision
            converged = true;
        }
    }
    let p = prob.unpack(&x, &base);
    let mut free_names = Vec::new();
    if opts.free.v {
        free_names.push("v".to_string());
    }
    if opts.free.shape {
        free_names.extend(opts.family.param_names().iter().map(|s| s.to_string()));
    }
    if opts.free.tau0 {
        free_names.push("tau0".to_string());
    }
    let covariance = if x.is_empty() {
        Vec::new()
    } else {
        let j = prob
            .jacobian(&x, &base)
            .ok_or_else(|| Error::NonConvergence("model left its domain".into()))?;
        let inv = (j.transpose() * &j).try_inverse().ok_or_else(|| {
            Error::Degenerate("parameters are not identifiable from these delays".into())
        })?;
        // back from log coordinates: d s = s d(ln s)
        let scale: Vec<f64> = free_names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if n == "v" || n == "tau0" {
                    1.0
                } else {
                    x[i].exp()
                }
            })
            .collect();
        (0..x.len())
            .map(|a| {
                (0..x.len())
                    .map(|b| inv[(a, b)] * scale[a] * scale[b])
                    .collect()
            })
            .collect()
    };
    let n_free = x.len();
    let dof = data.tau.len().saturating_sub(n_free).max(1);
    let chi2_per_dof = chi2 / dof as f64;
    let model_mismatch = chi2_per_dof > 1.0 + 5.0 * (2.0 / dof as f64).sqrt();
    let mut at_bounds = Vec::new();
    if opts.free.v && (p.v <= 0.0 || p.v >= 1.0) {
        at_bounds.push("v".to_string());
    }
    if model_mismatch {
        log::warn!(
            "fit of {:?} family: chi2/dof = {chi2_per_dof:.3} suggests the wrong model family",
            opts.family
        );
    }
    Ok(FitResult {
        family: opts.family,
        v_hat: p.v,
        param_names: opts
            .family
            .param_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        param_hat: p.shape,
        tau0_hat: p.tau0,
        free_names,
        covariance,
        chi2,
        dof,
        chi2_per_dof,
        model_mismatch,
        at_bounds,
        iterations,
    })
}

/// Fit a counts record.
pub fn fit_hom(counts: &CountsRecord, opts: &FitOptions) -> Result<FitResult> {
    counts.validate()?;
    let trials: Vec<f64> = counts.trials.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = counts
        .fractions()
        .into_iter()
        .map(|f| if f.is_nan() { 0.0 } else { f })
        .collect();
    fit_hom_fractions(&counts.tau_grid, &y, &trials, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{simulate_counts, CountsMode};
    use crate::metrology::{coincidence_probability, VisibilityModel};

    fn taus() -> Vec<f64> {
        (0..81).map(|i| -4.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn noiseless_input_is_recovered_exactly() {
        let cut = AnalyticCut::new(&StateDescriptor::Gauss { sigma: 1.3 }).unwrap();
        let vis = VisibilityModel::new(0.93).unwrap();
        let t = taus();
        let y: Vec<f64> = t
            .iter()
            .map(|&x| coincidence_probability(&cut, &vis, x).unwrap())
            .collect();
        let r = fit_hom_fractions(
            &t,
            &y,
            &vec![1e4; t.len()],
            &FitOptions::new(FitFamily::Gauss),
        )
        .unwrap();
        assert!((r.v_hat - 0.93).abs() < 1e-7, "{r:?}");
        assert!((r.param_hat[0] - 1.3).abs() < 1e-6, "{r:?}");
        assert!(r.chi2_per_dof < 1e-8);
        assert!(!r.model_mismatch);
    }

    #[test]
    fn recovers_visibility_from_counts() {
        let cut = AnalyticCut::new(&StateDescriptor::Gauss { sigma: 1.0 }).unwrap();
        let vis = VisibilityModel::new(0.95).unwrap();
        let rec = simulate_counts(&cut, &vis, &taus(), 10_000, 11, CountsMode::Binomial).unwrap();
        let r = fit_hom(&rec, &FitOptions::new(FitFamily::Gauss)).unwrap();
        assert!((r.v_hat - 0.95).abs() < 0.01, "{r:?}");
        let se = r.std_error("v").unwrap();
        assert!(se > 0.0 && se < 0.01);
        assert!(r.chi2_per_dof > 0.0 && r.chi2_per_dof.is_finite());
    }

    #[test]
    fn wrong_family_is_flagged() {
        let cut = AnalyticCut::new(&StateDescriptor::Cat {
            omega_prime: 23.7,
            delta_omega_prime: 7.9,
        })
        .unwrap();
        let vis = VisibilityModel::new(0.95).unwrap();
        let t: Vec<f64> = (0..121).map(|i| -1.5 + 0.025 * i as f64).collect();
        let rec = simulate_counts(&cut, &vis, &t, 10_000, 5, CountsMode::Binomial).unwrap();
        let r = fit_hom(&rec, &FitOptions::new(FitFamily::Gauss)).unwrap();
        assert!(r.model_mismatch && r.chi2_per_dof > 10.0, "{r:?}");
        let r = fit_hom(&rec, &FitOptions::new(FitFamily::Cat)).unwrap();
        assert!(!r.model_mismatch, "{r:?}");
        assert!((r.param_hat[0] - 23.7).abs() < 0.5, "{r:?}");
    }

    #[test]
    fn offset_and_fixed_parameters() {
        let cut = AnalyticCut::new(&StateDescriptor::Rect { delta_omega: 6.0 }).unwrap();
        let vis = VisibilityModel::new(0.9).unwrap();
        let t = taus();
        let y: Vec<f64> = t
            .iter()
            .map(|&x| coincidence_probability(&cut, &vis, x - 0.3).unwrap())
            .collect();
        let mut o = FitOptions::new(FitFamily::Rect);
        o.free.tau0 = true;
        let r = fit_hom_fractions(&t, &y, &vec![1e4; t.len()], &o).unwrap();
        assert!(
            (r.tau0_hat - 0.3).abs() < 1e-6 && (r.param_hat[0] - 6.0).abs() < 1e-5,
            "{r:?}"
        );
        let mut o = FitOptions::new(FitFamily::Rect);
        o.free = FreeMask {
            v: true,
            shape: false,
            tau0: false,
        };
        assert!(fit_hom_fractions(&t, &y, &vec![1e4; t.len()], &o).is_err());
        o.shape = Some(vec![6.0]);
        o.tau0 = 0.3;
        let r = fit_hom_fractions(&t, &y, &vec![1e4; t.len()], &o).unwrap();
        assert_eq!(r.free_names, vec!["v"]);
        assert!((r.v_hat - 0.9).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let r = fit_hom_fractions(
            &[0.0, 1.0],
            &[0.1, 0.4],
            &[10.0, 10.0],
            &FitOptions::new(FitFamily::Gauss),
        );
        assert!(r.is_err());
    }
}
