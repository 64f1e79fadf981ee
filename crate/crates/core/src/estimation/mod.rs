//! Coincidence-count simulation, HOM dip fitting, single-delay maximum
//! likelihood estimation and Monte Carlo checks against the Cramér-Rao bound.

mod fit;

pub use fit::{fit_hom, fit_hom_fractions, FitFamily, FitOptions, FitResult, FreeMask};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology::{coincidence_probability, fisher_information, Probe, VisibilityModel};
use crate::wigner::CutModel;

/// Deterministic generator for `(seed, stream)`; replicate `r` uses stream `r`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CountsMode {
    /// Fixed number of pairs per delay.
    #[default]
    Binomial,
    /// Pair number itself Poisson-distributed with mean `trials`.
    PoissonFlux,
}

/// Coincidence counts per delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub tau_grid: Vec<f64>,
    pub trials: Vec<u64>,
    pub coincidences: Vec<u64>,
    /// `None` for ingested lab data.
    pub seed: Option<u64>,
    pub mode: CountsMode,
}

impl CountsRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.tau_grid.len();
        if self.trials.len() != n || self.coincidences.len() != n {
            return Err(Error::Grid(format!(
                "misaligned record: {n} delays, {} trial counts, {} coincidence counts",
                self.trials.len(),
                self.coincidences.len()
            )));
        }
        if let Some(i) = (0..n).find(|&i| self.coincidences[i] > self.trials[i]) {
            return Err(Error::invalid(format!(
                "more coincidences than trials at τ = {} ps ({} > {})",
                self.tau_grid[i], self.coincidences[i], self.trials[i]
            )));
        }
        if self.tau_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("non-finite delay in record"));
        }
        Ok(())
    }

    /// Observed coincidence fractions; `NaN` where no trials were recorded.
    pub fn fractions(&self) -> Vec<f64> {
        self.trials
            .iter()
            .zip(&self.coincidences)
            .map(|(&n, &k)| {
                if n == 0 {
                    f64::NAN
                } else {
                    k as f64 / n as f64
                }
            })
            .collect()
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

fn draw(rng: &mut ChaCha8Rng, trials: u64, p: f64, mode: CountsMode) -> Result<(u64, u64)> {
    let n = match mode {
        CountsMode::Binomial => trials,
        CountsMode::PoissonFlux => {
            let d = Poisson::new(trials as f64).map_err(|e| Error::invalid(e.to_string()))?;
            d.sample(rng) as u64
        }
    };
    let b = Binomial::new(n, clamp_probability(p)).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((n, b.sample(rng)))
}

/// One simulated record on stream 0 of `seed`.
pub fn simulate_counts<C: CutModel + ?Sized>(
    cut: &C,
    vis: &VisibilityModel,
    tau_grid: &[f64],
    trials: u64,
    seed: u64,
    mode: CountsMode,
) -> Result<CountsRecord> {
    simulate_counts_stream(cut, vis, tau_grid, trials, seed, 0, mode)
}

pub fn simulate_counts_stream<C: CutModel + ?Sized>(
    cut: &C,
    vis: &VisibilityModel,
    tau_grid: &[f64],
    trials: u64,
    seed: u64,
    stream: u64,
    mode: CountsMode,
) -> Result<CountsRecord> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    vis.validate()?;
    let mut rng = rng_for(seed, stream);
    let mut rec = CountsRecord {
        tau_grid: tau_grid.to_vec(),
        trials: Vec::with_capacity(tau_grid.len()),
        coincidences: Vec::with_capacity(tau_grid.len()),
        seed: Some(seed),
        mode,
    };
    for &t in tau_grid {
        let p = coincidence_probability(cut, vis, t)?;
        let (n, k) = draw(&mut rng, trials, p, mode)?;
        rec.trials.push(n);
        rec.coincidences.push(k);
    }
    Ok(rec)
}

/// Interval around `tau_op` on which `P_c` is strictly monotone.
pub fn monotone_interval<C: CutModel + ?Sized>(cut: &C, tau_op: f64) -> Result<(f64, f64)> {
    let s0 = cut.eval(tau_op)?.w1;
    if s0 == 0.0 {
        return Err(Error::ZeroInformation(format!(
            "cut is stationary at τ = {tau_op} ps"
        )));
    }
    let reach = cut.search_tau_max()?.max(2.0 * tau_op.abs());
    let (dlo, dhi) = cut.domain();
    let steps = 4000;
    let h = reach / steps as f64;
    let walk = |dir: f64| -> Result<f64> {
        let mut last = tau_op;
        for i in 1..=steps {
            let t = tau_op + dir * h * i as f64;
            if t < dlo || t > dhi {
                break;
            }
            if cut.eval(t)?.w1 * s0 <= 0.0 {
                // slope changes sign in (last, t): close in on the stationary point
                let (mut a, mut b) = (last, t);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if cut.eval(m)?.w1 * s0 > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return Ok(b);
            }
            last = t;
        }
        Ok(last)
    };
    let (lo, hi) = (walk(-1.0)?, walk(1.0)?);
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "no monotone branch around τ = {tau_op} ps"
        )));
    }
    Ok((lo, hi))
}

/// Outcome of the single-delay estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub tau_hat: f64,
    /// The observed fraction was not reachable on the interval; `tau_hat` is
    /// the endpoint of highest likelihood.
    pub clipped: bool,
    pub log_likelihood: f64,
}

fn log_likelihood(k: u64, nu: u64, p: f64) -> f64 {
    let (k, m) = (k as f64, (nu - k) as f64);
    let a = if k > 0.0 { k * p.ln() } else { 0.0 };
    let b = if m > 0.0 { m * (1.0 - p).ln() } else { 0.0 };
    a + b
}

/// Binomial maximum-likelihood delay on a monotone branch `[lo, hi]`.
///
/// On a monotone branch the score changes sign exactly once, where
/// `P_c(τ) = k/ν`, so the maximum is bracketed by bisection on its sign.
pub fn mle_delay<C: CutModel + ?Sized>(
    cut: &C,
    vis: &VisibilityModel,
    k: u64,
    nu: u64,
    interval: (f64, f64),
) -> Result<MleEstimate> {
    if vis.v == 0.0 {
        return Err(Error::ZeroInformation(
            "zero visibility: the likelihood is flat in τ".into(),
        ));
    }
    if nu == 0 || k > nu {
        return Err(Error::invalid(format!(
            "need 0 ≤ k ≤ ν with ν ≥ 1 (k = {k}, ν = {nu})"
        )));
    }
    let (lo, hi) = interval;
    if !(hi > lo) {
        return Err(Error::invalid(format!(
            "empty search interval [{lo}, {hi}]"
        )));
    }
    let frac = k as f64 / nu as f64;
    let p = |t: f64| coincidence_probability(cut, vis, t).map(clamp_probability);
    let (plo, phi) = (p(lo)?, p(hi)?);
    let rising = phi > plo;
    let ll = |t: f64| -> Result<f64> { Ok(log_likelihood(k, nu, p(t)?)) };
    let (pmin, pmax) = if rising { (plo, phi) } else { (phi, plo) };
    if frac <= pmin || frac >= pmax {
        // likelihood is monotone on the interval: best endpoint is where P_c is closest to k/ν
        let t = if (frac <= pmin) == rising { lo } else { hi };
        let clipped = frac < pmin || frac > pmax;
        return Ok(MleEstimate {
            tau_hat: t,
            clipped,
            log_likelihood: ll(t)?,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let scale = lo.abs().max(hi.abs()).max(hi - lo);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= 1e-13 * scale {
            break;
        }
        // score sign: positive when the likelihood still rises towards larger τ
        let below = p(mid)? < frac;
        if below == rising {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t = 0.5 * (a + b);
    Ok(MleEstimate {
        tau_hat: t,
        clipped: false,
        log_likelihood: ll(t)?,
    })
}

/// Classical and quantum Cramér-Rao bounds for `nu` pairs at one delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbValue {
    /// `1/√(νF)`, ps
    pub crb: f64,
    /// `1/√(νℱ)`, ps
    pub quantum_bound: f64,
    pub fisher: f64,
}

pub fn crb(probe: &Probe, vis: &VisibilityModel, tau: f64, trials: u64) -> Result<CrbValue> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let f = fisher_information(probe, vis, tau)?.value;
    if !(f > 0.0) {
        return Err(Error::ZeroInformation(format!("F({}, {tau}) = {f}", vis.v)));
    }
    let nu = trials as f64;
    Ok(CrbValue {
        crb: 1.0 / (nu * f).sqrt(),
        quantum_bound: 1.0 / (nu * probe.qfi()).sqrt(),
        fisher: f,
    })
}

/// Empirical precision of the single-delay estimator against the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub seed: u64,
    pub state: String,
    pub v: f64,
    pub tau_true: f64,
    pub trials: u64,
    pub replicates: usize,
    /// Mean estimate, ps.
    pub tau_hat: f64,
    pub bias: f64,
    pub empirical_std: f64,
    pub crb: f64,
    pub quantum_bound: f64,
    pub ratio_to_crb: f64,
    pub clipped: usize,
    pub interval: (f64, f64),
    pub estimates: Vec<f64>,
}

pub const MIN_REPLICATES: usize = 50;

pub fn mc_crb_study(
    probe: &Probe,
    vis: &VisibilityModel,
    tau_true: f64,
    trials: u64,
    replicates: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    let bound = crb(probe, vis, tau_true, trials)?;
    let interval = monotone_interval(probe, tau_true)?;
    let p = clamp_probability(coincidence_probability(probe, vis, tau_true)?);
    let results = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, r);
            let (n, k) = draw(&mut rng, trials, p, CountsMode::Binomial)?;
            mle_delay(probe, vis, k, n, interval)
        })
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<f64> = results.iter().map(|e| e.tau_hat).collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    Ok(EstimateReport {
        seed,
        state: probe.label().to_string(),
        v: vis.v,
        tau_true,
        trials,
        replicates,
        tau_hat: mean,
        bias: mean - tau_true,
        empirical_std: std,
        crb: bound.crb,
        quantum_bound: bound.quantum_bound,
        ratio_to_crb: std / bound.crb,
        clipped: results.iter().filter(|e| e.clipped).count(),
        interval,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::StateDescriptor;

    fn gauss() -> Probe {
        Probe::analytic(&StateDescriptor::Gauss { sigma: 1.0 }).unwrap()
    }

    fn vis(v: f64) -> VisibilityModel {
        VisibilityModel::new(v).unwrap()
    }

    #[test]
    fn perfect_dip_never_coincides() {
        let r = simulate_counts(
            &gauss(),
            &vis(1.0),
            &[0.0],
            100_000,
            3,
            CountsMode::Binomial,
        )
        .unwrap();
        assert_eq!(r.coincidences, vec![0]);
    }

    #[test]
    fn zero_visibility_gives_half() {
        let r = simulate_counts(
            &gauss(),
            &vis(0.0),
            &[0.0, 1.0],
            1_000_000,
            9,
            CountsMode::Binomial,
        )
        .unwrap();
        for f in r.fractions() {
            assert!((f - 0.5).abs() <= 0.002, "{f}");
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let taus: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
        for mode in [CountsMode::Binomial, CountsMode::PoissonFlux] {
            let a = simulate_counts(&gauss(), &vis(0.9), &taus, 5000, 42, mode).unwrap();
            let b = simulate_counts(&gauss(), &vis(0.9), &taus, 5000, 42, mode).unwrap();
            let c = simulate_counts(&gauss(), &vis(0.9), &taus, 5000, 43, mode).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            a.validate().unwrap();
        }
    }

    #[test]
    fn record_validation() {
        let mut r = CountsRecord {
            tau_grid: vec![0.0, 1.0],
            trials: vec![10, 10],
            coincidences: vec![3, 11],
            seed: None,
            mode: CountsMode::Binomial,
        };
        assert!(r.validate().is_err());
        r.coincidences = vec![3];
        assert!(r.validate().is_err());
    }

    #[test]
    fn crb_examples() {
        let c = crb(&gauss(), &vis(1.0), 0.0, 10_000).unwrap();
        assert!((c.crb - 0.01).abs() < 1e-12);
        assert!(matches!(
            crb(&gauss(), &vis(0.9), 0.0, 10_000),
            Err(Error::ZeroInformation(_))
        ));
        let c = crb(&gauss(), &vis(0.99), 0.5, 10_000).unwrap();
        assert!((c.crb - 0.0111).abs() < 1e-4, "{c:?}");
        assert!(c.crb >= c.quantum_bound);
    }

    #[test]
    fn mle_recovers_exact_fraction() {
        let g = gauss();
        let v = vis(0.99);
        let iv = monotone_interval(&g, 0.5).unwrap();
        assert!(iv.0.abs() < 1e-9 && iv.1 > 3.0, "{iv:?}");
        // ν chosen so that k/ν equals P_c(0.5) to double precision
        let nu: u64 = 1 << 52;
        let p = coincidence_probability(&g, &v, 0.5).unwrap();
        let k = (p * nu as f64).round() as u64;
        let e = mle_delay(&g, &v, k, nu, iv).unwrap();
        assert!(!e.clipped);
        assert!((e.tau_hat - 0.5).abs() < 1e-6, "{e:?}");
    }

    #[test]
    fn mle_flags_unreachable_fractions() {
        let g = gauss();
        let v = vis(0.9);
        let iv = monotone_interval(&g, 0.5).unwrap();
        let e = mle_delay(&g, &v, 0, 1000, iv).unwrap();
        assert!(e.clipped && e.tau_hat == iv.0);
        let e = mle_delay(&g, &v, 1000, 1000, iv).unwrap();
        assert!(e.clipped && e.tau_hat == iv.1);
        assert!(matches!(
            mle_delay(&g, &vis(0.0), 5, 10, iv),
            Err(Error::ZeroInformation(_))
        ));
    }

    #[test]
    fn study_is_reproducible_and_needs_replicates() {
        let g = gauss();
        let a = mc_crb_study(&g, &vis(0.99), 0.5, 10_000, 60, 7).unwrap();
        let b = mc_crb_study(&g, &vis(0.99), 0.5, 10_000, 60, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(mc_crb_study(&g, &vis(0.99), 0.5, 10_000, 10, 7).is_err());
    }
}
