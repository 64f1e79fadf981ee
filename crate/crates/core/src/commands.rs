//! Subcommand bodies behind the `hom` binary. Each writes its artifacts under
//! the configured output directory and returns the paths it produced.

use std::path::PathBuf;

use serde::Serialize;

use crate::config::{OutputFormat, ResolvedState, RunConfig};
use crate::error::{Error, Result};
use crate::estimation::{
    fit_hom, mc_crb_study, simulate_counts, CountsRecord, FitFamily, FitOptions, FitResult,
};
use crate::io;
use crate::metrology::{
    coincidence_probability, fisher_scan, max_fisher, ratio_curve, stationarity_residual,
    FisherMax, Stationarity, VisibilityModel,
};
use crate::spectra::{moments, SpectralMoments, StateDescriptor};
use crate::wigner::WignerCut;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

/// Output sink that tracks everything written.
pub struct Outputs {
    dir: PathBuf,
    format: OutputFormat,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.output.dir)?;
        let mut out = Self {
            dir: cfg.output.dir.clone(),
            format: cfg.output.format,
            written: Vec::new(),
        };
        let path = out.dir.join(RESOLVED_CONFIG);
        std::fs::write(&path, cfg.to_toml()?)?;
        out.written.push(path);
        Ok(out)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(&format!("{name}.json"));
        io::write_json(io::create(&p)?, value)
    }

    /// A data table: CSV through `csv`, or the serialized value as JSON.
    fn table<T: Serialize + ?Sized>(
        &mut self,
        name: &str,
        value: &T,
        csv: impl FnOnce(std::io::BufWriter<std::fs::File>) -> Result<()>,
    ) -> Result<()> {
        match self.format {
            OutputFormat::Csv => {
                let p = self.path(&format!("{name}.csv"));
                csv(io::create(&p)?)
            }
            OutputFormat::Json => self.json(name, value),
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

fn resolve_states(cfg: &RunConfig) -> Result<Vec<ResolvedState>> {
    cfg.states.iter().map(|s| s.resolve(cfg)).collect()
}

/// File-name fragment for a visibility.
fn v_tag(v: f64) -> String {
    format!("v{v}")
}

#[derive(Serialize)]
struct StateSummary<'a> {
    label: &'a str,
    descriptor: &'a StateDescriptor,
    moments: SpectralMoments,
    analytic_variance: Option<f64>,
    grid_points: usize,
    grid_step: f64,
}

#[derive(Serialize)]
struct AmplitudeTable {
    omega_rad_per_ps: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn cmd_state(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(cfg)?;
    for s in resolve_states(cfg)? {
        let (Some(desc), Some(amp)) = (&s.descriptor, &s.amplitude) else {
            return Err(Error::Unsupported(format!(
                "{}: the cosine reference has no spectral amplitude",
                s.label
            )));
        };
        let table = AmplitudeTable {
            omega_rad_per_ps: amp.grid().points(),
            re: amp.values().iter().map(|v| v.re).collect(),
            im: amp.values().iter().map(|v| v.im).collect(),
        };
        out.table(&format!("{}_amplitude", s.label), &table, |w| {
            io::write_amplitude_csv(w, amp)
        })?;
        // tabulated samples are echoed by the amplitude table, not the summary
        let shown = match desc {
            StateDescriptor::Tabulated { grid, .. } => StateDescriptor::Tabulated {
                grid: *grid,
                values: vec![],
            },
            d => d.clone(),
        };
        let summary = StateSummary {
            label: &s.label,
            descriptor: &shown,
            moments: moments(amp)?,
            analytic_variance: desc.analytic_variance(),
            grid_points: amp.grid().len,
            grid_step: amp.grid().step,
        };
        out.json(&format!("{}_state", s.label), &summary)?;
    }
    Ok(out.into_written())
}

#[derive(Serialize)]
struct ScanRow {
    state: String,
    v: f64,
    tau_m: f64,
    f_tilde: f64,
    qfi: f64,
    ratio: f64,
    /// `ratio ≤ V²`
    bound_ok: bool,
    limit: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    stationarity: Option<Stationarity>,
}

#[derive(Serialize)]
struct PcTable<'a> {
    tau_ps: &'a [f64],
    pc: &'a [f64],
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(cfg)?;
    let taus = cfg.grid.taus();
    let mut vis = cfg.visibility.resolve()?;
    // the unit-visibility limit row is always included
    if !vis.iter().any(|v| v.v == 1.0) {
        vis.push(VisibilityModel::new(1.0)?);
    }
    let mut rows = Vec::new();
    for s in resolve_states(cfg)? {
        let mut cut = WignerCut::tabulate(&s.probe, &taus, s.probe.source())?;
        cut.reference_only = s.descriptor.is_none();
        out.table(&format!("{}_cut", s.label), &cut, |w| {
            io::write_cut_csv(w, &cut)
        })?;
        for vm in &vis {
            let scan = fisher_scan(&s.probe, vm, &taus)?;
            let pc = taus
                .iter()
                .map(|&t| coincidence_probability(&s.probe, vm, t))
                .collect::<Result<Vec<_>>>()?;
            let tag = format!("{}_{}", s.label, v_tag(vm.v));
            out.table(&format!("{tag}_fi"), &scan, |w| {
                io::write_fisher_csv(w, &scan)
            })?;
            out.table(
                &format!("{tag}_pc"),
                &PcTable {
                    tau_ps: &taus,
                    pc: &pc,
                },
                |w| io::write_pc_csv(w, &taus, &pc),
            )?;
            let m: FisherMax = max_fisher(&s.probe, vm)?;
            let stationarity = if vm.v < 1.0 {
                Some(stationarity_residual(&s.probe, vm)?)
            } else {
                None
            };
            rows.push(ScanRow {
                state: s.label.clone(),
                v: vm.v,
                tau_m: m.tau_m,
                f_tilde: m.f_tilde,
                qfi: s.probe.qfi(),
                ratio: scan.ratio,
                bound_ok: scan.ratio <= vm.v * vm.v + 1e-9,
                limit: m.limit,
                stationarity,
            });
        }
    }
    out.json("scan_summary", &rows)?;
    Ok(out.into_written())
}

#[derive(Serialize)]
struct RatioSummary {
    state: String,
    qfi: f64,
    monotone: bool,
    max_bound_excess: f64,
    bound_ok: bool,
}

#[derive(Serialize)]
struct RatioReport {
    v_grid: Vec<f64>,
    states: Vec<RatioSummary>,
    /// Labels sorted by decreasing ratio; `true` if that order holds at every `V`.
    ordering: Vec<String>,
    ordering_holds: bool,
}

pub fn cmd_ratio(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(cfg)?;
    let vs = cfg.grid.vs();
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for s in resolve_states(cfg)? {
        let c = ratio_curve(&s.probe, &vs)?;
        out.table(&format!("{}_ratio", s.label), &c, |w| {
            io::write_ratio_csv(w, &c)
        })?;
        summaries.push(RatioSummary {
            state: s.label.clone(),
            qfi: s.probe.qfi(),
            monotone: c.monotone,
            max_bound_excess: c.max_bound_excess,
            bound_ok: c.bound_holds(1e-9),
        });
        curves.push(c);
    }
    // order by the mean ratio, then check the order pointwise
    let mut idx: Vec<usize> = (0..curves.len()).collect();
    let mean = |c: &crate::metrology::RatioCurve| c.ratios.iter().sum::<f64>();
    idx.sort_by(|&a, &b| mean(&curves[b]).total_cmp(&mean(&curves[a])));
    let ordering_holds = idx.windows(2).all(|p| {
        curves[p[0]]
            .ratios
            .iter()
            .zip(&curves[p[1]].ratios)
            .all(|(a, b)| a + 1e-12 >= *b)
    });
    let report = RatioReport {
        v_grid: vs,
        states: summaries,
        ordering: idx.iter().map(|&i| curves[i].state_label.clone()).collect(),
        ordering_holds,
    };
    out.json("ratio_summary", &report)?;
    Ok(out.into_written())
}

fn single_state(cfg: &RunConfig) -> Result<(ResolvedState, VisibilityModel)> {
    if cfg.states.len() != 1 {
        return Err(Error::invalid(format!(
            "this command takes exactly one state, got {}",
            cfg.states.len()
        )));
    }
    let vis = cfg.visibility.resolve()?;
    if vis.len() != 1 {
        return Err(Error::invalid("this command takes exactly one visibility"));
    }
    Ok((cfg.states[0].resolve(cfg)?, vis[0]))
}

fn simulate(cfg: &RunConfig, s: &ResolvedState, vis: &VisibilityModel) -> Result<CountsRecord> {
    let sim = &cfg.simulation;
    simulate_counts(
        &s.probe,
        vis,
        &cfg.grid.taus(),
        sim.trials,
        sim.seed,
        sim.mode,
    )
}

#[derive(Serialize)]
struct CountsTable<'a> {
    tau_ps: &'a [f64],
    trials: &'a [u64],
    coincidences: &'a [u64],
    seed: Option<u64>,
}

fn write_counts(out: &mut Outputs, name: &str, rec: &CountsRecord) -> Result<()> {
    let t = CountsTable {
        tau_ps: &rec.tau_grid,
        trials: &rec.trials,
        coincidences: &rec.coincidences,
        seed: rec.seed,
    };
    out.table(name, &t, |w| io::write_counts_csv(w, rec))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(cfg)?;
    let (s, vis) = single_state(cfg)?;
    let rec = simulate(cfg, &s, &vis)?;
    write_counts(&mut out, "counts", &rec)?;
    Ok(out.into_written())
}

#[derive(Serialize)]
struct FitReport<'a> {
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_true: Option<f64>,
    fit: &'a FitResult,
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(cfg)?;
    let (s, vis) = single_state(cfg)?;
    let (rec, source, v_true) = match &cfg.simulation.counts_path {
        Some(p) => {
            let path = cfg.resolve_path(p);
            (
                io::read_counts_csv(io::open(&path)?)?,
                path.display().to_string(),
                None,
            )
        }
        None => (
            simulate(cfg, &s, &vis)?,
            "simulated".to_string(),
            Some(vis.v),
        ),
    };
    let family = match cfg.simulation.fit_family {
        Some(f) => f,
        None => s
            .descriptor
            .as_ref()
            .and_then(FitFamily::shape_of)
            .map(|(f, _)| f)
            .ok_or_else(|| Error::invalid("fit: set simulation.fit_family for this state kind"))?,
    };
    let mut opts = FitOptions::new(family);
    opts.free = cfg.simulation.free;
    if !opts.free.shape || !opts.free.v {
        // fixed parameters take their values from the configured state
        let (f, shape) = s
            .descriptor
            .as_ref()
            .and_then(FitFamily::shape_of)
            .ok_or_else(|| Error::invalid("fit: fixed parameters need a closed-form state"))?;
        if f != family {
            return Err(Error::invalid(
                "fit: fixed shape must come from a state of the fitted family",
            ));
        }
        opts.shape = Some(shape);
        opts.v = Some(vis.v);
    }
    let fit = fit_hom(&rec, &opts)?;
    if cfg.simulation.counts_path.is_none() {
        write_counts(&mut out, "counts", &rec)?;
    }
    out.json(
        "fit",
        &FitReport {
            source,
            seed: rec.seed,
            v_true,
            fit: &fit,
        },
    )?;
    Ok(out.into_written())
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(cfg)?;
    let (s, vis) = single_state(cfg)?;
    let sim = &cfg.simulation;
    let tau = match sim.tau_true {
        Some(t) => t,
        None => max_fisher(&s.probe, &vis)?.tau_m,
    };
    let report = mc_crb_study(&s.probe, &vis, tau, sim.trials, sim.replicates, sim.seed)?;
    out.json("estimate", &report)?;
    Ok(out.into_written())
}
