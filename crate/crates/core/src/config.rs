//! Run configuration for the command-line tool: one TOML file describing the
//! states, visibilities, grids, simulation settings and outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{CountsMode, FitFamily, FreeMask};
use crate::metrology::{Probe, VisibilityModel};
use crate::spectra::{
    cat_from_channels, gauss_from_filter, make_state, rect_from_filter, sinc_pm_from_optics,
    SpectralAmplitude, StateDescriptor, DEFAULT_GRID_POINTS, DEFAULT_SPAN_SIGMAS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gauss {
        sigma: f64,
    },
    Rect {
        delta_omega: f64,
    },
    Cat {
        omega_prime: f64,
        delta_omega_prime: f64,
    },
    SincPm {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `omega_rad_per_ps,re,im` CSV, relative to the config file.
    Tabulated {
        path: PathBuf,
    },
    /// Gaussian whose intensity FWHM matches a filter.
    GaussFilter {
        fwhm_nm: f64,
        centre_nm: f64,
    },
    RectFilter {
        width_nm: f64,
        centre_nm: f64,
    },
    /// Two energy-matched channels about a reference wavelength.
    CatChannels {
        lambda_a_nm: f64,
        lambda_b_nm: f64,
        width_nm: f64,
        lambda_ref_nm: f64,
    },
    SincPmOptics {
        length_mm: f64,
        dn_modal: f64,
        dn_biref: f64,
        chrom_disp: f64,
        omega_plus: f64,
    },
    /// Reference cut `cos(√(2a) τ)`; no amplitude.
    Cosine {
        a: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutPath {
    /// Closed form where one exists, quadrature otherwise.
    #[default]
    Auto,
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub cut: CutPath,
    #[serde(flatten)]
    pub spec: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VisibilitySpec {
    /// Explicit list of visibilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Polarization angle (rad) with intrinsic overlap `v_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
}

impl VisibilitySpec {
    pub fn resolve(&self) -> Result<Vec<VisibilityModel>> {
        match (&self.values, self.theta, self.v_max) {
            (Some(vs), None, None) if !vs.is_empty() => {
                vs.iter().map(|&v| VisibilityModel::new(v)).collect()
            }
            (None, Some(t), Some(vm)) => Ok(vec![VisibilityModel::from_polarization(t, vm)?]),
            (None, None, None) => Ok(vec![VisibilityModel::new(1.0)?]),
            _ => Err(Error::invalid(
                "visibility: give either `values` or both `theta` and `v_max`",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    /// Visibility grid for ratio curves.
    pub v_min: f64,
    pub v_max: f64,
    pub v_points: usize,
    /// Frequency samples per amplitude.
    pub omega_points: usize,
    pub span_sigmas: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tau_min: -4.0,
            tau_max: 4.0,
            tau_points: 801,
            v_min: 0.5,
            v_max: 0.999,
            v_points: 50,
            omega_points: DEFAULT_GRID_POINTS,
            span_sigmas: DEFAULT_SPAN_SIGMAS,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_max > self.tau_min) || self.tau_points < 2 {
            return Err(Error::invalid(
                "grid: need tau_max > tau_min and tau_points ≥ 2",
            ));
        }
        if !(self.v_min > 0.0 && self.v_max <= 1.0 && self.v_max >= self.v_min) || self.v_points < 1
        {
            return Err(Error::invalid(
                "grid: need 0 < v_min ≤ v_max ≤ 1 and v_points ≥ 1",
            ));
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        linspace(self.tau_min, self.tau_max, self.tau_points)
    }

    pub fn vs(&self) -> Vec<f64> {
        linspace(self.v_min, self.v_max, self.v_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub trials: u64,
    pub replicates: usize,
    pub seed: u64,
    pub mode: CountsMode,
    /// Operating delay for the estimator; the Fisher maximum if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_true: Option<f64>,
    /// Counts CSV to fit instead of a fresh simulation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts_path: Option<PathBuf>,
    /// Model family for `fit`; inferred from the state if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_family: Option<FitFamily>,
    pub free: FreeMask,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            trials: 10_000,
            replicates: 200,
            seed: 0,
            mode: CountsMode::Binomial,
            tau_true: None,
            counts_path: None,
            fit_family: None,
            free: FreeMask::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub states: Vec<StateEntry>,
    #[serde(default)]
    pub visibility: VisibilitySpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory against which relative input paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(
            &text,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::invalid("config lists no states"));
        }
        self.grid.validate()?;
        self.visibility.resolve()?;
        let mut labels = std::collections::HashSet::new();
        for s in &self.states {
            if !labels.insert(s.label()) {
                return Err(Error::invalid(format!(
                    "duplicate state label {:?}",
                    s.label()
                )));
            }
        }
        if self.simulation.trials == 0 {
            return Err(Error::invalid("simulation.trials must be at least 1"));
        }
        Ok(())
    }

    /// Canonical TOML of the resolved configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// A state ready for evaluation.
#[derive(Debug)]
pub struct ResolvedState {
    pub label: String,
    /// `None` for the cosine reference.
    pub descriptor: Option<StateDescriptor>,
    pub amplitude: Option<SpectralAmplitude>,
    pub probe: Probe,
}

impl StateEntry {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match &self.spec {
            StateSpec::Gauss { .. } | StateSpec::GaussFilter { .. } => "gauss".into(),
            StateSpec::Rect { .. } | StateSpec::RectFilter { .. } => "rect".into(),
            StateSpec::Cat { .. } | StateSpec::CatChannels { .. } => "cat".into(),
            StateSpec::SincPm { .. } | StateSpec::SincPmOptics { .. } => "sinc_pm".into(),
            StateSpec::Tabulated { .. } => "tabulated".into(),
            StateSpec::Cosine { .. } => "cosine".into(),
        })
    }

    /// Parametric descriptor, converting optical specifications to rad/ps.
    pub fn descriptor(&self, cfg: &RunConfig) -> Result<Option<StateDescriptor>> {
        Ok(Some(match &self.spec {
            StateSpec::Gauss { sigma } => StateDescriptor::Gauss { sigma: *sigma },
            StateSpec::Rect { delta_omega } => StateDescriptor::Rect {
                delta_omega: *delta_omega,
            },
            StateSpec::Cat {
                omega_prime,
                delta_omega_prime,
            } => StateDescriptor::Cat {
                omega_prime: *omega_prime,
                delta_omega_prime: *delta_omega_prime,
            },
            StateSpec::SincPm { a, b, c } => StateDescriptor::SincPm {
                a: *a,
                b: *b,
                c: *c,
            },
            StateSpec::Tabulated { path } => {
                let (grid, values) =
                    crate::io::read_amplitude_samples(crate::io::open(&cfg.resolve_path(path))?)?;
                StateDescriptor::Tabulated { grid, values }
            }
            StateSpec::GaussFilter { fwhm_nm, centre_nm } => {
                gauss_from_filter(*fwhm_nm, *centre_nm)?
            }
            StateSpec::RectFilter {
                width_nm,
                centre_nm,
            } => rect_from_filter(*width_nm, *centre_nm)?,
            StateSpec::CatChannels {
                lambda_a_nm,
                lambda_b_nm,
                width_nm,
                lambda_ref_nm,
            } => cat_from_channels(*lambda_a_nm, *lambda_b_nm, *width_nm, *lambda_ref_nm)?,
            StateSpec::SincPmOptics {
                length_mm,
                dn_modal,
                dn_biref,
                chrom_disp,
                omega_plus,
            } => {
                sinc_pm_from_optics(*length_mm, *dn_modal, *dn_biref, *chrom_disp, *omega_plus)?
                    .descriptor
            }
            StateSpec::Cosine { .. } => return Ok(None),
        }))
    }

    pub fn resolve(&self, cfg: &RunConfig) -> Result<ResolvedState> {
        let label = self.label();
        let descriptor = self.descriptor(cfg)?;
        let Some(desc) = descriptor.clone() else {
            let StateSpec::Cosine { a } = self.spec else {
                unreachable!()
            };
            return Ok(ResolvedState {
                label: label.clone(),
                descriptor,
                amplitude: None,
                probe: Probe::cosine(a)?.with_label(label),
            });
        };
        desc.validate()?;
        let has_closed_form = desc.analytic_variance().is_some();
        let numeric = match self.cut {
            CutPath::Auto => !has_closed_form,
            CutPath::Numeric => true,
            CutPath::Analytic if has_closed_form => false,
            CutPath::Analytic => {
                return Err(Error::Unsupported(format!(
                    "{label}: no closed-form cut for {}",
                    desc.label()
                )))
            }
        };
        let amplitude = make_state(&desc, cfg.grid.omega_points, cfg.grid.span_sigmas)?;
        let probe = if numeric {
            Probe::numeric(&amplitude, label.clone())?
        } else {
            Probe::analytic(&desc)?.with_label(label.clone())
        };
        Ok(ResolvedState {
            label,
            descriptor: Some(desc),
            amplitude: Some(amplitude),
            probe,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[states]]
kind = "gauss"
sigma = 1
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(MINIMAL, ".").unwrap();
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.simulation.trials, 10_000);
        assert_eq!(c.visibility.resolve().unwrap()[0].v, 1.0);
        let back = RunConfig::from_toml(&c.to_toml().unwrap(), ".").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [
            "[[states]]\nkind = \"gauss\"\nsigma = 1\nwidth = 2\n",
            "[[states]]\nkind = \"gauss\"\nsigma = 1\n[grid]\ntau_pts = 3\n",
            "[[states]]\nkind = \"gauss\"\nsigma = 1\n[extra]\nx = 1\n",
            "[[states]]\nkind = \"lorentz\"\nsigma = 1\n",
        ] {
            assert!(
                matches!(RunConfig::from_toml(bad, "."), Err(Error::Parse(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn visibility_forms() {
        let v = VisibilitySpec {
            values: Some(vec![0.83, 0.95]),
            ..Default::default()
        };
        assert_eq!(v.resolve().unwrap().len(), 2);
        let v = VisibilitySpec {
            theta: Some(std::f64::consts::FRAC_PI_2),
            v_max: Some(0.9),
            values: None,
        };
        assert!((v.resolve().unwrap()[0].v - 0.9).abs() < 1e-12);
        let v = VisibilitySpec {
            theta: Some(0.3),
            v_max: None,
            values: None,
        };
        assert!(v.resolve().is_err());
    }

    #[test]
    fn channels_convert_to_rad_per_ps() {
        let text = r#"
[[states]]
kind = "cat_channels"
lambda_a_nm = 1530
lambda_b_nm = 1560
width_nm = 5
lambda_ref_nm = 1544.8
"#;
        let c = RunConfig::from_toml(text, ".").unwrap();
        let s = c.states[0].resolve(&c).unwrap();
        let Some(StateDescriptor::Cat {
            omega_prime,
            delta_omega_prime,
        }) = s.descriptor
        else {
            panic!()
        };
        assert!((omega_prime - 23.676).abs() < 1e-2, "{omega_prime}");
        assert!(
            (delta_omega_prime - 7.893).abs() < 1e-2,
            "{delta_omega_prime}"
        );
        assert_eq!(s.label, "cat");
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let text =
            "[[states]]\nkind = \"gauss\"\nsigma = 1\n[[states]]\nkind = \"gauss\"\nsigma = 2\n";
        assert!(RunConfig::from_toml(text, ".").is_err());
    }
}
