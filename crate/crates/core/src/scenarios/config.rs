//! TOML scenario files.
//!
//! A scenario file is a flat list of dotted keys:
//!
//! ```toml
//! scenario.name = "fig3b"
//! scenario.kind = "transient"
//! system.qubits = 2
//! system.omega1 = 1.0
//! system.omega2 = 0.99
//! bath.common.beta = 1.0
//! bath.common.mu_x = 0.01
//! target.parameter = "beta_common"
//! target.probe = 1
//! grid.n_samples = 401
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::bath::{BathLabel, BathSpec, SpectralDensity};
use crate::dynamics::{default_horizon, Spacing, TimeGrid};
use crate::error::{Error, Result};
use crate::liouvillian::{ApproximationVariant, CoefficientScheme, InitialState, ModelForm, Secular, SystemSpec};
use crate::metrology::{EstimationTarget, Parameter, ProbeSetup};
use crate::operators::Qubit;

/// Default heatmap axis values that are always present on the grid.
pub const DEFAULT_SNAP: [f64; 4] = [0.4, 0.5, 1.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Transient,
    Steady,
    Heatmap,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Transient => "transient",
            ScenarioKind::Steady => "steady",
            ScenarioKind::Heatmap => "heatmap",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub system: SystemSection,
    pub bath: BathSection,
    #[serde(default)]
    pub variant: VariantSection,
    pub target: TargetSection,
    #[serde(default)]
    pub grid: GridSection,
    pub sweep: Option<SweepSection>,
    pub heatmap: Option<HeatmapSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub kind: ScenarioKind,
    pub description: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub qubits: usize,
    pub omega1: f64,
    pub omega2: Option<f64>,
    #[serde(default)]
    pub k: f64,
    pub initial_state: Option<String>,
    #[serde(default)]
    pub form: ModelForm,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub common: Option<BathEntry>,
    pub local1: Option<BathEntry>,
    pub local2: Option<BathEntry>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathEntry {
    pub beta: f64,
    #[serde(default)]
    pub mu_x: f64,
    #[serde(default)]
    pub mu_z: f64,
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSection {
    pub secular: Option<Secular>,
    pub scheme: Option<CoefficientScheme>,
    pub lamb_shift: Option<bool>,
    pub secular_cutoff: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub parameter: Parameter,
    pub probe: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub n_samples: Option<usize>,
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub beta_min: f64,
    pub beta_max: f64,
    pub n: usize,
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSection {
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub n: Option<usize>,
    pub snap: Option<Vec<f64>>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub file: Option<String>,
}

/// A range of inverse temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaAxis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub spacing: Spacing,
    /// Values substituted for their nearest grid point.
    pub snap: Vec<f64>,
}

impl BetaAxis {
    pub fn new(min: f64, max: f64, n: usize, spacing: Spacing, snap: Vec<f64>) -> Result<Self> {
        if !(min > 0.0) || !(max > min) || !max.is_finite() {
            return Err(Error::Config(format!(
                "beta range must satisfy 0 < min < max < inf, got [{min}, {max}]"
            )));
        }
        if n < 2 {
            return Err(Error::Config(format!("beta axis needs at least 2 points, got {n}")));
        }
        if n > 10_000 {
            return Err(Error::Config(format!("beta axis limited to 10000 points, got {n}")));
        }
        if snap.len() > n {
            return Err(Error::Config("more snap values than grid points".into()));
        }
        Ok(BetaAxis {
            min,
            max,
            n,
            spacing,
            snap,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.n;
        let mut v: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
            Spacing::Log => {
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
            }
        };
        v[0] = self.min;
        v[n - 1] = self.max;
        let mut taken = vec![false; n];
        for &s in &self.snap {
            if !(s >= self.min && s <= self.max) {
                continue;
            }
            let dist = |x: f64| match self.spacing {
                Spacing::Linear => (x - s).abs(),
                Spacing::Log => (x.ln() - s.ln()).abs(),
            };
            let best = (0..n)
                .filter(|&i| !taken[i])
                .min_by(|&i, &j| dist(v[i]).total_cmp(&dist(v[j])));
            if let Some(i) = best {
                v[i] = s;
                taken[i] = true;
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub setup: ProbeSetup,
    pub t_start: f64,
    /// `None` means the default horizon of the system.
    pub t_end: Option<f64>,
    pub n_samples: usize,
    pub spacing: Spacing,
    pub sweep: Option<BetaAxis>,
    pub heatmap: Option<BetaAxis>,
    /// Region boundary for heatmaps; `None` means the thermal value at the
    /// target temperature.
    pub threshold: Option<f64>,
    pub output_file: String,
}

fn bath_spec(label: BathLabel, entry: &BathEntry) -> Result<BathSpec> {
    let sd = match entry.cutoff {
        Some(wc) => SpectralDensity::ohmic(wc)?,
        None => SpectralDensity::default(),
    };
    BathSpec::new(label, entry.beta, entry.mu_x, entry.mu_z, sd)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let sys = &self.system;
        if sys.qubits != 1 && sys.qubits != 2 {
            return Err(Error::Config(format!("system.qubits must be 1 or 2, got {}", sys.qubits)));
        }
        let mut baths = Vec::new();
        for (label, entry) in [
            (BathLabel::Common, &self.bath.common),
            (BathLabel::Local1, &self.bath.local1),
            (BathLabel::Local2, &self.bath.local2),
        ] {
            if let Some(e) = entry {
                baths.push(bath_spec(label, e)?);
            }
        }
        let init_name = sys
            .initial_state
            .clone()
            .unwrap_or_else(|| if sys.qubits == 1 { "ground" } else { "plus_plus" }.to_string());
        let initial_state = InitialState::from_name(&init_name)?;
        let spec = if sys.qubits == 1 {
            if sys.omega2.is_some() || sys.k != 0.0 {
                return Err(Error::Config("omega2 and k apply to two qubits only".into()));
            }
            let bath = match baths.as_slice() {
                [b] => *b,
                _ => return Err(Error::Config("a single qubit needs exactly one bath".into())),
            };
            SystemSpec::single(sys.omega1, bath, initial_state)
        } else {
            let omega2 = sys
                .omega2
                .ok_or_else(|| Error::Config("system.omega2 is required for two qubits".into()))?;
            SystemSpec::two(sys.omega1, omega2, sys.k, baths, initial_state)
        };
        spec.validate()?;
        spec.initial_state.density(spec.dim())?;

        let defaults = ApproximationVariant::default();
        let variant = ApproximationVariant {
            secular: self.variant.secular.unwrap_or(defaults.secular),
            scheme: self.variant.scheme.unwrap_or(defaults.scheme),
            lamb_shift: self.variant.lamb_shift.unwrap_or(defaults.lamb_shift),
            secular_cutoff: self.variant.secular_cutoff,
        };
        if let Some(c) = variant.secular_cutoff {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Config(format!("variant.secular_cutoff must be positive, got {c}")));
            }
        }
        let probe = Qubit::from_index(self.target.probe.unwrap_or(1))?;
        if sys.qubits == 1 && probe != Qubit::First {
            return Err(Error::Config("a single qubit can only be probed as qubit 1".into()));
        }
        let target = EstimationTarget::new(self.target.parameter, probe);
        let setup = ProbeSetup::new(spec, variant, sys.form, target)?;

        let t_start = self.grid.t_start.unwrap_or(0.0);
        let n_samples = self.grid.n_samples.unwrap_or(401);
        if n_samples > 100_000 {
            return Err(Error::Config(format!("grid.n_samples limited to 100000, got {n_samples}")));
        }
        let spacing = self.grid.spacing.unwrap_or_default();
        if let Some(t_end) = self.grid.t_end {
            TimeGrid::new(t_start, t_end, n_samples, spacing)?;
        } else if !(t_start >= 0.0) || !t_start.is_finite() || n_samples < 2 {
            return Err(Error::Config("grid.t_start must be finite and non-negative, n_samples >= 2".into()));
        }

        let sweep = self
            .sweep
            .as_ref()
            .map(|s| BetaAxis::new(s.beta_min, s.beta_max, s.n, s.spacing.unwrap_or(Spacing::Log), Vec::new()))
            .transpose()?;
        let heatmap = self
            .heatmap
            .as_ref()
            .map(|h| {
                BetaAxis::new(
                    h.beta_min.unwrap_or(0.25),
                    h.beta_max.unwrap_or(8.0),
                    h.n.unwrap_or(21),
                    Spacing::Log,
                    h.snap.clone().unwrap_or_else(|| DEFAULT_SNAP.to_vec()),
                )
            })
            .transpose()?;
        match self.scenario.kind {
            ScenarioKind::Transient => {}
            ScenarioKind::Steady if sweep.is_none() => {
                return Err(Error::Config("steady scenarios need a [sweep] section".into()));
            }
            ScenarioKind::Steady => {}
            ScenarioKind::Heatmap => {
                if heatmap.is_none() {
                    return Err(Error::Config("heatmap scenarios need a [heatmap] section".into()));
                }
                if setup.spec.bath(BathLabel::Local1).is_none() || setup.spec.bath(BathLabel::Local2).is_none() {
                    return Err(Error::Config("heatmap scenarios need both local baths".into()));
                }
                if matches!(self.target.parameter, Parameter::BetaLocal1 | Parameter::BetaLocal2) {
                    return Err(Error::Config("heatmap axes are the local temperatures; target the common bath".into()));
                }
            }
        }
        let threshold = self.heatmap.as_ref().and_then(|h| h.threshold);
        let name = self.scenario.name.trim().to_string();
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(Error::Config(format!("scenario.name `{name}` is not a valid file stem")));
        }
        let output_file = self.output.file.clone().unwrap_or_else(|| format!("{name}.csv"));
        Ok(Scenario {
            name,
            kind: self.scenario.kind,
            setup,
            t_start,
            t_end: self.grid.t_end,
            n_samples,
            spacing,
            sweep,
            heatmap,
            threshold,
            output_file,
        })
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        ScenarioConfig::from_toml_str(text)?.resolve()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let t_end = match self.t_end {
            Some(t) => t,
            None => default_horizon(&self.setup.spec),
        };
        if !t_end.is_finite() {
            return Err(Error::Config("no finite default horizon: every relaxation rate is zero".into()));
        }
        TimeGrid::new(self.t_start, t_end, self.n_samples, self.spacing)
    }

    /// Replace secular treatment and coefficient scheme by a named variant.
    pub fn set_variant(&mut self, name: &str) -> Result<()> {
        let base = match name {
            "partial" => ApproximationVariant::partial(),
            "full" => ApproximationVariant::full(),
            "unified" => ApproximationVariant::unified(),
            other => {
                return Err(Error::Config(format!(
                    "unknown variant `{other}` (expected partial, full or unified)"
                )))
            }
        };
        self.setup.variant.secular = base.secular;
        self.setup.variant.scheme = base.scheme;
        Ok(())
    }

    pub fn set_lamb_shift(&mut self, on: bool) {
        self.setup.variant.lamb_shift = on;
    }
}
