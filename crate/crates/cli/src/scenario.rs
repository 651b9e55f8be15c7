//! Scenario files: TOML with a fixed schema. Unknown keys are rejected.
//!
//! ```toml
//! name = "engine-coherent"
//!
//! [machine]
//! omega0 = 1.0
//! nu = 0.3
//! g = 0.015
//! coupling = "dispersive"      # or "spin_boson" with `delta`
//! fock_cutoff = 48
//!
//! [hot]
//! temperature = 1.0
//! [hot.spectrum]
//! kind = "flat"                # flat | ohmic_exp_cutoff | lorentzian | tabulated
//! amplitude = 0.005
//! cutoff = 10.0
//! [hot.filter]                 # optional
//! omega_f = 1.3
//! gamma_f = 0.157
//!
//! [cold]
//! ...
//!
//! [piston]
//! kind = "coherent"            # thermal | displaced_thermal | fock | squeezed | cat
//! alpha_re = 1.0
//! alpha_im = 0.0
//!
//! [run]
//! backend = "full-me"          # or "reduced"
//! t_max = 30000.0
//! dt = 0.1
//! record_every = 300
//! snapshots = 5
//! outputs = ["thermo_csv", "distribution_csv", "report"]
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qpiston_core::bath::{response, BathLabel, BathSpec, FilterSpec, SpectrumShape};
use qpiston_core::lindblad::{Coupling, MachineConfig};
use qpiston_core::phase_space::AnalyticFamily;
use qpiston_core::trajectory::Backend;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub machine: MachineSection,
    pub hot: BathSection,
    pub cold: BathSection,
    pub piston: AnalyticFamily,
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Dispersive,
    SpinBoson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    pub omega0: f64,
    pub nu: f64,
    pub g: f64,
    pub coupling: CouplingKind,
    /// Detuning ω₀ − ν, spin-boson only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub fock_cutoff: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub temperature: f64,
    pub spectrum: SpectrumShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    ThermoCsv,
    DistributionCsv,
    Report,
}

fn one() -> usize {
    1
}

fn all_outputs() -> Vec<OutputKind> {
    vec![OutputKind::ThermoCsv, OutputKind::DistributionCsv, OutputKind::Report]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub backend: Backend,
    pub t_max: f64,
    /// Resolution step; must resolve the fastest rate.
    pub dt: f64,
    /// Emit a record every this many steps.
    #[serde(default = "one")]
    pub record_every: usize,
    /// Number of evenly spaced Husimi snapshots, first and last record included.
    #[serde(default)]
    pub snapshots: usize,
    #[serde(default = "all_outputs")]
    pub outputs: Vec<OutputKind>,
}

/// dt·max(ω₀, ν, G_max) may not exceed this.
pub const DT_RESOLUTION: f64 = 0.1;

impl Scenario {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical serialization, so formatting does not matter.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn machine_config(&self) -> CliResult<MachineConfig> {
        let m = &self.machine;
        let coupling = match (m.coupling, m.delta) {
            (CouplingKind::Dispersive, None) => Coupling::Dispersive,
            (CouplingKind::SpinBoson, Some(delta)) => Coupling::SpinBoson { delta },
            (CouplingKind::Dispersive, Some(_)) => {
                return Err(CliError::Config("machine.delta only applies to spin_boson coupling".into()))
            }
            (CouplingKind::SpinBoson, None) => {
                return Err(CliError::Config("spin_boson coupling needs machine.delta".into()))
            }
        };
        let bath = |label, b: &BathSection| BathSpec::new(label, b.temperature, b.spectrum.clone(), b.filter);
        let hot = bath(BathLabel::Hot, &self.hot)?;
        let cold = bath(BathLabel::Cold, &self.cold)?;
        Ok(MachineConfig::new(m.omega0, m.nu, m.g, coupling, hot, cold, m.fock_cutoff)?)
    }

    pub fn validate(&self) -> CliResult<()> {
        let cfg = self.machine_config()?;
        self.piston.validate()?;
        let r = &self.run;
        if r.backend == Backend::FullMe && cfg.coupling != Coupling::Dispersive {
            return Err(CliError::Config("the full-me backend needs dispersive coupling".into()));
        }
        if !(r.t_max > 0.0 && r.dt > 0.0) || !r.t_max.is_finite() {
            return Err(CliError::Config("run.t_max and run.dt must be positive".into()));
        }
        if r.record_every == 0 {
            return Err(CliError::Config("run.record_every must be at least 1".into()));
        }
        let fastest = fastest_rate(&cfg);
        if r.dt * fastest > DT_RESOLUTION * (1.0 + 1e-12) {
            return Err(CliError::Config(format!(
                "run.dt = {} does not resolve the fastest rate {fastest:.4}; need dt <= {:.4e}",
                r.dt,
                DT_RESOLUTION / fastest
            )));
        }
        if self.steps() < r.record_every {
            return Err(CliError::Config("run.t_max is shorter than one record interval".into()));
        }
        if r.snapshots == 1 || r.snapshots > self.grid().len() {
            return Err(CliError::Config("run.snapshots must be 0 or between 2 and the number of records".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.run.t_max / self.run.dt).round() as usize
    }

    /// Record times k·record_every·dt up to t_max.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.run.dt * self.run.record_every as f64;
        let n = self.steps() / self.run.record_every;
        (0..=n).map(|k| k as f64 * h).collect()
    }

    /// Grid indices of the distribution snapshots.
    pub fn snapshot_indices(&self) -> Vec<usize> {
        let n = self.grid().len();
        let s = self.run.snapshots;
        if s < 2 {
            return Vec::new();
        }
        let mut v: Vec<usize> = (0..s).map(|k| (k * (n - 1) + (s - 1) / 2) / (s - 1)).collect();
        v.dedup();
        v
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.run.outputs.contains(&kind)
    }
}

/// max(ω₀, ν, G) over both baths at ±ω₀ and ±ω_±.
pub fn fastest_rate(cfg: &MachineConfig) -> f64 {
    let f = cfg.frequencies();
    let mut m = cfg.omega0.max(cfg.nu);
    for w in [f.omega0, f.omega_plus, f.omega_minus] {
        for b in [&cfg.hot, &cfg.cold] {
            m = m.max(response(b, w)).max(response(b, -w));
        }
    }
    m
}
