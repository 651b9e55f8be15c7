use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use qpiston_core::bath::{spectral_separation_report, SeparationReport};
use qpiston_core::lindblad::{Coupling, MachineConfig};
use qpiston_core::phase_space::{husimi_distribution, mean_occupation, RadialGrid};
use qpiston_core::thermo::{
    cooling_window, critical_temperature, engine_efficiency, temperatures, work_capacity_change, write_records_csv,
    Regime, Temperatures, ThermoRecord,
};
use qpiston_core::trajectory::{run_trajectory, Trajectory, TrajectoryOptions};

use crate::error::CliResult;
use crate::scenario::{OutputKind, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative slack on the second law: residual ≥ −SPOHN_TOL·max(|𝒥_H|/T_H, |𝒥_C|/T_C).
pub const SPOHN_TOL: f64 = 1e-6;

/// Undefined currents (NaN) are not counted as violations.
pub fn spohn_holds(r: &ThermoRecord, temps: Temperatures) -> bool {
    if !(r.j_hot.is_finite() && r.j_cold.is_finite()) {
        return true;
    }
    let scale = (r.j_hot.abs() / temps.hot).max(r.j_cold.abs() / temps.cold);
    r.spohn_residual >= -SPOHN_TOL * scale
}

#[derive(Clone, Debug, Serialize)]
pub struct Clocks {
    /// 2π/ν.
    pub piston_period: f64,
    /// 1/|Γ|.
    pub drift_time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: Option<String>,
    pub config_hash: String,
    pub version: String,
    pub backend: String,
    pub gamma: f64,
    pub dee: f64,
    pub clocks: Clocks,
    pub t_hot: f64,
    pub t_cold: f64,
    pub carnot: f64,
    pub carnot_cop: f64,
    pub records: usize,
    pub regimes: BTreeMap<String, usize>,
    pub final_regime: String,
    pub separation: SeparationReport,
    pub cooling_n_min: Option<f64>,
    pub critical_temperature: f64,
    pub work_capacity_change: f64,
    pub max_ergotropy: f64,
    pub spohn_violations: usize,
    /// Engine steps with η^Max above Carnot.
    pub above_carnot_steps: usize,
    /// Engine steps with T_P < T_C that break η^Max ≤ 1 − T_P/T_H.
    pub tp_bound_violations: usize,
    /// Refrigerator steps whose COP bound exceeds the Carnot COP.
    pub cop_above_carnot_steps: usize,
    pub repairs: usize,
    pub fd_flags: usize,
}

pub fn metadata(s: &Scenario, cfg: &MachineConfig, traj: &Trajectory) -> Vec<(String, String)> {
    let t = traj.temperatures;
    let mut m = vec![
        ("name".to_string(), s.name.clone().unwrap_or_default()),
        ("config_hash".into(), s.hash()),
        ("version".into(), VERSION.into()),
        ("backend".into(), traj.backend.name().into()),
        ("omega0".into(), format!("{:e}", cfg.omega0)),
        ("nu".into(), format!("{:e}", cfg.nu)),
        ("g".into(), format!("{:e}", cfg.g)),
        ("fock_cutoff".into(), cfg.dims.fock_cutoff().to_string()),
        ("t_hot".into(), format!("{:e}", t.hot)),
        ("t_cold".into(), format!("{:e}", t.cold)),
        ("carnot".into(), format!("{:e}", t.carnot())),
        ("carnot_cop".into(), format!("{:e}", t.carnot_cop())),
        ("gamma".into(), format!("{:e}", traj.rates.gamma)),
        ("dee".into(), format!("{:e}", traj.rates.dee)),
    ];
    let c = clocks(cfg, traj);
    m.push(("piston_period".into(), format!("{:e}", c.piston_period)));
    m.push(("drift_time".into(), format!("{:e}", c.drift_time)));
    m
}

fn clocks(cfg: &MachineConfig, traj: &Trajectory) -> Clocks {
    Clocks { piston_period: 2.0 * std::f64::consts::PI / cfg.nu, drift_time: 1.0 / traj.rates.gamma.abs() }
}

pub fn simulate(s: &Scenario) -> CliResult<(MachineConfig, Trajectory)> {
    s.validate()?;
    let cfg = s.machine_config()?;
    let opts = TrajectoryOptions { backend: s.run.backend, keep_states: s.snapshot_indices(), ..Default::default() };
    let traj = run_trajectory(&cfg, &s.piston, &s.grid(), &opts)?;
    Ok((cfg, traj))
}

pub fn summarize(s: &Scenario, cfg: &MachineConfig, traj: &Trajectory) -> CliResult<Report> {
    let temps = temperatures(cfg);
    let recs = &traj.records;
    let mut regimes = BTreeMap::new();
    for r in recs {
        *regimes.entry(r.regime.name().to_string()).or_insert(0) += 1;
    }
    let (mut above, mut tp_viol, mut cop_above) = (0, 0, 0);
    for r in recs {
        if r.regime == Regime::Engine {
            if let Ok(e) = engine_efficiency(r, temps) {
                above += e.above_carnot as usize;
                if r.t_eff < temps.cold && !e.within_tp_bound {
                    tp_viol += 1;
                }
            }
        }
        if r.regime == Regime::Refrigerator && r.cop > temps.carnot_cop() {
            cop_above += 1;
        }
    }
    let dispersive = cfg.coupling == Coupling::Dispersive;
    Ok(Report {
        name: s.name.clone(),
        config_hash: s.hash(),
        version: VERSION.into(),
        backend: traj.backend.name().into(),
        gamma: traj.rates.gamma,
        dee: traj.rates.dee,
        clocks: clocks(cfg, traj),
        t_hot: temps.hot,
        t_cold: temps.cold,
        carnot: temps.carnot(),
        carnot_cop: temps.carnot_cop(),
        records: recs.len(),
        regimes,
        final_regime: recs.last().map_or("idle", |r| r.regime.name()).to_string(),
        separation: spectral_separation_report(&cfg.hot, &cfg.cold, cfg.frequencies())?,
        cooling_n_min: if dispersive { cooling_window(cfg).ok().and_then(|w| w.n_min) } else { None },
        critical_temperature: critical_temperature(cfg).value,
        work_capacity_change: work_capacity_change(recs),
        max_ergotropy: recs.iter().map(|r| r.ergotropy).fold(0.0, f64::max),
        spohn_violations: recs.iter().filter(|r| !spohn_holds(r, temps)).count(),
        above_carnot_steps: above,
        tp_bound_violations: tp_viol,
        cop_above_carnot_steps: cop_above,
        repairs: traj.repairs,
        fd_flags: recs.iter().filter(|r| r.fd_flag).count(),
    })
}

/// Writes `bytes` next to `path`, then renames over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn thermo_csv(s: &Scenario, cfg: &MachineConfig, traj: &Trajectory) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &metadata(s, cfg, traj), &traj.records, cfg.nu)?;
    Ok(buf)
}

/// Husimi Q of each kept piston state.
pub fn distribution_csvs(s: &Scenario, traj: &Trajectory) -> CliResult<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for (k, (t, rho)) in traj.states.iter().enumerate() {
        let r_max = 2.0 * (mean_occupation(rho) + 1.0).sqrt() + 4.0;
        let dist = husimi_distribution(rho, RadialGrid::new(r_max, 96, 64)?)?;
        let mut buf = format!("# config_hash={}\n", s.hash()).into_bytes();
        dist.write_csv(&mut buf, *t, traj.rates)?;
        out.push((format!("distribution_{k:03}.csv"), buf));
    }
    Ok(out)
}

/// Runs a scenario and writes the requested outputs into `dir`.
pub fn run(s: &Scenario, dir: &Path) -> CliResult<(Report, Vec<PathBuf>)> {
    let (cfg, traj) = simulate(s)?;
    let report = summarize(s, &cfg, &traj)?;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> CliResult<()> {
        let p = dir.join(name);
        write_atomic(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    if s.wants(OutputKind::ThermoCsv) {
        put("thermo.csv", &thermo_csv(s, &cfg, &traj)?)?;
    }
    if s.wants(OutputKind::DistributionCsv) {
        for (name, bytes) in distribution_csvs(s, &traj)? {
            put(&name, &bytes)?;
        }
    }
    if s.wants(OutputKind::Report) {
        let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
        json.push(b'\n');
        put("report.json", &json)?;
    }
    Ok((report, written))
}
