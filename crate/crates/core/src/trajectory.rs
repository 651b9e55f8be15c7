//! Time series of thermodynamic records from either backend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{
    build_liouvillian, correlation_distance, evolve_visit, heat_current, reduce_to_piston, reduced_heat_currents,
    tls_conditional_populations, tls_steady_populations, Coupling, Liouvillian, MachineConfig, RatePair,
};
use crate::bath::BathLabel;
use crate::operators::{partial_trace_tls, tensor_tls, trace_out_tls, CMat, DensityOperator};
use crate::phase_space::{mean_occupation, piston_generator, AnalyticFamily};
use crate::superop::{evolve_with, EvolveOptions};
use crate::thermo::{flag_finite_differences, make_record, temperatures, Snapshot, Temperatures, ThermoRecord};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// TLS ⊗ piston master equation.
    FullMe,
    /// Piston-only dynamics with drift Γ and diffusion D.
    Reduced,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::FullMe => "full-me",
            Backend::Reduced => "reduced",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryOptions {
    pub backend: Backend,
    pub evolve: EvolveOptions,
    /// Grid indices whose piston states are kept.
    pub keep_states: Vec<usize>,
    /// Track the TLS–piston correlation (full ME only).
    pub track_correlation: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { backend: Backend::FullMe, evolve: EvolveOptions::default(), keep_states: Vec::new(), track_correlation: false }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub backend: Backend,
    pub rates: RatePair,
    pub temperatures: Temperatures,
    pub records: Vec<ThermoRecord>,
    pub states: Vec<(f64, DensityOperator)>,
    pub correlation: Vec<f64>,
    pub repairs: usize,
}

/// Piston in `family`, TLS in its steady state given the piston's ⟨n⟩
/// (ω₀ channel alone for spin-boson coupling).
pub fn initial_state(cfg: &MachineConfig, family: &AnalyticFamily) -> Result<DensityOperator> {
    let rho_p = family.density(cfg.dims.fock_cutoff())?;
    let (p1, p0) = match cfg.coupling {
        Coupling::Dispersive => tls_conditional_populations(cfg, mean_occupation(&rho_p))?,
        _ => tls_steady_populations(cfg)?,
    };
    let s = CMat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => C64::from(p1),
        (1, 1) => C64::from(p0),
        _ => C64::from(0.0),
    });
    tensor_tls(&s, &rho_p)
}

pub fn run_trajectory(cfg: &MachineConfig, family: &AnalyticFamily, grid: &[f64], opts: &TrajectoryOptions) -> Result<Trajectory> {
    cfg.validate()?;
    family.validate()?;
    if grid.is_empty() {
        return Err(Error::Param("empty time grid".into()));
    }
    let rates = reduce_to_piston(cfg)?;
    match opts.backend {
        Backend::FullMe => run_full(cfg, family, grid, opts, rates),
        Backend::Reduced => {
            let cfg2 = cfg.clone();
            let currents = move |n: f64| match cfg2.coupling {
                Coupling::Dispersive => reduced_heat_currents(&cfg2, n),
                Coupling::SpinBoson { .. } => Ok((f64::NAN, f64::NAN)),
            };
            run_piston(rates, cfg.nu, temperatures(cfg), family, cfg.dims.fock_cutoff(), grid, opts, currents)
        }
    }
}

fn run_full(
    cfg: &MachineConfig,
    family: &AnalyticFamily,
    grid: &[f64],
    opts: &TrajectoryOptions,
    rates: RatePair,
) -> Result<Trajectory> {
    run_full_with(&build_liouvillian(cfg)?, cfg, family, grid, opts, rates)
}

/// Full-ME trajectory under an explicit generator; `cfg` supplies the initial
/// state, ν and the temperatures used in the records.
pub fn run_full_with(
    l: &Liouvillian,
    cfg: &MachineConfig,
    family: &AnalyticFamily,
    grid: &[f64],
    opts: &TrajectoryOptions,
    rates: RatePair,
) -> Result<Trajectory> {
    let rho0 = initial_state(cfg, family)?;
    let temps = temperatures(cfg);
    let n = cfg.dims.fock_cutoff();
    let mut records = Vec::with_capacity(grid.len());
    let mut states = Vec::new();
    let mut correlation = Vec::new();
    let stats = evolve_visit(l, &rho0, grid, opts.evolve, |k, t, rho| {
        let rho_p = partial_trace_tls(rho)?;
        let drho_p = trace_out_tls(&l.apply(rho.matrix()), n);
        let snap = Snapshot {
            t,
            rho_p: &rho_p,
            drho_p: &drho_p,
            j_hot: heat_current(l, rho, BathLabel::Hot),
            j_cold: heat_current(l, rho, BathLabel::Cold),
            gamma: Some(rates.gamma),
        };
        records.push(make_record(&snap, cfg.nu, temps)?);
        if opts.track_correlation {
            correlation.push(correlation_distance(rho)?);
        }
        if opts.keep_states.contains(&k) {
            states.push((t, rho_p));
        }
        Ok(())
    })?;
    flag_finite_differences(&mut records);
    Ok(Trajectory { backend: Backend::FullMe, rates, temperatures: temps, records, states, correlation, repairs: stats.repairs })
}

/// Piston-only trajectory for arbitrary rates; `currents(⟨n⟩)` supplies (𝒥_H, 𝒥_C).
#[allow(clippy::too_many_arguments)]
pub fn run_piston<F>(
    rates: RatePair,
    nu: f64,
    temps: Temperatures,
    family: &AnalyticFamily,
    cutoff: usize,
    grid: &[f64],
    opts: &TrajectoryOptions,
    currents: F,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let gen = piston_generator(rates, nu, cutoff)?;
    let rho0 = family.density(cutoff)?;
    let mut records = Vec::with_capacity(grid.len());
    let mut states = Vec::new();
    let stats = evolve_with(&gen, &rho0, grid, opts.evolve, |k, t, rho| {
        let drho = gen.apply(rho.matrix());
        let n_mean: f64 = (0..cutoff).map(|i| i as f64 * rho.matrix()[(i, i)].re).sum();
        let (j_hot, j_cold) = currents(n_mean)?;
        let snap = Snapshot { t, rho_p: rho, drho_p: &drho, j_hot, j_cold, gamma: Some(rates.gamma) };
        records.push(make_record(&snap, nu, temps)?);
        if opts.keep_states.contains(&k) {
            states.push((t, rho.clone()));
        }
        Ok(())
    })?;
    flag_finite_differences(&mut records);
    Ok(Trajectory {
        backend: Backend::Reduced,
        rates,
        temperatures: temps,
        records,
        states,
        correlation: Vec::new(),
        repairs: stats.repairs,
    })
}

/// Uniform grid of `n` points on [0, t_end].
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}
