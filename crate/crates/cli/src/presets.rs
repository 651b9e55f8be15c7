//! Named scenarios. Numbers come from `examples/preset_search.rs`.
//!
//! Each bath is a narrow filter on a weak flat base: peak γ_f/π, half width
//! π·amplitude, centred on its target frequency after the Lamb shift. The bath
//! on ω₀ peaks higher so the TLS relaxes much faster than the sidebands pump it.

use std::f64::consts::PI;

use qpiston_core::bath::{lamb_shift, FilterSpec, SpectrumShape};
use qpiston_core::phase_space::AnalyticFamily;
use qpiston_core::trajectory::Backend;

use crate::error::{CliError, CliResult};
use crate::scenario::*;

pub const NAMES: [&str; 4] = ["engine-coherent", "engine-fock", "fridge-fock", "fridge-thermal"];

const ALIASES: [(&str, &str); 2] = [("fig2-engine-coherent", "engine-coherent"), ("fig3-fridge-fock", "fridge-fock")];

const BASE_CUTOFF: f64 = 10.0;
// Narrow enough that the unsuppressed ω₀ leak stays well below the (g/ν)²-weak sideband currents.
const ENGINE_AMPLITUDE: f64 = 0.0005;
const FRIDGE_AMPLITUDE: f64 = 0.001;
const SIDEBAND_PEAK: f64 = 0.05;
const TLS_PEAK: f64 = 0.5;

pub const ENGINE_NU: f64 = 0.3;
pub const ENGINE_T: (f64, f64) = (1.0, 0.1);
pub const FRIDGE_NU: f64 = 0.6;
pub const FRIDGE_T: (f64, f64) = (0.32, 0.2);

fn filtered(temperature: f64, amplitude: f64, target: f64, peak: f64) -> BathSection {
    let spectrum = SpectrumShape::Flat { amplitude, cutoff: Some(BASE_CUTOFF) };
    let shift = lamb_shift(&spectrum, target).expect("flat base with cutoff");
    BathSection { temperature, spectrum, filter: Some(FilterSpec { omega_f: target - shift, gamma_f: PI * peak }) }
}

fn machine(nu: f64) -> MachineSection {
    MachineSection { omega0: 1.0, nu, g: 0.05 * nu, coupling: CouplingKind::Dispersive, delta: None, fock_cutoff: 48 }
}

/// Cold bath on ω₀, hot bath on ω₊: Γ < 0.
pub fn engine(piston: AnalyticFamily) -> Scenario {
    Scenario {
        name: None,
        machine: machine(ENGINE_NU),
        hot: filtered(ENGINE_T.0, ENGINE_AMPLITUDE, 1.0 + ENGINE_NU, SIDEBAND_PEAK),
        cold: filtered(ENGINE_T.1, ENGINE_AMPLITUDE, 1.0, TLS_PEAK),
        piston,
        run: RunSection {
            backend: Backend::FullMe,
            t_max: 30_000.0,
            dt: 0.1,
            record_every: 300,
            snapshots: 5,
            outputs: vec![OutputKind::ThermoCsv, OutputKind::DistributionCsv, OutputKind::Report],
        },
    }
}

/// Hot bath on ω₀, cold bath on ω₋: Γ > 0.
pub fn fridge(piston: AnalyticFamily) -> Scenario {
    Scenario {
        name: None,
        machine: machine(FRIDGE_NU),
        hot: filtered(FRIDGE_T.0, FRIDGE_AMPLITUDE, 1.0, TLS_PEAK),
        cold: filtered(FRIDGE_T.1, FRIDGE_AMPLITUDE, 1.0 - FRIDGE_NU, SIDEBAND_PEAK),
        piston,
        run: RunSection {
            backend: Backend::FullMe,
            t_max: 600_000.0,
            dt: 0.1,
            record_every: 6000,
            snapshots: 5,
            outputs: vec![OutputKind::ThermoCsv, OutputKind::DistributionCsv, OutputKind::Report],
        },
    }
}

pub fn canonical(name: &str) -> Option<&'static str> {
    NAMES.iter().copied().find(|n| *n == name).or_else(|| ALIASES.iter().find(|(a, _)| *a == name).map(|(_, n)| *n))
}

pub fn preset(name: &str) -> CliResult<Scenario> {
    let canon = canonical(name).ok_or_else(|| {
        CliError::Config(format!("unknown preset {name:?}; known: {}", NAMES.join(", ")))
    })?;
    let mut s = match canon {
        "engine-coherent" => engine(AnalyticFamily::Coherent { alpha_re: 1.0, alpha_im: 0.0 }),
        "engine-fock" => engine(AnalyticFamily::Fock { n: 3 }),
        "fridge-fock" => fridge(AnalyticFamily::Fock { n: 2 }),
        "fridge-thermal" => fridge(AnalyticFamily::Thermal { nbar: 2.0 }),
        _ => unreachable!(),
    };
    if canon == "engine-fock" {
        // Amplified Fock states outgrow N = 48 past |Γ|t ≈ 0.5.
        s.run.t_max = 15_000.0;
    }
    s.name = Some(canon.to_string());
    Ok(s)
}

/// Preset names with their aliases, one line each.
pub fn listing() -> Vec<String> {
    NAMES
        .iter()
        .map(|n| {
            let aliases: Vec<&str> = ALIASES.iter().filter(|(_, c)| c == n).map(|(a, _)| *a).collect();
            if aliases.is_empty() {
                n.to_string()
            } else {
                format!("{n} (alias: {})", aliases.join(", "))
            }
        })
        .collect()
}
