//! Grid search behind the shipped preset numbers.
//!
//! Engine: cold filter on ω₀, hot filter on ω₊, Γ < 0.
//! Refrigerator: hot filter on ω₀, cold filter on ω₋, Γ > 0, ω₋ inside the cooling window.
//!
//! `sep·k2` is the worst dominance ratio times (g/ν)². The ω₀ leak is not
//! suppressed by (g/ν)² while the sideband currents are, so it should be ≫ 1.

use qpiston_core::bath::*;
use qpiston_core::lindblad::*;
use qpiston_core::thermo::cooling_window;

fn filtered(label: BathLabel, t: f64, amp: f64, peak: f64, target: f64) -> BathSpec {
    let base = SpectrumShape::Flat { amplitude: amp, cutoff: Some(10.0) };
    let omega_f = target - lamb_shift(&base, target).unwrap();
    let f = FilterSpec { omega_f, gamma_f: peak * std::f64::consts::PI };
    BathSpec::new(label, t, base, Some(f)).unwrap()
}

/// Peak of the filter on ω₀.
const TLS_PEAK: f64 = 0.5;

fn min_ratio(rs: &[DominanceRatio]) -> f64 {
    rs.iter().map(|r| r.value).fold(f64::INFINITY, f64::min)
}

fn main() {
    println!("engine: nu amp peak T_C T_H | sep·k2 gamma D/|gamma| 1/|gamma|");
    for nu in [0.2, 0.3, 0.4] {
        for amp in [0.0005, 0.001, 0.002, 0.005] {
            for (tc, th) in [(0.1, 1.0), (0.15, 1.0), (0.1, 0.6)] {
                let peak = 0.05;
                let hot = filtered(BathLabel::Hot, th, amp, peak, 1.0 + nu);
                let cold = filtered(BathLabel::Cold, tc, amp, TLS_PEAK, 1.0);
                let cfg = MachineConfig::new(1.0, nu, 0.05 * nu, Coupling::Dispersive, hot, cold, 48).unwrap();
                let rep = spectral_separation_report(&cfg.hot, &cfg.cold, cfg.frequencies()).unwrap();
                let r = reduce_to_piston(&cfg).unwrap();
                if rep.engine_ok() && r.gamma < 0.0 {
                    println!(
                        "{nu} {amp} {peak} {tc} {th} | {:.1} {:.3e} {:.4} {:.3e}",
                        min_ratio(&rep.engine) * 0.0025,
                        r.gamma,
                        r.dee / r.gamma.abs(),
                        1.0 / r.gamma.abs()
                    );
                }
            }
        }
    }
    println!("fridge: nu amp peak T_C T_H | sep·k2 gamma D/gamma n_min 1/gamma");
    for nu in [0.5, 0.6, 0.7] {
        for amp in [0.0005, 0.001, 0.002, 0.005] {
            for (tc, th) in [(0.2, 0.32), (0.2, 0.4), (0.25, 0.4)] {
                let peak = 0.05;
                let hot = filtered(BathLabel::Hot, th, amp, TLS_PEAK, 1.0);
                let cold = filtered(BathLabel::Cold, tc, amp, peak, 1.0 - nu);
                let cfg = MachineConfig::new(1.0, nu, 0.05 * nu, Coupling::Dispersive, hot, cold, 48).unwrap();
                let rep = spectral_separation_report(&cfg.hot, &cfg.cold, cfg.frequencies()).unwrap();
                let r = reduce_to_piston(&cfg).unwrap();
                let w = cooling_window(&cfg).unwrap();
                if rep.refrigerator_ok() && r.gamma > 0.0 {
                    if let Some(n_min) = w.n_min {
                        println!(
                            "{nu} {amp} {peak} {tc} {th} | {:.1} {:.3e} {:.4} {:.4} {:.3e}",
                            min_ratio(&rep.refrigerator) * 0.0025,
                            r.gamma,
                            r.dee / r.gamma,
                            n_min,
                            1.0 / r.gamma
                        );
                    }
                }
            }
        }
    }
}
