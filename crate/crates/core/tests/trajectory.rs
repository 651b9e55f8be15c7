use num_complex::Complex64 as C64;
use qpiston_core::bath::*;
use qpiston_core::lindblad::*;
use qpiston_core::phase_space::AnalyticFamily;
use qpiston_core::thermo::Regime;
use qpiston_core::trajectory::*;

fn ohmic_bath(label: BathLabel, t: f64, amp: f64) -> BathSpec {
    BathSpec::new(label, t, SpectrumShape::OhmicExpCutoff { amplitude: amp, cutoff: 30.0 }, None).unwrap()
}

fn damped() -> MachineConfig {
    MachineConfig::new(
        2.0,
        1.0,
        0.05,
        Coupling::Dispersive,
        ohmic_bath(BathLabel::Hot, 0.6, 0.2),
        ohmic_bath(BathLabel::Cold, 0.4, 0.2),
        20,
    )
    .unwrap()
}

#[test]
fn backends_produce_consistent_records() {
    let cfg = damped();
    let fam = AnalyticFamily::coherent(C64::new(1.0, 0.0));
    let rates = reduce_to_piston(&cfg).unwrap();
    let grid = uniform_grid(1.0 / rates.gamma.abs(), 11);
    let full_opts = TrajectoryOptions { keep_states: vec![0, 10], track_correlation: true, ..Default::default() };
    let full = run_trajectory(&cfg, &fam, &grid, &full_opts).unwrap();
    let red_opts = TrajectoryOptions { backend: Backend::Reduced, ..Default::default() };
    let red = run_trajectory(&cfg, &fam, &grid, &red_opts).unwrap();
    assert_eq!(full.records.len(), grid.len());
    assert_eq!(red.records.len(), grid.len());
    assert_eq!(full.states.len(), 2);
    assert!(full.correlation[0] < 1e-14);
    assert_eq!(full.repairs, 0);
    for (a, b) in full.records.iter().zip(&red.records) {
        a.validate(cfg.nu).unwrap();
        b.validate(cfg.nu).unwrap();
        assert!(((a.n_mean - b.n_mean) / b.n_mean).abs() < 3.0 * 0.05f64.powi(2));
        assert!(((a.energy - b.energy) / b.energy).abs() < 3.0 * 0.05f64.powi(2));
    }
    // Damping: the piston gives up energy, so no engine output.
    assert!(full.records.iter().all(|r| r.regime != Regime::Engine));
}

#[test]
fn spin_boson_reduced_currents_are_nan() {
    let mut cfg = damped();
    cfg.coupling = Coupling::SpinBoson { delta: 5.0 };
    let opts = TrajectoryOptions { backend: Backend::Reduced, ..Default::default() };
    assert!(run_trajectory(&cfg, &AnalyticFamily::Fock { n: 1 }, &[0.0, 1.0], &opts).is_ok_and(|t| t.records[1].j_cold.is_nan()));
}

#[test]
fn initial_state_is_a_product() {
    let cfg = damped();
    let rho = initial_state(&cfg, &AnalyticFamily::Thermal { nbar: 0.4 }).unwrap();
    assert!(correlation_distance(&rho).unwrap() < 1e-14);
    assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    assert!(run_trajectory(&cfg, &AnalyticFamily::Thermal { nbar: 0.4 }, &[], &TrajectoryOptions::default()).is_err());
}

fn spohn_violations(tr: &Trajectory, from: usize) -> usize {
    let t = tr.temperatures;
    tr.records[from..]
        .iter()
        .filter(|r| {
            let scale = (r.j_hot.abs() / t.hot).max(r.j_cold.abs() / t.cold);
            r.spohn_residual < -1e-6 * scale
        })
        .count()
}

/// Swaps emission and absorption rates of the named pair on one bath.
fn swapped(l: &Liouvillian, bath: BathLabel, pair: [&str; 2]) -> Liouvillian {
    let mut terms = l.terms().to_vec();
    let idx: Vec<usize> = pair.iter().map(|p| terms.iter().position(|t| t.bath == bath && t.label == *p).unwrap()).collect();
    let (a, b) = (terms[idx[0]].rate, terms[idx[1]].rate);
    terms[idx[0]].rate = b;
    terms[idx[1]].rate = a;
    Liouvillian::from_parts(l.dims(), l.hamiltonian().clone(), terms).unwrap()
}

#[test]
fn broken_detailed_balance_breaks_the_second_law() {
    let cfg = damped();
    let fam = AnalyticFamily::coherent(C64::new(1.0, 0.0));
    let rates = reduce_to_piston(&cfg).unwrap();
    let grid = uniform_grid(1.0 / rates.gamma.abs(), 11);
    let opts = TrajectoryOptions::default();
    let honest = build_liouvillian(&cfg).unwrap();
    let base = run_full_with(&honest, &cfg, &fam, &grid, &opts, rates).unwrap();
    assert_eq!(spohn_violations(&base, 1), 0);
    // A cold bath that absorbs less than it emits on ω₀ drives heat from cold to hot.
    let inverted = swapped(&honest, BathLabel::Cold, ["sigma_minus", "sigma_plus"]);
    let bad = run_full_with(&inverted, &cfg, &fam, &grid, &opts, rates).unwrap();
    assert_eq!(spohn_violations(&bad, 1), grid.len() - 1);
    assert!(bad.records.iter().skip(1).all(|r| r.j_cold > 0.0 && r.j_hot < 0.0));
}

#[test]
fn initial_tls_populations_are_stationary() {
    let cfg = damped();
    let l = build_liouvillian(&cfg).unwrap();
    for fam in [AnalyticFamily::Fock { n: 2 }, AnalyticFamily::Thermal { nbar: 0.2 }] {
        let rho = initial_state(&cfg, &fam).unwrap();
        let drift = qpiston_core::operators::partial_trace_piston(&l.apply(rho.matrix()), cfg.dims.fock_cutoff());
        let scale = cfg.total_response(cfg.omega0);
        assert!(drift[(0, 0)].norm() < 1e-12 * scale, "{}", drift[(0, 0)]);
    }
    let (p1, p0) = tls_conditional_populations(&cfg, 0.0).unwrap();
    assert!((p1 + p0 - 1.0).abs() < 1e-14 && p1 > 0.0);
}
