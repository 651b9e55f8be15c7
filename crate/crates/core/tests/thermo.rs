use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qpiston_core::bath::*;
use qpiston_core::expm::expm;
use qpiston_core::lindblad::{Coupling, MachineConfig, RatePair};
use qpiston_core::operators::*;
use qpiston_core::phase_space::*;
use qpiston_core::superop::{evolve_collect, EvolveOptions};
use qpiston_core::thermo::*;
use qpiston_core::trajectory::{run_piston, uniform_grid, TrajectoryOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn number_h(nu: f64, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { C64::from(nu * i as f64) } else { ZERO })
}

fn rates(g: f64, d: f64) -> RatePair {
    RatePair::new(g, d).unwrap()
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace();
    m.map(|z| z / tr)
}

fn temps() -> Temperatures {
    Temperatures { hot: 2.0, cold: 0.5 }
}

/// Reduced trajectory with zero bath currents (only piston quantities matter).
fn piston_records(family: AnalyticFamily, r: RatePair, nu: f64, n: usize, grid: &[f64]) -> Vec<ThermoRecord> {
    let opts = TrajectoryOptions {
        evolve: EvolveOptions { max_repairs: usize::MAX, ..Default::default() },
        ..Default::default()
    };
    run_piston(r, nu, temps(), &family, n, grid, &opts, |_| Ok((0.0, 0.0))).unwrap().records
}

#[test]
fn ergotropy_examples() {
    let (nu, n) = (1.3, 60);
    let h = number_h(nu, n);
    let th = AnalyticFamily::Thermal { nbar: 0.8 }.density(n).unwrap();
    assert_eq!(ergotropy(&th, &h).unwrap().0, 0.0);
    for k in [1, 3, 7] {
        let f = AnalyticFamily::Fock { n: k }.density(n).unwrap();
        let (w, passive) = ergotropy(&f, &h).unwrap();
        assert!((w - k as f64 * nu).abs() < 1e-12);
        assert!((passive.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }
    let a = C64::new(1.1, -0.7);
    let (w, _) = ergotropy(&AnalyticFamily::coherent(a).density(n).unwrap(), &h).unwrap();
    assert!((w - nu * a.norm_sqr()).abs() < 1e-10, "{w}");
}

#[test]
fn passive_states_have_zero_ergotropy() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    p.sort_by(|a, b| b.total_cmp(a));
    let s: f64 = p.iter().sum();
    let m = CMat::from_fn(n, n, |i, j| if i == j { C64::from(p[i] / s) } else { ZERO });
    let rho = DensityOperator::new(HilbertDims::piston(n).unwrap(), m).unwrap();
    assert_eq!(ergotropy(&rho, &number_h(1.0, n)).unwrap().0, 0.0);
}

#[test]
fn ergotropy_invariant_under_energy_preserving_unitaries() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dims = HilbertDims::piston(n).unwrap();
    let h = number_h(0.7, n);
    for _ in 0..10 {
        let rho = DensityOperator::new(dims, random_density(&mut rng, n)).unwrap();
        let u = CMat::from_fn(n, n, |i, j| if i == j { C64::from_polar(1.0, rng.gen_range(0.0..6.3)) } else { ZERO });
        let rot = DensityOperator::new(dims, hermitize(&(&u * rho.matrix() * u.adjoint()))).unwrap();
        let (a, b) = (ergotropy(&rho, &h).unwrap().0, ergotropy(&rot, &h).unwrap().0);
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn ergotropy_with_non_diagonal_hamiltonian() {
    // H = σ_X: |+⟩ is the excited eigenstate, two units above the ground state.
    let h = pauli2(Axis::X);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityOperator::pure(HilbertDims::piston(2).unwrap(), &[C64::from(s), C64::from(s)]).unwrap();
    assert!((ergotropy(&plus, &h).unwrap().0 - 2.0).abs() < 1e-12);
}

#[test]
fn effective_temperature_examples() {
    let nu = 1.5;
    let pure = AnalyticFamily::coherent(C64::new(1.0, 0.0)).density(30).unwrap();
    let t = effective_temperature(&pure, nu).unwrap();
    assert!(t.pure && t.t_p == 0.0);
    let th = AnalyticFamily::Thermal { nbar: 1.0 }.density(80).unwrap();
    let t = effective_temperature(&th, nu).unwrap();
    assert!((t.t_p - nu / 2f64.ln()).abs() < 1e-8);
    // Too much entropy for the cutoff.
    let flat = DensityOperator::new(HilbertDims::piston(10).unwrap(), CMat::identity(10, 10).scale(0.1)).unwrap();
    match effective_temperature(&flat, nu) {
        Err(qpiston_core::Error::EntropyTooLarge { suggested, .. }) => assert!(suggested > 10),
        other => panic!("{other:?}"),
    }
}

#[test]
fn evolved_coherent_temperature_closed_form() {
    let (nu, r) = (1.0, rates(0.2, 0.3));
    let a0 = C64::new(1.0, 0.0);
    for t in [0.2, 1.0, 4.0] {
        let st = analytic_evolve(&AnalyticFamily::coherent(a0), r, nu, t, 60).unwrap();
        let tp = effective_temperature(&st.to_density(60).unwrap(), nu).unwrap().t_p;
        let d = r.added_noise(t);
        let want = nu / ((1.0 + d) / d).ln();
        assert!(((tp - want) / want).abs() < 1e-6);
        let cf = entropy_rate_closed_forms(&AnalyticFamily::coherent(a0), r, nu, t).unwrap();
        assert!(((cf.t_p - want) / want).abs() < 1e-12);
    }
}

#[test]
fn work_capacity_examples() {
    let nu = 1.0;
    // Constant state.
    let recs = piston_records(AnalyticFamily::Thermal { nbar: 0.5 }, rates(0.2, 0.1), nu, 40, &uniform_grid(5.0, 6));
    assert!(work_capacity_change(&recs).abs() < 1e-12);
    // Coherent(1), no diffusion, Γt = −1.
    let r = rates(-0.1, 0.0);
    let grid = [0.0, 10.0];
    let recs = piston_records(AnalyticFamily::coherent(C64::new(1.0, 0.0)), r, nu, 40, &grid);
    let dw = work_capacity_change(&recs);
    assert!((dw - nu * (1f64.exp() - 1.0)).abs() < 1e-6, "{dw}");
    // Fock(3) under realizable gain loses work capacity.
    let r = rates(-0.1, 0.16);
    let recs = piston_records(AnalyticFamily::Fock { n: 3 }, r, nu, 120, &uniform_grid(10.0, 41));
    for w in work_capacity_series(&recs).iter().skip(1) {
        assert!(*w < 0.0);
    }
}

#[test]
fn record_invariants_and_power() {
    let nu = 1.0;
    // Thermal trajectory: every energy change is heat.
    let recs = piston_records(AnalyticFamily::Thermal { nbar: 0.3 }, rates(0.1, 0.2), nu, 60, &uniform_grid(10.0, 201));
    for r in &recs {
        r.validate(nu).unwrap();
        assert!(r.power_max.abs() < 1e-8 * r.energy_rate.abs().max(1e-12), "{}", r.power_max);
    }
    let fd = max_power(&recs, 100).unwrap();
    assert!(fd.value.abs() < 1e-3 * recs[100].energy_rate.abs());
    // d⟨H⟩/dt at t = 0.
    let (g, d) = (0.2, 0.05);
    let recs = piston_records(AnalyticFamily::Fock { n: 2 }, rates(g, d), nu, 40, &[0.0, 0.1]);
    assert!((recs[0].energy_rate - nu * (d - g * 2.0)).abs() < 1e-8);
    // Coherent, short time, weak diffusion: P ≈ −Γν|α₀|².
    let (g, d, a2) = (-0.05, 0.0, 4.0);
    let recs = piston_records(AnalyticFamily::coherent(C64::new(2.0, 0.0)), rates(g, d), nu, 60, &[0.0, 0.01]);
    assert!(((recs[0].power_max - (-g * nu * a2)) / (g * nu * a2)).abs() < 1e-6);
}

#[test]
fn closed_form_entropy_rates() {
    let nu = 1.0;
    let coh = AnalyticFamily::coherent(C64::new(1.0, 0.0));
    assert_eq!(entropy_rate_closed_forms(&coh, rates(0.3, 0.0), nu, 2.0).unwrap().s_dot, 0.0);
    let r = rates(0.2, 0.05);
    let a = entropy_rate_closed_forms(&AnalyticFamily::Thermal { nbar: 0.0 }, r, nu, 3.0).unwrap();
    let b = entropy_rate_closed_forms(&AnalyticFamily::coherent(C64::new(0.0, 0.0)), r, nu, 3.0).unwrap();
    assert!((a.s_dot - b.s_dot).abs() < 1e-15 && (a.t_p - b.t_p).abs() < 1e-15);
    assert!(entropy_rate_closed_forms(&AnalyticFamily::Fock { n: 1 }, r, nu, 1.0).is_err());
    // Gain with weak diffusion, against a finite difference of integrated states.
    let r = rates(-0.01, 0.001);
    let t = 50.0;
    let h = 0.5;
    let rho0 = coh.density(40).unwrap();
    let gen = piston_generator(r, nu, 40).unwrap();
    let opts = EvolveOptions { max_repairs: usize::MAX, ..Default::default() };
    let (out, _) = evolve_collect(&gen, &rho0, &[0.0, t - h, t + h], opts).unwrap();
    let fd = (von_neumann_entropy(&out[2]) - von_neumann_entropy(&out[1])) / (2.0 * h);
    let cf = entropy_rate_closed_forms(&coh, r, nu, t).unwrap().s_dot;
    assert!(((cf - fd) / fd).abs() < 0.05, "{cf} vs {fd}");
}

#[test]
fn cooling_window_examples() {
    let w = cooling_window_for(10.0, 2.0, 8.0, Temperatures { hot: 20.0, cold: 5.0 }).unwrap();
    assert!((w.exponent - (0.5 - 1.6)).abs() < 1e-15);
    assert!(w.n_min.is_none() && !w.contains(8.0));
    let w = cooling_window_for(10.0, 2.0, 8.0, Temperatures { hot: 40.0, cold: 9.0 }).unwrap();
    assert!(w.exponent < 0.0 && w.n_min.is_none());
    let w = cooling_window_for(10.0, 6.0, 4.0, Temperatures { hot: 40.0, cold: 9.0 }).unwrap();
    assert!(w.exponent < 0.0);
    let w = cooling_window_for(10.0, 2.0, 8.0, Temperatures { hot: 1e15, cold: 5.0 }).unwrap();
    assert!(w.omega_minus_max < 1e-13);
    // Inside the window the exponent is positive, and conversely.
    let t = Temperatures { hot: 8.0, cold: 6.0 };
    let w = cooling_window_for(10.0, 3.0, 7.0, t).unwrap();
    assert_eq!(w.contains(7.0), w.exponent > 0.0);
    assert!(cooling_window_for(10.0, 3.0, 7.0, Temperatures { hot: 1.0, cold: 2.0 }).is_err());
}

#[test]
fn critical_temperature_examples() {
    let c = critical_temperature_for(10.0, 3.0, 7.0, Temperatures { hot: 8.0, cold: 6.0 });
    assert!((c.value - 36.0).abs() < 1e-9, "{}", c.value);
    assert!(c.note.is_none());
    let lim = critical_temperature_for(10.0, 10.0, 0.0, Temperatures { hot: 8.0, cold: 6.0 });
    assert!((lim.value - 8.0).abs() < 1e-12);
    // Upper edge of the window: ω₋ = ω₀ T_C / T_H.
    let edge = critical_temperature_for(10.0, 2.5, 7.5, Temperatures { hot: 8.0, cold: 6.0 });
    assert!(edge.value.is_infinite() && edge.note.is_some());
    let neg = critical_temperature_for(10.0, 1.0, 9.0, Temperatures { hot: 8.0, cold: 6.0 });
    assert!(neg.value < 0.0 && neg.note.is_some());
}

fn fridge_like_config() -> MachineConfig {
    let flat = |l, t, a| BathSpec::new(l, t, SpectrumShape::Flat { amplitude: a, cutoff: None }, None).unwrap();
    MachineConfig::new(1.0, 0.6, 0.05, Coupling::Dispersive, flat(BathLabel::Hot, 0.32, 0.1), flat(BathLabel::Cold, 0.2, 0.1), 10)
        .unwrap()
}

#[test]
fn cold_current_threshold_brackets() {
    let cfg = fridge_like_config();
    let w = cooling_window(&cfg).unwrap();
    let n_min = w.n_min.unwrap();
    assert!(cold_current_threshold_at(n_min, &cfg).bracket.abs() < 1e-14);
    assert_eq!(cold_current_threshold_at(2.0 * n_min, &cfg).sign, 1);
    assert_eq!(cold_current_threshold_at(0.5 * n_min, &cfg).sign, -1);
    let st = PistonState::Analytic { family: AnalyticFamily::Thermal { nbar: 2.0 * n_min }, t: 0.0 };
    assert_eq!(cold_current_threshold(&st, &cfg).sign, 1);
}

#[test]
fn maser_limit_examples() {
    let (w0, nu) = (1.0, 0.4);
    let wp = w0 + nu;
    let hot = BathSpec::new(
        BathLabel::Hot,
        1.0,
        SpectrumShape::Tabulated { omega: vec![wp - 0.1, wp, wp + 0.1], value: vec![0.0, 0.2, 0.0] },
        None,
    )
    .unwrap();
    let cold = BathSpec::new(
        BathLabel::Cold,
        0.2,
        SpectrumShape::Tabulated { omega: vec![w0 - 0.1, w0, w0 + 0.1], value: vec![0.0, 0.5, 0.0] },
        None,
    )
    .unwrap();
    let cfg = MachineConfig::new(w0, nu, 0.05, Coupling::Dispersive, hot, cold, 10).unwrap();
    let m = maser_limit(&cfg, 9.0).unwrap();
    assert_eq!(m.eta, nu / wp);
    assert!(((m.power / m.j_hot) - nu / wp).abs() < 1e-12);
    assert!(m.gamma < 0.0);
    // Balanced Boltzmann factors: T_H chosen so e^{−ω₊/T_H} = e^{−ω₀/T_C}.
    let balanced = MachineConfig { hot: cfg.hot.with_temperature(0.2 * wp / w0).unwrap(), ..cfg.clone() };
    assert!(maser_limit(&balanced, 1.0).unwrap().gamma.abs() < 1e-15);
    // Overlapping spectra are rejected.
    assert!(maser_limit(&fridge_like_config(), 1.0).is_err());
}

#[test]
fn efficiency_and_cop_reports() {
    let t = Temperatures { hot: 2.0, cold: 1.0 };
    let mut r = ThermoRecord {
        t: 0.0,
        energy: 1.0,
        entropy: 0.1,
        t_eff: 0.3,
        ergotropy: 0.5,
        w_bound: 0.6,
        j_hot: 1.0,
        j_cold: -0.5,
        power_max: 0.6,
        eta_max: 0.6,
        cop: f64::NAN,
        spohn_residual: 0.0,
        regime: Regime::Engine,
        energy_rate: 0.7,
        entropy_rate: 0.1,
        n_mean: 1.0,
        pure: false,
        fd_flag: false,
    };
    let e = engine_efficiency(&r, t).unwrap();
    assert!(e.above_carnot && e.tp_bound == Some(0.85) && e.within_tp_bound);
    r.power_max = -0.1;
    assert!(matches!(engine_efficiency(&r, t), Err(qpiston_core::Error::Regime(_))));
    assert!(refrigeration_cop(&r, t).is_err());
    // Nonpassive piston spending energy while its entropy grows: bracket > 1.
    r.j_cold = 0.3;
    r.energy_rate = -0.2;
    r.entropy_rate = 0.05;
    let c = refrigeration_cop(&r, t).unwrap();
    assert!(c.bound > t.carnot_cop() && c.exceeds_carnot);
    // Thermalized piston at T_P: the bound reduces to the absorption form.
    r.t_eff = 4.0;
    r.entropy_rate = r.energy_rate / r.t_eff;
    let c = refrigeration_cop(&r, t).unwrap();
    assert!((c.bound - c.absorption_bound.unwrap()).abs() < 1e-14);
}

#[test]
fn unitary_work_identity() {
    let n = 60;
    let h = number_h(1.0, n);
    let vac = AnalyticFamily::Thermal { nbar: 0.0 }.density(n).unwrap();
    let id = unitary_work_identity_check(&vac, &CMat::identity(n, n), &h).unwrap();
    assert_eq!((id.delta_e, id.delta_s), (0.0, 0.0));
    let a = C64::new(0.8, 0.3);
    let b = fock_annihilation(n);
    let disp = expm(&(b.adjoint() * a - &b * a.conj()));
    let rep = unitary_work_identity_check(&vac, &disp, &h).unwrap();
    assert!((rep.delta_e - a.norm_sqr()).abs() < 1e-10 && rep.entropy_preserved);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = 5;
    let dd = HilbertDims::piston(d).unwrap();
    for _ in 0..100 {
        let rho = DensityOperator::new(dd, random_density(&mut rng, d)).unwrap();
        let g = CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let u = expm(&(&g - g.adjoint()));
        let rep = unitary_work_identity_check(&rho, &u, &number_h(1.0, d)).unwrap();
        assert!(rep.delta_s.abs() <= 1e-8);
    }
}

#[test]
fn regime_classification() {
    assert_eq!(classify(Some(-0.1), 1.0, -0.5, 0.2, 0.1, 0.3, 1.0), Regime::Engine);
    assert_eq!(classify(Some(0.1), 1.0, -0.5, 0.2, 0.1, 0.3, 1.0), Regime::Idle);
    assert_eq!(classify(Some(0.1), -1.0, 0.5, -0.2, -0.1, 0.3, 1.0), Regime::Refrigerator);
    assert_eq!(classify(Some(0.1), 1.0, 0.5, -0.2, -0.1, 0.0, 1.0), Regime::Absorption);
}

#[test]
fn csv_rows_follow_column_order() {
    let recs = piston_records(AnalyticFamily::Fock { n: 1 }, rates(0.1, 0.02), 1.0, 20, &[0.0, 1.0]);
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &[("backend".into(), "reduced".into())], &recs, 1.0).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("# backend=reduced"));
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.next().unwrap().split(',').count(), 13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn ergotropy_below_gibbs_bound(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 40;
        let k = 4;
        let dims = HilbertDims::piston(n).unwrap();
        // Random state on the lowest k levels.
        let small = random_density(&mut rng, k);
        let m = CMat::from_fn(n, n, |i, j| if i < k && j < k { small[(i, j)] } else { ZERO });
        let rho = DensityOperator::new(dims, m).unwrap();
        let nu = 1.0;
        let (w, _) = ergotropy(&rho, &number_h(nu, n)).unwrap();
        let t = effective_temperature(&rho, nu).unwrap();
        let e = nu * fock_moments(&rho).1;
        prop_assert!(w >= -1e-12);
        prop_assert!(w <= e - nu * t.nbar + 1e-9);
    }
}
