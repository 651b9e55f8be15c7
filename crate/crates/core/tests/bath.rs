use proptest::prelude::*;
use qpiston_core::bath::*;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Ei(x) for moderate x > 0 from its power series.
fn ei(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= x / k as f64;
        sum += term / k as f64;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

fn ohmic(amplitude: f64, cutoff: f64) -> SpectrumShape {
    SpectrumShape::OhmicExpCutoff { amplitude, cutoff }
}

fn flat(amplitude: f64, cutoff: Option<f64>) -> SpectrumShape {
    SpectrumShape::Flat { amplitude, cutoff }
}

#[test]
fn response_examples() {
    let b = BathSpec::new(BathLabel::Hot, 2.0, flat(0.3, None), None).unwrap();
    assert_eq!(response(&b, 1.7), 0.3);
    let o = BathSpec::new(BathLabel::Cold, 1.0, ohmic(1.0, 10.0), None).unwrap();
    assert!((response(&o, 10.0) - 10.0 * (-1.0f64).exp()).abs() < 1e-12);
    assert!((response(&o, 10.0) - 3.6788).abs() < 1e-4);
}

#[test]
fn bath_spec_rejects_bad_input() {
    assert!(BathSpec::new(BathLabel::Hot, 0.0, flat(1.0, None), None).is_err());
    assert!(BathSpec::new(BathLabel::Hot, 1.0, flat(-1.0, None), None).is_err());
    let unsorted = SpectrumShape::Tabulated { omega: vec![1.0, 0.5], value: vec![1.0, 1.0] };
    assert!(BathSpec::new(BathLabel::Hot, 1.0, unsorted, None).is_err());
}

#[test]
fn lamb_shift_of_ohmic_matches_closed_form() {
    // P∫ γx e^{−x/c}/(ω − x) dx = γ[−c + ω e^{−ω/c} Ei(ω/c)]
    for (c, w) in [(10.0f64, 5.0f64), (10.0, 1.0), (4.0, 2.5), (10.0, 15.0)] {
        let want = -c + w * (-w / c).exp() * ei(w / c);
        let got = lamb_shift(&ohmic(1.0, c), w).unwrap();
        assert!(((got - want) / want).abs() < 1e-6, "c={c} w={w}: {got} vs {want}");
    }
}

#[test]
fn lamb_shift_of_flat_with_cutoff_is_a_log() {
    // P∫₀^c γ/(ω − x) dx = γ ln(ω/(c − ω))
    let (g, c) = (0.7, 30.0);
    for w in [1.0f64, 12.0, 29.0] {
        let want = g * (w / (c - w)).ln();
        let got = lamb_shift(&flat(g, Some(c)), w).unwrap();
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "w={w}: {got} vs {want}");
    }
}

#[test]
fn lamb_shift_edge_cases() {
    assert_eq!(lamb_shift(&flat(0.0, Some(5.0)), 2.0).unwrap(), 0.0);
    assert!(lamb_shift(&flat(1.0, None), 2.0).is_err());
    // Narrow symmetric peak: odd kernel cancels at the center, sign flips through it.
    let lor = SpectrumShape::Lorentzian { amplitude: 1.0, center: 50.0, width: 0.1 };
    let at = lamb_shift(&lor, 50.0).unwrap();
    let below = lamb_shift(&lor, 49.9).unwrap();
    let above = lamb_shift(&lor, 50.1).unwrap();
    assert!(at.abs() < 1e-2 * below.abs(), "center shift {at} vs {below}");
    assert!(below < 0.0 && above > 0.0);
}

fn filtered_bath(base: SpectrumShape, omega_f: f64, gamma_f: f64) -> BathSpec {
    BathSpec::new(BathLabel::Hot, 3.0, base, Some(FilterSpec { omega_f, gamma_f })).unwrap()
}

#[test]
fn filtered_response_resonance_value() {
    let base = flat(0.05, Some(100.0));
    let b = filtered_bath(base.clone(), 20.0, 0.4);
    // Resonance: ω − ω_f − Δ_L(ω) = 0, found by bisection.
    let det = |w: f64| w - 20.0 - lamb_shift(&base, w).unwrap();
    let (mut lo, mut hi) = (15.0, 25.0);
    assert!(det(lo) < 0.0 && det(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if det(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    let res = 0.5 * (lo + hi);
    let val = filtered_response(&b, res).unwrap();
    assert!((val - 0.4 / std::f64::consts::PI).abs() < 1e-10, "{val}");
}

#[test]
fn filtered_peak_and_width() {
    let base = flat(0.01, Some(100.0));
    let b = filtered_bath(base.clone(), 20.0, 1.0);
    let step = 1e-4;
    let grid: Vec<f64> = (0..200_000).map(|k| 10.0 + k as f64 * step).collect();
    let vals: Vec<f64> = grid.iter().map(|&w| filtered_response(&b, w).unwrap()).collect();
    let (k, peak) = vals.iter().enumerate().fold((0, 0.0), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
    let wpk = grid[k];
    let shifted = 20.0 + lamb_shift(&base, wpk).unwrap();
    assert!((wpk - shifted).abs() <= 2.0 * step, "peak {wpk} vs {shifted}");
    let above: Vec<f64> = grid.iter().zip(&vals).filter(|(_, &v)| v >= 0.5 * peak).map(|(w, _)| *w).collect();
    let fwhm = above.last().unwrap() - above.first().unwrap();
    let want = 2.0 * std::f64::consts::PI * 0.01;
    assert!(((fwhm - want) / want).abs() < 0.1, "fwhm {fwhm} vs {want}");
}

#[test]
fn filtered_response_vanishes_where_base_does() {
    let b = filtered_bath(flat(0.1, Some(10.0)), 5.0, 1.0);
    assert_eq!(filtered_response(&b, 12.0).unwrap(), 0.0);
    let plain = BathSpec::new(BathLabel::Hot, 1.0, flat(0.1, Some(10.0)), None).unwrap();
    assert!(matches!(filtered_response(&plain, 1.0), Err(qpiston_core::Error::NoFilter)));
}

#[test]
fn separation_of_identical_baths_is_flagged() {
    let h = BathSpec::new(BathLabel::Hot, 2.0, flat(0.1, Some(50.0)), None).unwrap();
    let c = BathSpec::new(BathLabel::Cold, 2.0, flat(0.1, Some(50.0)), None).unwrap();
    let rep =
        spectral_separation_report(&h, &c, CombinationFrequencies { omega0: 5.0, omega_plus: 6.0, omega_minus: 4.0 })
            .unwrap();
    for r in rep.engine.iter().take(2).chain(rep.refrigerator.iter().take(1)) {
        assert_eq!(r.value, 1.0);
        assert!(r.weak);
    }
    assert!(!rep.engine_ok() && !rep.refrigerator_ok());
}

#[test]
fn tabulated_spectrum_from_text() {
    let s = SpectrumShape::from_table_text("0 0\n1 2\n2 0\n").unwrap();
    assert_eq!(s.eval(0.5), 1.0);
    assert_eq!(s.peak(), 2.0);
}

proptest! {
    #[test]
    fn detailed_balance(w in 0.01f64..40.0, t in 0.1f64..20.0, amp in 0.0f64..3.0) {
        for base in [ohmic(amp, 7.0), flat(amp, Some(50.0))] {
            let b = BathSpec::new(BathLabel::Cold, t, base, None).unwrap();
            let (pos, neg) = (response(&b, w), response(&b, -w));
            prop_assert!((neg - (-w / t).exp() * pos).abs() <= 1e-14 * pos.max(1e-300));
        }
    }

    #[test]
    fn filtered_response_nonnegative(w in -30.0f64..60.0) {
        let b = filtered_bath(ohmic(0.02, 20.0), 12.0, 0.5);
        prop_assert!(filtered_response(&b, w).unwrap() >= 0.0);
    }
}
