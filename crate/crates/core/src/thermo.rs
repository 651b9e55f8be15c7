//! Thermodynamic accounting: ergotropy, effective temperature, power,
//! efficiency and COP bounds, cooling conditions and closed forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bath::{response, spectral_separation_report};
use crate::error::{Error, Result};
use crate::lindblad::{tls_steady_populations, MachineConfig, RatePair};
use crate::operators::{
    eigh, eigh_unchecked, entropy_of_eigenvalues, hermitize, trace_product, CMat, DensityOperator, EIG_FLOOR, ZERO,
};
use crate::phase_space::{AnalyticFamily, PistonState};
use crate::superop::AUDIT_LIMIT;
use num_complex::Complex64 as C64;

fn is_diagonal(h: &CMat) -> bool {
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            if i != j && h[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Energy eigenbasis sorted ascending (ties keep index order).
fn energy_basis(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    if is_diagonal(h) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| h[(a, a)].re.total_cmp(&h[(b, b)].re).then(a.cmp(&b)));
        let e = order.iter().map(|&k| h[(k, k)].re).collect();
        let mut v = CMat::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            v[(k, col)] = C64::from(1.0);
        }
        return Ok((e, v));
    }
    let s = eigh(h)?;
    Ok((s.eigenvalues, s.eigenvectors))
}

/// Maximal unitary work W = Tr(Hρ) − Tr(Hρ̃) and the passive companion ρ̃.
pub fn ergotropy(rho: &DensityOperator, h: &CMat) -> Result<(f64, DensityOperator)> {
    let n = rho.dims().dim();
    if h.nrows() != n {
        return Err(Error::DimMismatch { expected: n, got: h.nrows() });
    }
    let (energies, ebasis) = energy_basis(h)?;
    let s = eigh_unchecked(rho.matrix());
    let mut order: Vec<usize> = (0..n).collect();
    let hv = |k: usize| -> f64 {
        let v = s.eigenvectors.column(k);
        (v.adjoint() * h * v)[(0, 0)].re
    };
    let exp_e: Vec<f64> = (0..n).map(hv).collect();
    order.sort_by(|&a, &b| {
        s.eigenvalues[b].total_cmp(&s.eigenvalues[a]).then(exp_e[a].total_cmp(&exp_e[b]))
    });
    let mut passive = CMat::zeros(n, n);
    let mut e_passive = 0.0;
    for (slot, &k) in order.iter().enumerate() {
        let r = s.eigenvalues[k].max(0.0);
        e_passive += r * energies[slot];
        let v = ebasis.column(slot);
        passive += (v * v.adjoint()) * C64::from(r);
    }
    let tr = passive.trace().re;
    let energy = trace_product(h, rho.matrix()).re;
    let work = energy - e_passive / tr;
    Ok((work, DensityOperator::new(rho.dims(), hermitize(&passive.unscale(tr)))?))
}

/// S of a thermal oscillator with occupation n̄.
pub fn thermal_entropy(nbar: f64) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    (nbar + 1.0) * (nbar + 1.0).ln() - nbar * nbar.ln()
}

/// Occupation of the thermal state with entropy S, by bisection.
pub fn thermal_occupation_for_entropy(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while thermal_entropy(hi) < s {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if thermal_entropy(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveTemperature {
    /// Zero for pure states.
    pub t_p: f64,
    pub nbar: f64,
    pub pure: bool,
}

/// Entropy below which a state counts as pure.
pub const PURE_ENTROPY: f64 = 1e-12;

/// Occupation at which N levels hold a thermal state with top population 1e-6.
fn representable_nbar(cutoff: usize) -> f64 {
    let top = |nb: f64| (nb / (nb + 1.0)).powi(cutoff as i32 - 1) / (nb + 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    while top(hi) < AUDIT_LIMIT {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if top(mid) < AUDIT_LIMIT {
            lo = mid
        } else {
            hi = mid
        }
    }
    lo
}

fn cutoff_for_nbar(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 2;
    }
    let q = nbar / (nbar + 1.0);
    (1.0 + (AUDIT_LIMIT * (nbar + 1.0)).ln() / q.ln()).ceil() as usize + 1
}

pub fn effective_temperature_from_entropy(s: f64, nu: f64, cutoff: usize) -> Result<EffectiveTemperature> {
    if s < PURE_ENTROPY {
        return Ok(EffectiveTemperature { t_p: 0.0, nbar: 0.0, pure: true });
    }
    let nbar = thermal_occupation_for_entropy(s);
    if nbar > representable_nbar(cutoff) {
        return Err(Error::EntropyTooLarge { entropy: s, cutoff, suggested: cutoff_for_nbar(nbar) });
    }
    Ok(EffectiveTemperature { t_p: nu / (1.0 + 1.0 / nbar).ln(), nbar, pure: false })
}

/// T_P of the oscillator Gibbs state with the same entropy as ρ_P.
pub fn effective_temperature(rho: &DensityOperator, nu: f64) -> Result<EffectiveTemperature> {
    if rho.dims().has_tls() {
        return Err(Error::Dims("effective temperature needs a piston state".into()));
    }
    let s = entropy_of_eigenvalues(&rho.eigenvalues());
    effective_temperature_from_entropy(s, nu, rho.dims().fock_cutoff())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Engine,
    Refrigerator,
    Absorption,
    Idle,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Engine => "engine",
            Regime::Refrigerator => "refrigerator",
            Regime::Absorption => "absorption",
            Regime::Idle => "idle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Temperatures {
    pub hot: f64,
    pub cold: f64,
}

impl Temperatures {
    pub fn carnot(&self) -> f64 {
        1.0 - self.cold / self.hot
    }

    pub fn carnot_cop(&self) -> f64 {
        self.cold / (self.hot - self.cold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermoRecord {
    pub t: f64,
    pub energy: f64,
    pub entropy: f64,
    pub t_eff: f64,
    pub ergotropy: f64,
    pub w_bound: f64,
    pub j_hot: f64,
    pub j_cold: f64,
    pub power_max: f64,
    pub eta_max: f64,
    pub cop: f64,
    pub spohn_residual: f64,
    pub regime: Regime,
    pub energy_rate: f64,
    pub entropy_rate: f64,
    pub n_mean: f64,
    pub pure: bool,
    /// Finite-difference cross-check disagreed by more than 1%.
    pub fd_flag: bool,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "t",
    "energy",
    "entropy",
    "t_eff",
    "ergotropy",
    "w_bound",
    "j_hot",
    "j_cold",
    "power_max",
    "eta_max",
    "cop",
    "spohn_residual",
    "regime",
];

/// Absolute slack for the record invariants.
pub const RECORD_TOL: f64 = 1e-9;

impl ThermoRecord {
    pub fn validate(&self, nu: f64) -> Result<()> {
        let tol = RECORD_TOL * nu.max(self.energy.abs());
        if self.ergotropy < -tol {
            return Err(Error::InvalidState(format!("negative ergotropy {} at t={}", self.ergotropy, self.t)));
        }
        if self.w_bound < self.ergotropy - tol {
            return Err(Error::InvalidState(format!(
                "ergotropy {} above Gibbs bound {} at t={}",
                self.ergotropy, self.w_bound, self.t
            )));
        }
        if !self.pure && !(self.t_eff > 0.0) {
            return Err(Error::InvalidState(format!("mixed state with T_P = {} at t={}", self.t_eff, self.t)));
        }
        Ok(())
    }

    pub fn csv_row(&self) -> String {
        let f = |x: f64| format!("{x:.12e}");
        [
            f(self.t),
            f(self.energy),
            f(self.entropy),
            f(self.t_eff),
            f(self.ergotropy),
            f(self.w_bound),
            f(self.j_hot),
            f(self.j_cold),
            f(self.power_max),
            f(self.eta_max),
            f(self.cop),
            f(self.spohn_residual),
            self.regime.name().to_string(),
        ]
        .join(",")
    }
}

pub fn write_records_csv<W: Write>(w: &mut W, meta: &[(String, String)], records: &[ThermoRecord], nu: f64) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        r.validate(nu)?;
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Piston quantities at one instant, from the state and its time derivative.
#[derive(Clone, Debug)]
pub struct Snapshot<'a> {
    pub t: f64,
    pub rho_p: &'a DensityOperator,
    pub drho_p: &'a CMat,
    pub j_hot: f64,
    pub j_cold: f64,
    pub gamma: Option<f64>,
}

pub fn classify(gamma: Option<f64>, j_hot: f64, j_cold: f64, energy_rate: f64, power_max: f64, ergotropy: f64, nu: f64) -> Regime {
    let scale = j_hot.abs().max(j_cold.abs()).max(energy_rate.abs());
    let tiny = 1e-12 * scale;
    if j_cold > tiny && energy_rate < -tiny {
        if ergotropy > 1e-8 * nu {
            return Regime::Refrigerator;
        }
        return Regime::Absorption;
    }
    if j_hot > tiny && power_max > tiny && gamma.is_none_or(|g| g < 0.0) {
        return Regime::Engine;
    }
    Regime::Idle
}

/// Builds a record with exact instantaneous rates.
pub fn make_record(snap: &Snapshot, nu: f64, temps: Temperatures) -> Result<ThermoRecord> {
    let rho = snap.rho_p;
    let n = rho.dims().fock_cutoff();
    let spec = eigh_unchecked(rho.matrix());
    let entropy = entropy_of_eigenvalues(&spec.eigenvalues);
    // Ṡ = −Tr(ρ̇ ln ρ) in the eigenbasis of ρ.
    let v = &spec.eigenvectors;
    let rot = v.adjoint() * snap.drho_p * v;
    let entropy_rate: f64 = (0..n).map(|k| -rot[(k, k)].re * spec.eigenvalues[k].max(EIG_FLOOR).ln()).sum();
    let mut n_mean = 0.0;
    let mut n_rate = 0.0;
    for k in 0..n {
        n_mean += k as f64 * rho.matrix()[(k, k)].re;
        n_rate += k as f64 * snap.drho_p[(k, k)].re;
    }
    let energy = nu * n_mean;
    let energy_rate = nu * n_rate;
    let teff = effective_temperature_from_entropy(entropy, nu, n)?;
    let h = CMat::from_fn(n, n, |i, j| if i == j { C64::from(nu * i as f64) } else { ZERO });
    let (ergo, _) = ergotropy(rho, &h)?;
    let w_bound = energy - nu * teff.nbar;
    let power_max = energy_rate - teff.t_p * entropy_rate;
    let spohn_residual = entropy_rate - snap.j_hot / temps.hot - snap.j_cold / temps.cold;
    let regime = classify(snap.gamma, snap.j_hot, snap.j_cold, energy_rate, power_max, ergo, nu);
    let eta_max = if regime == Regime::Engine { power_max / snap.j_hot } else { f64::NAN };
    let cop = match regime {
        Regime::Refrigerator | Regime::Absorption => cop_bound(temps, entropy_rate, energy_rate),
        _ => f64::NAN,
    };
    Ok(ThermoRecord {
        t: snap.t,
        energy,
        entropy,
        t_eff: teff.t_p,
        ergotropy: ergo,
        w_bound,
        j_hot: snap.j_hot,
        j_cold: snap.j_cold,
        power_max,
        eta_max,
        cop,
        spohn_residual,
        regime,
        energy_rate,
        entropy_rate,
        n_mean,
        pure: teff.pure,
        fd_flag: false,
    })
}

/// (1/(T_H/T_C − 1))(1 − Ṡ T_H / (d⟨H⟩/dt)).
pub fn cop_bound(temps: Temperatures, entropy_rate: f64, energy_rate: f64) -> f64 {
    (1.0 - entropy_rate * temps.hot / energy_rate) / (temps.hot / temps.cold - 1.0)
}

/// Cross-checks Ṡ and d⟨H⟩/dt against centered differences of the recorded
/// series and flags records that disagree by more than 1%.
pub fn flag_finite_differences(records: &mut [ThermoRecord]) {
    let n = records.len();
    for i in 1..n.saturating_sub(1) {
        let dt = records[i + 1].t - records[i - 1].t;
        let fd_s = (records[i + 1].entropy - records[i - 1].entropy) / dt;
        let fd_e = (records[i + 1].energy - records[i - 1].energy) / dt;
        let off = |fd: f64, exact: f64| (fd - exact).abs() > 0.01 * exact.abs().max(fd.abs()).max(1e-300);
        records[i].fd_flag = off(fd_s, records[i].entropy_rate) || off(fd_e, records[i].energy_rate);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdPower {
    pub value: f64,
    /// Halving the stencil moved the value by more than 1%.
    pub flagged: bool,
}

/// 𝒫^Max = d⟨H⟩/dt − T_P dS/dt from centered differences around record i.
pub fn max_power(records: &[ThermoRecord], i: usize) -> Result<FdPower> {
    if i == 0 || i + 1 >= records.len() {
        return Err(Error::Param("max_power needs neighbours on both sides".into()));
    }
    let stencil = |k: usize| {
        let (a, b) = (&records[i - k], &records[i + k]);
        let dt = b.t - a.t;
        (b.energy - a.energy) / dt - records[i].t_eff * (b.entropy - a.entropy) / dt
    };
    let fine = stencil(1);
    let flagged = if i >= 2 && i + 2 < records.len() {
        let coarse = stencil(2);
        (coarse - fine).abs() > 0.01 * fine.abs().max(1e-300)
    } else {
        true
    };
    Ok(FdPower { value: fine, flagged })
}

/// ΔW = W(t_last) − W(t_0).
pub fn work_capacity_change(traj: &[ThermoRecord]) -> f64 {
    match (traj.first(), traj.last()) {
        (Some(a), Some(b)) => b.ergotropy - a.ergotropy,
        _ => 0.0,
    }
}

/// ΔW(t_k) = W(t_k) − W(t_0) for every record.
pub fn work_capacity_series(traj: &[ThermoRecord]) -> Vec<f64> {
    let w0 = traj.first().map_or(0.0, |r| r.ergotropy);
    traj.iter().map(|r| r.ergotropy - w0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub eta_max: f64,
    pub carnot: f64,
    /// 1 − T_P/T_H, applicable while T_P < T_C.
    pub tp_bound: Option<f64>,
    pub within_tp_bound: bool,
    pub above_carnot: bool,
}

pub fn engine_efficiency(record: &ThermoRecord, temps: Temperatures) -> Result<EfficiencyReport> {
    if !(record.j_hot > 0.0) || !(record.power_max > 0.0) {
        return Err(Error::Regime(format!(
            "efficiency needs J_H > 0 and P > 0 (J_H = {:.3e}, P = {:.3e})",
            record.j_hot, record.power_max
        )));
    }
    let eta = record.power_max / record.j_hot;
    let carnot = temps.carnot();
    let tp_bound = (record.t_eff < temps.cold).then(|| 1.0 - record.t_eff / temps.hot);
    Ok(EfficiencyReport {
        eta_max: eta,
        carnot,
        tp_bound,
        within_tp_bound: tp_bound.is_none_or(|b| eta <= b + 1e-6),
        above_carnot: eta > carnot,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CopReport {
    /// 𝒥_C / (−d⟨H⟩/dt).
    pub cop: f64,
    pub bound: f64,
    pub carnot: f64,
    pub absorption_bound: Option<f64>,
    pub exceeds_carnot: bool,
}

pub fn refrigeration_cop(record: &ThermoRecord, temps: Temperatures) -> Result<CopReport> {
    if !(record.j_cold > 0.0) || !(record.energy_rate < 0.0) {
        return Err(Error::Regime(format!(
            "COP needs J_C > 0 and d<H>/dt < 0 (J_C = {:.3e}, dE/dt = {:.3e})",
            record.j_cold, record.energy_rate
        )));
    }
    let bound = cop_bound(temps, record.entropy_rate, record.energy_rate);
    let carnot = temps.carnot_cop();
    let absorption_bound = (record.t_eff > 0.0).then(|| (1.0 - temps.hot / record.t_eff) / (temps.hot / temps.cold - 1.0));
    Ok(CopReport { cop: record.j_cold / -record.energy_rate, bound, carnot, absorption_bound, exceeds_carnot: bound > carnot })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoolingWindow {
    /// Cooling needs 0 < ω₋ < omega_minus_max.
    pub omega_minus_max: f64,
    pub exponent: f64,
    pub n_min: Option<f64>,
}

impl CoolingWindow {
    pub fn contains(&self, omega_minus: f64) -> bool {
        omega_minus > 0.0 && omega_minus < self.omega_minus_max
    }
}

pub fn cooling_window_for(omega0: f64, nu: f64, omega_minus: f64, temps: Temperatures) -> Result<CoolingWindow> {
    if !(temps.hot > temps.cold) {
        return Err(Error::Param("cooling window needs T_H > T_C".into()));
    }
    let omega_minus_max = nu / (temps.hot / temps.cold - 1.0);
    let exponent = omega0 / temps.hot - omega_minus / temps.cold;
    let n_min = (exponent > 0.0).then(|| 1.0 / exponent.exp_m1());
    Ok(CoolingWindow { omega_minus_max, exponent, n_min })
}

pub fn temperatures(cfg: &MachineConfig) -> Temperatures {
    Temperatures { hot: cfg.hot.temperature(), cold: cfg.cold.temperature() }
}

pub fn cooling_window(cfg: &MachineConfig) -> Result<CoolingWindow> {
    cooling_window_for(cfg.omega0, cfg.nu, cfg.omega_minus(), temperatures(cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalTemperature {
    pub value: f64,
    pub note: Option<String>,
}

pub fn critical_temperature_for(omega0: f64, nu: f64, omega_minus: f64, temps: Temperatures) -> CriticalTemperature {
    let den = 1.0 - (omega_minus / omega0) * (temps.hot / temps.cold);
    let num = temps.hot * nu / omega0;
    if den.abs() < 1e-12 {
        return CriticalTemperature {
            value: f64::INFINITY,
            note: Some("diverges: parameters sit on the upper edge of the cooling window".into()),
        };
    }
    let value = num / den;
    let note = (value < 0.0).then(|| "negative: outside the cooling window, no finite critical temperature".to_string());
    CriticalTemperature { value, note }
}

pub fn critical_temperature(cfg: &MachineConfig) -> CriticalTemperature {
    critical_temperature_for(cfg.omega0, cfg.nu, cfg.omega_minus(), temperatures(cfg))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ColdThreshold {
    pub sign: i8,
    pub bracket: f64,
}

/// Sign of e^{−ω₋/T_C}⟨n⟩ − e^{−ω₀/T_H}⟨n+1⟩.
pub fn cold_current_threshold(state: &PistonState, cfg: &MachineConfig) -> ColdThreshold {
    cold_current_threshold_at(state.moments().1, cfg)
}

pub fn cold_current_threshold_at(n_mean: f64, cfg: &MachineConfig) -> ColdThreshold {
    let t = temperatures(cfg);
    let bracket = (-cfg.omega_minus() / t.cold).exp() * n_mean - (-cfg.omega0 / t.hot).exp() * (n_mean + 1.0);
    let sign = if bracket > 0.0 {
        1
    } else if bracket < 0.0 {
        -1
    } else {
        0
    };
    ColdThreshold { sign, bracket }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyRate {
    pub t_p: f64,
    pub s_dot: f64,
}

fn log_ratio(n: f64) -> f64 {
    ((1.0 + n) / n).ln()
}

/// Closed-form T_P and Ṡ_P for coherent and thermal starts.
pub fn entropy_rate_closed_forms(family: &AnalyticFamily, rates: RatePair, nu: f64, t: f64) -> Result<EntropyRate> {
    let decay = (-rates.gamma * t).exp();
    let (nbar, drive) = match *family {
        AnalyticFamily::Coherent { .. } => (rates.added_noise(t), rates.dee),
        AnalyticFamily::Thermal { nbar } => (nbar * decay + rates.added_noise(t), rates.dee - rates.gamma * nbar),
        _ => return Err(Error::Unsupported(format!("no closed form for {}", family.name()))),
    };
    if nbar <= 0.0 {
        return Ok(EntropyRate { t_p: 0.0, s_dot: 0.0 });
    }
    let l = log_ratio(nbar);
    Ok(EntropyRate { t_p: nu / l, s_dot: drive * decay * l })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaserLimit {
    pub alpha0_sq: f64,
    pub j_hot: f64,
    pub power: f64,
    pub gamma: f64,
    pub eta: f64,
}

/// Semiclassical engine limit with C owning ω₀ and H owning ω₊.
pub fn maser_limit(cfg: &MachineConfig, alpha0_sq: f64) -> Result<MaserLimit> {
    let rep = spectral_separation_report(&cfg.hot, &cfg.cold, cfg.frequencies())?;
    if !rep.engine_ok() {
        return Err(Error::Regime("maser limit needs C dominant at omega0 and H dominant at omega_plus".into()));
    }
    let (_, rho00) = tls_steady_populations(cfg)?;
    let t = temperatures(cfg);
    let wp = cfg.omega_plus();
    let k2 = (cfg.g / cfg.nu).powi(2);
    let gh = response(&cfg.hot, wp);
    let bracket = (-wp / t.hot).exp() - (-cfg.omega0 / t.cold).exp();
    let gamma = -k2 * gh * rho00 * bracket;
    Ok(MaserLimit {
        alpha0_sq,
        j_hot: k2 * alpha0_sq * wp * gh * rho00 * bracket,
        power: -gamma * alpha0_sq * cfg.nu,
        gamma,
        eta: cfg.nu / wp,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitaryWorkReport {
    pub delta_s: f64,
    pub delta_e: f64,
    pub entropy_preserved: bool,
}

pub fn unitary_work_identity_check(rho: &DensityOperator, u: &CMat, h: &CMat) -> Result<UnitaryWorkReport> {
    let n = rho.dims().dim();
    if u.nrows() != n || h.nrows() != n {
        return Err(Error::DimMismatch { expected: n, got: u.nrows() });
    }
    let defect = (u.adjoint() * u - CMat::identity(n, n)).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if defect > 1e-8 {
        return Err(Error::Param(format!("U is not unitary (defect {defect:.2e})")));
    }
    let out = hermitize(&(u * rho.matrix() * u.adjoint()));
    let s0 = entropy_of_eigenvalues(&rho.eigenvalues());
    let s1 = entropy_of_eigenvalues(&eigh_unchecked(&out).eigenvalues);
    let delta_s = s1 - s0;
    let delta_e = trace_product(h, &out).re - trace_product(h, rho.matrix()).re;
    Ok(UnitaryWorkReport { delta_s, delta_e, entropy_preserved: delta_s.abs() <= 1e-8 })
}
