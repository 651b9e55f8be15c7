//! Full TLS + piston master equation in the dressed basis, heat currents and
//! the two-timescale reduction to the piston.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bath::{response, BathLabel, BathSpec, CombinationFrequencies};
use crate::error::{Error, Result};
use crate::operators::{
    dressed_hamiltonian, fock_annihilation, kron, partial_trace_piston, trace_out_tls, trace_product, CMat,
    DensityOperator, HilbertDims, ZERO,
};
use crate::superop::{evolve_collect, evolve_with, EvolveOptions, EvolveStats, SuperopBuilder, Superoperator};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Coupling {
    Dispersive,
    /// Resonant coupling with detuning δ = ω₀ − ν.
    SpinBoson { delta: f64 },
}

pub const MAX_G_OVER_NU: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub omega0: f64,
    pub nu: f64,
    pub g: f64,
    pub coupling: Coupling,
    pub hot: BathSpec,
    pub cold: BathSpec,
    pub dims: HilbertDims,
}

impl MachineConfig {
    pub fn new(
        omega0: f64,
        nu: f64,
        g: f64,
        coupling: Coupling,
        hot: BathSpec,
        cold: BathSpec,
        fock_cutoff: usize,
    ) -> Result<Self> {
        let cfg = Self { omega0, nu, g, coupling, hot, cold, dims: HilbertDims::tls_piston(fock_cutoff)? };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = |m: String| Err(Error::Param(m));
        if !(self.omega0 > 0.0 && self.nu > 0.0 && self.g > 0.0) {
            return p("omega0, nu and g must be positive".into());
        }
        if self.g / self.nu > MAX_G_OVER_NU {
            return p(format!("g/nu = {:.4} exceeds {MAX_G_OVER_NU}", self.g / self.nu));
        }
        if self.hot.label() != BathLabel::Hot || self.cold.label() != BathLabel::Cold {
            return p("bath labels must be (H, C)".into());
        }
        if self.dims.fock_cutoff() < 2 || !self.dims.has_tls() {
            return p("machine space needs a TLS and at least two Fock levels".into());
        }
        if let Coupling::SpinBoson { delta } = self.coupling {
            if delta == 0.0 || !delta.is_finite() {
                return p("spin_boson detuning must be finite and nonzero".into());
            }
        }
        if !(self.omega_minus() > 0.0) {
            return p(format!("omega_minus = {} must be positive", self.omega_minus()));
        }
        Ok(())
    }

    pub fn omega_plus(&self) -> f64 {
        match self.coupling {
            Coupling::Dispersive => self.omega0 + self.nu,
            Coupling::SpinBoson { delta } => self.nu + self.g * self.g / (4.0 * delta),
        }
    }

    pub fn omega_minus(&self) -> f64 {
        match self.coupling {
            Coupling::Dispersive => self.omega0 - self.nu,
            Coupling::SpinBoson { delta } => self.nu - self.g * self.g / (4.0 * delta),
        }
    }

    pub fn frequencies(&self) -> CombinationFrequencies {
        CombinationFrequencies { omega0: self.omega0, omega_plus: self.omega_plus(), omega_minus: self.omega_minus() }
    }

    pub fn bath(&self, label: BathLabel) -> &BathSpec {
        match label {
            BathLabel::Hot => &self.hot,
            BathLabel::Cold => &self.cold,
        }
    }

    /// G_H + G_C.
    pub fn total_response(&self, omega: f64) -> f64 {
        response(&self.hot, omega) + response(&self.cold, omega)
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        let mut c = self.clone();
        c.dims = HilbertDims::tls_piston(fock_cutoff)?;
        c.validate()?;
        Ok(c)
    }
}

/// One Lindblad term rate·D[jump] labelled by harmonic and bath.
#[derive(Clone, Debug)]
pub struct HarmonicTerm {
    pub q: i8,
    pub bath: BathLabel,
    pub rate: f64,
    pub jump: CMat,
    pub label: &'static str,
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    dims: HilbertDims,
    hamiltonian: CMat,
    terms: Vec<HarmonicTerm>,
    generator: Superoperator,
    heat_hot: CMat,
    heat_cold: CMat,
}

impl Liouvillian {
    /// Generator −i[H,·] + Σ rate·D[jump] from explicit parts.
    pub fn from_parts(dims: HilbertDims, hamiltonian: CMat, terms: Vec<HarmonicTerm>) -> Result<Self> {
        let d = dims.dim();
        if hamiltonian.nrows() != d || terms.iter().any(|t| t.jump.nrows() != d) {
            return Err(Error::DimMismatch { expected: d, got: hamiltonian.nrows() });
        }
        let mut b = SuperopBuilder::new(d);
        b.add_hamiltonian(&hamiltonian);
        for t in &terms {
            b.add_dissipator(t.rate, &t.jump);
        }
        let generator = b.build();
        let heat = |label: BathLabel| {
            let mut q = CMat::zeros(d, d);
            for t in terms.iter().filter(|t| t.bath == label && t.rate != 0.0) {
                let jd = t.jump.adjoint();
                let m = &jd * &t.jump;
                q += (&jd * &hamiltonian * &t.jump - (&m * &hamiltonian + &hamiltonian * &m).scale(0.5)).scale(t.rate);
            }
            q
        };
        let heat_hot = heat(BathLabel::Hot);
        let heat_cold = heat(BathLabel::Cold);
        Ok(Self { dims, hamiltonian, terms, generator, heat_hot, heat_cold })
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn terms(&self) -> &[HarmonicTerm] {
        &self.terms
    }

    pub fn generator(&self) -> &Superoperator {
        &self.generator
    }

    /// dρ/dt.
    pub fn apply(&self, rho: &CMat) -> CMat {
        self.generator.apply(rho)
    }

    /// Σ rate (J†HJ − ½{J†J, H}) over the bath's terms, so that 𝒥 = Tr(Qρ).
    pub fn heat_operator(&self, bath: BathLabel) -> &CMat {
        match bath {
            BathLabel::Hot => &self.heat_hot,
            BathLabel::Cold => &self.heat_cold,
        }
    }

    /// Generator restricted to one bath's dissipators (no Hamiltonian part).
    pub fn bath_part(&self, bath: BathLabel) -> Superoperator {
        let mut b = SuperopBuilder::new(self.dims.dim());
        for t in self.terms.iter().filter(|t| t.bath == bath) {
            b.add_dissipator(t.rate, &t.jump);
        }
        b.build()
    }
}

/// Dressed-basis Lindblad generator for the dispersive machine.
pub fn build_liouvillian(cfg: &MachineConfig) -> Result<Liouvillian> {
    cfg.validate()?;
    if cfg.coupling != Coupling::Dispersive {
        return Err(Error::Unsupported(
            "the full S+P generator exists only for dispersive coupling; use the reduced backend".into(),
        ));
    }
    let dims = cfg.dims;
    let n = dims.fock_cutoff();
    let h = dressed_hamiltonian(cfg.omega0, cfg.nu, cfg.g, dims)?.into_matrix();
    let b = fock_annihilation(n);
    let bd = b.adjoint();
    let id = CMat::identity(n, n);
    let sm2 = CMat::from_row_slice(2, 2, &[ZERO, ZERO, C64::from(1.0), ZERO]);
    let sp2 = sm2.adjoint();
    let sm = kron(&sm2, &id);
    let sp = kron(&sp2, &id);
    let s1 = kron(&sm2, &b); // σ̃₋b
    let s1d = kron(&sp2, &bd); // σ̃₊b†
    let sm1 = kron(&sm2, &bd); // σ̃₋b†
    let sm1d = kron(&sp2, &b); // σ̃₊b
    let k2 = (cfg.g / cfg.nu).powi(2);
    let (w0, wp, wm) = (cfg.omega0, cfg.omega_plus(), cfg.omega_minus());
    let mut terms = Vec::with_capacity(12);
    for label in [BathLabel::Hot, BathLabel::Cold] {
        let bath = cfg.bath(label);
        let g = |w: f64| response(bath, w);
        terms.push(HarmonicTerm { q: 0, bath: label, rate: g(w0), jump: sm.clone(), label: "sigma_minus" });
        terms.push(HarmonicTerm { q: 0, bath: label, rate: g(-w0), jump: sp.clone(), label: "sigma_plus" });
        terms.push(HarmonicTerm { q: 1, bath: label, rate: k2 * g(wp), jump: s1.clone(), label: "sigma_minus_b" });
        terms.push(HarmonicTerm { q: 1, bath: label, rate: k2 * g(-wp), jump: s1d.clone(), label: "sigma_plus_bdag" });
        terms.push(HarmonicTerm { q: -1, bath: label, rate: k2 * g(wm), jump: sm1.clone(), label: "sigma_minus_bdag" });
        terms.push(HarmonicTerm { q: -1, bath: label, rate: k2 * g(-wm), jump: sm1d.clone(), label: "sigma_plus_b" });
    }
    Liouvillian::from_parts(dims, h, terms)
}

/// 𝒥_j = Σ_q Tr(H 𝓛_q^j ρ); positive when heat enters the machine from bath j.
pub fn heat_current(l: &Liouvillian, rho: &DensityOperator, bath: BathLabel) -> f64 {
    trace_product(l.heat_operator(bath), rho.matrix()).re
}

pub fn evolve(l: &Liouvillian, rho0: &DensityOperator, t_grid: &[f64]) -> Result<Vec<DensityOperator>> {
    Ok(evolve_collect(l.generator(), rho0, t_grid, EvolveOptions::default())?.0)
}

pub fn evolve_visit<F>(l: &Liouvillian, rho0: &DensityOperator, t_grid: &[f64], opts: EvolveOptions, visit: F) -> Result<EvolveStats>
where
    F: FnMut(usize, f64, &DensityOperator) -> Result<()>,
{
    evolve_with(l.generator(), rho0, t_grid, opts, visit)
}

/// (ρ₁₁, ρ₀₀) of the TLS under the ω₀ channel of both baths.
pub fn tls_steady_populations(cfg: &MachineConfig) -> Result<(f64, f64)> {
    let down = cfg.total_response(cfg.omega0);
    let up = cfg.total_response(-cfg.omega0);
    let total = down + up;
    if !(total > 0.0) {
        return Err(Error::NoThermalization);
    }
    Ok((up / total, down / total))
}

/// Drift Γ (> 0 loss, < 0 gain) and diffusion D of the reduced piston dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub gamma: f64,
    pub dee: f64,
}

impl RatePair {
    pub fn new(gamma: f64, dee: f64) -> Result<Self> {
        if !(dee >= 0.0) || !gamma.is_finite() || !dee.is_finite() {
            return Err(Error::Param(format!("rates need finite gamma and dee >= 0, got ({gamma}, {dee})")));
        }
        Ok(Self { gamma, dee })
    }

    /// Added thermal occupation d(t) = (D/Γ)(1 − e^{−Γt}), Dt when Γ = 0.
    pub fn added_noise(&self, t: f64) -> f64 {
        if self.gamma == 0.0 {
            self.dee * t
        } else {
            -self.dee * (-self.gamma * t).exp_m1() / self.gamma
        }
    }

    /// Downward and upward piston rates (Γ + D, D).
    pub fn ladder_rates(&self) -> (f64, f64) {
        (self.gamma + self.dee, self.dee)
    }
}

pub fn reduce_to_piston(cfg: &MachineConfig) -> Result<RatePair> {
    let (r11, r00) = tls_steady_populations(cfg)?;
    let k2 = (cfg.g / cfg.nu).powi(2);
    let (wp, wm) = (cfg.omega_plus(), cfg.omega_minus());
    let g = |w: f64| cfg.total_response(w);
    let gamma = k2 * ((g(wp) - g(wm)) * r11 + (g(-wm) - g(-wp)) * r00);
    let dee = k2 * (g(wm) * r11 + g(-wp) * r00);
    RatePair::new(gamma, dee.max(0.0))
}

/// Net TLS-up flux through the (+, −) sidebands of one bath at occupation ⟨n⟩.
fn sideband_up_flux(cfg: &MachineConfig, bath: &BathSpec, p1: f64, p0: f64, n_mean: f64) -> (f64, f64) {
    let k2 = (cfg.g / cfg.nu).powi(2);
    let (wp, wm) = (cfg.omega_plus(), cfg.omega_minus());
    let g = |w: f64| response(bath, w);
    let plus = k2 * (g(-wp) * p0 * (n_mean + 1.0) - g(wp) * p1 * n_mean);
    let minus = k2 * (g(-wm) * p0 * n_mean - g(wm) * p1 * (n_mean + 1.0));
    (plus, minus)
}

/// TLS populations (excited, ground) with zero net flux through all channels,
/// the piston held at mean occupation ⟨n⟩. Dispersive coupling only.
pub fn tls_conditional_populations(cfg: &MachineConfig, n_mean: f64) -> Result<(f64, f64)> {
    if cfg.coupling != Coupling::Dispersive {
        return Err(Error::Unsupported("sideband balance needs dispersive coupling".into()));
    }
    let (p1, p0) = tls_steady_populations(cfg)?;
    let up_side = |p1: f64, p0: f64| {
        let (hp, hm) = sideband_up_flux(cfg, &cfg.hot, p1, p0, n_mean);
        let (cp, cm) = sideband_up_flux(cfg, &cfg.cold, p1, p0, n_mean);
        hp + hm + cp + cm
    };
    // The sideband flux is linear in the shift δ, so balance it exactly.
    let u0 = up_side(p1, p0);
    let slope = up_side(p1 + 1.0, p0 - 1.0) - u0;
    let g0 = cfg.total_response(cfg.omega0) + cfg.total_response(-cfg.omega0);
    let delta = u0 / (g0 - slope);
    Ok((p1 + delta, p0 - delta))
}

/// Per-bath heat currents of the reduced model at mean occupation ⟨n⟩.
///
/// The TLS sits at its ω₀ steady state shifted so that the net sideband flux is
/// compensated by the ω₀ channel. Dispersive coupling only.
pub fn reduced_heat_currents(cfg: &MachineConfig, n_mean: f64) -> Result<(f64, f64)> {
    let (q1, q0) = tls_conditional_populations(cfg, n_mean)?;
    let (w0, wp, wm) = (cfg.omega0, cfg.omega_plus(), cfg.omega_minus());
    let (hp, hm) = sideband_up_flux(cfg, &cfg.hot, q1, q0, n_mean);
    let (cp, cm) = sideband_up_flux(cfg, &cfg.cold, q1, q0, n_mean);
    let zero = |bath: &BathSpec| response(bath, -w0) * q0 - response(bath, w0) * q1;
    let j_hot = w0 * zero(&cfg.hot) + wp * hp + wm * hm;
    let j_cold = w0 * zero(&cfg.cold) + wp * cp + wm * cm;
    Ok((j_hot, j_cold))
}

/// Trace distance between ρ and the product of its marginals.
pub fn correlation_distance(rho: &DensityOperator) -> Result<f64> {
    let dims = rho.dims();
    if !dims.has_tls() {
        return Err(Error::Dims("needs TLS⊗piston state".into()));
    }
    let n = dims.fock_cutoff();
    let rp = trace_out_tls(rho.matrix(), n);
    let rs = partial_trace_piston(rho.matrix(), n);
    Ok(crate::operators::trace_distance(rho.matrix(), &kron(&rs, &rp)))
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"QPSTCKP1";

/// Writes header (magic, config hash, N, has_tls, t) and row-major complex
/// entries as little-endian f64 pairs.
pub fn write_checkpoint<W: Write>(w: &mut W, config_hash: &[u8; 32], t: f64, rho: &DensityOperator) -> Result<()> {
    let dims = rho.dims();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(config_hash)?;
    w.write_all(&(dims.fock_cutoff() as u64).to_le_bytes())?;
    w.write_all(&[dims.has_tls() as u8])?;
    w.write_all(&t.to_le_bytes())?;
    let m = rho.matrix();
    for i in 0..dims.dim() {
        for j in 0..dims.dim() {
            w.write_all(&m[(i, j)].re.to_le_bytes())?;
            w.write_all(&m[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config_hash: [u8; 32],
    pub t: f64,
    pub rho: DensityOperator,
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse("not a checkpoint file".into()));
    }
    let mut config_hash = [0u8; 32];
    r.read_exact(&mut config_hash)?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let dims = if flag[0] == 1 { HilbertDims::tls_piston(n)? } else { HilbertDims::piston(n)? };
    let d = dims.dim();
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(Checkpoint { config_hash, t, rho: DensityOperator::new(dims, m)? })
}
