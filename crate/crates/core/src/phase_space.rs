//! Reduced piston dynamics: the drift-diffusion master equation, Gaussian
//! phase-space propagation and passivity tests on distributions.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::lindblad::RatePair;
use crate::operators::{fock_annihilation, trace_product, CMat, DensityOperator, HilbertDims, ZERO};
use crate::superop::{rk45_with, unvectorize, vectorize, Propagator, SuperopBuilder, Superoperator, AUDIT_LIMIT};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticFamily {
    Coherent { alpha_re: f64, alpha_im: f64 },
    Thermal { nbar: f64 },
    DisplacedThermal { alpha_re: f64, alpha_im: f64, nbar: f64 },
    Fock { n: usize },
    /// S(ξ)|0⟩ with ξ = r e^{iφ}, S(ξ) = exp[½(ξ*b² − ξb†²)].
    Squeezed { r: f64, phi: f64 },
    /// (|α⟩ + e^{iθ}|−α⟩), normalized including the overlap ⟨α|−α⟩.
    Cat { alpha_re: f64, alpha_im: f64, theta: f64 },
}

impl AnalyticFamily {
    pub fn coherent(alpha: C64) -> Self {
        Self::Coherent { alpha_re: alpha.re, alpha_im: alpha.im }
    }

    pub fn displaced_thermal(alpha: C64, nbar: f64) -> Self {
        Self::DisplacedThermal { alpha_re: alpha.re, alpha_im: alpha.im, nbar }
    }

    pub fn cat(alpha: C64, theta: f64) -> Self {
        Self::Cat { alpha_re: alpha.re, alpha_im: alpha.im, theta }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Coherent { .. } => "coherent",
            Self::Thermal { .. } => "thermal",
            Self::DisplacedThermal { .. } => "displaced_thermal",
            Self::Fock { .. } => "fock",
            Self::Squeezed { .. } => "squeezed",
            Self::Cat { .. } => "cat",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            Self::Coherent { alpha_re, alpha_im } => finite(&[alpha_re, alpha_im]),
            Self::Thermal { nbar } => nbar >= 0.0 && nbar.is_finite(),
            Self::DisplacedThermal { alpha_re, alpha_im, nbar } => finite(&[alpha_re, alpha_im]) && nbar >= 0.0 && nbar.is_finite(),
            Self::Fock { .. } => true,
            Self::Squeezed { r, phi } => r >= 0.0 && finite(&[r, phi]),
            Self::Cat { alpha_re, alpha_im, theta } => {
                let a = C64::new(alpha_re, alpha_im);
                // θ = π with α = 0 is the null vector.
                finite(&[alpha_re, alpha_im, theta]) && cat_norm_sq_inv(a, theta) > 1e-300
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Param(format!("invalid {} parameters: {self:?}", self.name())))
        }
    }

    /// (⟨b⟩, ⟨b†b⟩).
    pub fn moments(&self) -> (C64, f64) {
        match *self {
            Self::Coherent { alpha_re, alpha_im } => {
                let a = C64::new(alpha_re, alpha_im);
                (a, a.norm_sqr())
            }
            Self::Thermal { nbar } => (ZERO, nbar),
            Self::DisplacedThermal { alpha_re, alpha_im, nbar } => {
                let a = C64::new(alpha_re, alpha_im);
                (a, a.norm_sqr() + nbar)
            }
            Self::Fock { n } => (ZERO, n as f64),
            Self::Squeezed { r, .. } => (ZERO, r.sinh().powi(2)),
            Self::Cat { alpha_re, alpha_im, theta } => {
                let a = C64::new(alpha_re, alpha_im);
                let ov = (-2.0 * a.norm_sqr()).exp();
                let z = cat_norm_sq_inv(a, theta);
                let mean_b = a * C64::new(0.0, -2.0 * theta.sin() * ov) / z;
                let n = a.norm_sqr() * (2.0 - 2.0 * theta.cos() * ov) / z;
                (mean_b, n)
            }
        }
    }

    /// Density matrix on N Fock levels, renormalized after truncation.
    pub fn density(&self, cutoff: usize) -> Result<DensityOperator> {
        self.validate()?;
        let dims = HilbertDims::piston(cutoff)?;
        let n = cutoff;
        let m = match *self {
            Self::Coherent { alpha_re, alpha_im } => outer(&coherent_amplitudes(C64::new(alpha_re, alpha_im), n)),
            Self::Thermal { nbar } => thermal_matrix(nbar, n),
            Self::DisplacedThermal { alpha_re, alpha_im, nbar } => {
                let a = C64::new(alpha_re, alpha_im);
                let pad = n + 40 + 8 * (a.norm_sqr() + nbar).ceil() as usize;
                let big = thermal_matrix(nbar, pad);
                let b = fock_annihilation(pad);
                let disp = expm(&(b.adjoint() * a - &b * a.conj()));
                let full = &disp * big * disp.adjoint();
                full.view((0, 0), (n, n)).into_owned()
            }
            Self::Fock { n: k } => {
                if k >= n {
                    return Err(Error::Param(format!("fock({k}) needs cutoff > {k}")));
                }
                let mut v = vec![ZERO; n];
                v[k] = C64::from(1.0);
                outer(&v)
            }
            Self::Squeezed { r, phi } => {
                let mut v = vec![ZERO; n];
                let t = -C64::from_polar(r.tanh(), phi);
                let mut c = C64::from(1.0 / r.cosh().sqrt());
                let mut m = 0usize;
                while 2 * m < n {
                    v[2 * m] = c;
                    let k = m as f64;
                    c *= t * (((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0)));
                    m += 1;
                }
                outer(&v)
            }
            Self::Cat { alpha_re, alpha_im, theta } => {
                let a = C64::new(alpha_re, alpha_im);
                let plus = coherent_amplitudes(a, n);
                let minus = coherent_amplitudes(-a, n);
                let ph = C64::from_polar(1.0, theta);
                let v: Vec<C64> = plus.iter().zip(&minus).map(|(p, q)| p + ph * q).collect();
                outer(&v)
            }
        };
        let tr = m.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState("state has no weight below the cutoff".into()));
        }
        DensityOperator::new(dims, m.unscale(tr))
    }
}

fn cat_norm_sq_inv(a: C64, theta: f64) -> f64 {
    2.0 + 2.0 * theta.cos() * (-2.0 * a.norm_sqr()).exp()
}

fn outer(v: &[C64]) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

pub fn coherent_amplitudes(alpha: C64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for k in 0..n {
        out.push(c);
        c *= alpha / ((k + 1) as f64).sqrt();
    }
    out
}

pub fn thermal_matrix(nbar: f64, n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    if nbar == 0.0 {
        m[(0, 0)] = C64::from(1.0);
        return m;
    }
    let q = nbar / (nbar + 1.0);
    let mut p = 1.0 / (nbar + 1.0);
    for k in 0..n {
        m[(k, k)] = C64::from(p);
        p *= q;
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub enum PistonState {
    Fock { rho: DensityOperator, t: f64 },
    Analytic { family: AnalyticFamily, t: f64 },
}

impl PistonState {
    pub fn time(&self) -> f64 {
        match self {
            Self::Fock { t, .. } | Self::Analytic { t, .. } => *t,
        }
    }

    /// (⟨b⟩, ⟨b†b⟩).
    pub fn moments(&self) -> (C64, f64) {
        match self {
            Self::Analytic { family, .. } => family.moments(),
            Self::Fock { rho, .. } => fock_moments(rho),
        }
    }

    pub fn to_density(&self, cutoff: usize) -> Result<DensityOperator> {
        match self {
            Self::Fock { rho, .. } => Ok(rho.clone()),
            Self::Analytic { family, .. } => family.density(cutoff),
        }
    }
}

pub fn fock_moments(rho: &DensityOperator) -> (C64, f64) {
    let n = rho.dims().fock_cutoff();
    let m = rho.matrix();
    let mut b = ZERO;
    let mut num = 0.0;
    for k in 0..n {
        num += k as f64 * m[(k, k)].re;
        if k + 1 < n {
            // Tr(bρ) = Σ √(k+1) ρ[k+1][k]
            b += m[(k + 1, k)] * ((k + 1) as f64).sqrt();
        }
    }
    (b, num)
}

/// Piston generator: −iν[b†b, ·] + (Γ+D)·D[b] + D·D[b†].
pub fn piston_generator(rates: RatePair, nu: f64, cutoff: usize) -> Result<Superoperator> {
    let dims = HilbertDims::piston(cutoff)?;
    let b = fock_annihilation(dims.fock_cutoff());
    let (down, up) = rates.ladder_rates();
    let mut sb = SuperopBuilder::new(dims.dim());
    sb.add_hamiltonian(&(b.adjoint() * &b).scale(nu));
    sb.add_dissipator(down, &b);
    sb.add_dissipator(up, &b.adjoint());
    Ok(sb.build())
}

/// Fock populations under the piston generator, sampled on `grid`.
///
/// The diagonal of ρ is closed under the dynamics, so energy and ⟨n⟩ only need
/// these N numbers. Same truncation as [`piston_generator`]: no gain out of the top level.
pub fn evolve_populations(rates: RatePair, p0: &[f64], grid: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = p0.len();
    if n < 2 {
        return Err(Error::Dims("need at least two Fock levels".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Param("time grid must be strictly ascending".into()));
    }
    let (down, up) = rates.ladder_rates();
    let out_rate = |k: usize| down * k as f64 + if k + 1 < n { up * (k + 1) as f64 } else { 0.0 };
    let rhs = |p: &[C64], dp: &mut [C64]| {
        for k in 0..n {
            let mut acc = -p[k] * out_rate(k);
            if k + 1 < n {
                acc += p[k + 1] * (down * (k + 1) as f64);
            }
            if k > 0 {
                acc += p[k - 1] * (up * k as f64);
            }
            dp[k] = acc;
        }
    };
    let lnorm = 2.0 * (0..n).map(out_rate).fold(0.0, f64::max);
    let mut v: Vec<C64> = p0.iter().map(|&x| C64::from(x)).collect();
    let mut out = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            rk45_with(rhs, lnorm, &mut v, t - grid[k - 1], tol)?;
        }
        out.push(v.iter().map(|z| z.re).collect());
    }
    Ok(out)
}

/// Repeated exact steps of fixed size for the piston generator.
#[derive(Clone, Debug)]
pub struct PistonPropagator {
    dims: HilbertDims,
    prop: Propagator,
    dt: f64,
    pub repairs: usize,
}

impl PistonPropagator {
    pub fn new(rates: RatePair, nu: f64, cutoff: usize, dt: f64) -> Result<Self> {
        let gen = piston_generator(rates, nu, cutoff)?;
        Ok(Self { dims: HilbertDims::piston(cutoff)?, prop: gen.propagator(dt), dt, repairs: 0 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step; non-CP rates may need eigenvalue clipping, which is counted.
    pub fn step(&mut self, rho: &DensityOperator, audit: bool, t_next: f64) -> Result<DensityOperator> {
        if rho.dims() != self.dims {
            return Err(Error::DimMismatch { expected: self.dims.dim(), got: rho.dims().dim() });
        }
        let v = self.prop.apply_vec(&vectorize(rho.matrix()));
        let m = unvectorize(&v, self.dims.dim());
        let (out, repaired) = DensityOperator::repaired(self.dims, m, 1e-12)?;
        if repaired {
            self.repairs += 1;
        }
        if audit {
            let p = out.top_fock_population();
            if p > AUDIT_LIMIT {
                return Err(Error::TruncationAudit { t: t_next, population: p });
            }
        }
        Ok(out)
    }
}

pub fn piston_lindblad_step(state: &PistonState, rates: RatePair, nu: f64, dt: f64) -> Result<PistonState> {
    let (rho, t) = match state {
        PistonState::Fock { rho, t } => (rho, *t),
        PistonState::Analytic { .. } => {
            return Err(Error::Param("piston_lindblad_step needs a Fock-matrix state".into()))
        }
    };
    if !(rates.gamma + rates.dee >= 0.0) {
        return Err(Error::Param("downward rate Γ + D must be nonnegative for a single step".into()));
    }
    let mut p = PistonPropagator::new(rates, nu, rho.dims().fock_cutoff(), dt)?;
    let out = p.step(rho, true, t + dt)?;
    Ok(PistonState::Fock { rho: out, t: t + dt })
}

/// Closed-form evolution where one exists, density-matrix integration otherwise.
pub fn analytic_evolve(family: &AnalyticFamily, rates: RatePair, nu: f64, t: f64, cutoff: usize) -> Result<PistonState> {
    family.validate()?;
    let decay = (-rates.gamma * t).exp();
    let amp = (-0.5 * rates.gamma * t).exp();
    let rot = C64::from_polar(1.0, -nu * t);
    let d = rates.added_noise(t);
    let evolved = match *family {
        AnalyticFamily::Coherent { alpha_re, alpha_im } => {
            Some(AnalyticFamily::displaced_thermal(C64::new(alpha_re, alpha_im) * amp * rot, d))
        }
        AnalyticFamily::DisplacedThermal { alpha_re, alpha_im, nbar } => {
            Some(AnalyticFamily::displaced_thermal(C64::new(alpha_re, alpha_im) * amp * rot, nbar * decay + d))
        }
        AnalyticFamily::Thermal { nbar } => Some(AnalyticFamily::Thermal { nbar: nbar * decay + d }),
        _ => None,
    };
    if let Some(f) = evolved {
        return Ok(PistonState::Analytic { family: f, t });
    }
    let rho0 = family.density(cutoff)?;
    if t == 0.0 {
        return Ok(PistonState::Fock { rho: rho0, t });
    }
    let mut p = PistonPropagator::new(rates, nu, cutoff, t)?;
    let rho = p.step(&rho0, true, t)?;
    Ok(PistonState::Fock { rho, t })
}

/// ν⟨b†b⟩.
pub fn mean_energy(state: &PistonState, nu: f64) -> f64 {
    nu * state.moments().1
}

/// Closed-form ⟨H_P(t)⟩ = ν(D/Γ)(1 − e^{−Γt}) + e^{−Γt}⟨H_P(0)⟩.
pub fn energy_law(rates: RatePair, nu: f64, e0: f64, t: f64) -> f64 {
    nu * rates.added_noise(t) + (-rates.gamma * t).exp() * e0
}

/// Low-temperature entropy production (Γ + 2D)(⟨b†b⟩ − |⟨b⟩|²) + D.
pub fn entropy_production_low_t(state: &PistonState, rates: RatePair) -> f64 {
    let (b, n) = state.moments();
    (rates.gamma + 2.0 * rates.dee) * (n - b.norm_sqr()) + rates.dee
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    GlauberP,
    HusimiQ,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Self::GlauberP => "glauber_p",
            Self::HusimiQ => "husimi_q",
        }
    }
}

/// Polar grid: radii 0..r_max and n_theta uniform angles.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    radii: Vec<f64>,
    n_theta: usize,
}

impl RadialGrid {
    pub const DEFAULT_RADIAL: usize = 512;
    pub const DEFAULT_ANGULAR: usize = 64;

    pub fn new(r_max: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_max > 0.0) || n_r < 3 || n_theta < 4 {
            return Err(Error::Param("grid needs r_max > 0, >= 3 radii and >= 4 angles".into()));
        }
        let h = r_max / (n_r - 1) as f64;
        Ok(Self { radii: (0..n_r).map(|i| i as f64 * h).collect(), n_theta })
    }

    /// r_max = max(4, 2|α|e^{|Γ|t/2} + 6√var) with the default resolution.
    pub fn default_for(alpha_abs: f64, gamma: f64, t: f64, var: f64) -> Result<Self> {
        let r_max = (2.0 * alpha_abs * (0.5 * gamma.abs() * t).exp() + 6.0 * var.max(0.0).sqrt()).max(4.0);
        Self::new(r_max, Self::DEFAULT_RADIAL, Self::DEFAULT_ANGULAR)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn dr(&self) -> f64 {
        self.radii[1] - self.radii[0]
    }

    pub fn theta(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.n_theta as f64
    }

    /// Radial weights: trapezoid on r·f(r) with the first endpoint correction at
    /// the origin, where r·f(r) has slope f(0).
    fn radial_weights(&self) -> Vec<f64> {
        let h = self.dr();
        let n = self.radii.len();
        let mut w: Vec<f64> = self.radii.iter().map(|r| r * h).collect();
        w[0] = h * h / 12.0;
        w[n - 1] *= 0.5;
        w
    }

    fn dtheta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }

    fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.radii.len() * self.n_theta);
        for &r in &self.radii {
            for k in 0..self.n_theta {
                let th = self.theta(k);
                out.push((r * th.cos(), r * th.sin()));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialDistribution {
    grid: RadialGrid,
    values: Vec<f64>,
    repr: Representation,
}

impl RadialDistribution {
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(grid: RadialGrid, repr: Representation, f: F) -> Self {
        let values = grid.points().par_iter().map(|&(x, y)| f(x, y)).collect();
        Self { grid, values, repr }
    }

    /// P-function of a displaced thermal state: Gaussian of variance `var`.
    pub fn gaussian(grid: RadialGrid, center: C64, var: f64) -> Result<Self> {
        if !(var > 0.0) {
            return Err(Error::Param("gaussian needs positive variance".into()));
        }
        let norm = 1.0 / (std::f64::consts::PI * var);
        Ok(Self::from_fn(grid, Representation::GlauberP, move |x, y| {
            let dx = x - center.re;
            let dy = y - center.im;
            norm * (-(dx * dx + dy * dy) / var).exp()
        }))
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn value(&self, i_r: usize, k_theta: usize) -> f64 {
        self.values[i_r * self.grid.n_theta + k_theta]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn weights(&self) -> Vec<f64> {
        let wr = self.grid.radial_weights();
        let dth = self.grid.dtheta();
        let nt = self.grid.n_theta;
        let mut w = Vec::with_capacity(self.values.len());
        for wi in wr {
            for _ in 0..nt {
                w.push(wi * dth);
            }
        }
        w
    }

    /// ∫ P r dr dθ.
    pub fn mass(&self) -> f64 {
        self.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// (∫αP, ∫|α|²P).
    pub fn raw_moments(&self) -> (C64, f64) {
        let w = self.weights();
        let pts = self.grid.points();
        let mut m1 = ZERO;
        let mut m2 = 0.0;
        for ((wk, v), (x, y)) in w.iter().zip(&self.values).zip(pts) {
            m1 += C64::new(x, y) * (wk * v);
            m2 += (x * x + y * y) * wk * v;
        }
        (m1, m2)
    }

    /// (⟨b⟩, ⟨b†b⟩) from the quasi-probability's ordering rule.
    pub fn moments(&self) -> (C64, f64) {
        let (m1, m2) = self.raw_moments();
        match self.repr {
            Representation::GlauberP => (m1, m2),
            Representation::HusimiQ => (m1, m2 - 1.0),
        }
    }

    /// Angular average per radius.
    pub fn radial_profile(&self) -> Vec<f64> {
        let nt = self.grid.n_theta;
        self.values.chunks(nt).map(|c| c.iter().sum::<f64>() / nt as f64).collect()
    }

    /// Bilinear interpolation in (r, θ); zero beyond r_max.
    fn interpolate(&self, x: f64, y: f64) -> f64 {
        let r = (x * x + y * y).sqrt();
        let h = self.grid.dr();
        let nr = self.grid.radii.len();
        if r > self.grid.r_max() {
            return 0.0;
        }
        let fr = r / h;
        let i = (fr.floor() as usize).min(nr - 2);
        let tr = fr - i as f64;
        let nt = self.grid.n_theta;
        let mut th = y.atan2(x);
        if th < 0.0 {
            th += 2.0 * std::f64::consts::PI;
        }
        let ft = th / self.grid.dtheta();
        let k = (ft.floor() as usize) % nt;
        let tt = ft - ft.floor();
        let k1 = (k + 1) % nt;
        let v = |ii: usize, kk: usize| self.values[ii * nt + kk];
        let lo = v(i, k) * (1.0 - tt) + v(i, k1) * tt;
        let hi = v(i + 1, k) * (1.0 - tt) + v(i + 1, k1) * tt;
        lo * (1.0 - tr) + hi * tr
    }

    /// CSV with columns r, theta, value and '#' metadata lines.
    pub fn write_csv<W: Write>(&self, w: &mut W, time: f64, rates: RatePair) -> Result<()> {
        writeln!(w, "# time={time:.12e}")?;
        writeln!(w, "# gamma={:.12e}", rates.gamma)?;
        writeln!(w, "# dee={:.12e}", rates.dee)?;
        writeln!(w, "# representation={}", self.repr.name())?;
        writeln!(w, "r,theta,value")?;
        let nt = self.grid.n_theta;
        for (i, &r) in self.grid.radii.iter().enumerate() {
            for k in 0..nt {
                writeln!(w, "{:.12e},{:.12e},{:.12e}", r, self.grid.theta(k), self.values[i * nt + k])?;
            }
        }
        Ok(())
    }
}

const GH_NODES: usize = 20;

/// Physicists' Gauss–Hermite rule (weight e^{−u²}) by Golub–Welsch.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let jac = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jac);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    (0..n).map(|k| (eig.eigenvalues[k], sqrt_pi * eig.eigenvectors[(0, k)].powi(2))).collect()
}

/// Gaussian-kernel propagation of a P-function over time t.
pub fn propagate_distribution(dist: &RadialDistribution, rates: RatePair, t: f64) -> Result<RadialDistribution> {
    if dist.repr != Representation::GlauberP {
        return Err(Error::Unsupported("propagation is defined for P-functions only".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Param("propagation needs t > 0".into()));
    }
    let s = (-0.5 * rates.gamma * t).exp();
    let var = rates.added_noise(t);
    let grid = dist.grid.clone();
    let in_mass = dist.mass();
    let weights = dist.weights();
    let src_pts = grid.points();
    let (m1, _) = dist.raw_moments();
    let r_mean = {
        let w = &weights;
        let tot: f64 = w.iter().zip(&dist.values).map(|(a, b)| a * b).sum();
        let rs: f64 = w.iter().zip(&dist.values).zip(&src_pts).map(|((a, b), (x, y))| a * b * (x * x + y * y).sqrt()).sum();
        if tot > 0.0 {
            rs / tot
        } else {
            m1.norm()
        }
    };
    let spacing = grid.dr().max(r_mean * grid.dtheta());
    // Direct summation conserves mass and the first two moments exactly once
    // the kernel is resolved on the grid.
    let direct = var.sqrt() >= 0.75 * spacing;
    let values: Vec<f64> = if direct {
        let peak = dist.values.iter().cloned().fold(0.0, f64::max);
        let sources: Vec<(f64, f64, f64)> = src_pts
            .iter()
            .zip(&weights)
            .zip(&dist.values)
            .filter(|(_, v)| v.abs() > 1e-20 * peak)
            .map(|((&(x, y), w), v)| (s * x, s * y, w * v))
            .collect();
        let norm = 1.0 / (std::f64::consts::PI * var);
        grid.points()
            .par_iter()
            .map(|&(x, y)| {
                let mut acc = 0.0;
                for &(sx, sy, wv) in &sources {
                    let e = ((x - sx).powi(2) + (y - sy).powi(2)) / var;
                    if e < 700.0 {
                        acc += wv * (-e).exp();
                    }
                }
                acc * norm
            })
            .collect()
    } else {
        // Narrow kernel: Gauss–Hermite average of the rescaled input.
        let gh = gauss_hermite(GH_NODES);
        let sv = var.sqrt();
        grid.points()
            .par_iter()
            .map(|&(x, y)| {
                if var == 0.0 {
                    return dist.interpolate(x / s, y / s) / (s * s);
                }
                let mut acc = 0.0;
                for &(u, wu) in &gh {
                    for &(v, wv) in &gh {
                        acc += wu * wv * dist.interpolate((x + sv * u) / s, (y + sv * v) / s);
                    }
                }
                acc / (std::f64::consts::PI * s * s)
            })
            .collect()
    };
    // Mass carried past r_max, from each source's Gaussian tail.
    let r_max = grid.r_max();
    let lost: f64 = src_pts
        .iter()
        .zip(&weights)
        .zip(&dist.values)
        .map(|((&(x, y), w), v)| {
            let rho = s * (x * x + y * y).sqrt();
            let tail = if rho >= r_max {
                1.0
            } else if var > 0.0 {
                (-(r_max - rho).powi(2) / var).exp()
            } else {
                0.0
            };
            w * v.max(0.0) * tail
        })
        .sum();
    if lost > 1e-6 * in_mass.abs().max(1e-300) {
        let suggested = s * dist.grid.r_max() + 6.0 * var.sqrt();
        return Err(Error::GridTooSmall { mass_outside: lost, suggested });
    }
    Ok(RadialDistribution { grid, values, repr: Representation::GlauberP })
}

/// Q(α) = ⟨α|ρ|α⟩/π on the grid.
pub fn husimi_distribution(rho: &DensityOperator, grid: RadialGrid) -> Result<RadialDistribution> {
    if rho.dims().has_tls() {
        return Err(Error::Dims("Husimi function needs a piston-only state".into()));
    }
    let n = rho.dims().fock_cutoff();
    let m = rho.matrix().clone();
    Ok(RadialDistribution::from_fn(grid, Representation::HusimiQ, move |x, y| {
        let c = coherent_amplitudes(C64::new(x, y), n);
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += m[(i, j)] * c[j];
            }
            acc += c[i].conj() * row;
        }
        acc.re / std::f64::consts::PI
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassivityVerdict {
    pub passive: bool,
    /// Radius interval over which the profile increases.
    pub witness: Option<(f64, f64)>,
    pub anisotropic: bool,
}

pub const PASSIVITY_NOISE: f64 = 1e-9;
pub const ANISOTROPY_TOL: f64 = 1e-6;

pub fn radial_passivity_test(dist: &RadialDistribution) -> PassivityVerdict {
    let prof = dist.radial_profile();
    let nt = dist.grid.n_theta;
    let scale = prof.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let anis = dist
        .values
        .chunks(nt)
        .zip(&prof)
        .map(|(c, m)| c.iter().map(|v| (v - m).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        / scale;
    let tol = PASSIVITY_NOISE * scale;
    let radii = dist.grid.radii();
    let first = prof.windows(2).position(|w| w[1] > w[0] + tol);
    let witness = first.map(|i| {
        let mut j = i + 1;
        while j + 1 < prof.len() && prof[j + 1] >= prof[j] - tol {
            j += 1;
        }
        (radii[i], radii[j])
    });
    PassivityVerdict { passive: witness.is_none(), witness, anisotropic: anis > ANISOTROPY_TOL }
}

/// Mean occupation ⟨b†b⟩ of a piston density matrix.
pub fn mean_occupation(rho: &DensityOperator) -> f64 {
    fock_moments(rho).1
}

/// Tr(b†b L(ρ)) for the piston generator, for derivative checks.
pub fn occupation_rate(gen: &Superoperator, rho: &DensityOperator) -> f64 {
    let n = rho.dims().fock_cutoff();
    let num = CMat::from_fn(n, n, |i, j| if i == j { C64::from(i as f64) } else { ZERO });
    trace_product(&num, &gen.apply(rho.matrix())).re
}
