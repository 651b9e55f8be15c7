//! Sparse Lindblad superoperators with an exact block-sector propagator.
//!
//! Vectorization is row-major: vec index = i*d + j for ρ[i][j]. The generator is
//! assembled as a sparse list, then split into connected sectors (union-find on
//! the coupling graph). Each sector is a small dense block that is exponentiated
//! exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::operators::{hermitize, CMat, DensityOperator, HilbertDims, ZERO};
use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct Sector {
    pub indices: Vec<usize>,
    pub block: CMat,
}

#[derive(Clone, Debug)]
pub struct Superoperator {
    d: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    sectors: Vec<Sector>,
}

#[derive(Clone, Debug, Default)]
pub struct SuperopBuilder {
    d: usize,
    entries: Vec<(usize, usize, C64)>,
}

fn nonzeros(m: &CMat) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl SuperopBuilder {
    pub fn new(d: usize) -> Self {
        Self { d, entries: Vec::new() }
    }

    fn push(&mut self, row: usize, col: usize, v: C64) {
        if v != ZERO {
            self.entries.push((row, col, v));
        }
    }

    /// Adds −i[H, ·].
    pub fn add_hamiltonian(&mut self, h: &CMat) {
        let d = self.d;
        let mi = C64::new(0.0, -1.0);
        for (i, k, v) in nonzeros(h) {
            for j in 0..d {
                // −i H ρ : (i,j) ← (k,j)
                self.push(i * d + j, k * d + j, mi * v);
                // +i ρ H : (j,k) ← (j,i)
                self.push(j * d + k, j * d + i, -mi * v);
            }
        }
    }

    /// Adds rate·(JρJ† − ½{J†J, ρ}).
    pub fn add_dissipator(&mut self, rate: f64, jump: &CMat) {
        if rate == 0.0 {
            return;
        }
        let d = self.d;
        let nz = nonzeros(jump);
        for &(i, k, a) in &nz {
            for &(j, l, b) in &nz {
                self.push(i * d + j, k * d + l, a * b.conj() * rate);
            }
        }
        let m = jump.adjoint() * jump;
        for (i, k, v) in nonzeros(&m) {
            let w = v * (-0.5 * rate);
            for j in 0..d {
                self.push(i * d + j, k * d + j, w);
                self.push(j * d + k, j * d + i, w);
            }
        }
    }

    pub fn build(mut self) -> Superoperator {
        let d2 = self.d * self.d;
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);

        let mut row_ptr = vec![0usize; d2 + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..d2 {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<usize> = merged.iter().map(|e| e.1).collect();
        let vals: Vec<C64> = merged.iter().map(|e| e.2).collect();

        let mut uf = UnionFind::new(d2);
        for &(r, c, _) in &merged {
            uf.union(r, c);
        }
        let mut comp_of = vec![usize::MAX; d2];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for idx in 0..d2 {
            let root = uf.find(idx);
            if comp_of[root] == usize::MAX {
                comp_of[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[comp_of[root]].push(idx);
        }
        let mut local = vec![0usize; d2];
        for g in &groups {
            for (k, &idx) in g.iter().enumerate() {
                local[idx] = k;
            }
        }
        let mut blocks: Vec<CMat> = groups.iter().map(|g| CMat::zeros(g.len(), g.len())).collect();
        for &(r, c, v) in &merged {
            let s = comp_of[uf.find(r)];
            blocks[s][(local[r], local[c])] += v;
        }
        let sectors = groups.into_iter().zip(blocks).map(|(indices, block)| Sector { indices, block }).collect();
        Superoperator { d: self.d, row_ptr, cols, vals, sectors }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub fn vectorize(m: &CMat) -> Vec<C64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[C64], d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| v[i * d + j])
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        self.d
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply_vec(&self, v: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[p] * v[self.cols[p]];
            }
            *o = acc;
        }
    }

    /// L(ρ) as a matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = vectorize(rho);
        let mut out = vec![ZERO; v.len()];
        self.apply_vec(&v, &mut out);
        unvectorize(&out, self.d)
    }

    /// Dense d²×d² matrix. Only meant for small spaces.
    pub fn to_dense(&self) -> Result<CMat> {
        let d2 = self.d * self.d;
        if self.d > 64 {
            return Err(Error::Unsupported(format!("dense superoperator for d={} is too large", self.d)));
        }
        let mut m = CMat::zeros(d2, d2);
        for r in 0..d2 {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[p])] += self.vals[p];
            }
        }
        Ok(m)
    }

    /// Largest |Σ_i L[(i,i), col]| over columns: zero for a trace-preserving map.
    pub fn trace_defect(&self) -> f64 {
        let d = self.d;
        let mut sums = vec![ZERO; d * d];
        for i in 0..d {
            let r = i * d + i;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                sums[self.cols[p]] += self.vals[p];
            }
        }
        sums.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// exp(L·dt), sector by sector.
    pub fn propagator(&self, dt: f64) -> Propagator {
        let blocks = self
            .sectors
            .par_iter()
            .map(|s| {
                let e = if s.block.nrows() == 1 {
                    CMat::from_element(1, 1, (s.block[(0, 0)] * dt).exp())
                } else {
                    expm(&s.block.scale(dt))
                };
                (s.indices.clone(), e)
            })
            .collect();
        Propagator { d: self.d, blocks }
    }
}

#[derive(Clone, Debug)]
pub struct Propagator {
    d: usize,
    blocks: Vec<(Vec<usize>, CMat)>,
}

impl Propagator {
    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        for (idx, e) in &self.blocks {
            if idx.len() == 1 {
                out[idx[0]] = e[(0, 0)] * v[idx[0]];
                continue;
            }
            for (a, &ia) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for (b, &ib) in idx.iter().enumerate() {
                    acc += e[(a, b)] * v[ib];
                }
                out[ia] = acc;
            }
        }
        out
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvectorize(&self.apply_vec(&vectorize(rho)), self.d)
    }
}

/// Knobs for [`evolve_with`].
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Abort when the top Fock population exceeds 1e-6.
    pub audit: bool,
    /// Eigenvalues below −clip are clipped and counted as repairs.
    pub clip: f64,
    pub max_repairs: usize,
    /// Per-step tolerance of the adaptive integrator.
    pub rk_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { audit: true, clip: 1e-12, max_repairs: 10, rk_tol: 1e-10 }
    }
}

pub const AUDIT_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolveStats {
    pub repairs: usize,
    pub uniform: bool,
    pub rk_steps: usize,
}

fn is_uniform(grid: &[f64]) -> bool {
    if grid.len() < 3 {
        return true;
    }
    let h = grid[1] - grid[0];
    grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1e-300))
}

/// Evolves ρ₀ under `gen`, calling `visit(k, t_k, ρ(t_k))` at every grid point.
pub fn evolve_with<F>(
    gen: &Superoperator,
    rho0: &DensityOperator,
    grid: &[f64],
    opts: EvolveOptions,
    mut visit: F,
) -> Result<EvolveStats>
where
    F: FnMut(usize, f64, &DensityOperator) -> Result<()>,
{
    let dims = rho0.dims();
    if dims.dim() != gen.hilbert_dim() {
        return Err(Error::DimMismatch { expected: gen.hilbert_dim(), got: dims.dim() });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Param("time grid must be strictly ascending".into()));
    }
    let mut stats = EvolveStats { uniform: is_uniform(grid), ..Default::default() };
    if grid.is_empty() {
        return Ok(stats);
    }
    let audit = |t: f64, rho: &DensityOperator| -> Result<()> {
        if opts.audit {
            let p = rho.top_fock_population();
            if p > AUDIT_LIMIT {
                return Err(Error::TruncationAudit { t, population: p });
            }
        }
        Ok(())
    };
    audit(grid[0], rho0)?;
    visit(0, grid[0], rho0)?;
    if grid.len() == 1 {
        return Ok(stats);
    }
    let d = dims.dim();
    let mut v = vectorize(rho0.matrix());
    let prop = if stats.uniform { Some(gen.propagator(grid[1] - grid[0])) } else { None };
    for k in 1..grid.len() {
        match &prop {
            Some(p) => v = p.apply_vec(&v),
            None => {
                let steps = rk45(gen, &mut v, grid[k] - grid[k - 1], opts.rk_tol)?;
                stats.rk_steps += steps;
            }
        }
        let (rho, repaired) = settle(dims, &v, d, opts.clip)?;
        if repaired {
            stats.repairs += 1;
            if stats.repairs > opts.max_repairs {
                return Err(Error::PositivityRepairs(stats.repairs));
            }
            v = vectorize(rho.matrix());
        }
        audit(grid[k], &rho)?;
        visit(k, grid[k], &rho)?;
    }
    Ok(stats)
}

fn settle(dims: HilbertDims, v: &[C64], d: usize, clip: f64) -> Result<(DensityOperator, bool)> {
    let m = hermitize(&unvectorize(v, d));
    DensityOperator::repaired(dims, m, clip)
}

/// Collects every state of [`evolve_with`].
pub fn evolve_collect(
    gen: &Superoperator,
    rho0: &DensityOperator,
    grid: &[f64],
    opts: EvolveOptions,
) -> Result<(Vec<DensityOperator>, EvolveStats)> {
    let mut out = Vec::with_capacity(grid.len());
    let stats = evolve_with(gen, rho0, grid, opts, |_, _, r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok((out, stats))
}

// Dormand–Prince 5(4) tableau. The generator is autonomous, so the nodes c_i are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lincomb(base: &[C64], h: f64, terms: &[(f64, &[C64])], out: &mut [C64]) {
    for i in 0..base.len() {
        let mut acc = base[i];
        for (c, k) in terms {
            acc += k[i] * (h * c);
        }
        out[i] = acc;
    }
}

/// Integrates v' = L v over `span` with an embedded 5(4) pair. Returns the
/// number of accepted steps.
pub fn rk45(gen: &Superoperator, v: &mut Vec<C64>, span: f64, tol: f64) -> Result<usize> {
    // Initial step from the generator's row norm.
    let mut lnorm: f64 = 0.0;
    for r in 0..v.len() {
        let s: f64 = (gen.row_ptr[r]..gen.row_ptr[r + 1]).map(|p| gen.vals[p].norm()).sum();
        lnorm = lnorm.max(s);
    }
    rk45_with(|x, out| gen.apply_vec(x, out), lnorm, v, span, tol)
}

/// [`rk45`] for any linear right-hand side; `lnorm` bounds its norm and sets the first step.
pub fn rk45_with<F>(apply: F, lnorm: f64, v: &mut Vec<C64>, span: f64, tol: f64) -> Result<usize>
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = v.len();
    let mut k1 = vec![ZERO; n];
    let mut k2 = vec![ZERO; n];
    let mut k3 = vec![ZERO; n];
    let mut k4 = vec![ZERO; n];
    let mut k5 = vec![ZERO; n];
    let mut k6 = vec![ZERO; n];
    let mut k7 = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];
    let mut y5 = vec![ZERO; n];

    let mut h = if lnorm > 0.0 { (0.1 / lnorm).min(span) } else { span };
    let mut t = 0.0;
    let mut accepted = 0usize;
    let mut guard = 0usize;
    apply(v, &mut k1);
    while t < span {
        guard += 1;
        if guard > 10_000_000 {
            return Err(Error::Integrator("step budget exhausted".into()));
        }
        if t + h > span {
            h = span - t;
        }
        lincomb(v, h, &[(A21, &k1)], &mut tmp);
        apply(&tmp, &mut k2);
        lincomb(v, h, &[(A31, &k1), (A32, &k2)], &mut tmp);
        apply(&tmp, &mut k3);
        lincomb(v, h, &[(A41, &k1), (A42, &k2), (A43, &k3)], &mut tmp);
        apply(&tmp, &mut k4);
        lincomb(v, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &mut tmp);
        apply(&tmp, &mut k5);
        lincomb(v, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &mut tmp);
        apply(&tmp, &mut k6);
        lincomb(v, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &mut y5);
        apply(&y5, &mut k7);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = tol * (1.0 + v[i].norm().max(y5[i].norm()));
            err = err.max(e.norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(v, &mut y5);
            std::mem::swap(&mut k1, &mut k7);
            accepted += 1;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 * span.max(1e-300) && t < span {
            return Err(Error::Integrator("step size underflow".into()));
        }
    }
    Ok(accepted)
}
