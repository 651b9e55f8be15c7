//! Operators on truncated Fock and TLS⊗Fock spaces.
//!
//! Basis ordering is (excited, ground) ⊗ (|0⟩..|N-1⟩): index = s*N + n with
//! s = 0 the excited TLS level.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;

pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalues below this are dropped from entropy sums.
pub const EIG_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDims {
    fock_cutoff: usize,
    has_tls: bool,
}

impl HilbertDims {
    /// Piston-only space with N Fock levels, N >= 2.
    pub fn piston(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::Dims(format!("fock_cutoff must be >= 2, got {fock_cutoff}")));
        }
        Ok(Self { fock_cutoff, has_tls: false })
    }

    /// TLS⊗Fock space. N = 1 is accepted and gives a bare two-level system.
    pub fn tls_piston(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 1 {
            return Err(Error::Dims("fock_cutoff must be >= 1".into()));
        }
        Ok(Self { fock_cutoff, has_tls: true })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn has_tls(&self) -> bool {
        self.has_tls
    }

    pub fn dim(&self) -> usize {
        if self.has_tls {
            2 * self.fock_cutoff
        } else {
            self.fock_cutoff
        }
    }

    pub fn piston_only(&self) -> Result<Self> {
        Self::piston(self.fock_cutoff)
    }

    pub fn with_tls(&self) -> Self {
        Self { fock_cutoff: self.fock_cutoff, has_tls: true }
    }
}

/// Square complex matrix tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dims: HilbertDims,
    mat: CMat,
}

impl ComplexMatrix {
    pub fn new(dims: HilbertDims, mat: CMat) -> Result<Self> {
        let d = dims.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimMismatch { expected: d, got: mat.nrows().max(mat.ncols()) });
        }
        Ok(Self { dims, mat })
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims, mat: self.mat.adjoint() }
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { dims: self.dims, mat: &self.mat * &rhs.mat }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: HilbertDims,
    mat: CMat,
}

pub const HERM_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const NEG_EIG_TOL: f64 = 1e-10;

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dims: HilbertDims, mat: CMat) -> Result<Self> {
        let d = dims.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimMismatch { expected: d, got: mat.nrows() });
        }
        let h = hermitian_defect(&mat);
        if h > HERM_TOL {
            return Err(Error::NotHermitian(h));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let m = hermitize(&mat);
        let ev = hermitian_eigen(&m).eigenvalues;
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEG_EIG_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { dims, mat: m })
    }

    /// Clips eigenvalues below `-clip` to zero and renormalizes. The flag reports
    /// whether a clip happened.
    pub fn repaired(dims: HilbertDims, mat: CMat, clip: f64) -> Result<(Self, bool)> {
        let d = dims.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimMismatch { expected: d, got: mat.nrows() });
        }
        let m = hermitize(&mat);
        let eig = hermitian_eigen(&m);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min >= -clip {
            let tr = m.trace().re;
            if tr <= 0.0 {
                return Err(Error::InvalidState(format!("trace {tr}")));
            }
            return Ok((Self { dims, mat: m.unscale(tr) }, false));
        }
        let vals: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = vals.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidState("no positive weight left after clipping".into()));
        }
        let v = &eig.eigenvectors;
        let mut out = CMat::zeros(d, d);
        for (k, &l) in vals.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let col = v.column(k);
            out += (col * col.adjoint()) * C64::from(l / total);
        }
        Ok((Self { dims, mat: hermitize(&out) }, true))
    }

    /// Skips validation. Callers guarantee the invariants.
    pub(crate) fn from_trusted(dims: HilbertDims, mat: CMat) -> Self {
        Self { dims, mat }
    }

    pub fn pure(dims: HilbertDims, psi: &[C64]) -> Result<Self> {
        let d = dims.dim();
        if psi.len() != d {
            return Err(Error::DimMismatch { expected: d, got: psi.len() });
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(d, psi.iter().map(|c| c / norm));
        Ok(Self { dims, mat: &v * v.adjoint() })
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn expect(&self, op: &CMat) -> C64 {
        trace_product(op, &self.mat)
    }

    /// Population of the highest Fock level, summed over the TLS if present.
    pub fn top_fock_population(&self) -> f64 {
        let n = self.dims.fock_cutoff;
        if self.dims.has_tls {
            self.mat[(n - 1, n - 1)].re + self.mat[(2 * n - 1, 2 * n - 1)].re
        } else {
            self.mat[(n - 1, n - 1)].re
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_eigen(&self.mat).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Bare annihilation operator on N Fock levels.
pub fn fock_annihilation(n: usize) -> CMat {
    let mut a = CMat::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::from((k as f64).sqrt());
    }
    a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// I_TLS ⊗ op when the space carries a TLS factor.
pub fn embed_piston(op: &CMat, dims: HilbertDims) -> CMat {
    if dims.has_tls {
        kron(&CMat::identity(2, 2), op)
    } else {
        op.clone()
    }
}

pub fn annihilation(dims: HilbertDims) -> ComplexMatrix {
    let a = fock_annihilation(dims.fock_cutoff);
    ComplexMatrix { dims, mat: embed_piston(&a, dims) }
}

pub fn number(dims: HilbertDims) -> ComplexMatrix {
    let n = dims.fock_cutoff;
    let diag = CMat::from_fn(n, n, |i, j| if i == j { C64::from(i as f64) } else { ZERO });
    ComplexMatrix { dims, mat: embed_piston(&diag, dims) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// 2×2 Pauli matrix in (excited, ground) ordering.
pub fn pauli2(axis: Axis) -> CMat {
    match axis {
        Axis::X => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

fn require_tls(dims: HilbertDims) -> Result<()> {
    if !dims.has_tls {
        return Err(Error::Dims("operation needs a TLS factor".into()));
    }
    Ok(())
}

pub fn pauli(axis: Axis, dims: HilbertDims) -> Result<ComplexMatrix> {
    require_tls(dims)?;
    let id = CMat::identity(dims.fock_cutoff, dims.fock_cutoff);
    Ok(ComplexMatrix { dims, mat: kron(&pauli2(axis), &id) })
}

/// σ₊ = |e⟩⟨g| ⊗ I.
pub fn sigma_plus(dims: HilbertDims) -> Result<ComplexMatrix> {
    require_tls(dims)?;
    let sp = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    let id = CMat::identity(dims.fock_cutoff, dims.fock_cutoff);
    Ok(ComplexMatrix { dims, mat: kron(&sp, &id) })
}

pub fn sigma_minus(dims: HilbertDims) -> Result<ComplexMatrix> {
    Ok(sigma_plus(dims)?.adjoint())
}

/// U = exp[(g/2ν)(a† − a)σ_Z].
pub fn dressing_unitary(g: f64, nu: f64, dims: HilbertDims) -> Result<ComplexMatrix> {
    require_tls(dims)?;
    if !(nu > 0.0) {
        return Err(Error::Param("nu must be positive".into()));
    }
    if (g / nu).abs() >= 1.0 {
        return Err(Error::Param(format!("g/nu = {} outside the perturbative range", g / nu)));
    }
    let n = dims.fock_cutoff;
    let a = fock_annihilation(n);
    let gen = (a.adjoint() - &a).scale(g / (2.0 * nu));
    // σ_Z is diagonal, so the exponential is block-diagonal over the TLS.
    let up = expm(&gen);
    let down = expm(&(-gen));
    let mut u = CMat::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&up);
    u.view_mut((n, n), (n, n)).copy_from(&down);
    Ok(ComplexMatrix { dims, mat: u })
}

/// Lab-frame H = ½ω₀σ_Z + νa†a − (g/2)σ_Z(a + a†). The dressing unitary maps
/// it to the diagonal form of [`dressed_hamiltonian`].
pub fn lab_hamiltonian(omega0: f64, nu: f64, g: f64, dims: HilbertDims) -> Result<ComplexMatrix> {
    require_tls(dims)?;
    let n = dims.fock_cutoff;
    let a = fock_annihilation(n);
    let num = a.adjoint() * &a;
    let id = CMat::identity(n, n);
    let sz = pauli2(Axis::Z);
    let mat = kron(&sz, &id).scale(0.5 * omega0) + kron(&CMat::identity(2, 2), &num).scale(nu)
        - kron(&sz, &(&a + a.adjoint())).scale(0.5 * g);
    Ok(ComplexMatrix { dims, mat })
}

/// Diagonal dressed Hamiltonian ½ω₀σ̃_Z + νb†b − g²/(4ν).
pub fn dressed_hamiltonian(omega0: f64, nu: f64, g: f64, dims: HilbertDims) -> Result<ComplexMatrix> {
    require_tls(dims)?;
    let n = dims.fock_cutoff;
    let shift = g * g / (4.0 * nu);
    let mut mat = CMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        mat[(k, k)] = C64::from(0.5 * omega0 + nu * k as f64 - shift);
        mat[(n + k, n + k)] = C64::from(-0.5 * omega0 + nu * k as f64 - shift);
    }
    Ok(ComplexMatrix { dims, mat })
}

/// Dressed-frame state to lab frame: ρ_lab = U ρ U†.
pub fn to_lab_frame(rho: &DensityOperator, g: f64, nu: f64) -> Result<DensityOperator> {
    let u = dressing_unitary(g, nu, rho.dims)?;
    let m = &u.mat * &rho.mat * u.mat.adjoint();
    Ok(DensityOperator::from_trusted(rho.dims, hermitize(&m)))
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMat {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let lam = CMat::from_fn(n, n, |i, j| if i == j { C64::from(self.eigenvalues[i]) } else { ZERO });
        v * lam * v.adjoint()
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(a: &CMat) -> Result<Spectrum> {
    let scale = a.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
    let h = hermitian_defect(a);
    if h > HERM_TOL * scale {
        return Err(Error::NotHermitian(h));
    }
    Ok(eigh_unchecked(&hermitize(a)))
}

/// Entries below this fraction of the largest are zeroed before diagonalizing;
/// the solver returns ±inf on matrices spanning ~200 decades.
const FLUSH_BELOW: f64 = 1e-40;

fn hermitian_eigen(a: &CMat) -> SymmetricEigen<C64, nalgebra::Dyn> {
    let max = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = FLUSH_BELOW * max;
    SymmetricEigen::new(a.map(|c| if c.norm() < floor { C64::new(0.0, 0.0) } else { c }))
}

pub(crate) fn eigh_unchecked(a: &CMat) -> Spectrum {
    let eig = hermitian_eigen(a);
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Spectrum { eigenvalues, eigenvectors }
}

pub fn entropy_of_eigenvalues(ev: &[f64]) -> f64 {
    let s: f64 = ev.iter().filter(|&&l| l > EIG_FLOOR).map(|&l| -l * l.ln()).sum();
    s.max(0.0)
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_eigenvalues(&rho.eigenvalues())
}

/// ρ_P = Tr_S ρ_{S+P}.
pub fn partial_trace_tls(rho: &DensityOperator) -> Result<DensityOperator> {
    let dims = rho.dims;
    if !dims.has_tls {
        return Err(Error::Dims("partial trace needs a TLS factor".into()));
    }
    let n = dims.fock_cutoff;
    let m = trace_out_tls(&rho.mat, n);
    let pd = HilbertDims { fock_cutoff: n, has_tls: false };
    Ok(DensityOperator::from_trusted(pd, m))
}

pub(crate) fn trace_out_tls(m: &CMat, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| m[(i, j)] + m[(n + i, n + j)])
}

/// Reduced TLS state Tr_P ρ_{S+P} as a 2×2 matrix.
pub fn partial_trace_piston(m: &CMat, n: usize) -> CMat {
    let mut out = CMat::zeros(2, 2);
    for s in 0..2 {
        for t in 0..2 {
            let mut acc = ZERO;
            for k in 0..n {
                acc += m[(s * n + k, t * n + k)];
            }
            out[(s, t)] = acc;
        }
    }
    out
}

/// ρ_S ⊗ ρ_P with ρ_S a 2×2 matrix.
pub fn tensor_tls(rho_s: &CMat, rho_p: &DensityOperator) -> Result<DensityOperator> {
    if rho_p.dims.has_tls {
        return Err(Error::Dims("piston factor already carries a TLS".into()));
    }
    if rho_s.nrows() != 2 || rho_s.ncols() != 2 {
        return Err(Error::DimMismatch { expected: 2, got: rho_s.nrows() });
    }
    let dims = rho_p.dims.with_tls();
    DensityOperator::new(dims, kron(rho_s, &rho_p.mat))
}

/// Trace norm distance ½‖A − B‖₁ for Hermitian arguments.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    let diff = hermitize(&(a - b));
    let ev = hermitian_eigen(&diff).eigenvalues;
    0.5 * ev.iter().map(|x| x.abs()).sum::<f64>()
}
