use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qpiston_core::expm::expm;
use qpiston_core::operators::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace();
    m.map(|z| z / tr)
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let herm = (&a + a.adjoint()).scale(0.5);
    expm(&herm.map(|z| z * C64::new(0.0, 1.0)))
}

fn thermal(nbar: f64, n: usize) -> CMat {
    let q = nbar / (nbar + 1.0);
    CMat::from_fn(n, n, |i, j| if i == j { c(q.powi(i as i32) / (nbar + 1.0)) } else { ZERO })
}

#[test]
fn annihilation_entries() {
    let a2 = annihilation(HilbertDims::piston(2).unwrap()).into_matrix();
    assert_eq!(a2, CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
    let a3 = annihilation(HilbertDims::piston(3).unwrap()).into_matrix();
    assert!((a3[(1, 2)].re - std::f64::consts::SQRT_2).abs() < 1e-8);
    let n4 = number(HilbertDims::piston(4).unwrap()).into_matrix();
    for k in 0..4 {
        assert!((n4[(k, k)].re - k as f64).abs() < 1e-15);
    }
}

#[test]
fn canonical_commutator_below_cutoff() {
    let n = 12;
    let a = fock_annihilation(n);
    let comm = &a * a.adjoint() - a.adjoint() * &a;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let want = if i == j { ONE } else { ZERO };
            assert!((comm[(i, j)] - want).norm() < 1e-12);
        }
    }
}

#[test]
fn pauli_algebra() {
    let d = HilbertDims::tls_piston(1).unwrap();
    let z = pauli(Axis::Z, d).unwrap().into_matrix();
    assert_eq!(z, CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]));
    let x = pauli(Axis::X, d).unwrap().into_matrix();
    let y = pauli(Axis::Y, d).unwrap().into_matrix();
    assert!(max_abs(&(&x * &x - CMat::identity(2, 2))) < 1e-15);
    let comm = &x * &y - &y * &x;
    assert!(max_abs(&(comm - z.map(|v| v * C64::new(0.0, 2.0)))) < 1e-15);
    assert!(pauli(Axis::X, HilbertDims::piston(3).unwrap()).is_err());
}

#[test]
fn dressing_identity_at_zero_coupling_and_bounds() {
    let d = HilbertDims::tls_piston(6).unwrap();
    let u = dressing_unitary(0.0, 1.0, d).unwrap().into_matrix();
    assert!(max_abs(&(u - CMat::identity(12, 12))) < 1e-15);
    assert!(dressing_unitary(1.0, 1.0, d).is_err());
    assert!(dressing_unitary(1.5, 1.0, d).is_err());
}

#[test]
fn dressing_unitary_on_low_block() {
    let n = 64;
    let d = HilbertDims::tls_piston(n).unwrap();
    let u = dressing_unitary(0.1, 1.0, d).unwrap().into_matrix();
    let prod = u.adjoint() * &u;
    for s in 0..2 {
        for i in 0..n / 2 {
            for j in 0..n / 2 {
                let want = if i == j { ONE } else { ZERO };
                assert!((prod[(s * n + i, s * n + j)] - want).norm() <= 1e-8);
            }
        }
    }
    let v = dressing_unitary(-0.1, 1.0, d).unwrap().into_matrix();
    let uv = &u * &v;
    for i in 0..n / 2 {
        for j in 0..n / 2 {
            let want = if i == j { ONE } else { ZERO };
            assert!((uv[(i, j)] - want).norm() <= 1e-8);
        }
    }
}

#[test]
fn dressed_ground_energy() {
    let (g, nu) = (0.2, 1.3);
    let d = HilbertDims::tls_piston(40).unwrap();
    let h = dressed_hamiltonian(2.0, nu, g, d).unwrap().into_matrix();
    // Ground TLS level, piston vacuum: −ω₀/2 − g²/(4ν).
    assert!((h[(40, 40)].re - (-1.0 - g * g / (4.0 * nu))).abs() < 1e-14);
    // The lab Hamiltonian, diagonalized, has the same low spectrum.
    let lab = lab_hamiltonian(2.0, nu, g, d).unwrap().into_matrix();
    let s = eigh(&lab).unwrap();
    assert!((s.eigenvalues[0] - (-1.0 - g * g / (4.0 * nu))).abs() < 1e-9);
}

#[test]
fn eigh_examples() {
    let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(1.0), c(2.0)]));
    assert_eq!(eigh(&m).unwrap().eigenvalues, vec![1.0, 2.0, 3.0]);
    let s = eigh(&pauli2(Axis::X)).unwrap();
    assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15 && (s.eigenvalues[1] - 1.0).abs() < 1e-15);
    let a = fock_annihilation(40);
    let h = a.adjoint() * &a + &a + a.adjoint();
    assert!((eigh(&h).unwrap().eigenvalues[0] + 1.0).abs() < 1e-9);
    let bad = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    assert!(eigh(&bad).is_err());
}

#[test]
fn eigh_reconstructs_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [2, 5, 17] {
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&a + a.adjoint()).scale(0.5);
        let s = eigh(&h).unwrap();
        assert!(max_abs(&(s.reconstruct() - &h)) <= 1e-8 * max_abs(&h));
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn entropy_examples() {
    let d2 = HilbertDims::piston(2).unwrap();
    let pure = DensityOperator::pure(d2, &[ONE, ZERO]).unwrap();
    assert!(von_neumann_entropy(&pure).abs() < 1e-15);
    let mixed = DensityOperator::new(d2, CMat::identity(2, 2).scale(0.5)).unwrap();
    assert!((von_neumann_entropy(&mixed) - 2f64.ln()).abs() < 1e-14);
    let n = 80;
    let th = DensityOperator::new(HilbertDims::piston(n).unwrap(), thermal(1.0, n)).unwrap();
    assert!((von_neumann_entropy(&th) - 4f64.ln()).abs() < 1e-10);
}

#[test]
fn density_operator_rejects_invalid() {
    let d2 = HilbertDims::piston(2).unwrap();
    assert!(DensityOperator::new(d2, CMat::identity(2, 2)).is_err());
    let nonherm = CMat::from_row_slice(2, 2, &[c(0.5), c(0.1), ZERO, c(0.5)]);
    assert!(DensityOperator::new(d2, nonherm).is_err());
    let negative = CMat::from_row_slice(2, 2, &[c(1.5), ZERO, ZERO, c(-0.5)]);
    assert!(DensityOperator::new(d2, negative).is_err());
}

#[test]
fn partial_traces() {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rp = DensityOperator::new(HilbertDims::piston(n).unwrap(), random_density(&mut rng, n)).unwrap();
    let rs = random_density(&mut rng, 2);
    let joint = tensor_tls(&rs, &rp).unwrap();
    let back = partial_trace_tls(&joint).unwrap();
    assert!(max_abs(&(back.matrix() - rp.matrix())) < 1e-14);
    assert!(max_abs(&(partial_trace_piston(joint.matrix(), n) - &rs)) < 1e-14);

    // (|e,0⟩ + |g,1⟩)/√2 → maximally mixed on {|0⟩,|1⟩}.
    let d = HilbertDims::tls_piston(2).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = DensityOperator::pure(d, &[c(h), ZERO, ZERO, c(h)]).unwrap();
    let p = partial_trace_tls(&bell).unwrap();
    assert!(max_abs(&(p.matrix() - CMat::identity(2, 2).scale(0.5))) < 1e-14);

    for _ in 0..20 {
        let r = DensityOperator::new(HilbertDims::tls_piston(5).unwrap(), random_density(&mut rng, 10)).unwrap();
        assert!((partial_trace_tls(&r).unwrap().matrix().trace().re - 1.0).abs() < 1e-12);
    }
    assert!(partial_trace_tls(&rp).is_err());
}

#[test]
fn entropy_is_unitarily_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [3, 6, 10] {
        let dims = HilbertDims::piston(d).unwrap();
        let rho = random_density(&mut rng, d);
        let u = random_unitary(&mut rng, d);
        let s0 = von_neumann_entropy(&DensityOperator::new(dims, rho.clone()).unwrap());
        let rotated = hermitize(&(&u * rho * u.adjoint()));
        let s1 = von_neumann_entropy(&DensityOperator::new(dims, rotated).unwrap());
        assert!((s0 - s1).abs() < 1e-8);
    }
}

#[test]
fn lab_frame_round_trip_of_trace() {
    let d = HilbertDims::tls_piston(20).unwrap();
    let r = DensityOperator::pure(d, &(0..40).map(|k| if k == 20 { ONE } else { ZERO }).collect::<Vec<_>>()).unwrap();
    let lab = to_lab_frame(&r, 0.1, 1.0).unwrap();
    assert!((lab.matrix().trace().re - 1.0).abs() < 1e-10);
}

proptest! {
    #[test]
    fn trace_distance_is_a_metric_bound(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&mut rng, 4);
        let b = random_density(&mut rng, 4);
        let t = trace_distance(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t));
        prop_assert!(trace_distance(&a, &a) < 1e-12);
    }

    #[test]
    fn kron_mixed_product(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&mut rng, 2);
        let b = random_density(&mut rng, 3);
        let c2 = random_density(&mut rng, 2);
        let d3 = random_density(&mut rng, 3);
        let lhs = kron(&a, &b) * kron(&c2, &d3);
        let rhs = kron(&(&a * &c2), &(&b * &d3));
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-13);
    }
}
