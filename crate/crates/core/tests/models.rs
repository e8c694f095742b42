use qthermo::c64;
use qthermo::models::*;
use qthermo::operators::*;
use qthermo::thermo::log_partition;

fn spin(n: usize, g: f64) -> SpinModel {
    SpinModel::new(SpinParams { n_bath: n, g, ..Default::default() }).unwrap()
}

/// Conjugates the uncoupled Hamiltonian with a mapping built from the full generator.
fn conjugated(model: &SpinModel, t: f64) -> Operator {
    let u = herm_exp(&model.generator().full(), c64::new(0.0, model.coupling())).unwrap();
    conjugate(&u, &model.uncoupled_hamiltonian(t).unwrap()).unwrap()
}

#[test]
fn analytic_matches_conjugation() {
    for n in 1..=6 {
        for g in [0.1, 0.5, 1.0] {
            let m = spin(n, g);
            for t in [0.0, 1.0, 2.0] {
                let d = m.total_hamiltonian(t).unwrap().max_abs_diff(&conjugated(&m, t));
                assert!(d <= 1e-12, "n={n} g={g} t={t}: {d:e}");
            }
        }
    }
}

#[test]
fn periodic_chain_also_maps() {
    let m = SpinModel::new(SpinParams { n_bath: 4, g: 0.7, boundary: Boundary::Periodic, ..Default::default() }).unwrap();
    assert!(m.total_hamiltonian(1.0).unwrap().max_abs_diff(&conjugated(&m, 1.0)) <= 1e-12);
    assert_eq!(m.params().bonds().len(), 4);
    let two = SpinParams { n_bath: 2, boundary: Boundary::Periodic, ..Default::default() };
    assert_eq!(two.bonds().len(), 1);
}

#[test]
fn dressed_parts_sum_to_total() {
    let m = spin(3, 0.8);
    let parts = m.dressed_parts(1.3).unwrap();
    assert!(parts.assemble().max_abs_diff(&m.total_hamiltonian(1.3).unwrap()) <= 1e-12);
    assert_eq!(parts.system.max_abs_diff(&m.system_hamiltonian(1.3).unwrap()), 0.0);
    let art = m.artifacts(0.5).unwrap();
    for op in [&art.system, &art.bath, &art.generator, &art.uncoupled, &art.total, &art.dressed.interaction] {
        assert!(op.hermiticity_deviation() <= 1e-12);
    }
}

#[test]
fn single_bath_spin() {
    let m = spin(1, 0.0);
    let expected = pauli::z().scale_real(-1.0);
    assert_eq!(m.bath_hamiltonian().max_abs_diff(&expected), 0.0);
}

#[test]
fn system_spectrum_at_start() {
    let m = spin(6, 0.3);
    let e = m.system_hamiltonian(0.0).unwrap().eigh().unwrap();
    let r = (1.0f64 + 2.5 * 2.5).sqrt();
    assert!((e.min() + r).abs() < 1e-13 && (e.max() - r).abs() < 1e-13);
}

#[test]
fn generator_two_bath_spins_by_index() {
    // basis index bits: system is the most significant
    let m = spin(2, 0.3);
    let g = m.generator().full();
    for i in 0..8usize {
        for j in 0..8usize {
            let flipped = i ^ j;
            let expected = if flipped == 0b110 || flipped == 0b101 { 0.5 } else { 0.0 };
            assert_eq!(g.get(i, j), c64::new(expected, 0.0), "({i},{j})");
        }
    }
}

#[test]
fn zero_coupling_is_uncoupled() {
    let m = spin(3, 0.0);
    assert!(m.total_hamiltonian(0.7).unwrap().max_abs_diff(&m.uncoupled_hamiltonian(0.7).unwrap()) < 1e-15);
    assert_eq!(m.interaction(0.7).max_abs(), 0.0);
}

#[test]
fn interaction_linear_in_small_g() {
    let linear_gap = |g: f64| {
        let m = spin(3, g);
        let p = m.params();
        let n = 3;
        let mut sx = Operator::zeros(8);
        let mut sy = Operator::zeros(8);
        for k in 0..n {
            sx = &sx + &embed_site(&pauli::x(), k, n, 2).unwrap();
            sy = &sy + &embed_site(&pauli::y(), k, n, 2).unwrap();
        }
        let lz = p.lambda_z(0.0);
        let linear = &kron(&pauli::x(), &sy).scale_real(-g * p.omega_b) + &kron(&pauli::y(), &sx).scale_real(g * lz);
        m.interaction(0.0).max_abs_diff(&linear)
    };
    let ratio = linear_gap(2e-3) / linear_gap(1e-3);
    assert!((ratio - 4.0).abs() < 0.05, "{ratio}");

    let norms: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&g| spin(3, g).interaction(1.0).max_abs() / g).collect();
    assert!((norms[1] - norms[2]).abs() < (norms[0] - norms[1]).abs());
    assert!((norms[1] - norms[2]).abs() / norms[2] < 1e-3);
}

#[test]
fn spectrum_and_partition_preserved() {
    let beta = 1.0;
    for g in [0.0, 0.5, 1.0] {
        let m = spin(6, g);
        let zb = log_partition(m.bath_hamiltonian(), beta).unwrap();
        for t in [0.0, 1.0, 2.0] {
            let z = log_partition(&m.total_hamiltonian(t).unwrap(), beta).unwrap();
            let zs = log_partition(&m.system_hamiltonian(t).unwrap(), beta).unwrap();
            assert!(((z - zs - zb).exp() - 1.0).abs() <= 1e-10);
        }
        let mut a = m.total_hamiltonian(2.0).unwrap().eigh().unwrap().values;
        let mut b = m.uncoupled_hamiltonian(2.0).unwrap().eigh().unwrap().values;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-9));
    }
}

#[test]
fn parameter_validation() {
    assert!(SpinModel::new(SpinParams { n_bath: 0, ..Default::default() }).is_err());
    assert!(SpinModel::new(SpinParams { g: -0.1, ..Default::default() }).is_err());
    assert!("ring".parse::<Boundary>().is_err());
    assert_eq!("periodic".parse::<Boundary>().unwrap(), Boundary::Periodic);
}

#[test]
fn rotation_identity() {
    assert!(rotation_identity_residual(0.0, 1, 1).unwrap() <= 1e-15);
    for g in [0.3, 0.7, std::f64::consts::FRAC_PI_2] {
        for n in 1..=3 {
            assert!(rotation_identity_residual(g, 1, n).unwrap() <= 1e-11);
        }
    }
    assert!(rotation_identity_residual(0.7, 2, 3).unwrap() <= 1e-11);
}

#[test]
fn rotation_single_spins_against_series() {
    // oracle: Taylor series for exp(i g Jx ⊗ σx) with g = π/2
    let g = std::f64::consts::FRAC_PI_2;
    let a = kron(&pauli::x().scale_real(0.5), &pauli::x());
    let mut term = Operator::identity(4);
    let mut u = Operator::identity(4);
    for k in 1..60 {
        term = (&term * &a).scale(c64::new(0.0, g / k as f64));
        u = &u + &term;
    }
    let jz = kron(&pauli::z().scale_real(0.5), &Operator::identity(2));
    let lhs = &(&u * &jz) * &u.adjoint();
    // cos(gσx) = cos g · I and sin(gσx) = sin g · σx for a single Pauli
    let rhs = &jz.scale_real(g.cos()) + &kron(&pauli::y().scale_real(0.5), &pauli::x()).scale_real(g.sin());
    assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    assert!(rotation_identity_residual(g, 1, 1).unwrap() <= 1e-12);
}

fn oscillator(g: f64, n_max: usize) -> OscillatorModel {
    OscillatorModel::new(OscillatorParams { g, n_max_sys: n_max, n_max_bath: n_max, ..Default::default() }).unwrap()
}

#[test]
fn oscillator_harmonic_spectrum() {
    let m = OscillatorModel::new(OscillatorParams { alpha: 0.0, n_max_sys: 20, n_max_bath: 4, ..Default::default() }).unwrap();
    let e = m.system_hamiltonian(0.0).unwrap().eigh().unwrap().values;
    let w = m.params().omega_s0;
    // the truncated top level sits elsewhere in the spectrum
    for n in 0..=18 {
        let target = w * (n as f64 + 0.5);
        assert!(e.iter().any(|v| (v - target).abs() < 1e-8), "level {n}");
    }
    let b = m.bath_hamiltonian();
    for n in 0..5 {
        assert_eq!(b.get(n, n).re, n as f64);
    }
}

#[test]
fn canonical_commutator_low_block() {
    let m = oscillator(0.1, 12);
    let (x, p) = (m.position(), m.momentum());
    let comm = &(x * p) - &(p * x);
    for i in 0..=10 {
        for j in 0..=10 {
            let expected = if i == j { c64::new(0.0, 1.0) } else { c64::new(0.0, 0.0) };
            assert!((comm.get(i, j) - expected).norm() <= 1e-10);
        }
    }
}

#[test]
fn oscillator_frequency_must_stay_positive() {
    let m = OscillatorModel::new(OscillatorParams { alpha: -1.0, n_max_sys: 4, n_max_bath: 4, ..Default::default() }).unwrap();
    let err = m.system_hamiltonian(1.5).unwrap_err();
    assert!(err.to_string().contains("protocol drives frequency nonpositive"));
    assert!(OscillatorModel::new(OscillatorParams { n_max_sys: 70, n_max_bath: 70, ..Default::default() }).is_err());
}

#[test]
fn oscillator_mapping_converges_with_cutoff() {
    let zero = oscillator(0.0, 10).mapped_check(0.5).unwrap();
    assert_eq!(zero.max_deviation, 0.0);
    let coarse = oscillator(0.1, 20).mapped_check(0.0).unwrap();
    let fine = oscillator(0.1, 40).mapped_check(0.0).unwrap();
    assert!(fine.max_deviation < coarse.max_deviation);
    assert!((fine.kinetic_coefficient - 0.51).abs() <= 1e-6);
    assert!((fine.expected_kinetic_coefficient - 0.51).abs() <= 1e-12);
}
