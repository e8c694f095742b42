use proptest::prelude::*;
use qthermo::c64;
use qthermo::fluctuation::*;
use qthermo::models::*;
use qthermo::operators::*;
use qthermo::thermo::*;

fn spin(n: usize, g: f64) -> SpinModel {
    SpinModel::new(SpinParams { n_bath: n, g, ..Default::default() }).unwrap()
}

#[test]
fn no_protocol_no_work() {
    let h = spin(2, 0.5).total_hamiltonian(0.0).unwrap();
    let d = tpm_distribution(&h, &h, &Operator::identity(8), 1.0).unwrap();
    assert_eq!(d.bins().len(), 1);
    assert!(d.bins()[0].work.abs() < 1e-12 && (d.bins()[0].probability - 1.0).abs() < 1e-12);
}

#[test]
fn two_level_by_hand() {
    let (hi, hf) = (pauli::z(), pauli::z().scale_real(2.0));
    let d = tpm_distribution(&hi, &hf, &Operator::identity(2), 1.0).unwrap();
    let z = 2.0 * 1.0f64.cosh();
    let bins = d.bins();
    assert_eq!(bins.len(), 2);
    assert!((bins[0].work + 1.0).abs() < 1e-14 && (bins[0].probability - 1.0f64.exp() / z).abs() < 1e-14);
    assert!((bins[1].work - 1.0).abs() < 1e-14 && (bins[1].probability - (-1.0f64).exp() / z).abs() < 1e-14);
}

#[test]
fn merging_respects_tolerance() {
    let d = WorkDistribution::from_pairs(vec![(1.0, 0.25), (1.0 + 1e-12, 0.25), (-2.0, 0.5), (3.0, -1e-13)], 1e-9);
    assert_eq!(d.bins().len(), 2);
    assert!((d.total_probability() - 1.0).abs() < 1e-15);
    assert!(d.bins().windows(2).all(|w| w[1].work - w[0].work > d.merge_tol()));
    assert!((d.mean() - (-0.5)).abs() < 1e-12);
}

#[test]
fn strong_equals_uncoupled_statistics() {
    for g in [0.0, 0.5] {
        let m = spin(2, g);
        let strong = strong_coupling_distribution(&m, 2.0, 1024, 1.0, Direction::Forward, Propagation::ThreeStage).unwrap();
        let bare = uncoupled_distribution(&m, 2.0, 1024, 1.0, Direction::Forward).unwrap();
        let direct = strong_coupling_distribution(&m, 2.0, 1024, 1.0, Direction::Forward, Propagation::Direct).unwrap();
        let tol = if g == 0.0 { 1e-12 } else { 1e-8 };
        assert!(strong.total_variation(&bare) <= tol, "g={g}: {:e}", strong.total_variation(&bare));
        assert!(direct.total_variation(&strong) <= 1e-8);
        assert!((strong.total_probability() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn zero_duration_protocol() {
    let m = spin(2, 0.5);
    let p = WorkProtocol::new(&m, 0.0, 16, 1.0, Propagation::Direct).unwrap();
    let f = p.forward().unwrap();
    assert_eq!(f.bins().len(), 1);
    assert!(f.bins()[0].work.abs() < 1e-12);
    assert!((jarzynski(&f, 1.0) - 1.0).abs() <= 1e-14);
    assert_eq!(p.system_ratio(), 1.0);
    let report = crooks_report(&f, &p.reverse().unwrap(), p.system_ratio(), 1.0);
    assert!(report.max_rel_err < 1e-12 && !report.has_support_mismatch());
}

#[test]
fn mean_work_matches_accumulated_work() {
    let m = spin(2, 0.5);
    let dist = strong_coupling_distribution(&m, 2.0, 4096, 1.0, Direction::Forward, Propagation::Direct).unwrap();
    let series = run_protocol(&m, &ThermoConfig::new(1.0, 2.0, 4096)).unwrap();
    assert!((dist.mean() - series.last().work).abs() <= 1e-6);
}

#[test]
fn characteristic_function_forms_agree() {
    let m = spin(2, 0.5);
    let p = WorkProtocol::new(&m, 2.0, 512, 1.0, Propagation::Direct).unwrap();
    let f = p.forward().unwrap();
    for u in [-10.0, -1.0, 0.0, 1.0, 10.0, 3.7] {
        let u = c64::new(u, 0.0);
        let summed = characteristic_function(&f, u).theta;
        let trace = p.direct_theta(u).theta;
        assert!((summed - trace).norm() <= 1e-8, "u={u}");
        let mirrored = characteristic_function(&f, -u).theta;
        assert!((mirrored - summed.conj()).norm() <= 1e-10);
    }
    assert!((characteristic_function(&f, c64::new(0.0, 0.0)).theta - c64::new(1.0, 0.0)).norm() <= 1e-10);

    // u = iβ turns Θ into the Jarzynski average
    let imag = c64::new(0.0, 1.0);
    let summed = characteristic_function(&f, imag).theta;
    let trace = direct_theta(&m, 2.0, 512, 1.0, imag).unwrap().theta;
    assert!((summed.re - p.system_ratio()).abs() / p.system_ratio() <= 1e-10 && summed.im.abs() <= 1e-12);
    assert!((trace - summed).norm() <= 1e-9);
}

#[test]
fn crooks_and_jarzynski() {
    let m = spin(2, 0.5);
    let p = WorkProtocol::new(&m, 2.0, 4096, 1.0, Propagation::Direct).unwrap();
    let (f, r) = (p.forward().unwrap(), p.reverse().unwrap());
    let report = crooks_report(&f, &r, p.system_ratio(), 1.0);
    assert!(report.max_rel_err <= 1e-6, "{}", report.max_rel_err);
    assert!(!report.has_support_mismatch());
    assert!(report.rows.iter().any(|row| row.rel_err.is_some()));

    let ratio = p.system_ratio();
    assert!((jarzynski(&f, 1.0) - ratio).abs() / ratio <= 1e-10);
    assert!((jarzynski(&r, 1.0) - 1.0 / ratio).abs() * ratio <= 1e-10);

    // the full partition function ratio equals the system one
    let full = log_partition(&m.total_hamiltonian(2.0).unwrap(), 1.0).unwrap()
        - log_partition(&m.total_hamiltonian(0.0).unwrap(), 1.0).unwrap();
    assert!((full.exp() / ratio - 1.0).abs() <= 1e-10);
}

#[test]
fn jarzynski_is_independent_of_coupling() {
    let values: Vec<f64> = [0.0, 1.0]
        .iter()
        .map(|&g| jarzynski(&strong_coupling_distribution(&spin(3, g), 2.0, 1024, 1.0, Direction::Forward, Propagation::Direct).unwrap(), 1.0))
        .collect();
    assert!((values[0] / values[1] - 1.0).abs() <= 1e-5);
}

#[test]
fn crooks_flags_support_mismatch() {
    let f = WorkDistribution::from_pairs(vec![(0.5, 0.5), (1.0, 0.5)], 1e-9);
    let r = WorkDistribution::from_pairs(vec![(-0.5, 1.0)], 1e-9);
    let report = crooks_report(&f, &r, 1.0, 1.0);
    assert_eq!(report.support_mismatch, vec![1.0]);
    assert_eq!(report.rows[1].rel_err, None);
}

#[test]
fn dephased_state_reproduces_gibbs_populations() {
    let m = spin(2, 0.5);
    let p = WorkProtocol::new(&m, 2.0, 128, 0.7, Propagation::Direct).unwrap();
    let rho = gibbs(&m.total_hamiltonian(0.0).unwrap(), 0.7).unwrap().state;
    let a = tpm_distribution_from_state(&p.initial, &p.final_, &p.unitary, &rho).unwrap();
    let b = tpm_from_eigen(&p.initial, &p.final_, &p.unitary, 0.7).unwrap();
    assert!(a.total_variation(&b) <= 1e-12);
}

#[test]
fn naive_statistics() {
    let free = naive_weak_statistics(&spin(3, 0.0), 2.0, 512, 1.0, NaiveOptions::default()).unwrap();
    assert!(free.delta_max_tpm() <= 1e-8);
    // the scalar reading is e^{−β⟨w⟩}, which differs from ⟨e^{−βw}⟩ even without coupling
    assert!(free.delta_max_scalar() > 0.0);
    assert!((jarzynski(&free.tpm_final, 1.0) - free.free_energy_ratio.last().unwrap()).abs() <= 1e-8);

    let coupled = naive_weak_statistics(&spin(3, 0.3), 2.0, 512, 1.0, NaiveOptions::default()).unwrap();
    assert!(coupled.delta_max_tpm() > 1e-3);
    assert!((coupled.tpm.last().unwrap() - jarzynski(&coupled.tpm_final, 1.0)).abs() <= 1e-10 * coupled.tpm.last().unwrap());
    assert_eq!(*coupled.tpm_times.last().unwrap(), 2.0);

    let direct = naive_weak_statistics(
        &spin(3, 0.3),
        2.0,
        512,
        1.0,
        NaiveOptions { dynamics: Dynamics::Direct, tpm_samples: 8 },
    )
    .unwrap();
    assert!((direct.delta_max_scalar() - coupled.delta_max_scalar()).abs() <= 1e-10);
    assert!((direct.tpm.last().unwrap() - coupled.tpm.last().unwrap()).abs() <= 1e-8 * coupled.tpm.last().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_protocols_satisfy_crooks(
        g in 0.0f64..1.2,
        alpha_x in -0.4f64..1.0,
        alpha_z in -0.4f64..0.4,
        beta in 0.3f64..2.0,
        tau in 0.2f64..2.0,
    ) {
        let m = SpinModel::new(SpinParams { n_bath: 2, g, alpha_x, alpha_z, ..Default::default() }).unwrap();
        let p = WorkProtocol::new(&m, tau, 64, beta, Propagation::Direct).unwrap();
        let (f, r) = (p.forward().unwrap(), p.reverse().unwrap());
        prop_assert!((f.total_probability() - 1.0).abs() <= 1e-10);
        prop_assert!(f.bins().iter().all(|b| b.probability >= 0.0));
        let report = crooks_report(&f, &r, p.system_ratio(), beta);
        prop_assert!(report.max_rel_err <= 1e-6, "{}", report.max_rel_err);
        prop_assert!(!report.has_support_mismatch());
        prop_assert!((jarzynski(&f, beta) / p.system_ratio() - 1.0).abs() <= 1e-9);
    }
}
