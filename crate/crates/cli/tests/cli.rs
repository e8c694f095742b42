use std::path::PathBuf;
use std::process::{Command, Output};

fn qthermo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qthermo")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

/// Data rows of a CSV body, skipping `#` headers and the column line.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines.next().expect("column line").split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect()).collect();
    (columns, data)
}

fn column(columns: &[String], name: &str) -> usize {
    columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("missing column {name}"))
}

#[test]
fn selfcheck_passes_for_small_chain() {
    for g in ["0.3", "0"] {
        let out = qthermo(&["selfcheck", "--n-bath", "2", "--g", g]);
        let text = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{text}");
        let checks: Vec<&str> = text.lines().filter(|l| l.starts_with("CHECK")).collect();
        assert!(checks.len() >= 10);
        assert!(checks.iter().all(|l| l.ends_with("PASS")), "{text}");
    }
}

#[test]
fn strict_tolerance_fails_verification() {
    let out = qthermo(&["selfcheck", "--n-bath", "1", "--strict", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).lines().any(|l| l.starts_with("CHECK") && l.ends_with("FAIL")));
}

#[test]
fn configuration_errors_exit_with_two() {
    let path = scratch("bad.toml");
    std::fs::write(&path, "beta = 1.0\nunknown_key = 3\n").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(qthermo(&["timeseries", "--config", p]).status.code(), Some(2));
    assert_eq!(qthermo(&["timeseries", "--beta", "-1"]).status.code(), Some(2));
    assert_eq!(qthermo(&["timeseries", "--model", "oscillator", "--n-bath", "3"]).status.code(), Some(2));
    assert_eq!(qthermo(&["sweep", "--sweep-points", "1"]).status.code(), Some(2));
    assert_eq!(qthermo(&["timeseries", "--tau-prime", "0"]).status.code(), Some(2));
    // trap frequency driven through zero
    let out = qthermo(&["timeseries", "--model", "oscillator", "--n-max", "4", "--alpha=-2", "--omega-s0", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let wrong = scratch("wrong_experiment.toml");
    std::fs::write(&wrong, "experiment = \"sweep\"\n").unwrap();
    assert_eq!(qthermo(&["timeseries", "--config", wrong.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn timeseries_layout_and_weak_limit() {
    let out = qthermo(&["timeseries", "--n-bath", "2", "--g", "0", "--steps", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let (columns, data) = rows(&stdout(&out));
    assert_eq!(columns.len(), 13);
    assert_eq!(data.len(), 65);
    assert!(data.iter().all(|r| r.len() == 13));
    let (dw, dq) = (column(&columns, "delta_W"), column(&columns, "delta_Q"));
    assert!(data.iter().all(|r| r[dw].abs() <= 1e-10 && r[dq].abs() <= 1e-10));
    assert_eq!(data[64][0], 2.0);
}

#[test]
fn no_driving_no_work() {
    let out = qthermo(&["timeseries", "--n-bath", "2", "--alpha-x", "0", "--alpha-z", "0", "--steps", "32"]);
    let (columns, data) = rows(&stdout(&out));
    let w = column(&columns, "W");
    assert!(data.iter().all(|r| r[w].abs() <= 1e-12));
}

#[test]
fn sweep_is_ordered_and_deterministic() {
    let args = ["sweep", "--n-bath", "1", "--steps", "64", "--samples", "4", "--sweep-points", "4"];
    let serial = qthermo(&args);
    let parallel = qthermo(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(serial.status.code(), Some(0));
    let (columns, data) = rows(&stdout(&serial));
    assert_eq!(columns.len(), 5);
    let xs: Vec<f64> = data.iter().map(|r| r[0]).collect();
    assert_eq!(xs, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    // no coupling, no strong/weak difference
    assert!(data[0][1].abs() <= 1e-10 && data[0][2].abs() <= 1e-10 && data[0][4].abs() <= 1e-8);
    assert_eq!(stdout(&serial), stdout(&parallel));
}

#[test]
fn bath_frequency_sweep_has_slope_column() {
    let out = qthermo(&[
        "sweep", "--n-bath", "1", "--steps", "32", "--samples", "2", "--sweep-variable", "omega_b", "--sweep-points", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (columns, data) = rows(&stdout(&out));
    assert_eq!(columns.last().unwrap(), "d_delta_max_W_d_omega_b");
    assert_eq!(data.len(), 3);
    let expected = (data[2][1] - data[0][1]) / (data[2][0] - data[0][0]);
    assert!((data[1][5] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
}

#[test]
fn fluctuation_zero_duration_is_a_point_mass() {
    let out = qthermo(&["fluctuation", "--n-bath", "2", "--tau-prime", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, data) = rows(&stdout(&out));
    assert_eq!(data.len(), 1);
    let r = &data[0];
    assert!(r[0].abs() <= 1e-12 && (r[1] - 1.0).abs() <= 1e-12 && (r[2] - 1.0).abs() <= 1e-12 && r[3].abs() <= 1e-12);
}

#[test]
fn fluctuation_summary_satisfies_jarzynski() {
    let out = qthermo(&["fluctuation", "--n-bath", "2", "--steps", "256", "--dynamics", "direct"]);
    let text = stdout(&out);
    let value = |key: &str| -> String {
        let prefix = format!("# {key} = ");
        text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap().to_string()
    };
    assert!(value("jarzynski_rel_err").parse::<f64>().unwrap() <= 1e-8);
    assert!(value("crooks_max_rel_err").parse::<f64>().unwrap() <= 1e-6);
    assert_eq!(value("support_mismatch"), "none");
    let (_, data) = rows(&text);
    let total: f64 = data.iter().map(|r| r[1]).sum();
    assert!((total - 1.0).abs() <= 1e-10);
}

#[test]
fn reruns_are_bit_identical_and_written_to_file() {
    let path = scratch("series.csv");
    let args = ["timeseries", "--n-bath", "2", "--steps", "32", "--out", path.to_str().unwrap()];
    assert_eq!(qthermo(&args).status.code(), Some(0));
    let first = std::fs::read(&path).unwrap();
    assert_eq!(qthermo(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&path).unwrap());
    assert!(String::from_utf8(first).unwrap().contains("# n_bath = 2"));
}

#[test]
fn flags_override_config_file() {
    let path = scratch("run.toml");
    std::fs::write(&path, "experiment = \"timeseries\"\nn_bath = 1\nn_steps = 16\ng = 0.5\nbeta = 0.5\n").unwrap();
    let p = path.to_str().unwrap();
    let text = stdout(&qthermo(&["timeseries", "--config", p, "--g", "0.2"]));
    assert!(text.contains("# g = 0.2\n") && text.contains("# beta = 0.5\n") && text.contains("# n_bath = 1\n"));
    assert_eq!(rows(&text).1.len(), 17);
}
