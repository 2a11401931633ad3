use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn fhnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhnet")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_header_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhnet(&["simulate", "--config", path_str(&data("pair_small.toml")), "--out", path_str(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,E,E_w,P,S,u_sq_1,w_sq_1,u_l4_1,grad_u_sq_1,u_sq_2,w_sq_2,u_l4_2,grad_u_sq_2,\
         U_sq_1_2,W_sq_1_2,grad_U_sq_1_2,bnd_U_sq_1_2"
    );
    assert!(dir.path().join("summary.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("dissipative_bound") && stdout.contains("decay rate of P"), "{stdout}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let files: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let out = fhnet(&["simulate", "--config", path_str(&data("pair_small.toml")), "--out", path_str(d.path())]);
            assert!(out.status.success());
            std::fs::read(d.path().join("timeseries.csv")).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}

#[test]
fn strict_mode_passes_on_a_well_behaved_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhnet(&["simulate", "--strict", "--config", path_str(&data("pair_small.toml")), "--out", path_str(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn constants_lists_derived_values() {
    let out = fhnet(&["constants", "--config", path_str(&data("pair_small.toml"))]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("C1       = 5.333333e-3"), "{text}");
    assert!(text.contains("mu       = 1.280000e-1"), "{text}");
    assert!(text.contains("K        = undetermined"), "{text}");
}

#[test]
fn invalid_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(data("pair_small.toml")).unwrap().replace("m = 2", "m = 3");
    std::fs::write(&bad, text).unwrap();
    let out = fhnet(&["constants", "--config", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("initial_conditions: expected 3 entries"));
}

struct Row {
    p: f64,
    sync_degree: f64,
    rate: f64,
}

#[test]
fn coupling_sweep_synchronizes_for_every_positive_strength() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhnet(&[
        "sweep",
        "--config",
        path_str(&data("pair_small.toml")),
        "--param",
        "p",
        "--values",
        "0,0.5,1,2,5,10",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "p,sync_degree,decay_rate,p_tail_min_S,R");
    let rows: Vec<Row> = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            Row { p: f[0], sync_degree: f[1], rate: f[2] }
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.p).collect::<Vec<_>>(), [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]);
    assert!(dir.path().join("p_10/timeseries.csv").exists());

    let free = &rows[0];
    for r in &rows[1..] {
        assert!(r.sync_degree < 1e-2 * free.sync_degree, "p={}: {} vs {}", r.p, r.sync_degree, free.sync_degree);
        assert!(r.rate > 5.0 * free.rate, "p={}: rate {}", r.p, r.rate);
    }
    // Strong coupling pins the u-difference, leaving the w-difference to
    // decay at eps*b, so the rate of P approaches 2*eps*b = 0.128 from above.
    let mu = 0.128;
    let strong = &rows[5];
    assert!(strong.rate >= mu && strong.rate < 1.1 * mu, "{}", strong.rate);
    assert!(rows[3].rate >= rows[4].rate && rows[4].rate >= rows[5].rate);
}

#[test]
fn verify_filter_runs_one_scenario() {
    let out = fhnet(&["verify", "--filter", "decay_rate_fitter"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 1, "{text}");
    assert!(text.contains("PASS"));
    assert_eq!(fhnet(&["verify", "--filter", "no_such_scenario"]).status.code(), Some(2));
}

#[test]
fn constants_output_matches_golden_file() {
    let out = fhnet(&["constants", "--config", path_str(&data("pair_small.toml"))]);
    let golden = std::fs::read_to_string(data("pair_small.constants.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), golden);
}
