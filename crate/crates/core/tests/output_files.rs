use fhnet_core::report::timeseries_header;
use fhnet_core::verify::determinism_config;
use fhnet_core::{simulate_to_dir, OutputConfig};

#[test]
fn run_directory_contents() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = determinism_config();
    cfg.output = OutputConfig { snapshot_every: 20 };
    let (traj, summary) = simulate_to_dir(&cfg, dir.path()).unwrap();

    let csv = std::fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), timeseries_header(3));
    assert_eq!(lines.count(), traj.len());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["samples"].as_u64().unwrap() as usize, summary.samples);
    let names: Vec<&str> =
        json["checks"]["entries"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"dissipative_bound") && names.contains(&"gronwall"), "{names:?}");

    let snap = std::fs::read_to_string(dir.path().join("snapshots/sample_000020_neuron_2.txt")).unwrap();
    let body: Vec<&str> = snap.lines().collect();
    assert!(body[0].starts_with("# t = "));
    assert_eq!(body[1], "# nx = 9 ny = 9");
    assert_eq!(body[2], "# neuron = 2");
    assert_eq!(body.len(), 3 + 81);
}
