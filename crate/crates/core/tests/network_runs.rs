use std::path::Path;

use fhnet_core::{
    parse_config, BoundaryPartition, CouplingMode, DomainSpec, InitialCondition, Kinetics, Mesh, ModelParams,
    NetworkState, PartitionSpec, RunParams, Stepper,
};

fn ics() -> Vec<InitialCondition> {
    vec![
        InitialCondition::Random { amplitude: 1.5, seed: 3, w_amplitude: Some(0.3) },
        InitialCondition::Bump { amplitude: 2.0, center: [0.2, 0.7], width: 0.25, base: -1.0, w: 0.1 },
        InitialCondition::Cosine { mean: 0.3, amplitude: 0.8, kx: 2, ky: 1, w: -0.2 },
    ]
}

fn run(mesh: &Mesh, part: &BoundaryPartition, params: ModelParams, run: RunParams, init: NetworkState) -> NetworkState {
    let mut stepper = Stepper::new(mesh, part, params, Kinetics::ClassicCubic, run).unwrap();
    let mut state = init;
    for _ in 0..run.n_steps() {
        stepper.step(&mut state).unwrap();
    }
    state
}

#[test]
fn uncoupled_network_matches_single_neuron_runs_bitwise() {
    let mesh = Mesh::build(DomainSpec::unit_square(9)).unwrap();
    let rp = RunParams::new(0.01, 1.0).with_mode(CouplingMode::Lagged);
    for spec in [PartitionSpec::AllToAll, PartitionSpec::ZeroFlux] {
        let part = BoundaryPartition::build(&mesh, 3, &spec).unwrap();
        let network = run(&mesh, &part, ModelParams::desk_default(0.0, 3), rp, NetworkState::from_initial_conditions(&mesh, &ics()));
        let single = BoundaryPartition::build(&mesh, 1, &PartitionSpec::ZeroFlux).unwrap();
        for (i, ic) in ics().into_iter().enumerate() {
            let alone = run(&mesh, &single, ModelParams::desk_default(0.0, 1), rp, NetworkState::from_initial_conditions(&mesh, &[ic]));
            assert_eq!(network.u[i], alone.u[0], "u of neuron {i}");
            assert_eq!(network.w[i], alone.w[0], "w of neuron {i}");
        }
    }
}

#[test]
fn one_dimensional_pair_synchronizes() {
    let mesh = Mesh::build(DomainSpec::Interval { length: 1.0, n: 33 }).unwrap();
    let part = BoundaryPartition::build(&mesh, 2, &PartitionSpec::AllToAll).unwrap();
    let init = NetworkState::from_initial_conditions(
        &mesh,
        &[InitialCondition::Constant { u: 1.0, w: 0.0 }, InitialCondition::Constant { u: -1.0, w: 0.5 }],
    );
    let end = run(&mesh, &part, ModelParams::desk_default(10.0, 2), RunParams::new(0.01, 100.0), init);
    let diff = end.u[0].iter().zip(&end.u[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-3, "{diff}");
}

#[test]
fn shipped_configs_parse_and_prepare() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path:?}: {e}"));
            cfg.prepare().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 2);
}

#[test]
fn sync_degree_shrinks_as_the_tail_moves_later() {
    use fhnet_core::diagnostics::sync_degree_from;
    use fhnet_core::{run_simulation, Simulation};
    let mesh = Mesh::build(DomainSpec::unit_square(9)).unwrap();
    let partition = BoundaryPartition::build(&mesh, 2, &PartitionSpec::AllToAll).unwrap();
    let initial = NetworkState::from_initial_conditions(&mesh, &ics()[..2]);
    let sim = Simulation {
        mesh,
        partition,
        params: ModelParams::desk_default(10.0, 2),
        kinetics: Kinetics::ClassicCubic,
        run: RunParams::new(0.02, 100.0).with_stride(5),
        c1: 1.0,
    };
    let traj = run_simulation(&sim, initial, |_, _| {}).unwrap();
    let n = traj.len();
    let degrees: Vec<f64> = (1..10).map(|k| sync_degree_from(&traj.samples[k * n / 10..])).collect();
    assert!(degrees.windows(2).all(|w| w[1] <= w[0]), "{degrees:?}");
    assert!(degrees[8] < 1e-2 * degrees[0], "{degrees:?}");
}
