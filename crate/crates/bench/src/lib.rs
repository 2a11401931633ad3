//! Shared fixtures for the benchmarks.

use fhnet_core::{
    BoundaryPartition, DomainSpec, InitialCondition, Kinetics, Mesh, ModelParams, NetworkState, PartitionSpec,
    RunParams, Stepper,
};

pub struct Fixture {
    pub mesh: Mesh,
    pub partition: BoundaryPartition,
    pub params: ModelParams,
    pub state: NetworkState,
}

/// `m` neurons on an `n × n` unit square, all-to-all coupling, seeded random data.
pub fn fixture(n: usize, m: usize, p: f64) -> Fixture {
    let mesh = Mesh::build(DomainSpec::unit_square(n)).expect("valid mesh");
    let partition = BoundaryPartition::build(&mesh, m, &PartitionSpec::AllToAll).expect("valid partition");
    let ics: Vec<InitialCondition> = (0..m as u64)
        .map(|seed| InitialCondition::Random { amplitude: 2.0, seed, w_amplitude: Some(0.5) })
        .collect();
    let state = NetworkState::from_initial_conditions(&mesh, &ics);
    Fixture { mesh, partition, params: ModelParams::desk_default(p, m), state }
}

impl Fixture {
    pub fn stepper(&self, run: RunParams) -> Stepper {
        Stepper::new(&self.mesh, &self.partition, self.params, Kinetics::ClassicCubic, run).expect("valid stepper")
    }
}
