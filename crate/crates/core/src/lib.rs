//! Simulation and analysis of FitzHugh-Nagumo networks coupled through their boundaries.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod kinetics;
pub mod mesh;
pub mod operators;
pub mod params;
pub mod partition;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use config::{parse_config, AnalysisConfig, OutputConfig, PoincareSource, Prepared, RunConfig};
pub use constants::{PoincareConstants, SemigroupEstimates, TheoremConstants};
pub use diagnostics::{CheckEntry, SampleDiagnostics, TheoremCheckReport, TimeWindow};
pub use error::{Error, Result};
pub use integrator::{run_simulation, InitialCondition, NetworkState, Simulation, Stepper, Trajectory};
pub use kinetics::Kinetics;
pub use mesh::{DomainSpec, Mesh};
pub use params::{CouplingMode, ModelParams, RunParams, TimeScheme};
pub use partition::{BoundaryPartition, PartitionSpec};
pub use report::{simulate_to_dir, Summary};
