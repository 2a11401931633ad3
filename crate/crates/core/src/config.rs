//! TOML run configuration.
//!
//! ```toml
//! [model]
//! d = 1.0
//! sigma = 1.0
//! J = 0.5
//! epsilon = 0.08
//! a = 0.7
//! b = 0.8
//! p = 10.0
//! m = 2
//!
//! [run]
//! dt = 0.01
//! t_end = 200.0
//! output_stride = 10
//!
//! [domain]
//! kind = "rectangle"
//! lx = 1.0
//! ly = 1.0
//! nx = 33
//! ny = 33
//!
//! [kinetics]
//! family = "classic_cubic"
//!
//! [partition]
//! preset = "all_to_all"
//!
//! [[initial_conditions]]
//! kind = "constant"
//! u = 1.0
//!
//! [[initial_conditions]]
//! kind = "random"
//! amplitude = 5.0
//! seed = 7
//! ```
//!
//! `[kinetics]`, `[partition]` (zero-flux by default), `[analysis]` and
//! `[output]` are optional.

use serde::{Deserialize, Serialize};

use crate::constants::{
    compute_theorem_constants, estimate_poincare_constants, PoincareEstimate, SemigroupEstimates, TheoremConstants,
};
use crate::error::{Error, Result};
use crate::integrator::{InitialCondition, NetworkState, Simulation};
use crate::kinetics::{AssumptionConstants, Kinetics};
use crate::mesh::{DomainSpec, Mesh};
use crate::params::{ModelParams, RunParams};
use crate::partition::{BoundaryPartition, PartitionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareSource {
    /// `π²/L_max²` of the interval or rectangle.
    #[default]
    Analytic,
    /// First nonzero eigenvalue of the discrete Neumann Laplacian.
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    #[serde(default = "default_slack")]
    pub dissipative_slack: f64,
    #[serde(default = "default_slack")]
    pub l4_slack: f64,
    /// Relative slack on the right side of the weighted-energy inequality.
    #[serde(default = "default_gronwall_slack")]
    pub gronwall_slack: f64,
    #[serde(default)]
    pub poincare: PoincareSource,
    #[serde(default)]
    pub semigroup: Option<SemigroupEstimates>,
}

fn default_tail() -> f64 {
    crate::diagnostics::DEFAULT_TAIL
}
fn default_slack() -> f64 {
    1.05
}
fn default_gronwall_slack() -> f64 {
    0.05
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tail_fraction: default_tail(),
            dissipative_slack: default_slack(),
            l4_slack: default_slack(),
            gronwall_slack: default_gronwall_slack(),
            poincare: PoincareSource::Analytic,
            semigroup: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a field snapshot every this many recorded samples; 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub run: RunParams,
    pub domain: DomainSpec,
    #[serde(default)]
    pub kinetics: Kinetics,
    #[serde(default = "zero_flux")]
    pub partition: PartitionSpec,
    pub initial_conditions: Vec<InitialCondition>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn zero_flux() -> PartitionSpec {
    PartitionSpec::ZeroFlux
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// A config turned into the objects a run needs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub simulation: Simulation,
    pub assumption: AssumptionConstants,
    pub poincare: PoincareEstimate,
    pub constants: TheoremConstants,
    pub initial: NetworkState,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |path: &str, e: Error| Error::Config(format!("{path}: {e}"));
        self.model.validate().map_err(|e| field("model", e))?;
        self.run.validate().map_err(|e| field("run", e))?;
        self.domain.validate().map_err(|e| field("domain", e))?;
        self.kinetics.validate().map_err(|e| field("kinetics", e))?;
        if self.initial_conditions.len() != self.model.m {
            return Err(Error::Config(format!("initial_conditions: expected {} entries", self.model.m)));
        }
        let a = &self.analysis;
        if !(a.tail_fraction > 0.0 && a.tail_fraction <= 1.0) {
            return Err(Error::Config("analysis.tail_fraction: must be in (0, 1]".into()));
        }
        if !(a.dissipative_slack >= 1.0 && a.l4_slack >= 1.0 && a.gronwall_slack >= 0.0) {
            return Err(Error::Config("analysis: slacks must be ≥ 1 (multiplicative) and ≥ 0 (relative)".into()));
        }
        let mesh = Mesh::build(self.domain)?;
        BoundaryPartition::build(&mesh, self.model.m, &self.partition).map_err(|e| field("partition", e))?;
        Ok(())
    }

    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let mesh = Mesh::build(self.domain)?;
        let partition = BoundaryPartition::build(&mesh, self.model.m, &self.partition)?;
        let assumption = self.kinetics.assumption_constants()?;
        let poincare = estimate_poincare_constants(&mesh)?;
        let pc = poincare.constants(self.analysis.poincare == PoincareSource::Analytic);
        let constants =
            compute_theorem_constants(&self.model, &assumption, mesh.volume(), Some(pc), self.analysis.semigroup)?;
        let initial = NetworkState::from_initial_conditions(&mesh, &self.initial_conditions);
        Ok(Prepared {
            simulation: Simulation {
                mesh,
                partition,
                params: self.model,
                kinetics: self.kinetics,
                run: self.run,
                c1: constants.c1,
            },
            assumption,
            poincare,
            constants,
            initial,
        })
    }

    /// Sets a scalar parameter by name, for sweeps.
    pub fn with_param(&self, name: &str, value: f64) -> Result<RunConfig> {
        let mut cfg = self.clone();
        let m = &mut cfg.model;
        match name {
            "p" => m.p = value,
            "d" => m.d = value,
            "sigma" => m.sigma = value,
            "J" | "j" => m.j = value,
            "epsilon" => m.epsilon = value,
            "a" => m.a = value,
            "b" => m.b = value,
            "dt" => cfg.run.dt = value,
            "t_end" => cfg.run.t_end = value,
            other => return Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
d = 1.0
sigma = 1.0
J = 0.5
epsilon = 0.08
a = 0.7
b = 0.8
p = 2.0
m = 2

[run]
dt = 0.01
t_end = 1.0

[domain]
kind = "rectangle"
lx = 1.0
ly = 1.0
nx = 9
ny = 9

[partition]
preset = "all_to_all"

[[initial_conditions]]
kind = "constant"
u = 1.0

[[initial_conditions]]
kind = "random"
amplitude = 2.0
seed = 5
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.model.m, 2);
        assert_eq!(cfg.kinetics, Kinetics::ClassicCubic);
        assert_eq!(cfg.analysis, AnalysisConfig::default());
        let prepared = cfg.prepare().unwrap();
        assert_eq!(prepared.initial.m(), 2);
        assert!((prepared.constants.c1 - 0.08 * 0.8 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn initial_condition_count_must_match() {
        let text = MINIMAL.replace("m = 2", "m = 3");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.to_string(), "config: initial_conditions: expected 3 entries");
    }

    #[test]
    fn non_involutive_partition_is_reported() {
        let text = MINIMAL.replace(
            "[partition]\npreset = \"all_to_all\"",
            r#"[partition]
preset = "pieces"
pieces = [
  { side = "bottom", map = [2, 1] },
  { side = "right", map = [2, 2] },
  { side = "top", map = [1, 2] },
  { side = "left", map = [1, 2] },
]"#,
        );
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.starts_with("config: partition: partition not involutive"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_config("[model\nd = 1").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn sweep_parameter_override() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.with_param("p", 5.0).unwrap().model.p, 5.0);
        assert!(cfg.with_param("p", -1.0).is_err());
        assert!(cfg.with_param("nope", 1.0).is_err());
    }
}
