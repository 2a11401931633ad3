//! Scalar model and run parameters.

use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{Error, Result};

/// Coefficients of the network equations, shared by every neuron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Diffusion coefficient of the membrane potential.
    pub d: f64,
    /// Weight of the recovery variable in the potential equation.
    pub sigma: f64,
    /// External current. Any sign; estimates use `|J|`.
    #[serde(rename = "J")]
    pub j: f64,
    /// Time-scale of the recovery variable.
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    /// Boundary coupling strength. Zero gives a decoupled network.
    pub p: f64,
    /// Number of neurons.
    pub m: usize,
}

impl ModelParams {
    /// Classic FitzHugh-Nagumo recovery parameters used as the repository default.
    pub fn desk_default(p: f64, m: usize) -> Self {
        Self { d: 1.0, sigma: 1.0, j: 0.5, epsilon: 0.08, a: 0.7, b: 0.8, p, m }
    }

    pub fn abs_j(&self) -> f64 {
        self.j.abs()
    }

    /// Checks every constraint in declaration order and reports the first violation.
    pub fn validate(self) -> Result<ValidatedParams> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam { name, requirement: "> 0" })
            }
        }
        positive("d", self.d)?;
        positive("sigma", self.sigma)?;
        if !self.j.is_finite() {
            return Err(Error::InvalidParam { name: "J", requirement: "finite" });
        }
        positive("epsilon", self.epsilon)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::InvalidParam { name: "p", requirement: "≥ 0" });
        }
        if self.m < 2 {
            return Err(Error::InvalidParam { name: "m", requirement: "≥ 2" });
        }
        Ok(ValidatedParams(self))
    }
}

/// Model parameters that passed [`ModelParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedParams(ModelParams);

impl ValidatedParams {
    pub fn into_inner(self) -> ModelParams {
        self.0
    }

    /// The synchronization estimates assume strictly positive coupling.
    pub fn require_coupling(&self) -> Result<()> {
        if self.0.p > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParam { name: "p", requirement: "> 0 for the threshold check" })
        }
    }
}

impl Deref for ValidatedParams {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    /// One N×N solve per neuron, coupling taken from the previous level.
    Lagged,
    /// A single (mN)×(mN) solve with the coupling implicit.
    Monolithic,
}

impl CouplingMode {
    pub fn auto(m: usize) -> Self {
        if m <= 8 {
            CouplingMode::Monolithic
        } else {
            CouplingMode::Lagged
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    #[default]
    ImexEuler,
    ImexBdf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub solver_max_iter: usize,
    /// `None` picks monolithic for m ≤ 8 and lagged above.
    #[serde(default)]
    pub coupling_mode: Option<CouplingMode>,
    #[serde(default)]
    pub scheme: TimeScheme,
    /// Largest admissible `max |u|` before the run is declared blown up.
    #[serde(default = "default_guard")]
    pub blowup_guard: f64,
}

fn default_stride() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    2000
}
fn default_guard() -> f64 {
    1e6
}

impl RunParams {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            output_stride: 1,
            solver_tol: default_tol(),
            solver_max_iter: default_max_iter(),
            coupling_mode: None,
            scheme: TimeScheme::ImexEuler,
            blowup_guard: default_guard(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn with_mode(mut self, mode: CouplingMode) -> Self {
        self.coupling_mode = Some(mode);
        self
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn coupling_mode_for(&self, m: usize) -> CouplingMode {
        self.coupling_mode.unwrap_or_else(|| CouplingMode::auto(m))
    }

    /// Number of steps to reach `t_end`, rounding to the nearest whole step.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParam { name: "dt", requirement: "> 0" });
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(Error::InvalidParam { name: "t_end", requirement: "> dt" });
        }
        if self.output_stride < 1 {
            return Err(Error::InvalidParam { name: "output_stride", requirement: "≥ 1" });
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::InvalidParam { name: "solver_tol", requirement: "in (0, 1)" });
        }
        if self.solver_max_iter < 1 {
            return Err(Error::InvalidParam { name: "solver_max_iter", requirement: "≥ 1" });
        }
        if !(self.blowup_guard > 0.0) {
            return Err(Error::InvalidParam { name: "blowup_guard", requirement: "> 0" });
        }
        Ok(())
    }
}
