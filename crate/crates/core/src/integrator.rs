//! IMEX time stepping of the 2m-field network.
//!
//! Diffusion and the Robin self-term are implicit, the reaction is explicit,
//! and the linear decay of `w` is implicit. The inter-neuron coupling is
//! implicit in monolithic mode and taken from the previous level in lagged
//! mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{sample_diagnostics, SampleDiagnostics};
use crate::error::{Error, Result};
use crate::kinetics::Kinetics;
use crate::mesh::Mesh;
use crate::operators::NetworkOperator;
use crate::params::{CouplingMode, ModelParams, RunParams, TimeScheme};
use crate::partition::BoundaryPartition;
use crate::solver::solve_spd;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub t: f64,
    pub u: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl NetworkState {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().flatten().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.w).flatten().all(|v| v.is_finite())
    }

    /// Every neuron starts from the same `(u, w)` constants.
    pub fn uniform(mesh: &Mesh, m: usize, u: f64, w: f64) -> Self {
        let n = mesh.n_nodes();
        Self { t: 0.0, u: vec![vec![u; n]; m], w: vec![vec![w; n]; m] }
    }

    pub fn from_initial_conditions(mesh: &Mesh, ics: &[InitialCondition]) -> Self {
        let (u, w) = ics.iter().map(|ic| ic.sample(mesh)).unzip();
        Self { t: 0.0, u, w }
    }
}

fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}

fn one() -> u32 {
    1
}

/// Initial data of one neuron, interpolated at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        u: f64,
        #[serde(default)]
        w: f64,
    },
    /// `base + amplitude · exp(−|x − center|² / width²)`.
    Bump {
        amplitude: f64,
        #[serde(default = "default_center")]
        center: [f64; 2],
        width: f64,
        #[serde(default)]
        base: f64,
        #[serde(default)]
        w: f64,
    },
    /// `mean + amplitude · cos(kx π x / lx) cos(ky π y / ly)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        kx: u32,
        #[serde(default = "one")]
        ky: u32,
        #[serde(default)]
        w: f64,
    },
    /// Independent uniform samples in `[−amplitude, amplitude]` for `u`, and
    /// in `[−w_amplitude, w_amplitude]` for `w`.
    Random {
        amplitude: f64,
        seed: u64,
        #[serde(default)]
        w_amplitude: Option<f64>,
    },
}

impl InitialCondition {
    pub fn sample(&self, mesh: &Mesh) -> (Vec<f64>, Vec<f64>) {
        let n = mesh.n_nodes();
        match *self {
            InitialCondition::Constant { u, w } => (vec![u; n], vec![w; n]),
            InitialCondition::Bump { amplitude, center, width, base, w } => {
                let u = mesh.sample(|x, y| {
                    let r2 = (x - center[0]).powi(2) + if mesh.is_1d() { 0.0 } else { (y - center[1]).powi(2) };
                    base + amplitude * (-r2 / (width * width)).exp()
                });
                (u, vec![w; n])
            }
            InitialCondition::Cosine { mean, amplitude, kx, ky, w } => {
                let (lx, ly) = match mesh.spec {
                    crate::mesh::DomainSpec::Interval { length, .. } => (length, 1.0),
                    crate::mesh::DomainSpec::Rectangle { lx, ly, .. } => (lx, ly),
                };
                let pi = std::f64::consts::PI;
                let u = mesh.sample(|x, y| {
                    let cy = if mesh.is_1d() { 1.0 } else { (ky as f64 * pi * y / ly).cos() };
                    mean + amplitude * (kx as f64 * pi * x / lx).cos() * cy
                });
                (u, vec![w; n])
            }
            InitialCondition::Random { amplitude, seed, w_amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let wa = w_amplitude.unwrap_or(amplitude);
                let u = (0..n).map(|_| rng.random_range(-1.0..=1.0) * amplitude).collect();
                let w = (0..n).map(|_| rng.random_range(-1.0..=1.0) * wa).collect();
                (u, w)
            }
        }
    }
}

/// Advances a [`NetworkState`] by one step at a time.
///
/// Parameters are used as given; validate them first when they come from
/// user input.
pub struct Stepper {
    net: NetworkOperator,
    kinetics: Kinetics,
    params: ModelParams,
    run: RunParams,
    mode: CouplingMode,
    euler: Systems,
    bdf2: Option<Systems>,
    /// `(u^{n−1}, w^{n−1}, N^{n−1}, C u^{n−1})` for the two-step scheme.
    history: Option<History>,
    steps_taken: usize,
}

struct History {
    u: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    reaction: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
}

enum Systems {
    Monolithic(CsrMatrix),
    Lagged(Vec<CsrMatrix>),
}

impl Systems {
    fn build(net: &NetworkOperator, mode: CouplingMode, alpha: f64, beta: f64) -> Self {
        match mode {
            CouplingMode::Monolithic => Systems::Monolithic(net.monolithic_system(alpha, beta)),
            CouplingMode::Lagged => Systems::Lagged((0..net.m()).map(|i| net.neuron_system(i, alpha, beta)).collect()),
        }
    }
}

impl Stepper {
    pub fn new(
        mesh: &Mesh,
        partition: &BoundaryPartition,
        params: ModelParams,
        kinetics: Kinetics,
        run: RunParams,
    ) -> Result<Self> {
        if partition.m() != params.m {
            return Err(Error::SizeMismatch { expected: params.m, got: partition.m() });
        }
        let mode = run.coupling_mode_for(params.m);
        let net = NetworkOperator::assemble(mesh, partition, params.d, params.p, mode)?;
        let euler = Systems::build(&net, mode, 1.0, run.dt);
        let bdf2 = (run.scheme == TimeScheme::ImexBdf2).then(|| Systems::build(&net, mode, 3.0, 2.0 * run.dt));
        Ok(Self { net, kinetics, params, run, mode, euler, bdf2, history: None, steps_taken: 0 })
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    pub fn operator(&self) -> &NetworkOperator {
        &self.net
    }

    fn reaction(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let (sigma, j) = (self.params.sigma, self.params.j);
        u.iter().zip(w).map(|(&u, &w)| self.kinetics.f(u) - sigma * w + j).collect()
    }

    fn coupling(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.net.neurons().iter().map(|op| op.apply_coupling_weighted(u)).collect()
    }

    /// Solves the implicit u-system for every neuron given weighted right-hand sides.
    fn solve(&self, systems: &Systems, rhs: Vec<Vec<f64>>, guess: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let (tol, max_iter) = (self.run.solver_tol, self.run.solver_max_iter);
        match systems {
            Systems::Monolithic(a) => {
                let n = self.net.n();
                let b: Vec<f64> = rhs.into_iter().flatten().collect();
                let x0: Vec<f64> = guess.iter().flatten().copied().collect();
                let (x, _) = solve_spd(a, &b, Some(&x0), tol, max_iter)?;
                Ok(x.chunks(n).map(<[f64]>::to_vec).collect())
            }
            Systems::Lagged(mats) => mats
                .par_iter()
                .zip(rhs.par_iter())
                .zip(guess.par_iter())
                .map(|((a, b), x0)| solve_spd(a, b, Some(x0), tol, max_iter).map(|(x, _)| x))
                .collect(),
        }
    }

    /// Advances `state` by one step of the configured scheme. The first step
    /// of the two-step scheme is an Euler step.
    pub fn step(&mut self, state: &mut NetworkState) -> Result<()> {
        let dt = self.run.dt;
        let mass = self.net.mass().to_vec();
        let (eps, a, b) = (self.params.epsilon, self.params.a, self.params.b);
        let reaction: Vec<Vec<f64>> = state.u.iter().zip(&state.w).map(|(u, w)| self.reaction(u, w)).collect();
        let lagged = self.mode == CouplingMode::Lagged;
        let coupling = if lagged { Some(self.coupling(&state.u)?) } else { None };

        let (u_new, w_new) = match (&self.bdf2, &self.history) {
            (Some(bdf2), Some(h)) => {
                let rhs = (0..self.net.m())
                    .map(|i| {
                        (0..mass.len())
                            .map(|k| {
                                let mut r = mass[k]
                                    * (4.0 * state.u[i][k] - h.u[i][k]
                                        + 2.0 * dt * (2.0 * reaction[i][k] - h.reaction[i][k]));
                                if let Some(c) = &coupling {
                                    r += 2.0 * dt * (2.0 * c[i][k] - h.coupling[i][k]);
                                }
                                r
                            })
                            .collect()
                    })
                    .collect();
                let u_new = self.solve(bdf2, rhs, &state.u)?;
                let denom = 3.0 + 2.0 * dt * eps * b;
                let w_new = (0..self.net.m())
                    .map(|i| {
                        (0..mass.len())
                            .map(|k| {
                                (4.0 * state.w[i][k] - h.w[i][k] + 2.0 * dt * eps * (u_new[i][k] + a)) / denom
                            })
                            .collect()
                    })
                    .collect();
                (u_new, w_new)
            }
            _ => {
                let rhs = (0..self.net.m())
                    .map(|i| {
                        (0..mass.len())
                            .map(|k| {
                                let mut r = mass[k] * (state.u[i][k] + dt * reaction[i][k]);
                                if let Some(c) = &coupling {
                                    r += dt * c[i][k];
                                }
                                r
                            })
                            .collect()
                    })
                    .collect();
                let u_new = self.solve(&self.euler, rhs, &state.u)?;
                let w_new = u_new
                    .iter()
                    .zip(&state.w)
                    .map(|(u, w): (&Vec<f64>, &Vec<f64>)| {
                        u.iter().zip(w).map(|(&u, &w)| w_update(w, u, dt, eps, a, b)).collect()
                    })
                    .collect();
                (u_new, w_new)
            }
        };

        if self.bdf2.is_some() {
            let u_old = std::mem::replace(&mut state.u, u_new);
            let w_old = std::mem::replace(&mut state.w, w_new);
            self.history = Some(History {
                u: u_old,
                w: w_old,
                reaction,
                coupling: coupling.unwrap_or_default(),
            });
        } else {
            state.u = u_new;
            state.w = w_new;
        }
        self.steps_taken += 1;
        state.t = self.steps_taken as f64 * dt;

        let max_abs = state.max_abs_u();
        if !state.is_finite() || !(max_abs <= self.run.blowup_guard) {
            return Err(Error::BlowUp { t: state.t, max_abs });
        }
        Ok(())
    }
}

/// Implicit-in-decay Euler update of the recovery variable.
pub fn w_update(w: f64, u_new: f64, dt: f64, epsilon: f64, a: f64, b: f64) -> f64 {
    (w + dt * epsilon * (u_new + a)) / (1.0 + dt * epsilon * b)
}

/// Samples of a run with diagnostics attached.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<SampleDiagnostics>,
    pub final_state: NetworkState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Everything a run needs besides its initial state.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub mesh: Mesh,
    pub partition: BoundaryPartition,
    pub params: ModelParams,
    pub kinetics: Kinetics,
    pub run: RunParams,
    /// Weight of `‖u‖²` in the weighted energy.
    pub c1: f64,
}

/// Runs from `initial` to `t_end`, recording diagnostics at t = 0, every
/// `output_stride` steps, and at the final step. `observer` sees each
/// recorded state together with its sample index.
pub fn run_simulation<F>(sim: &Simulation, initial: NetworkState, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(usize, &NetworkState),
{
    sim.run.validate()?;
    if initial.m() != sim.params.m {
        return Err(Error::SizeMismatch { expected: sim.params.m, got: initial.m() });
    }
    let mut stepper = Stepper::new(&sim.mesh, &sim.partition, sim.params, sim.kinetics, sim.run)?;
    let mut state = initial;
    state.t = 0.0;
    let mut times = vec![0.0];
    let mut samples = vec![sample_diagnostics(&state, &sim.mesh, sim.c1)];
    observer(0, &state);
    let n_steps = sim.run.n_steps();
    for step in 1..=n_steps {
        stepper.step(&mut state).map_err(|e| Error::Step { step, source: Box::new(e) })?;
        if step.is_multiple_of(sim.run.output_stride) || step == n_steps {
            times.push(state.t);
            samples.push(sample_diagnostics(&state, &sim.mesh, sim.c1));
            observer(samples.len() - 1, &state);
        }
    }
    Ok(Trajectory { times, samples, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;
    use crate::partition::PartitionSpec;

    #[test]
    fn single_w_step_by_hand() {
        let w1 = w_update(0.0, 0.0, 0.1, 0.08, 0.7, 0.8);
        assert!((w1 - 0.0056 / 1.0064).abs() < 1e-15);
        let mut w = 0.0;
        for _ in 0..200_000 {
            w = w_update(w, 0.0, 0.1, 0.08, 0.7, 0.8);
        }
        assert!((w - 0.875).abs() < 1e-12);
    }

    #[test]
    fn random_initial_data_is_seeded() {
        let mesh = Mesh::build(DomainSpec::unit_square(5)).unwrap();
        let ic = InitialCondition::Random { amplitude: 5.0, seed: 7, w_amplitude: None };
        let (u1, w1) = ic.sample(&mesh);
        let (u2, w2) = ic.sample(&mesh);
        assert_eq!(u1, u2);
        assert_eq!(w1, w2);
        assert!(u1.iter().all(|v| v.abs() <= 5.0));
        assert!(u1.iter().any(|v| v.abs() > 1.0));
    }

    #[test]
    fn zero_kinetics_diffusion_dissipates() {
        let mesh = Mesh::build(DomainSpec::unit_square(9)).unwrap();
        let part = BoundaryPartition::build(&mesh, 2, &PartitionSpec::AllToAll).unwrap();
        let params = ModelParams { d: 1.0, sigma: 0.0, j: 0.0, epsilon: 0.0, a: 0.7, b: 0.8, p: 3.0, m: 2 };
        let run = RunParams::new(1e-3, 0.2);
        let mut stepper = Stepper::new(&mesh, &part, params, Kinetics::Zero, run).unwrap();
        let mut state = NetworkState::from_initial_conditions(
            &mesh,
            &[
                InitialCondition::Random { amplitude: 1.0, seed: 1, w_amplitude: None },
                InitialCondition::Bump { amplitude: 2.0, center: [0.2, 0.7], width: 0.3, base: 0.0, w: 0.0 },
            ],
        );
        let norm = |s: &NetworkState| -> f64 {
            s.u.iter().map(|u| crate::operators::volume_integral(&mesh, u, 2)).sum()
        };
        let mut prev = norm(&state);
        for _ in 0..200 {
            stepper.step(&mut state).unwrap();
            let now = norm(&state);
            assert!(now <= prev * (1.0 + 1e-12), "{now} > {prev}");
            prev = now;
        }
    }

    fn lagged_vs_monolithic(p: f64, dt: f64, t_end: f64) -> f64 {
        let mesh = Mesh::build(DomainSpec::unit_square(17)).unwrap();
        let part = BoundaryPartition::build(&mesh, 2, &PartitionSpec::AllToAll).unwrap();
        let params = ModelParams::desk_default(p, 2);
        let ics = [
            InitialCondition::Cosine { mean: 1.0, amplitude: 0.5, kx: 1, ky: 1, w: 0.0 },
            InitialCondition::Bump { amplitude: 1.5, center: [0.3, 0.4], width: 0.25, base: -1.0, w: 0.3 },
        ];
        let mut finals = Vec::new();
        for mode in [CouplingMode::Lagged, CouplingMode::Monolithic] {
            let run = RunParams::new(dt, t_end).with_mode(mode);
            let mut stepper = Stepper::new(&mesh, &part, params, Kinetics::ClassicCubic, run).unwrap();
            let mut state = NetworkState::from_initial_conditions(&mesh, &ics);
            for _ in 0..run.n_steps() {
                stepper.step(&mut state).unwrap();
            }
            finals.push(state);
        }
        let (l, mo) = (&finals[0], &finals[1]);
        let diff: f64 = l.u.iter().flatten().zip(mo.u.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum();
        let scale: f64 = mo.u.iter().flatten().map(|a| a * a).sum();
        (diff / scale).sqrt()
    }

    #[test]
    fn lagged_and_monolithic_agree_under_weak_coupling() {
        let rel = lagged_vs_monolithic(0.05, 1e-3, 0.5);
        assert!(rel < 1e-4, "relative difference {rel}");
    }

    #[test]
    fn lagged_splitting_error_is_first_order() {
        let coarse = lagged_vs_monolithic(2.0, 1e-3, 0.25);
        let fine = lagged_vs_monolithic(2.0, 5e-4, 0.25);
        let order = (coarse / fine).log2();
        assert!((0.9..1.2).contains(&order), "order {order}");
    }

    #[test]
    fn cosine_mode_solve_is_recovered() {
        // (M − dt S) u* = rhs built from u*, then solved back.
        let mesh = Mesh::build(DomainSpec::unit_square(33)).unwrap();
        let part = BoundaryPartition::build(&mesh, 2, &PartitionSpec::ZeroFlux).unwrap();
        let net = NetworkOperator::assemble(&mesh, &part, 1.0, 0.0, CouplingMode::Lagged).unwrap();
        let pi = std::f64::consts::PI;
        let exact = mesh.sample(|x, y| (pi * x).cos() * (pi * y).cos());
        let a = net.neuron_system(0, 1.0, 0.01);
        let rhs = a.mul(&exact);
        let tol = 1e-10;
        let (x, _) = solve_spd(&a, &rhs, None, tol, 2000).unwrap();
        let err = x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= tol * 10.0, "{err}");
    }

    #[test]
    fn blow_up_is_reported() {
        let mesh = Mesh::build(DomainSpec::Interval { length: 1.0, n: 5 }).unwrap();
        let part = BoundaryPartition::build(&mesh, 2, &PartitionSpec::ZeroFlux).unwrap();
        let params = ModelParams::desk_default(0.0, 2);
        let kin = Kinetics::Cubic { c3: -1.0, c2: 0.0, c1: 0.0, c0: 0.0 };
        let mut run = RunParams::new(0.5, 50.0);
        run.blowup_guard = 1e3;
        let sim = Simulation { mesh: mesh.clone(), partition: part, params, kinetics: kin, run, c1: 1.0 };
        let state = NetworkState::uniform(&mesh, 2, -10.0, 0.0);
        match run_simulation(&sim, state, |_, _| {}) {
            Err(Error::Step { step, source }) => {
                assert!(step >= 1);
                assert!(matches!(*source, Error::BlowUp { .. }));
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
