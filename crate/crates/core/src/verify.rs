//! Built-in acceptance scenarios.
//!
//! Each scenario returns a [`CriterionOutcome`] carrying the measured numbers
//! next to their gates. The scenarios are shared by the `acceptance` test
//! target and the `verify` command.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{AnalysisConfig, OutputConfig, RunConfig};
use crate::constants::{
    compute_R, compute_theorem_constants, estimate_poincare_constants, PoincareConstants, TheoremConstants,
};
use crate::diagnostics::{
    boundary_difference_sum, check_absorbing_ball, check_dissipative_bound, check_gronwall, fit_decay_rate,
    g_sum_from_definition, partner_cross_sum, sync_degree_estimate, CheckEntry, TimeWindow, DEFAULT_TAIL,
};
use crate::error::Result;
use crate::integrator::{run_simulation, InitialCondition, NetworkState, Simulation, Stepper, Trajectory};
use crate::kinetics::Kinetics;
use crate::mesh::{DomainSpec, Mesh, Side};
use crate::operators::NetworkOperator;
use crate::params::{CouplingMode, ModelParams, RunParams, TimeScheme};
use crate::partition::{BoundaryPartition, PartitionSpec, PieceSpec};
use crate::report::simulate_to_dir;
use crate::solver::solve_spd;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub lines: Vec<String>,
}

impl CriterionOutcome {
    fn new(id: u8, name: &'static str) -> Self {
        Self { id, name, passed: true, lines: Vec::new() }
    }

    /// Records a gated measurement.
    fn gate(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    /// Records an ungated measurement.
    fn note(&mut self, line: String) {
        self.lines.push(format!("info {line}"));
    }

    fn error(id: u8, name: &'static str, e: crate::Error) -> Self {
        Self { id, name, passed: false, lines: vec![format!("FAIL error: {e}")] }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "criterion {:>2} {:<26} {}", self.id, self.name, if self.passed { "PASS" } else { "FAIL" })
    }
}

pub const NAMES: [&str; 12] = [
    "operator_correctness",
    "convergence",
    "ode_reduction",
    "permutation_symmetry",
    "dissipativity",
    "gronwall_structure",
    "constants_regression",
    "poincare_estimator",
    "boundary_identity",
    "synchronization",
    "decay_rate_fitter",
    "determinism",
];

fn wrap(id: u8, f: impl FnOnce(&mut CriterionOutcome) -> Result<()>) -> CriterionOutcome {
    let name = NAMES[id as usize - 1];
    let mut out = CriterionOutcome::new(id, name);
    match f(&mut out) {
        Ok(()) => out,
        Err(e) => CriterionOutcome::error(id, name, e),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn observed_order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn all_to_all(mesh: &Mesh, m: usize) -> Result<BoundaryPartition> {
    BoundaryPartition::build(mesh, m, &PartitionSpec::AllToAll)
}

/// Symmetry, kernel and sign of the assembled operators.
pub fn operator_correctness() -> CriterionOutcome {
    wrap(1, |out| {
        let meshes = [
            DomainSpec::Interval { length: 1.0, n: 17 },
            DomainSpec::unit_square(9),
            DomainSpec::unit_square(17),
            DomainSpec::unit_square(33),
            DomainSpec::Rectangle { lx: 2.0, ly: 1.0, nx: 17, ny: 9 },
        ];
        let (mut asym, mut kernel, mut replicated) = (0.0f64, 0.0f64, 0.0f64);
        for spec in meshes {
            let mesh = Mesh::build(spec)?;
            for m in 2..=4 {
                let part = all_to_all(&mesh, m)?;
                for p in [0.0, 1.0, 10.0] {
                    let net = NetworkOperator::assemble(&mesh, &part, 1.0, p, CouplingMode::Monolithic)?;
                    let mono = net.monolithic();
                    asym = asym.max(mono.relative_asymmetry());
                    for op in net.neurons() {
                        asym = asym.max(op.self_form().relative_asymmetry());
                    }
                    let ones = vec![1.0; mono.n()];
                    let y = mono.mul(&ones);
                    let n = mesh.n_nodes();
                    let unweighted: Vec<f64> = y.iter().enumerate().map(|(r, v)| v / mesh.mass()[r % n]).collect();
                    replicated = replicated.max(max_abs(&unweighted));
                    if p == 0.0 {
                        for op in net.neurons() {
                            kernel = kernel.max(max_abs(&op.apply_self(&vec![1.0; n])));
                        }
                    }
                }
            }
        }
        out.gate(asym <= 1e-13, format!("max relative asymmetry {asym:.3e} (gate 1e-13)"));
        out.gate(kernel <= 1e-12, format!("p=0: max |A·1| {kernel:.3e} (gate 1e-12)"));
        out.gate(replicated <= 1e-12, format!("monolithic: max |A·1_rep| {replicated:.3e} (gate 1e-12)"));

        let mut min_eig = f64::INFINITY;
        for (n, m) in [(9, 4), (17, 3), (33, 2)] {
            let mesh = Mesh::build(DomainSpec::unit_square(n))?;
            let net = NetworkOperator::assemble(&mesh, &all_to_all(&mesh, m)?, 1.0, 10.0, CouplingMode::Monolithic)?;
            let e = net.min_eigenvalue_negated();
            out.note(format!("{n}x{n}, m={m}, p=10: min eigenvalue of negated operator {e:.3e}"));
            min_eig = min_eig.min(e);
        }
        out.gate(min_eig >= -1e-10, format!("min eigenvalue {min_eig:.3e} (gate ≥ -1e-10)"));
        Ok(())
    })
}

/// Manufactured pair on the unit square with the whole boundary coupling two
/// neurons: `u₁ = c + s`, `u₂ = c − s` with `c = cos πx cos πy` (zero normal
/// derivative) and `s = X(x) X(y)`, `X = 1 + 2p x(1−x) + k x⁴(1−x)⁴`, which
/// satisfies `∂s/∂ν = −2p s`. Returns nodal values and `d Δ` of each field.
pub struct ManufacturedPair {
    pub p: f64,
    pub k: f64,
}

impl ManufacturedPair {
    fn x(&self, x: f64) -> (f64, f64) {
        let q = x * (1.0 - x);
        let dq = 1.0 - 2.0 * x;
        let val = 1.0 + 2.0 * self.p * q + self.k * q.powi(4);
        let second = -4.0 * self.p + self.k * (12.0 * q * q * dq * dq - 8.0 * q.powi(3));
        (val, second)
    }

    /// `(u₁, u₂, Δu₁, Δu₂)` at a point.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64, f64) {
        let c = (PI * x).cos() * (PI * y).cos();
        let lap_c = -2.0 * PI * PI * c;
        let ((xx, xx2), (xy, xy2)) = (self.x(x), self.x(y));
        let s = xx * xy;
        let lap_s = xx2 * xy + xx * xy2;
        (c + s, c - s, lap_c + lap_s, lap_c - lap_s)
    }
}

/// Max-norm errors of the operator consistency and of one resolvent solve
/// `(I − τA) u = u* − τ dΔu*` on an `n × n` grid.
pub fn manufactured_errors(n: usize, d: f64, pair: &ManufacturedPair, tau: f64) -> Result<(f64, f64)> {
    let mesh = Mesh::build(DomainSpec::unit_square(n))?;
    let net = NetworkOperator::assemble(&mesh, &all_to_all(&mesh, 2)?, d, pair.p, CouplingMode::Monolithic)?;
    let vals: Vec<_> = mesh.coords().iter().map(|&[x, y]| pair.eval(x, y)).collect();
    let exact = vec![vals.iter().map(|v| v.0).collect::<Vec<_>>(), vals.iter().map(|v| v.1).collect()];
    let lap = [vals.iter().map(|v| d * v.2).collect::<Vec<_>>(), vals.iter().map(|v| d * v.3).collect()];

    let applied = net.apply_weighted(&exact)?;
    let mut consistency = 0.0f64;
    for i in 0..2 {
        for k in 0..mesh.n_nodes() {
            consistency = consistency.max((applied[i][k] / mesh.mass()[k] - lap[i][k]).abs());
        }
    }

    let system = net.monolithic_system(1.0, tau);
    let rhs: Vec<f64> = (0..2)
        .flat_map(|i| (0..mesh.n_nodes()).map(move |k| (i, k)))
        .map(|(i, k)| mesh.mass()[k] * (exact[i][k] - tau * lap[i][k]))
        .collect();
    let (sol, _) = solve_spd(&system, &rhs, None, 1e-13, 20_000)?;
    let n_nodes = mesh.n_nodes();
    let solution = (0..2 * n_nodes).map(|r| (sol[r] - exact[r / n_nodes][r % n_nodes]).abs()).fold(0.0, f64::max);
    Ok((consistency, solution))
}

fn two_neuron_ics() -> [InitialCondition; 2] {
    [
        InitialCondition::Cosine { mean: 1.0, amplitude: 0.5, kx: 1, ky: 1, w: 0.0 },
        InitialCondition::Cosine { mean: -1.0, amplitude: 0.5, kx: 1, ky: 1, w: 0.5 },
    ]
}

fn state_distance(a: &NetworkState, b: &NetworkState) -> f64 {
    a.u.iter().chain(&a.w).flatten().zip(b.u.iter().chain(&b.w).flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn integrate(
    mesh: &Mesh,
    part: &BoundaryPartition,
    params: ModelParams,
    kinetics: Kinetics,
    run: RunParams,
    initial: NetworkState,
) -> Result<NetworkState> {
    let mut stepper = Stepper::new(mesh, part, params, kinetics, run)?;
    let mut state = initial;
    for _ in 0..run.n_steps() {
        stepper.step(&mut state)?;
    }
    Ok(state)
}

/// Spatial order from the manufactured pair, temporal order from Euler self-convergence.
pub fn convergence() -> CriterionOutcome {
    wrap(2, |out| {
        let pair = ManufacturedPair { p: 1.0, k: 16.0 };
        let mut cons = Vec::new();
        let mut sol = Vec::new();
        for n in [9, 17, 33] {
            let (c, s) = manufactured_errors(n, 1.0, &pair, 0.1)?;
            out.note(format!("{n}x{n}: consistency error {c:.3e}, resolvent solution error {s:.3e}"));
            cons.push(c);
            sol.push(s);
        }
        for o in observed_order(&cons) {
            out.note(format!("operator consistency order {o:.3}"));
        }
        for o in observed_order(&sol) {
            out.gate(o >= 1.8, format!("spatial order {o:.3} (gate ≥ 1.8)"));
        }

        let mesh = Mesh::build(DomainSpec::unit_square(9))?;
        let part = all_to_all(&mesh, 2)?;
        let params = ModelParams::desk_default(1.0, 2);
        let initial = NetworkState::from_initial_conditions(&mesh, &two_neuron_ics());
        let dt = 0.01;
        let run = |dt: f64| {
            let r = RunParams::new(dt, 1.0).with_mode(CouplingMode::Monolithic);
            let mut r = r;
            r.solver_tol = 1e-13;
            r.solver_max_iter = 10_000;
            integrate(&mesh, &part, params, Kinetics::ClassicCubic, r, initial.clone())
        };
        let reference = run(dt / 16.0)?;
        let errors = [state_distance(&run(dt)?, &reference), state_distance(&run(dt / 2.0)?, &reference)];
        let order = observed_order(&errors)[0];
        out.note(format!("IMEX-Euler error vs dt/16 reference: dt {:.3e}, dt/2 {:.3e}", errors[0], errors[1]));
        out.gate(order >= 0.9, format!("temporal order {order:.3} (gate ≥ 0.9)"));
        Ok(())
    })
}

/// Classical RK4 for the two-variable kinetics, `n` substeps of `h`.
fn rk4_ode(kin: &Kinetics, p: &ModelParams, state: (f64, f64), h: f64, n: usize) -> (f64, f64) {
    let rhs = |u: f64, w: f64| (kin.f(u) - p.sigma * w + p.j, p.epsilon * (u + p.a - p.b * w));
    let (mut u, mut w) = state;
    for _ in 0..n {
        let k1 = rhs(u, w);
        let k2 = rhs(u + 0.5 * h * k1.0, w + 0.5 * h * k1.1);
        let k3 = rhs(u + 0.5 * h * k2.0, w + 0.5 * h * k2.1);
        let k4 = rhs(u + h * k3.0, w + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (u, w)
}

pub const ODE_REDUCTION_DT: f64 = 2.5e-4;

/// Largest deviation of a spatially constant synchronized run from the ODE,
/// and the largest spatial spread of any field, over `[0, t_end]`.
pub fn ode_reduction_error(
    mesh: &Mesh,
    part: &BoundaryPartition,
    params: ModelParams,
    scheme: TimeScheme,
    dt: f64,
    t_end: f64,
    initial: (f64, f64),
) -> Result<(f64, f64)> {
    let mut run = RunParams::new(dt, t_end).with_scheme(scheme);
    run.solver_tol = 1e-13;
    let kin = Kinetics::ClassicCubic;
    let mut stepper = Stepper::new(mesh, part, params, kin, run)?;
    let mut state = NetworkState::uniform(mesh, params.m, initial.0, initial.1);
    let mut reference = initial;
    let (mut err, mut spread) = (0.0f64, 0.0f64);
    for _ in 0..run.n_steps() {
        stepper.step(&mut state)?;
        reference = rk4_ode(&kin, &params, reference, dt / 100.0, 100);
        for field in state.u.iter().chain(&state.w) {
            let (lo, hi) = field.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
            spread = spread.max(hi - lo);
        }
        for i in 0..params.m {
            for k in 0..mesh.n_nodes() {
                err = err.max((state.u[i][k] - reference.0).abs()).max((state.w[i][k] - reference.1).abs());
            }
        }
    }
    Ok((err, spread))
}

fn piece_partition() -> PartitionSpec {
    let piece = |side, from, to, map: &[usize]| PieceSpec { side, from, to, map: map.to_vec() };
    PartitionSpec::Pieces {
        pieces: vec![
            piece(Side::Bottom, 0.0, 0.5, &[2, 1, 3]),
            piece(Side::Bottom, 0.5, 1.0, &[3, 2, 1]),
            piece(Side::Right, 0.0, 1.0, &[1, 3, 2]),
            piece(Side::Top, 0.0, 1.0, &[1, 2, 3]),
            piece(Side::Left, 0.0, 1.0, &[2, 1, 3]),
        ],
    }
}

pub fn ode_reduction() -> CriterionOutcome {
    wrap(3, |out| {
        let mesh = Mesh::build(DomainSpec::unit_square(5))?;
        let params = ModelParams::desk_default(1.0, 3);
        for (label, spec) in [
            ("all_to_all", PartitionSpec::AllToAll),
            ("pieces", piece_partition()),
            ("zero_flux", PartitionSpec::ZeroFlux),
        ] {
            let part = BoundaryPartition::build(&mesh, 3, &spec)?;
            let (err, spread) =
                ode_reduction_error(&mesh, &part, params, TimeScheme::ImexBdf2, ODE_REDUCTION_DT, 10.0, (-1.2, 0.3))?;
            out.gate(
                err <= 1e-6,
                format!("{label}: IMEX-BDF2 dt={ODE_REDUCTION_DT:e} max error vs ODE {err:.3e} (gate 1e-6)"),
            );
            out.note(format!("{label}: max spatial spread {spread:.3e}"));
        }
        Ok(())
    })
}

/// Largest `‖g_i − g_j‖_H` over a run with identical data on every neuron.
pub fn symmetric_run_max_difference(p: f64, t_end: f64, solver_tol: f64) -> Result<f64> {
    let mesh = Mesh::build(DomainSpec::unit_square(17))?;
    let part = all_to_all(&mesh, 3)?;
    let params = ModelParams::desk_default(p, 3);
    let ic = InitialCondition::Bump { amplitude: 2.0, center: [0.3, 0.6], width: 0.3, base: -1.0, w: 0.2 };
    let initial = NetworkState::from_initial_conditions(&mesh, &[ic.clone(), ic.clone(), ic]);
    let mut run = RunParams::new(0.01, t_end);
    run.solver_tol = solver_tol;
    let sim = Simulation { mesh, partition: part, params, kinetics: Kinetics::ClassicCubic, run, c1: 1.0 };
    let traj = run_simulation(&sim, initial, |_, _| {})?;
    Ok(traj.samples.iter().flat_map(|s| s.pair_distances().collect::<Vec<_>>()).fold(0.0, f64::max))
}

/// The per-neuron Jacobi diagonals differ, so CG iterates leave the
/// synchronous subspace by roughly the stopping tolerance.
pub const SYMMETRY_SOLVER_TOL: f64 = 1e-13;

pub fn permutation_symmetry() -> CriterionOutcome {
    wrap(4, |out| {
        for p in [0.0, 1.0, 10.0] {
            let diff = symmetric_run_max_difference(p, 50.0, SYMMETRY_SOLVER_TOL)?;
            out.gate(diff <= 1e-10, format!("m=3, p={p}: max pairwise difference {diff:.3e} (gate 1e-10)"));
        }
        Ok(())
    })
}

/// The long default-kinetics run shared by the dissipativity and Gronwall checks.
pub struct DissipativeRun {
    pub trajectory: Trajectory,
    pub constants: TheoremConstants,
}

pub fn dissipative_run() -> Result<DissipativeRun> {
    let mesh = Mesh::build(DomainSpec::unit_square(33))?;
    let partition = all_to_all(&mesh, 2)?;
    let params = ModelParams::desk_default(1.0, 2);
    let ac = Kinetics::ClassicCubic.assumption_constants()?;
    let pc = estimate_poincare_constants(&mesh)?.constants(true);
    let constants = compute_theorem_constants(&params, &ac, mesh.volume(), Some(pc), None)?;
    let ics = [
        InitialCondition::Random { amplitude: 5.0, seed: 11, w_amplitude: None },
        InitialCondition::Random { amplitude: 5.0, seed: 12, w_amplitude: None },
    ];
    let initial = NetworkState::from_initial_conditions(&mesh, &ics);
    let run = RunParams::new(0.01, 200.0).with_stride(10);
    let sim = Simulation { mesh, partition, params, kinetics: Kinetics::ClassicCubic, run, c1: constants.c1 };
    let trajectory = run_simulation(&sim, initial, |_, _| {})?;
    Ok(DissipativeRun { trajectory, constants })
}

fn entry_line(e: &CheckEntry) -> String {
    format!("{}: worst margin {:.3e} at t={:.3} ({})", e.name, e.worst_margin, e.worst_time, e.detail)
}

pub fn dissipativity(run: &Result<DissipativeRun>) -> CriterionOutcome {
    wrap(5, |out| {
        let run = run.as_ref().map_err(|e| crate::Error::Config(format!("shared run failed: {e}")))?;
        let traj = &run.trajectory;
        out.gate(traj.final_state.is_finite(), format!("no blow-up through t={}", traj.times.last().unwrap()));
        let bound = check_dissipative_bound(traj, &run.constants, 1.05);
        out.gate(bound.passed, entry_line(&bound));
        let ball = check_absorbing_ball(traj, &run.constants, DEFAULT_TAIL);
        out.gate(ball.passed, entry_line(&ball));
        let e_max = traj.samples.iter().map(|s| s.energy).fold(0.0, f64::max);
        out.note(format!("max E(t) {e_max:.4e}, Q {:.4e}", run.constants.q));
        Ok(())
    })
}

pub fn gronwall_structure(run: &Result<DissipativeRun>) -> CriterionOutcome {
    wrap(6, |out| {
        let run = run.as_ref().map_err(|e| crate::Error::Config(format!("shared run failed: {e}")))?;
        let entry = check_gronwall(&run.trajectory, &run.constants, 0.05);
        out.gate(entry.passed, entry_line(&entry));
        out.note(format!("right side 2C1 m|phi|^2 + 2C2 m|Omega| = {:.6e}", run.constants.gronwall_rhs()));
        Ok(())
    })
}

fn sig5(x: f64, reference: f64) -> bool {
    ((x - reference) / reference).abs() <= 5e-5
}

pub fn constants_regression() -> CriterionOutcome {
    wrap(7, |out| {
        let params = ModelParams::desk_default(1.0, 2);
        let ac = Kinetics::ClassicCubic.assumption_constants()?;
        let pc = PoincareConstants { eta1: PI * PI, eta2: PI * PI };
        let c = compute_theorem_constants(&params, &ac, 1.0, Some(pc), None)?;
        for (name, got, reference) in [
            ("C1", c.c1, 5.3333e-3),
            ("r", c.r, 0.032),
            ("C3", c.c3, 1312.5),
            ("delta", c.delta, 9.1429e-3),
            ("mu", c.mu, 0.128),
            ("C2", c.c2, 22.559),
            ("Q", c.q, 5.2900e5),
            ("R", c.threshold, 1.4420e7),
        ] {
            out.gate(sig5(got, reference), format!("{name} = {got:.6e} (reference {reference:e})"));
        }
        let (eps, b, sigma, lam) = (params.epsilon, params.b, params.sigma, ac.lambda);
        let id1 = c.c1 * sigma * sigma / (2.0 * lam) - eps * b / 2.0;
        let id2 = 6.0 * sigma * sigma / lam - c.c3 * eps * b / 2.0;
        let rel1 = (id1 - (-eps * b / 4.0)).abs() / (eps * b / 4.0);
        let rel2 = (id2 - (-sigma * sigma / lam)).abs() / (sigma * sigma / lam);
        out.gate(rel1 <= 1e-12, format!("C1 sigma^2/(2 lambda) - eps b/2 = -eps b/4, rel err {rel1:.1e}"));
        out.gate(rel2 <= 1e-12, format!("6 sigma^2/lambda - C3 eps b/2 = -sigma^2/lambda, rel err {rel2:.1e}"));
        let r_direct = compute_R(&c, &params, &ac, 1.0);
        let rel = (r_direct - c.threshold).abs() / c.threshold;
        out.gate(rel <= 1e-9, format!("R two-path agreement {rel:.1e}"));
        Ok(())
    })
}

pub fn poincare_estimator() -> CriterionOutcome {
    wrap(8, |out| {
        let mut errors = Vec::new();
        let mut last = 0.0;
        for n in [9, 17, 33] {
            let est = estimate_poincare_constants(&Mesh::build(DomainSpec::unit_square(n))?)?;
            errors.push((est.eta1_discrete - PI * PI).abs());
            out.note(format!("{n}x{n}: eta1 {:.8} after {} iterations", est.eta1_discrete, est.iterations));
            last = est.eta1_discrete;
        }
        let rel = (last - PI * PI).abs() / (PI * PI);
        out.gate(rel <= 0.02, format!("33x33 relative error {rel:.3e} (gate 2%)"));
        for o in observed_order(&errors) {
            out.gate(o >= 1.8, format!("convergence order {o:.3} (gate ≥ 1.8)"));
        }
        Ok(())
    })
}

/// A random involution on `m` indices: a random partial matching.
pub fn random_involution<R: Rng>(rng: &mut R, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(rng);
    let mut map: Vec<usize> = (0..m).collect();
    for pair in idx.chunks(2) {
        if let [a, b] = *pair {
            if rng.random_bool(0.5) {
                map[a] = b;
                map[b] = a;
            }
        }
    }
    map
}

pub fn boundary_identity() -> CriterionOutcome {
    wrap(9, |out| {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mesh = Mesh::build(DomainSpec::unit_square(9))?;
        let (mut failures, mut worst, mut corrected_worst) = (0, 0.0f64, 0.0f64);
        let mut example = None;
        for _ in 0..100 {
            let m = rng.random_range(2..=4);
            let maps = (0..mesh.faces().len()).map(|_| random_involution(&mut rng, m)).collect();
            let part = BoundaryPartition::from_face_maps(&mesh, m, maps)?;
            let u: Vec<Vec<f64>> = (0..m).map(|_| (0..mesh.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let g = g_sum_from_definition(&mesh, &part, &u);
            let rhs = boundary_difference_sum(&mesh, &u);
            let rel = (g - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
            if rel > 1e-10 {
                failures += 1;
                example.get_or_insert((m, g, rhs));
            }
            worst = worst.max(rel);
            let corrected = rhs - partner_cross_sum(&mesh, &part, &u);
            corrected_worst = corrected_worst.max((g - corrected).abs() / corrected.abs().max(1.0));
        }
        out.gate(
            failures == 0,
            format!("sum G_ij = sum ∫(u_i-u_j)^2: {failures}/100 datasets off by more than 1e-10 (worst rel {worst:.3e})"),
        );
        if let Some((m, g, rhs)) = example {
            out.note(format!("first mismatch: m={m}, sum G_ij = {g:.6e}, sum ∫(u_i-u_j)^2 = {rhs:.6e}"));
        }
        out.note(format!(
            "sum G_ij = sum ∫(u_i-u_j)^2 - sum ∫(ũ_i-ũ_j)(u_i-u_j) holds to {corrected_worst:.1e}; the cross term does not vanish"
        ));
        Ok(())
    })
}

pub struct SyncOutcome {
    pub final_pair_sum: f64,
    pub min_pair_sum: f64,
    pub decay_rate: Result<f64>,
    pub sync_degree: f64,
    pub mu: f64,
}

/// Two neurons on the unit square, whole boundary coupled, distinct data.
pub fn synchronization_run(p: f64, n: usize, t_end: f64) -> Result<SyncOutcome> {
    let mesh = Mesh::build(DomainSpec::unit_square(n))?;
    let partition = all_to_all(&mesh, 2)?;
    let params = ModelParams::desk_default(p, 2);
    let ac = Kinetics::ClassicCubic.assumption_constants()?;
    let pc = estimate_poincare_constants(&mesh)?.constants(true);
    let constants = compute_theorem_constants(&params, &ac, mesh.volume(), Some(pc), None)?;
    let initial = NetworkState::from_initial_conditions(&mesh, &two_neuron_ics());
    let run = RunParams::new(0.01, t_end).with_stride(10);
    let sim = Simulation { mesh, partition, params, kinetics: Kinetics::ClassicCubic, run, c1: constants.c1 };
    let traj = run_simulation(&sim, initial, |_, _| {})?;
    let pair_sum: Vec<f64> = traj.samples.iter().map(|s| s.pair_sum).collect();
    Ok(SyncOutcome {
        final_pair_sum: *pair_sum.last().unwrap(),
        min_pair_sum: pair_sum.iter().copied().fold(f64::INFINITY, f64::min),
        decay_rate: fit_decay_rate(&traj.times, &pair_sum, TimeWindow::Tail { fraction: DEFAULT_TAIL }),
        sync_degree: sync_degree_estimate(&traj, DEFAULT_TAIL),
        mu: constants.mu,
    })
}

pub fn synchronization() -> CriterionOutcome {
    wrap(10, |out| {
        let strong = synchronization_run(10.0, 17, 200.0)?;
        out.gate(strong.final_pair_sum < 1e-6, format!("p=10: P(200) = {:.3e} (gate < 1e-6)", strong.final_pair_sum));
        match &strong.decay_rate {
            Ok(r) => {
                out.gate(*r > 0.0, format!("p=10: tail-fitted decay rate of P {r:.4} (gate > 0)"));
                out.note(format!("fitted rate {r:.4} vs mu = 2 min(eta1 d, eps b) = {:.4}", strong.mu));
            }
            Err(e) => out.gate(false, format!("p=10: decay rate undefined: {e}")),
        }
        let free = synchronization_run(0.0, 17, 200.0)?;
        out.gate(free.sync_degree > 1e-3, format!("p=0: tail sync degree {:.3e} (gate > 1e-3)", free.sync_degree));
        out.note(format!("p=0: min P over run {:.3e}", free.min_pair_sum));
        Ok(())
    })
}

pub fn decay_rate_fitter() -> CriterionOutcome {
    wrap(11, |out| {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let exact: Vec<f64> = t.iter().map(|t| 5.0 * (-0.3 * t).exp()).collect();
        let r = fit_decay_rate(&t, &exact, TimeWindow::All)?;
        out.gate((r - 0.3).abs() <= 1e-9, format!("exact exponential: rate {r:.12} (gate |r-0.3| ≤ 1e-9)"));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let noisy: Vec<f64> = exact.iter().map(|y| y * (1.0 + 0.01 * rng.random_range(-1.0..1.0))).collect();
        let r = fit_decay_rate(&t, &noisy, TimeWindow::All)?;
        let rel = (r - 0.3).abs() / 0.3;
        out.gate(rel <= 0.05, format!("1% multiplicative noise: rate {r:.6}, rel err {rel:.2e} (gate 5%)"));
        Ok(())
    })
}

pub fn determinism_config() -> RunConfig {
    RunConfig {
        model: ModelParams::desk_default(2.0, 3),
        run: RunParams::new(0.01, 2.0).with_stride(5).with_mode(CouplingMode::Lagged),
        domain: DomainSpec::unit_square(9),
        kinetics: Kinetics::ClassicCubic,
        partition: PartitionSpec::AllToAll,
        initial_conditions: vec![
            InitialCondition::Random { amplitude: 2.0, seed: 1, w_amplitude: Some(0.5) },
            InitialCondition::Random { amplitude: 2.0, seed: 2, w_amplitude: Some(0.5) },
            InitialCondition::Bump { amplitude: 1.0, center: [0.5, 0.5], width: 0.2, base: 0.0, w: 0.0 },
        ],
        analysis: AnalysisConfig::default(),
        output: OutputConfig::default(),
    }
}

/// The documented `timeseries.csv` header for three neurons.
pub const GOLDEN_HEADER_M3: &str = "t,E,E_w,P,S,\
u_sq_1,w_sq_1,u_l4_1,grad_u_sq_1,u_sq_2,w_sq_2,u_l4_2,grad_u_sq_2,u_sq_3,w_sq_3,u_l4_3,grad_u_sq_3,\
U_sq_1_2,W_sq_1_2,grad_U_sq_1_2,bnd_U_sq_1_2,U_sq_1_3,W_sq_1_3,grad_U_sq_1_3,bnd_U_sq_1_3,\
U_sq_2_3,W_sq_2_3,grad_U_sq_2_3,bnd_U_sq_2_3";

fn scratch_dir(tag: &str) -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    std::env::temp_dir().join(format!(
        "fhnet-verify-{}-{tag}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ))
}

pub fn determinism() -> CriterionOutcome {
    wrap(12, |out| {
        let cfg = determinism_config();
        let dirs = [scratch_dir("a"), scratch_dir("b")];
        let mut files = Vec::new();
        for dir in &dirs {
            simulate_to_dir(&cfg, dir)?;
            files.push(std::fs::read(dir.join("timeseries.csv"))?);
        }
        for dir in &dirs {
            let _ = std::fs::remove_dir_all(dir);
        }
        out.gate(
            files[0] == files[1] && !files[0].is_empty(),
            format!("timeseries.csv byte-identical across runs ({} bytes)", files[0].len()),
        );
        let header = String::from_utf8_lossy(&files[0]).lines().next().unwrap_or_default().to_string();
        out.gate(header == GOLDEN_HEADER_M3, format!("timeseries.csv header matches the golden header ({} columns)", header.split(',').count()));
        Ok(())
    })
}

/// Runs the scenarios whose names contain `filter`, or whose number equals
/// it (all when `None`), in parallel. Outcomes come back in scenario order.
pub fn run_all(filter: Option<&str>) -> Vec<CriterionOutcome> {
    let wanted = |id: u8| filter.is_none_or(|f| NAMES[id as usize - 1].contains(f) || id.to_string() == f);
    let single: [(u8, fn() -> CriterionOutcome); 10] = [
        (1, operator_correctness),
        (2, convergence),
        (3, ode_reduction),
        (4, permutation_symmetry),
        (7, constants_regression),
        (8, poincare_estimator),
        (9, boundary_identity),
        (10, synchronization),
        (11, decay_rate_fitter),
        (12, determinism),
    ];
    let mut out: Vec<CriterionOutcome> = std::thread::scope(|s| {
        let mut handles = Vec::new();
        for (id, f) in single {
            if wanted(id) {
                handles.push(s.spawn(move || vec![f()]));
            }
        }
        if wanted(5) || wanted(6) {
            handles.push(s.spawn(move || {
                let run = dissipative_run();
                let mut v = Vec::new();
                if wanted(5) {
                    v.push(dissipativity(&run));
                }
                if wanted(6) {
                    v.push(gronwall_structure(&run));
                }
                v
            }));
        }
        handles.into_iter().flat_map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    out.sort_by_key(|o| o.id);
    out
}
