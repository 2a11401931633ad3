//! Functionals along a trajectory and checks of the theorem inequalities.
//!
//! `liminf`/`limsup` are replaced by the min/max over a tail window of the
//! recorded samples (the last 20% by default).

use serde::Serialize;

use crate::constants::TheoremConstants;
use crate::error::{Error, Result};
use crate::integrator::{NetworkState, Trajectory};
use crate::mesh::Mesh;
use crate::operators::{boundary_integral_sq, grad_norm_sq, volume_integral};
use crate::partition::BoundaryPartition;

pub const DEFAULT_TAIL: f64 = 0.2;

/// Quantities of one unordered pair `i < j`, with `U = u_i − u_j` and `W = w_i − w_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiagnostics {
    pub i: usize,
    pub j: usize,
    pub u_sq: f64,
    pub w_sq: f64,
    pub grad_u_sq: f64,
    /// `∫_Γ U²` over the whole boundary.
    pub boundary_u_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleDiagnostics {
    pub u_sq: Vec<f64>,
    pub w_sq: Vec<f64>,
    /// `∫ u⁴`.
    pub u_l4: Vec<f64>,
    pub grad_u_sq: Vec<f64>,
    pub pairs: Vec<PairDiagnostics>,
    /// `E = Σ(‖u_i‖² + ‖w_i‖²)`.
    pub energy: f64,
    /// `E_w = C1 Σ‖u_i‖² + Σ‖w_i‖²`.
    pub weighted_energy: f64,
    /// `P = Σ_{i<j}(‖U_ij‖² + ‖W_ij‖²)`.
    pub pair_sum: f64,
    /// `S = Σ_{i<j} ∫_Γ U_ij²`.
    pub boundary_signal: f64,
}

impl SampleDiagnostics {
    /// `Σ_i (∫u_i⁴ + ‖w_i‖²)`.
    pub fn l4_functional(&self) -> f64 {
        self.u_l4.iter().zip(&self.w_sq).map(|(a, b)| a + b).sum()
    }

    /// `‖g_i − g_j‖_H` of each pair.
    pub fn pair_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| (p.u_sq + p.w_sq).sqrt())
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Evaluates every functional of `state` by nodal quadrature. `c1` weights
/// `‖u‖²` in the weighted energy.
pub fn sample_diagnostics(state: &NetworkState, mesh: &Mesh, c1: f64) -> SampleDiagnostics {
    let m = state.m();
    let u_sq: Vec<f64> = state.u.iter().map(|u| volume_integral(mesh, u, 2)).collect();
    let w_sq: Vec<f64> = state.w.iter().map(|w| volume_integral(mesh, w, 2)).collect();
    let u_l4 = state.u.iter().map(|u| volume_integral(mesh, u, 4)).collect();
    let grad_u_sq = state.u.iter().map(|u| grad_norm_sq(mesh, u)).collect();
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let du = diff(&state.u[i], &state.u[j]);
            let dw = diff(&state.w[i], &state.w[j]);
            pairs.push(PairDiagnostics {
                i,
                j,
                u_sq: volume_integral(mesh, &du, 2),
                w_sq: volume_integral(mesh, &dw, 2),
                grad_u_sq: grad_norm_sq(mesh, &du),
                boundary_u_sq: boundary_integral_sq(mesh, &du, None),
            });
        }
    }
    let su: f64 = u_sq.iter().sum();
    let sw: f64 = w_sq.iter().sum();
    SampleDiagnostics {
        energy: su + sw,
        weighted_energy: c1 * su + sw,
        pair_sum: pairs.iter().map(|p| p.u_sq + p.w_sq).sum(),
        boundary_signal: pairs.iter().map(|p| p.boundary_u_sq).sum(),
        u_sq,
        w_sq,
        u_l4,
        grad_u_sq,
        pairs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Smallest `allowed − observed` over the checked samples.
    pub worst_margin: f64,
    pub worst_time: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TheoremCheckReport {
    pub entries: Vec<CheckEntry>,
}

impl TheoremCheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Index of the first sample in the last `fraction` of a run of `n` samples.
pub fn tail_start(n: usize, fraction: f64) -> usize {
    let keep = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
    n - keep
}

/// Walks `(t, allowed, observed)` triples and records the worst margin.
fn bound_check<I>(name: &str, tolerance: f64, items: I) -> CheckEntry
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    let mut worst = (f64::INFINITY, f64::NAN);
    let mut violations = 0usize;
    let mut count = 0usize;
    for (t, allowed, observed) in items {
        count += 1;
        let margin = allowed - observed;
        if !(margin >= 0.0) {
            violations += 1;
        }
        if !(margin >= worst.0) {
            worst = (margin, t);
        }
    }
    CheckEntry {
        name: name.to_string(),
        passed: violations == 0,
        worst_margin: worst.0,
        worst_time: worst.1,
        tolerance,
        detail: format!("{violations} violations in {count} samples"),
    }
}

/// Energy bound `E(t) ≤ ratio · e^{−rt} E(0) + (Q − 1)` at every sample, with
/// multiplicative `slack` on the right side.
pub fn check_dissipative_bound(traj: &Trajectory, c: &TheoremConstants, slack: f64) -> CheckEntry {
    let e0 = traj.samples.first().map_or(0.0, |s| s.energy);
    bound_check(
        "dissipative_bound",
        slack,
        traj.times.iter().zip(&traj.samples).map(|(&t, s)| (t, slack * c.dissipative_bound(t, e0), s.energy)),
    )
}

/// `E(t) ≤ Q` on the tail window.
pub fn check_absorbing_ball(traj: &Trajectory, c: &TheoremConstants, tail: f64) -> CheckEntry {
    let k0 = tail_start(traj.len(), tail);
    bound_check(
        "absorbing_ball",
        0.0,
        traj.times[k0..].iter().zip(&traj.samples[k0..]).map(|(&t, s)| (t, c.q, s.energy)),
    )
}

/// `Σ_i(∫u_i⁴ + ‖w_i‖²) ≤ L` on the tail window, with multiplicative `slack`.
pub fn check_l4_bound(traj: &Trajectory, c: &TheoremConstants, slack: f64, tail: f64) -> CheckEntry {
    let k0 = tail_start(traj.len(), tail);
    bound_check(
        "l4_bound",
        slack,
        traj.times[k0..].iter().zip(&traj.samples[k0..]).map(|(&t, s)| (t, slack * c.l, s.l4_functional())),
    )
}

/// Centred difference of `E_w` plus `r E_w` against the constant right side.
///
/// The allowed value is `(1 + rel_slack) · rhs + τ_k`, where `τ_k` is the
/// difference between the derivative estimates at spacing `Δ` and `2Δ`, a
/// computable proxy for the truncation error of the sampled derivative.
pub fn check_gronwall(traj: &Trajectory, c: &TheoremConstants, rel_slack: f64) -> CheckEntry {
    let rhs = c.gronwall_rhs();
    let t = &traj.times;
    let e: Vec<f64> = traj.samples.iter().map(|s| s.weighted_energy).collect();
    let n = t.len();
    let items = (1..n.saturating_sub(1)).map(|k| {
        let d1 = (e[k + 1] - e[k - 1]) / (t[k + 1] - t[k - 1]);
        let tau = if k >= 2 && k + 2 < n {
            let d2 = (e[k + 2] - e[k - 2]) / (t[k + 2] - t[k - 2]);
            (d1 - d2).abs()
        } else {
            0.0
        };
        (t[k], (1.0 + rel_slack) * rhs + tau, d1 + c.r * e[k])
    });
    bound_check("gronwall", rel_slack, items)
}

/// Tail minimum of `p·S(t)` compared with `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdMonitor {
    pub p_tail_min_signal: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

/// Monitors the threshold condition; it depends on the solution itself, so
/// an unsatisfied condition is reported rather than treated as an error.
pub fn check_threshold_condition(traj: &Trajectory, c: &TheoremConstants, p: f64, tail: f64) -> ThresholdMonitor {
    let k0 = tail_start(traj.len(), tail);
    let min_s = traj.samples[k0..].iter().map(|s| s.boundary_signal).fold(f64::INFINITY, f64::min);
    let value = p * min_s;
    ThresholdMonitor { p_tail_min_signal: value, threshold: c.threshold, satisfied: value > c.threshold }
}

impl ThresholdMonitor {
    pub fn to_entry(&self) -> CheckEntry {
        CheckEntry {
            name: "threshold_monitor".into(),
            passed: self.satisfied,
            worst_margin: self.p_tail_min_signal - self.threshold,
            worst_time: f64::NAN,
            tolerance: 0.0,
            detail: format!(
                "monitor only: p*tailmin(S) = {:e}, R = {:e}, {}",
                self.p_tail_min_signal,
                self.threshold,
                if self.satisfied { "satisfied" } else { "unsatisfied" }
            ),
        }
    }
}

/// Finite-horizon surrogate of the asynchronous degree:
/// `Σ_{i<j} max_{tail} ‖g_i − g_j‖_H`.
pub fn sync_degree_estimate(traj: &Trajectory, tail: f64) -> f64 {
    let k0 = tail_start(traj.len(), tail);
    sync_degree_from(&traj.samples[k0..])
}

pub fn sync_degree_from(samples: &[SampleDiagnostics]) -> f64 {
    let Some(first) = samples.first() else { return 0.0 };
    (0..first.pairs.len())
        .map(|p| samples.iter().map(|s| (s.pairs[p].u_sq + s.pairs[p].w_sq).sqrt()).fold(0.0, f64::max))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeWindow {
    All,
    Range { start: f64, end: f64 },
    /// The last `fraction` of the samples.
    Tail { fraction: f64 },
}

/// Negated least-squares slope of `ln y` against `t` over the window.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: TimeWindow) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::SizeMismatch { expected: times.len(), got: values.len() });
    }
    let range = match window {
        TimeWindow::All => 0..times.len(),
        TimeWindow::Tail { fraction } => tail_start(times.len(), fraction)..times.len(),
        TimeWindow::Range { start, end } => {
            let a = times.iter().position(|&t| t >= start).unwrap_or(times.len());
            let b = times.iter().rposition(|&t| t <= end).map_or(0, |b| b + 1);
            a..b.max(a)
        }
    };
    let (t, y) = (&times[range.clone()], &values[range]);
    if t.len() < 10 {
        return Err(Error::RateUndefined(format!("need at least 10 samples, window has {}", t.len())));
    }
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::RateUndefined(format!("nonpositive value {bad:e} in window")));
    }
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let lm = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (ti, li) in t.iter().zip(&ly) {
        sxy += (ti - tm) * (li - lm);
        sxx += (ti - tm) * (ti - tm);
    }
    if sxx == 0.0 {
        return Err(Error::RateUndefined("window spans zero time".into()));
    }
    Ok(-sxy / sxx)
}

/// `Σ_{i,j} G_ij` with `G_ij` taken literally from its definition:
/// `Σ_k ∫_{Γ_ik}(u_i − u_k)(u_i − u_j) − Σ_k ∫_{Γ_jk}(u_j − u_k)(u_i − u_j)`,
/// integrated face by face with the mesh quadrature.
pub fn g_sum_from_definition(mesh: &Mesh, partition: &BoundaryPartition, u: &[Vec<f64>]) -> f64 {
    let m = partition.m();
    let mut total = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        for &(node, w) in &face.quadrature {
            let val = |i: usize| u[i][node];
            for i in 0..m {
                for j in 0..m {
                    let uij = val(i) - val(j);
                    // On a given face, Γ_ik contains it only for k = π_f(i).
                    let ki = partition.partner(f, i);
                    let kj = partition.partner(f, j);
                    total += w * ((val(i) - val(ki)) * uij - (val(j) - val(kj)) * uij);
                }
            }
        }
    }
    total
}

/// `Σ_{i,j} ∫_Γ (u_i − u_j)²` over ordered pairs.
pub fn boundary_difference_sum(mesh: &Mesh, u: &[Vec<f64>]) -> f64 {
    let m = u.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                total += boundary_integral_sq(mesh, &diff(&u[i], &u[j]), None);
            }
        }
    }
    total
}

/// `Σ_{i,j} ∫_Γ (ũ_i − ũ_j)(u_i − u_j)` with `ũ_i = u_{π(i)}` face by face.
/// The sum of the `G_ij` equals [`boundary_difference_sum`] minus this term.
pub fn partner_cross_sum(mesh: &Mesh, partition: &BoundaryPartition, u: &[Vec<f64>]) -> f64 {
    let m = partition.m();
    let mut total = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        for &(node, w) in &face.quadrature {
            for i in 0..m {
                for j in 0..m {
                    let ti = u[partition.partner(f, i)][node];
                    let tj = u[partition.partner(f, j)][node];
                    total += w * (ti - tj) * (u[i][node] - u[j][node]);
                }
            }
        }
    }
    total
}
