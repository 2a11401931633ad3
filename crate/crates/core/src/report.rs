//! Run analysis and file output.
//!
//! `timeseries.csv` columns, in order:
//!
//! - `t, E, E_w, P, S`
//! - for each neuron `i` (1-based): `u_sq_i, w_sq_i, u_l4_i, grad_u_sq_i`
//! - for each pair `i < j`: `U_sq_i_j, W_sq_i_j, grad_U_sq_i_j, bnd_U_sq_i_j`
//!
//! Numbers are written in Rust's `{:e}` form, which round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::{Prepared, RunConfig};
use crate::constants::{ConstantLine, PoincareEstimate};
use crate::diagnostics::{
    check_absorbing_ball, check_dissipative_bound, check_gronwall, check_l4_bound, check_threshold_condition,
    fit_decay_rate, sync_degree_estimate, SampleDiagnostics, TheoremCheckReport, ThresholdMonitor, TimeWindow,
};
use crate::error::Result;
use crate::integrator::{run_simulation, NetworkState, Trajectory};
use crate::mesh::Mesh;

pub fn timeseries_header(m: usize) -> String {
    let mut cols: Vec<String> = ["t", "E", "E_w", "P", "S"].iter().map(|s| s.to_string()).collect();
    for i in 1..=m {
        for name in ["u_sq", "w_sq", "u_l4", "grad_u_sq"] {
            cols.push(format!("{name}_{i}"));
        }
    }
    for i in 1..=m {
        for j in i + 1..=m {
            for name in ["U_sq", "W_sq", "grad_U_sq", "bnd_U_sq"] {
                cols.push(format!("{name}_{i}_{j}"));
            }
        }
    }
    cols.join(",")
}

fn timeseries_row(out: &mut String, t: f64, s: &SampleDiagnostics) {
    out.clear();
    write!(out, "{t:e},{:e},{:e},{:e},{:e}", s.energy, s.weighted_energy, s.pair_sum, s.boundary_signal).unwrap();
    for i in 0..s.u_sq.len() {
        write!(out, ",{:e},{:e},{:e},{:e}", s.u_sq[i], s.w_sq[i], s.u_l4[i], s.grad_u_sq[i]).unwrap();
    }
    for p in &s.pairs {
        write!(out, ",{:e},{:e},{:e},{:e}", p.u_sq, p.w_sq, p.grad_u_sq, p.boundary_u_sq).unwrap();
    }
}

pub fn write_timeseries<W: Write>(mut w: W, traj: &Trajectory) -> std::io::Result<()> {
    let m = traj.samples.first().map_or(0, |s| s.u_sq.len());
    writeln!(w, "{}", timeseries_header(m))?;
    let mut line = String::new();
    for (t, s) in traj.times.iter().zip(&traj.samples) {
        timeseries_row(&mut line, *t, s);
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Field dump of one neuron: three header lines, then `u w` per node in row-major order.
pub fn write_snapshot<W: Write>(mut w: W, mesh: &Mesh, state: &NetworkState, neuron: usize) -> std::io::Result<()> {
    writeln!(w, "# t = {:e}", state.t)?;
    writeln!(w, "# nx = {} ny = {}", mesh.nx, mesh.ny)?;
    writeln!(w, "# neuron = {}", neuron + 1)?;
    for (u, v) in state.u[neuron].iter().zip(&state.w[neuron]) {
        writeln!(w, "{u:e} {v:e}")?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub samples: usize,
    pub t_end: f64,
    pub constants: Vec<ConstantLine>,
    pub poincare: PoincareEstimate,
    pub checks: TheoremCheckReport,
    pub threshold: ThresholdMonitor,
    pub sync_degree: f64,
    /// Tail-fitted decay rate of `P(t)`, when defined.
    pub decay_rate: Option<f64>,
    pub decay_rate_note: Option<String>,
    pub mu: f64,
    /// Largest `‖g_i − g_k‖_E = (‖U‖² + ‖∇U‖² + ‖W‖²)^{1/2}` over the tail,
    /// for comparison with an estimate of `K`.
    pub tail_max_pair_e_norm: f64,
}

pub fn analyze(prepared: &Prepared, cfg: &RunConfig, traj: &Trajectory) -> Summary {
    let c = &prepared.constants;
    let a = &cfg.analysis;
    let threshold = check_threshold_condition(traj, c, cfg.model.p, a.tail_fraction);
    let mut checks = TheoremCheckReport {
        entries: vec![
            check_dissipative_bound(traj, c, a.dissipative_slack),
            check_absorbing_ball(traj, c, a.tail_fraction),
            check_l4_bound(traj, c, a.l4_slack, a.tail_fraction),
            check_gronwall(traj, c, a.gronwall_slack),
        ],
    };
    let pair_sum: Vec<f64> = traj.samples.iter().map(|s| s.pair_sum).collect();
    let (decay_rate, decay_rate_note) =
        match fit_decay_rate(&traj.times, &pair_sum, TimeWindow::Tail { fraction: a.tail_fraction }) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let k0 = crate::diagnostics::tail_start(traj.len(), a.tail_fraction);
    let tail_max_pair_e_norm = traj.samples[k0..]
        .iter()
        .flat_map(|s| s.pairs.iter().map(|p| (p.u_sq + p.grad_u_sq + p.w_sq).sqrt()))
        .fold(0.0, f64::max);
    checks.entries.push(threshold.to_entry());
    Summary {
        samples: traj.len(),
        t_end: traj.times.last().copied().unwrap_or(0.0),
        constants: c.report(),
        poincare: prepared.poincare,
        checks,
        threshold,
        sync_degree: sync_degree_estimate(traj, a.tail_fraction),
        decay_rate,
        decay_rate_note,
        mu: c.mu,
        tail_max_pair_e_norm,
    }
}

/// Whether every hard check passed; the threshold entry is a monitor and is
/// left out.
pub fn hard_checks_passed(summary: &Summary) -> bool {
    summary.checks.entries.iter().filter(|e| e.name != "threshold_monitor").all(|e| e.passed)
}

/// Runs `cfg` and writes `timeseries.csv`, `summary.json` and any snapshots into `out`.
pub fn simulate_to_dir(cfg: &RunConfig, out: &Path) -> Result<(Trajectory, Summary)> {
    let prepared = cfg.prepare()?;
    fs::create_dir_all(out)?;
    let every = cfg.output.snapshot_every;
    let snap_dir = out.join("snapshots");
    if every > 0 {
        fs::create_dir_all(&snap_dir)?;
    }
    let mesh = prepared.simulation.mesh.clone();
    let mut io_error: Option<std::io::Error> = None;
    let traj = run_simulation(&prepared.simulation, prepared.initial.clone(), |k, state| {
        if every == 0 || !k.is_multiple_of(every) || io_error.is_some() {
            return;
        }
        for i in 0..state.m() {
            let path = snap_dir.join(format!("sample_{k:06}_neuron_{}.txt", i + 1));
            if let Err(e) = fs::File::create(path).and_then(|f| write_snapshot(BufWriter::new(f), &mesh, state, i)) {
                io_error = Some(e);
                return;
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    write_timeseries(BufWriter::new(fs::File::create(out.join("timeseries.csv"))?), &traj)?;
    let summary = analyze(&prepared, cfg, &traj);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| crate::Error::Config(e.to_string()))?;
    fs::write(out.join("summary.json"), json + "\n")?;
    Ok((traj, summary))
}
