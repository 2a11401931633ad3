//! Diffusion with Robin boundary coupling, assembled in symmetric form.
//!
//! For neuron `i` the operator is stored as `S_i = −d K − d p B_i`, where `K`
//! is the edge stiffness of the grid and `B_i` the diagonal of face shares on
//! the part of the boundary where neuron `i` is coupled to a partner. The
//! coupling entry between `(i, k)` and `(j, k)` is `d p c_ij,k`, the share of
//! node `k` on faces labelled `j` for neuron `i`. Dividing a row by the nodal
//! mass gives the usual finite difference stencil with the ghost node
//! eliminated through the Robin condition; the symmetric form is what the
//! implicit solves use.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::CouplingMode;
use crate::partition::BoundaryPartition;
use crate::sparse::CsrMatrix;

/// One coupling term `weight · u_partner[node]` in the symmetric form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub node: usize,
    pub partner: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub neuron: usize,
    pub mode: CouplingMode,
    d: f64,
    p: f64,
    mass: Vec<f64>,
    /// `S_i`, symmetric and negative semi-definite.
    self_form: CsrMatrix,
    /// Diagonal of `B_i` (face shares, not yet multiplied by `d p`).
    robin: Vec<f64>,
    coupling: Vec<CouplingEntry>,
}

fn stiffness(mesh: &Mesh) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(4 * mesh.edges().len());
    for e in mesh.edges() {
        t.push((e.a, e.a, e.weight));
        t.push((e.b, e.b, e.weight));
        t.push((e.a, e.b, -e.weight));
        t.push((e.b, e.a, -e.weight));
    }
    t
}

/// Assembles the operator of neuron `i` (0-based).
pub fn assemble_diffusion(
    mesh: &Mesh,
    partition: &BoundaryPartition,
    d: f64,
    p: f64,
    i: usize,
    mode: CouplingMode,
) -> Result<DiffusionOperator> {
    let faces = mesh.faces();
    if partition.face_maps().len() != faces.len() {
        return Err(Error::SizeMismatch { expected: faces.len(), got: partition.face_maps().len() });
    }
    if i >= partition.m() {
        return Err(Error::SizeMismatch { expected: partition.m(), got: i + 1 });
    }
    let n = mesh.n_nodes();
    let mut robin = vec![0.0; n];
    // (node, partner) -> share, kept in first-seen order so assembly is deterministic.
    let mut shares: Vec<(usize, usize, f64)> = Vec::new();
    for (f, face) in faces.iter().enumerate() {
        let j = partition.partner(f, i);
        if j == i {
            continue;
        }
        for &(k, w) in &face.quadrature {
            robin[k] += w;
            match shares.iter_mut().find(|s| s.0 == k && s.1 == j) {
                Some(s) => s.2 += w,
                None => shares.push((k, j, w)),
            }
        }
    }
    let mut t: Vec<_> = stiffness(mesh).into_iter().map(|(r, c, v)| (r, c, -d * v)).collect();
    t.extend(robin.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(k, b)| (k, k, -d * p * b)));
    let coupling = shares
        .into_iter()
        .map(|(node, partner, c)| CouplingEntry { node, partner, weight: d * p * c })
        .collect();
    Ok(DiffusionOperator {
        neuron: i,
        mode,
        d,
        p,
        mass: mesh.mass().to_vec(),
        self_form: CsrMatrix::from_triplets(n, t),
        robin,
        coupling,
    })
}

impl DiffusionOperator {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn self_form(&self) -> &CsrMatrix {
        &self.self_form
    }

    pub fn coupling_entries(&self) -> &[CouplingEntry] {
        &self.coupling
    }

    /// Row `k` of the finite difference stencil (symmetric form divided by mass).
    pub fn row(&self, k: usize) -> Vec<(usize, f64)> {
        self.self_form.row(k).map(|(c, v)| (c, v / self.mass[k])).collect()
    }

    /// Coupling weights of row `k` in stencil scaling, as `(partner, weight)`.
    pub fn coupling_row(&self, k: usize) -> Vec<(usize, f64)> {
        self.coupling.iter().filter(|e| e.node == k).map(|e| (e.partner, e.weight / self.mass[k])).collect()
    }

    /// `S_i u` in the symmetric scaling.
    pub fn apply_self_weighted(&self, u: &[f64]) -> Vec<f64> {
        self.self_form.mul(u)
    }

    /// `d Δ_h u` including the Robin self-term.
    pub fn apply_self(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.self_form.mul(u);
        for (y, m) in y.iter_mut().zip(&self.mass) {
            *y /= m;
        }
        y
    }

    /// Coupling forcing `Σ_j C_ij u_j` in the symmetric scaling.
    pub fn apply_coupling_weighted(&self, fields: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.n();
        if let Some(bad) = fields.iter().find(|f| f.len() != n) {
            return Err(Error::SizeMismatch { expected: n, got: bad.len() });
        }
        let mut out = vec![0.0; n];
        for e in &self.coupling {
            let u = fields.get(e.partner).ok_or(Error::SizeMismatch { expected: e.partner + 1, got: fields.len() })?;
            out[e.node] += e.weight * u[e.node];
        }
        Ok(out)
    }

    /// Coupling forcing in stencil scaling; supported on coupled boundary nodes.
    pub fn apply_coupling(&self, fields: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut out = self.apply_coupling_weighted(fields)?;
        for (o, m) in out.iter_mut().zip(&self.mass) {
            *o /= m;
        }
        Ok(out)
    }

    /// Magnitude of the Robin self-term, `2dp/h · u` at coupled boundary nodes
    /// in stencil scaling. Equal to the coupling forcing when all fields agree.
    pub fn robin_self_term(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|k| self.d * self.p * self.robin[k] * u[k] / self.mass[k]).collect()
    }
}

/// Operators for the whole network.
#[derive(Debug, Clone)]
pub struct NetworkOperator {
    ops: Vec<DiffusionOperator>,
    mass: Vec<f64>,
}

impl NetworkOperator {
    pub fn assemble(mesh: &Mesh, partition: &BoundaryPartition, d: f64, p: f64, mode: CouplingMode) -> Result<Self> {
        let ops = (0..partition.m())
            .map(|i| assemble_diffusion(mesh, partition, d, p, i, mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ops, mass: mesh.mass().to_vec() })
    }

    pub fn m(&self) -> usize {
        self.ops.len()
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn neuron(&self, i: usize) -> &DiffusionOperator {
        &self.ops[i]
    }

    pub fn neurons(&self) -> &[DiffusionOperator] {
        &self.ops
    }

    /// The (mN)×(mN) symmetric form, neuron-major ordering.
    pub fn monolithic(&self) -> CsrMatrix {
        let n = self.n();
        let mut t = Vec::new();
        for (i, op) in self.ops.iter().enumerate() {
            t.extend(op.self_form.triplets().map(|(r, c, v)| (i * n + r, i * n + c, v)));
            t.extend(op.coupling.iter().map(|e| (i * n + e.node, e.partner * n + e.node, e.weight)));
        }
        CsrMatrix::from_triplets(self.m() * n, t)
    }

    /// `α M − β S` for the monolithic system.
    pub fn monolithic_system(&self, alpha: f64, beta: f64) -> CsrMatrix {
        let mass: Vec<f64> = (0..self.m()).flat_map(|_| self.mass.iter().copied()).collect();
        self.monolithic().scale_add_diag(-beta, alpha, &mass)
    }

    /// `α M − β S_i` for a lagged per-neuron solve.
    pub fn neuron_system(&self, i: usize, alpha: f64, beta: f64) -> CsrMatrix {
        self.ops[i].self_form.scale_add_diag(-beta, alpha, &self.mass)
    }

    /// Full action `(S u)_i = S_i u_i + Σ_j C_ij u_j` in the symmetric scaling.
    pub fn apply_weighted(&self, fields: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if fields.len() != self.m() {
            return Err(Error::SizeMismatch { expected: self.m(), got: fields.len() });
        }
        self.ops
            .iter()
            .zip(fields)
            .map(|(op, u)| {
                let mut y = op.apply_coupling_weighted(fields)?;
                for (y, s) in y.iter_mut().zip(op.self_form.mul(u)) {
                    *y += s;
                }
                Ok(y)
            })
            .collect()
    }

    /// `Σ_i ⟨(S u)_i, u_i⟩`.
    pub fn quadratic_form(&self, fields: &[Vec<f64>]) -> Result<f64> {
        let su = self.apply_weighted(fields)?;
        Ok(su.iter().zip(fields).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()).sum())
    }

    /// Smallest eigenvalue of `−M^{-1/2} S M^{-1/2}` by dense decomposition.
    /// Meant for meshes up to a few thousand unknowns.
    pub fn min_eigenvalue_negated(&self) -> f64 {
        let s = self.monolithic();
        let n = self.n();
        let scale: Vec<f64> = (0..s.n()).map(|r| 1.0 / self.mass[r % n].sqrt()).collect();
        let mut dense = nalgebra::DMatrix::zeros(s.n(), s.n());
        for (r, c, v) in s.triplets() {
            dense[(r, c)] = -v * scale[r] * scale[c];
        }
        dense.symmetric_eigenvalues().min()
    }
}

/// `∫_Ω v^q` by the trapezoid rule.
pub fn volume_integral(mesh: &Mesh, v: &[f64], q: i32) -> f64 {
    mesh.mass().iter().zip(v).map(|(m, x)| m * x.powi(q)).sum()
}

/// `∫ v²` over the boundary, or over `Γ_ij` when a partition and pair are given.
pub fn boundary_integral_sq(mesh: &Mesh, v: &[f64], restrict: Option<(&BoundaryPartition, usize, usize)>) -> f64 {
    mesh.faces()
        .iter()
        .enumerate()
        .filter(|(f, _)| match restrict {
            Some((part, i, j)) => part.partner(*f, i) == j,
            None => true,
        })
        .flat_map(|(_, face)| face.quadrature.iter())
        .map(|&(k, w)| w * v[k] * v[k])
        .sum()
}

/// Discrete Dirichlet energy `‖∇v‖²`, the quadratic form of the stiffness.
pub fn grad_norm_sq(mesh: &Mesh, v: &[f64]) -> f64 {
    mesh.edges().iter().map(|e| e.weight * (v[e.a] - v[e.b]).powi(2)).sum()
}

/// Edge stiffness `K` with `vᵀ K v = ‖∇v‖²`.
pub fn stiffness_matrix(mesh: &Mesh) -> CsrMatrix {
    CsrMatrix::from_triplets(mesh.n_nodes(), stiffness(mesh))
}
