//! Uniform tensor grids on an interval or an axis-aligned rectangle.
//!
//! Nodes include the boundary. Volume quadrature uses trapezoid weights, and
//! the boundary is split into faces: the segments between consecutive
//! boundary nodes in 2D, or the two endpoints (unit counting measure) in 1D.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { length: f64, n: usize },
    Rectangle { lx: f64, ly: f64, nx: usize, ny: usize },
}

impl DomainSpec {
    pub fn unit_square(n: usize) -> Self {
        DomainSpec::Rectangle { lx: 1.0, ly: 1.0, nx: n, ny: n }
    }

    pub fn validate(&self) -> Result<()> {
        let (lengths, res): (&[f64], &[usize]) = match self {
            DomainSpec::Interval { length, n } => (std::slice::from_ref(length), std::slice::from_ref(n)),
            DomainSpec::Rectangle { lx, ly, nx, ny } => (&[*lx, *ly][..], &[*nx, *ny][..]),
        };
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Domain("lengths must be > 0".into()));
        }
        if res.iter().any(|&n| n < 3) {
            return Err(Error::Domain("resolution must be ≥ 3 nodes per axis".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Axis of the outward normal: 0 for x, 1 for y.
    pub fn normal_axis(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        }
    }
}

/// A piece of the boundary with its quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub side: Side,
    pub measure: f64,
    /// Fraction of the side covered by this face, as `(start, end)` in `[0, 1]`.
    pub span: (f64, f64),
    /// `(node, weight)` pairs; the weights sum to `measure`.
    pub quadrature: Vec<(usize, f64)>,
}

impl Face {
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.quadrature.iter().map(|&(k, _)| k)
    }
}

/// Grid edge carrying the weight of its difference in the discrete Dirichlet energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub spec: DomainSpec,
    pub nx: usize,
    /// 1 for an interval.
    pub ny: usize,
    pub hx: f64,
    /// 0 for an interval.
    pub hy: f64,
    coords: Vec<[f64; 2]>,
    mass: Vec<f64>,
    boundary_nodes: Vec<usize>,
    interior_nodes: Vec<usize>,
    faces: Vec<Face>,
    edges: Vec<Edge>,
    volume: f64,
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect()
}

impl Mesh {
    pub fn build(spec: DomainSpec) -> Result<Self> {
        spec.validate()?;
        match spec {
            DomainSpec::Interval { length, n } => Ok(Self::interval(spec, length, n)),
            DomainSpec::Rectangle { lx, ly, nx, ny } => Ok(Self::rectangle(spec, lx, ly, nx, ny)),
        }
    }

    fn interval(spec: DomainSpec, length: f64, n: usize) -> Self {
        let h = length / (n - 1) as f64;
        let coords = (0..n).map(|i| [i as f64 * h, 0.0]).collect();
        let mass = trapezoid_weights(n, h);
        let faces = vec![
            Face { side: Side::Left, measure: 1.0, span: (0.0, 1.0), quadrature: vec![(0, 1.0)] },
            Face { side: Side::Right, measure: 1.0, span: (0.0, 1.0), quadrature: vec![(n - 1, 1.0)] },
        ];
        let edges = (0..n - 1).map(|i| Edge { a: i, b: i + 1, weight: 1.0 / h }).collect();
        Mesh {
            spec,
            nx: n,
            ny: 1,
            hx: h,
            hy: 0.0,
            coords,
            mass,
            boundary_nodes: vec![0, n - 1],
            interior_nodes: (1..n - 1).collect(),
            faces,
            edges,
            volume: length,
        }
    }

    fn rectangle(spec: DomainSpec, lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        let hx = lx / (nx - 1) as f64;
        let hy = ly / (ny - 1) as f64;
        let idx = |i: usize, j: usize| i + nx * j;
        let wx = trapezoid_weights(nx, hx);
        let wy = trapezoid_weights(ny, hy);

        let mut coords = Vec::with_capacity(nx * ny);
        let mut mass = Vec::with_capacity(nx * ny);
        let mut boundary_nodes = Vec::new();
        let mut interior_nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                coords.push([i as f64 * hx, j as f64 * hy]);
                mass.push(wx[i] * wy[j]);
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    boundary_nodes.push(idx(i, j));
                } else {
                    interior_nodes.push(idx(i, j));
                }
            }
        }

        let mut faces = Vec::with_capacity(2 * (nx - 1) + 2 * (ny - 1));
        let mut push_side = |side: Side, count: usize, h: f64, node: &dyn Fn(usize) -> usize| {
            for s in 0..count {
                faces.push(Face {
                    side,
                    measure: h,
                    span: (s as f64 / count as f64, (s + 1) as f64 / count as f64),
                    quadrature: vec![(node(s), 0.5 * h), (node(s + 1), 0.5 * h)],
                });
            }
        };
        push_side(Side::Bottom, nx - 1, hx, &|s| idx(s, 0));
        push_side(Side::Right, ny - 1, hy, &|s| idx(nx - 1, s));
        push_side(Side::Top, nx - 1, hx, &|s| idx(s, ny - 1));
        push_side(Side::Left, ny - 1, hy, &|s| idx(0, s));

        let mut edges = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1));
        for j in 0..ny {
            for i in 0..nx - 1 {
                edges.push(Edge { a: idx(i, j), b: idx(i + 1, j), weight: wy[j] / hx });
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                edges.push(Edge { a: idx(i, j), b: idx(i, j + 1), weight: wx[i] / hy });
            }
        }

        Mesh {
            spec,
            nx,
            ny,
            hx,
            hy,
            coords,
            mass,
            boundary_nodes,
            interior_nodes,
            faces,
            edges,
            volume: lx * ly,
        }
    }

    pub fn is_1d(&self) -> bool {
        matches!(self.spec, DomainSpec::Interval { .. })
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Trapezoid quadrature weights; they sum to `|Ω|`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `|Γ|`, the sum of face measures.
    pub fn boundary_measure(&self) -> f64 {
        self.faces.iter().map(|f| f.measure).sum()
    }

    /// Longest side, which fixes the first Neumann mode.
    pub fn max_extent(&self) -> f64 {
        match self.spec {
            DomainSpec::Interval { length, .. } => length,
            DomainSpec::Rectangle { lx, ly, .. } => lx.max(ly),
        }
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.coords.iter().map(|&[x, y]| f(x, y)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_spacing_and_counting_boundary() {
        let mesh = Mesh::build(DomainSpec::Interval { length: 1.0, n: 5 }).unwrap();
        assert_eq!(mesh.hx, 0.25);
        assert_eq!(mesh.faces().len(), 2);
        assert_eq!(mesh.boundary_measure(), 2.0);
        assert_relative_eq!(mesh.mass().iter().sum::<f64>(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn unit_square_four_by_four() {
        let mesh = Mesh::build(DomainSpec::unit_square(4)).unwrap();
        assert_eq!(mesh.volume(), 1.0);
        assert_eq!(mesh.faces().len(), 12);
        for f in mesh.faces() {
            assert_relative_eq!(f.measure, 1.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(mesh.boundary_measure(), 4.0, max_relative = 1e-12);
        assert_eq!(mesh.boundary_nodes().len(), 12);
        assert_eq!(mesh.interior_nodes().len(), 4);
    }

    #[test]
    fn rectangle_perimeter() {
        let mesh = Mesh::build(DomainSpec::Rectangle { lx: 2.0, ly: 1.0, nx: 5, ny: 3 }).unwrap();
        assert_relative_eq!(mesh.boundary_measure(), 6.0, max_relative = 1e-12);
        assert_relative_eq!(mesh.mass().iter().sum::<f64>(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn every_boundary_node_is_on_a_face() {
        let mesh = Mesh::build(DomainSpec::Rectangle { lx: 1.5, ly: 0.5, nx: 6, ny: 4 }).unwrap();
        for &k in mesh.boundary_nodes() {
            assert!(mesh.faces().iter().any(|f| f.nodes().any(|n| n == k)), "node {k}");
        }
        for f in mesh.faces() {
            let w: f64 = f.quadrature.iter().map(|q| q.1).sum();
            assert_relative_eq!(w, f.measure, max_relative = 1e-15);
        }
    }

    #[test]
    fn refinement_preserves_measures() {
        for n in [3, 7, 13, 33, 65] {
            let mesh = Mesh::build(DomainSpec::Rectangle { lx: 1.3, ly: 0.7, nx: n, ny: n + 2 }).unwrap();
            assert_relative_eq!(mesh.volume(), 1.3 * 0.7, max_relative = 1e-12);
            assert_relative_eq!(mesh.mass().iter().sum::<f64>(), 1.3 * 0.7, max_relative = 1e-12);
            assert_relative_eq!(mesh.boundary_measure(), 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn coarse_resolution_is_rejected() {
        assert!(Mesh::build(DomainSpec::Interval { length: 1.0, n: 2 }).is_err());
        assert!(Mesh::build(DomainSpec::Rectangle { lx: 1.0, ly: 0.0, nx: 4, ny: 4 }).is_err());
    }
}
