//! Labelled decomposition of the boundary into coupling pieces.
//!
//! Every face carries a partner map `π` on the neuron indices: `π(i) = j`
//! puts the face in the piece where neuron `i` is coupled to neuron `j`.
//! Maps must be involutions, so the piece shared by `i` and `j` is the same
//! set seen from either side, and fixed points mark zero-flux faces.
//! Neuron indices are 0-based in the API and 1-based in specs and messages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub side: Side,
    /// Start of the piece as a fraction of the side, measured along +x or +y.
    #[serde(default)]
    pub from: f64,
    #[serde(default = "one")]
    pub to: f64,
    /// Partner of each neuron, 1-based.
    pub map: Vec<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    /// Every face is a fixed point of every map: a decoupled network.
    ZeroFlux,
    /// Faces cycle through the unordered pairs `(i, j)`, swapping that pair and
    /// leaving the others zero-flux. For `m = 2` the whole boundary couples the two neurons.
    AllToAll,
    /// Explicit side pieces; every face must be covered exactly once.
    Pieces { pieces: Vec<PieceSpec> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    m: usize,
    maps: Vec<Vec<usize>>,
}

const SPAN_TOL: f64 = 1e-9;

impl BoundaryPartition {
    /// Validates explicit per-face partner maps (0-based).
    pub fn from_face_maps(mesh: &Mesh, m: usize, maps: Vec<Vec<usize>>) -> Result<Self> {
        if maps.len() != mesh.faces().len() {
            return Err(Error::SizeMismatch { expected: mesh.faces().len(), got: maps.len() });
        }
        for (face, map) in maps.iter().enumerate() {
            if map.len() < m {
                return Err(Error::Unlabeled { face, neuron: map.len() + 1 });
            }
            if map.len() > m {
                return Err(Error::Partition(format!("face {face} labels {} neurons, expected {m}", map.len())));
            }
            if let Some(&bad) = map.iter().find(|&&j| j >= m) {
                return Err(Error::Partition(format!("face {face} references neuron {} > m = {m}", bad + 1)));
            }
            for (i, &j) in map.iter().enumerate() {
                if map[j] != i {
                    return Err(Error::NotInvolutive { face, i: i + 1, j: j + 1, back: map[j] + 1 });
                }
            }
        }
        Ok(Self { m, maps })
    }

    pub fn build(mesh: &Mesh, m: usize, spec: &PartitionSpec) -> Result<Self> {
        let n_faces = mesh.faces().len();
        let maps = match spec {
            PartitionSpec::ZeroFlux => vec![(0..m).collect(); n_faces],
            PartitionSpec::AllToAll => {
                let pairs: Vec<(usize, usize)> =
                    (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
                (0..n_faces)
                    .map(|f| {
                        let (i, j) = pairs[f % pairs.len()];
                        let mut map: Vec<usize> = (0..m).collect();
                        map.swap(i, j);
                        map
                    })
                    .collect()
            }
            PartitionSpec::Pieces { pieces } => {
                let mut maps: Vec<Option<Vec<usize>>> = vec![None; n_faces];
                for piece in pieces {
                    if piece.from < -SPAN_TOL || piece.to > 1.0 + SPAN_TOL || piece.from >= piece.to {
                        return Err(Error::Partition(format!(
                            "piece on {:?} has invalid range [{}, {}]",
                            piece.side, piece.from, piece.to
                        )));
                    }
                    if piece.map.contains(&0) {
                        return Err(Error::Partition("partner indices are 1-based".into()));
                    }
                    let map: Vec<usize> = piece.map.iter().map(|&j| j - 1).collect();
                    let mut touched = false;
                    for (f, face) in mesh.faces().iter().enumerate() {
                        if face.side != piece.side {
                            continue;
                        }
                        let (a, b) = face.span;
                        let inside = piece.from <= a + SPAN_TOL && b <= piece.to + SPAN_TOL;
                        let disjoint = b <= piece.from + SPAN_TOL || a >= piece.to - SPAN_TOL;
                        if inside {
                            if maps[f].is_some() {
                                return Err(Error::Partition(format!("face {f} is labelled twice")));
                            }
                            maps[f] = Some(map.clone());
                            touched = true;
                        } else if !disjoint {
                            return Err(Error::Partition(format!(
                                "piece boundary on {:?} falls inside face {f}; label changes must align with face boundaries",
                                piece.side
                            )));
                        }
                    }
                    if !touched {
                        return Err(Error::Partition(format!("piece on {:?} covers no face", piece.side)));
                    }
                }
                maps.into_iter()
                    .enumerate()
                    .map(|(face, m)| m.ok_or(Error::Unlabeled { face, neuron: 1 }))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Self::from_face_maps(mesh, m, maps)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Partner of neuron `i` on `face`.
    pub fn partner(&self, face: usize, i: usize) -> usize {
        self.maps[face][i]
    }

    pub fn face_maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    /// Measure of the piece shared by neurons `i` and `j`.
    pub fn piece_measure(&self, mesh: &Mesh, i: usize, j: usize) -> f64 {
        mesh.faces()
            .iter()
            .zip(&self.maps)
            .filter(|(_, map)| map[i] == j)
            .map(|(f, _)| f.measure)
            .sum()
    }

    /// Renames neuron `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let maps = self
            .maps
            .iter()
            .map(|map| {
                let mut out = vec![0; self.m];
                for (i, &j) in map.iter().enumerate() {
                    out[perm[i]] = perm[j];
                }
                out
            })
            .collect();
        Self { m: self.m, maps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn square(n: usize) -> Mesh {
        Mesh::build(DomainSpec::unit_square(n)).unwrap()
    }

    #[test]
    fn two_neuron_swap_is_valid() {
        let mesh = square(5);
        let p = BoundaryPartition::build(&mesh, 2, &PartitionSpec::AllToAll).unwrap();
        assert_relative_eq!(p.piece_measure(&mesh, 0, 1), 4.0, max_relative = 1e-12);
        assert_relative_eq!(p.piece_measure(&mesh, 1, 0), 4.0, max_relative = 1e-12);
        assert_eq!(p.piece_measure(&mesh, 0, 0), 0.0);
    }

    #[test]
    fn zero_flux_has_no_coupling() {
        let mesh = square(5);
        let p = BoundaryPartition::build(&mesh, 2, &PartitionSpec::ZeroFlux).unwrap();
        assert_eq!(p.piece_measure(&mesh, 0, 1), 0.0);
        assert_relative_eq!(p.piece_measure(&mesh, 0, 0), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn non_involutive_map_is_rejected() {
        let mesh = square(4);
        let mut maps = vec![vec![0, 1, 2]; mesh.faces().len()];
        maps[3] = vec![1, 2, 0];
        let err = BoundaryPartition::from_face_maps(&mesh, 3, maps).unwrap_err();
        assert!(err.to_string().starts_with("partition not involutive"), "{err}");
        assert!(matches!(err, Error::NotInvolutive { face: 3, i: 1, j: 2, back: 3 }));
    }

    #[test]
    fn bottom_edge_piece() {
        let mesh = square(5);
        let spec = PartitionSpec::Pieces {
            pieces: vec![
                PieceSpec { side: Side::Bottom, from: 0.0, to: 1.0, map: vec![2, 1] },
                PieceSpec { side: Side::Right, from: 0.0, to: 1.0, map: vec![1, 2] },
                PieceSpec { side: Side::Top, from: 0.0, to: 1.0, map: vec![1, 2] },
                PieceSpec { side: Side::Left, from: 0.0, to: 1.0, map: vec![1, 2] },
            ],
        };
        let p = BoundaryPartition::build(&mesh, 2, &spec).unwrap();
        assert_relative_eq!(p.piece_measure(&mesh, 0, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(p.piece_measure(&mesh, 0, 0), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn missing_side_is_unlabeled() {
        let mesh = square(5);
        let spec = PartitionSpec::Pieces {
            pieces: vec![PieceSpec { side: Side::Bottom, from: 0.0, to: 1.0, map: vec![2, 1] }],
        };
        let err = BoundaryPartition::build(&mesh, 2, &spec).unwrap_err();
        assert!(matches!(err, Error::Unlabeled { neuron: 1, .. }), "{err}");
        let short = PartitionSpec::Pieces {
            pieces: [Side::Bottom, Side::Right, Side::Top, Side::Left]
                .into_iter()
                .map(|side| PieceSpec { side, from: 0.0, to: 1.0, map: vec![1, 2] })
                .collect(),
        };
        let err = BoundaryPartition::build(&mesh, 3, &short).unwrap_err();
        assert_eq!(err.to_string(), "face 0 unlabeled for neuron 3");
    }

    #[test]
    fn sub_face_label_change_is_rejected() {
        let mesh = square(5);
        let spec = PartitionSpec::Pieces {
            pieces: vec![PieceSpec { side: Side::Bottom, from: 0.0, to: 0.3, map: vec![2, 1] }],
        };
        assert!(matches!(BoundaryPartition::build(&mesh, 2, &spec), Err(Error::Partition(_))));
    }

    #[test]
    fn split_side_aligned_with_faces() {
        let mesh = square(5);
        let mut pieces = vec![
            PieceSpec { side: Side::Bottom, from: 0.0, to: 0.5, map: vec![2, 1] },
            PieceSpec { side: Side::Bottom, from: 0.5, to: 1.0, map: vec![1, 2] },
        ];
        for side in [Side::Right, Side::Top, Side::Left] {
            pieces.push(PieceSpec { side, from: 0.0, to: 1.0, map: vec![1, 2] });
        }
        let p = BoundaryPartition::build(&mesh, 2, &PartitionSpec::Pieces { pieces }).unwrap();
        assert_relative_eq!(p.piece_measure(&mesh, 0, 1), 0.5, max_relative = 1e-12);
    }

    fn random_involution(m: usize, seed: u64) -> Vec<usize> {
        let mut map: Vec<usize> = (0..m).collect();
        let mut s = seed;
        let mut free: Vec<usize> = (0..m).collect();
        while free.len() >= 2 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = free.remove((s >> 33) as usize % free.len());
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if (s >> 40).is_multiple_of(3) {
                continue;
            }
            let b = free.remove((s >> 33) as usize % free.len());
            map[a] = b;
            map[b] = a;
        }
        map
    }

    proptest! {
        #[test]
        fn measures_are_total_and_symmetric(m in 2usize..6, n in 3usize..8, seed in any::<u64>()) {
            let mesh = square(n);
            let maps = (0..mesh.faces().len())
                .map(|f| random_involution(m, seed ^ (f as u64).wrapping_mul(0x9e37_79b9)))
                .collect();
            let p = BoundaryPartition::from_face_maps(&mesh, m, maps).unwrap();
            for i in 0..m {
                let total: f64 = (0..m).map(|j| p.piece_measure(&mesh, i, j)).sum();
                prop_assert!((total - 4.0).abs() < 1e-12);
                for j in 0..m {
                    prop_assert_eq!(p.piece_measure(&mesh, i, j), p.piece_measure(&mesh, j, i));
                }
            }
        }
    }
}
