//! Diffusion graphs, their Laplacians, and the spectral quantities behind the
//! synchronization bounds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    AllToAll,
    Star,
    Loop,
    Line,
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopologyKind::AllToAll => "all_to_all",
            TopologyKind::Star => "star",
            TopologyKind::Loop => "loop",
            TopologyKind::Line => "line",
            TopologyKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "all_to_all" | "alltoall" | "complete" => Ok(TopologyKind::AllToAll),
            "star" => Ok(TopologyKind::Star),
            "loop" | "ring" | "cycle" => Ok(TopologyKind::Loop),
            "line" | "path" => Ok(TopologyKind::Line),
            "custom" => Ok(TopologyKind::Custom),
            other => Err(Error::config("topology", format!("unknown topology `{other}`"))),
        }
    }
}

/// Undirected weighted graph over the first species of `n` compartments.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionGraph {
    kind: TopologyKind,
    gain: Option<f64>,
    weights: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphWire {
    kind: TopologyKind,
    n: usize,
    #[serde(default)]
    k: Option<f64>,
    #[serde(default)]
    weights: Option<Vec<Vec<f64>>>,
}

impl Serialize for DiffusionGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n();
        let weights = (0..n).map(|i| (0..n).map(|j| self.weights[(i, j)]).collect()).collect();
        GraphWire {
            kind: self.kind,
            n,
            k: self.gain,
            weights: Some(weights),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiffusionGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = GraphWire::deserialize(d)?;
        let custom = match (&wire.kind, wire.weights) {
            (TopologyKind::Custom, Some(rows)) => {
                Some(rows_to_matrix(&rows, wire.n).map_err(serde::de::Error::custom)?)
            }
            (TopologyKind::Custom, None) => return Err(serde::de::Error::custom("custom topology requires `weights`")),
            _ => None,
        };
        build_topology(wire.kind, wire.n, wire.k.unwrap_or(0.0), custom).map_err(serde::de::Error::custom)
    }
}

pub fn rows_to_matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rows.len(),
        });
    }
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Build one of the named topologies with uniform edge weight `k`.
///
/// Node 0 is the hub of the star. `custom_weights` is only read for
/// [`TopologyKind::Custom`].
pub fn build_topology(
    kind: TopologyKind,
    n: usize,
    k: f64,
    custom_weights: Option<DMatrix<f64>>,
) -> Result<DiffusionGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "need at least one compartment",
        });
    }
    if kind != TopologyKind::Custom && !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "coupling gain must be finite and >= 0",
        });
    }
    let mut w = DMatrix::zeros(n, n);
    let mut connect = |i: usize, j: usize| {
        if i != j {
            w[(i, j)] = k;
            w[(j, i)] = k;
        }
    };
    match kind {
        TopologyKind::AllToAll => {
            for i in 0..n {
                for j in (i + 1)..n {
                    connect(i, j);
                }
            }
        }
        TopologyKind::Star => {
            for j in 1..n {
                connect(0, j);
            }
        }
        TopologyKind::Loop => {
            for i in 0..n {
                connect(i, (i + 1) % n);
            }
        }
        TopologyKind::Line => {
            for i in 1..n {
                connect(i - 1, i);
            }
        }
        TopologyKind::Custom => {
            let m = custom_weights.ok_or_else(|| Error::config("weights", "custom topology requires weights"))?;
            return DiffusionGraph::from_weights(m);
        }
    }
    Ok(DiffusionGraph {
        kind,
        gain: Some(k),
        weights: w,
    })
}

impl DiffusionGraph {
    /// Validate an arbitrary weight matrix: square, symmetric, nonnegative,
    /// and with zero diagonal.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "need at least one compartment",
            });
        }
        for i in 0..n {
            for j in 0..n {
                let a = weights[(i, j)];
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::NegativeWeight { i, j });
                }
                if a != weights[(j, i)] {
                    return Err(Error::AsymmetricWeights { i, j });
                }
            }
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter {
                    name: "weights",
                    value: weights[(i, i)],
                    reason: "diagonal must be zero",
                });
            }
        }
        Ok(Self {
            kind: TopologyKind::Custom,
            gain: None,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn gain(&self) -> Option<f64> {
        self.gain
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Same topology with every edge weight replaced by `k`. Custom graphs
    /// are scaled so that their largest weight equals `k`.
    pub fn with_gain(&self, k: f64) -> Result<Self> {
        match self.kind {
            TopologyKind::Custom => {
                let max = self.weights.max();
                let scale = if max > 0.0 { k / max } else { 0.0 };
                Self::from_weights(&self.weights * scale)
            }
            kind => build_topology(kind, self.n(), k, None),
        }
    }

    /// Uniform gain `k` when every pair of distinct nodes is coupled with the
    /// same weight.
    pub fn all_to_all_gain(&self) -> Option<f64> {
        let n = self.n();
        if n == 1 {
            return Some(self.gain.unwrap_or(0.0));
        }
        let k = self.weights[(0, 1)];
        for i in 0..n {
            for j in 0..n {
                if i != j && self.weights[(i, j)] != k {
                    return None;
                }
            }
        }
        Some(k)
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        let n = self.n();
        let mut l = -self.weights.clone();
        for i in 0..n {
            let degree: f64 = (0..n).filter(|&j| j != i).map(|j| self.weights[(i, j)]).sum();
            l[(i, i)] = degree;
        }
        LaplacianMatrix(l)
    }
}

/// Symmetric Laplacian `L = D - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Second-smallest eigenvalue; 0 for a single node.
    pub fn algebraic_connectivity(&self) -> f64 {
        if self.n() < 2 {
            return 0.0;
        }
        self.eigenvalues()[1].max(0.0)
    }
}

pub fn algebraic_connectivity(l: &LaplacianMatrix) -> f64 {
    l.algebraic_connectivity()
}

/// `I - (1/n) 11ᵀ`, the orthogonal projector onto the complement of `span{1}`.
pub fn disagreement_projector(n: usize) -> DMatrix<f64> {
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}

/// Euclidean distance of `v` from `span{1}`.
pub fn sync_error(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt()
}

/// Closed-form `(γ₁I + k(nI - 11ᵀ))⁻¹`.
pub fn sherman_morrison_inverse(k: f64, gamma1: f64, n: usize) -> DMatrix<f64> {
    let nk = n as f64 * k;
    let diag = 1.0 / (nk + gamma1);
    let rank_one = k / (gamma1 * (nk + gamma1));
    DMatrix::from_fn(n, n, |i, j| if i == j { diag + rank_one } else { rank_one })
}

/// `γ₁I + L`.
pub fn shifted_laplacian(l: &LaplacianMatrix, gamma1: f64) -> DMatrix<f64> {
    let n = l.n();
    l.matrix() + DMatrix::<f64>::identity(n, n) * gamma1
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn topology_edges() {
        let g = build_topology(TopologyKind::AllToAll, 3, 1.0, None).unwrap();
        let off: usize = g.weights().iter().filter(|&&a| a == 1.0).count();
        assert_eq!(off, 6);
        assert!(g.weights().diagonal().iter().all(|&d| d == 0.0));

        let line = build_topology(TopologyKind::Line, 3, 2.0, None).unwrap();
        let w = line.weights();
        assert_eq!(w[(0, 1)], 2.0);
        assert_eq!(w[(1, 2)], 2.0);
        assert_eq!(w[(0, 2)], 0.0);

        let star = build_topology(TopologyKind::Star, 4, 1.0, None).unwrap();
        assert_eq!(star.weights().row(0).sum(), 3.0);
        assert_eq!(star.weights()[(1, 2)], 0.0);

        let ring = build_topology(TopologyKind::Loop, 4, 1.0, None).unwrap();
        assert_eq!(ring.weights()[(0, 3)], 1.0);
        assert_eq!(ring.weights()[(0, 2)], 0.0);
    }

    #[test]
    fn custom_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(
            build_topology(TopologyKind::Custom, 2, 0.0, Some(asym)),
            Err(Error::AsymmetricWeights { .. })
        ));
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(matches!(
            build_topology(TopologyKind::Custom, 2, 0.0, Some(neg)),
            Err(Error::NegativeWeight { .. })
        ));
    }

    #[test]
    fn laplacian_examples() {
        let l = build_topology(TopologyKind::AllToAll, 2, 1.0, None)
            .unwrap()
            .laplacian();
        assert_eq!(l.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let k = 0.7;
        let l5 = build_topology(TopologyKind::AllToAll, 5, k, None).unwrap().laplacian();
        let expected = (DMatrix::<f64>::identity(5, 5) * 5.0 - DMatrix::from_element(5, 5, 1.0)) * k;
        assert_relative_eq!(l5.matrix(), &expected, epsilon = 1e-15);

        let line = build_topology(TopologyKind::Line, 3, 1.0, None).unwrap().laplacian();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(line.matrix(), &expected);
    }

    #[test]
    fn connectivity_examples() {
        let l = build_topology(TopologyKind::AllToAll, 5, 1.0, None)
            .unwrap()
            .laplacian();
        assert_relative_eq!(l.algebraic_connectivity(), 5.0, epsilon = 1e-12);

        let ring = build_topology(TopologyKind::Loop, 5, 1.0, None).unwrap().laplacian();
        let expected = 2.0 * (1.0 - (2.0 * std::f64::consts::PI / 5.0).cos());
        assert_relative_eq!(ring.algebraic_connectivity(), expected, epsilon = 1e-12);
        assert_relative_eq!(ring.algebraic_connectivity(), 1.381_966, epsilon = 1e-6);

        let split = DiffusionGraph::from_weights(DMatrix::zeros(2, 2)).unwrap().laplacian();
        assert_eq!(split.algebraic_connectivity(), 0.0);
    }

    // λ₂ = min over unit z ⟂ 1 of zᵀLz, sampled against the eigen route.
    #[test]
    fn connectivity_is_rayleigh_minimum() {
        let g = build_topology(TopologyKind::Line, 4, 1.3, None).unwrap();
        let l = g.laplacian();
        let lambda2 = l.algebraic_connectivity();
        let proj = disagreement_projector(4);
        let mut best = f64::INFINITY;
        let mut state = 12345u64;
        for _ in 0..20000 {
            let z = DVector::from_fn(4, |_, _| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            });
            let z = &proj * z;
            let z = &z / z.norm();
            best = best.min((z.transpose() * l.matrix() * &z)[(0, 0)]);
            assert!(best >= lambda2 - 1e-12);
        }
        assert!(best - lambda2 < 5e-2);
    }

    #[test]
    fn projector_examples() {
        let p = disagreement_projector(2);
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        let p5 = disagreement_projector(5);
        assert!((&p5 * DVector::from_element(5, 1.0)).norm() < 1e-15);
        assert_relative_eq!(&p5 * &p5, p5.clone(), epsilon = 1e-15);
        let v = disagreement_projector(3) * DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(v, DVector::from_row_slice(&[-1.0, 0.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn sync_error_examples() {
        assert_eq!(sync_error(&[0.3, 0.3, 0.3]), 0.0);
        assert_relative_eq!(sync_error(&[1.0, 2.0, 3.0]), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(sync_error(&[1.0, 0.0]), 2f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn sherman_morrison_examples() {
        let g1 = 1.3;
        assert_relative_eq!(
            sherman_morrison_inverse(0.0, g1, 4),
            DMatrix::<f64>::identity(4, 4) / g1,
            epsilon = 1e-15
        );

        let l = build_topology(TopologyKind::AllToAll, 5, 0.2, None)
            .unwrap()
            .laplacian();
        let a = shifted_laplacian(&l, 1.0);
        let prod = sherman_morrison_inverse(0.2, 1.0, 5) * a;
        assert!((prod - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);

        let l2 = build_topology(TopologyKind::AllToAll, 2, 1.0, None)
            .unwrap()
            .laplacian();
        let dense = shifted_laplacian(&l2, 1.0).try_inverse().unwrap();
        assert_relative_eq!(sherman_morrison_inverse(1.0, 1.0, 2), dense, epsilon = 1e-14);
    }

    #[test]
    fn graph_json_round_trip() {
        let g = build_topology(TopologyKind::Loop, 4, 0.5, None).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: DiffusionGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);

        let custom: DiffusionGraph =
            serde_json::from_str(r#"{"kind":"custom","n":2,"weights":[[0,1.5],[1.5,0]]}"#).unwrap();
        assert_eq!(custom.weights()[(0, 1)], 1.5);
        assert!(serde_json::from_str::<DiffusionGraph>(r#"{"kind":"custom","n":2,"weights":[[0,1],[2,0]]}"#).is_err());
    }
}
