//! The weighted switching digraph `G(P, E(P))`.
//!
//! Vertices are subsystem indices split into the stable set `P_S` and the
//! unstable set `P_U`. Vertex weights are `w(j) = |ln λ_j|`, edge weights
//! are `w(i,j) = ln μ_ij`. Every synthesis algorithm works on the
//! *effective* per-edge cost
//!
//! ```text
//! c(k,ℓ) = w(k,ℓ) + w(k)   if k ∈ P_U
//! c(k,ℓ) = w(k,ℓ) − w(k)   if k ∈ P_S
//! ```
//!
//! so that a closed walk is contractive exactly when its cost sum is
//! negative. The node-arc incidence matrix accommodates self-loops by the
//! auxiliary-vertex construction: a loop at `j` becomes the column pair
//! `j → j'` and `j' → j`, with the full loop cost placed on the outgoing
//! half.

use nalgebra::DMatrix;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::certificates::{
    certify_family, compute_mu, CertificateError, LyapunovCertificate, StabilityClass,
    SubsystemFamily,
};

#[derive(Debug, Error)]
pub enum DigraphError {
    #[error("edge ({0}, {1}) references an unknown vertex")]
    UnknownVertexInEdge(usize, usize),
    #[error("no certificate supplied or computable for vertex {0}")]
    MissingCertificate(usize),
    #[error("no transition constant supplied for edge ({0}, {1})")]
    MissingMu(usize, usize),
    #[error("lambda for vertex {vertex} must be positive and different from 1, got {lambda}")]
    InvalidLambda { vertex: usize, lambda: f64 },
    #[error("mu for edge ({from}, {to}) must be positive, got {mu}")]
    InvalidMu { from: usize, to: usize, mu: f64 },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(usize),
    #[error("weight for {0} is not finite")]
    InvalidWeight(String),
    #[error("no such edge ({0}, {1})")]
    NoSuchEdge(usize, usize),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

/// The effective cost of one edge (vertex weight folded in).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCost {
    pub edge: (usize, usize),
    pub cost: f64,
}

/// Vertex- and edge-weighted digraph of a switched system.
///
/// Immutable after construction; vertex labels are kept sorted, edges keep
/// their construction order (the order fixes the incidence-matrix columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingDigraph {
    vertices: Vec<usize>,
    stable: BTreeSet<usize>,
    unstable: BTreeSet<usize>,
    vertex_weights: BTreeMap<usize, f64>,
    edges: Vec<(usize, usize)>,
    edge_weights: BTreeMap<(usize, usize), f64>,
    out_adjacency: BTreeMap<usize, Vec<usize>>,
}

impl SwitchingDigraph {
    /// Fundamental constructor from raw weights: `stable`/`unstable` map
    /// vertex labels to `w(j) ≥ 0`, `edges` carries `(i, j) → w(i,j)` in
    /// the order that fixes incidence-matrix columns.
    pub fn from_parts(
        stable: &BTreeMap<usize, f64>,
        unstable: &BTreeMap<usize, f64>,
        edges: &[((usize, usize), f64)],
    ) -> Result<Self, DigraphError> {
        let mut vertex_weights = BTreeMap::new();
        for (&v, &w) in stable.iter().chain(unstable.iter()) {
            if !w.is_finite() || w < 0.0 {
                return Err(DigraphError::InvalidWeight(format!("vertex {v}")));
            }
            if vertex_weights.insert(v, w).is_some() {
                return Err(DigraphError::DuplicateVertex(v));
            }
        }
        let mut edge_list = Vec::with_capacity(edges.len());
        let mut edge_weights = BTreeMap::new();
        let mut out_adjacency: BTreeMap<usize, Vec<usize>> =
            vertex_weights.keys().map(|&v| (v, Vec::new())).collect();
        for &((i, j), w) in edges {
            if !vertex_weights.contains_key(&i) || !vertex_weights.contains_key(&j) {
                return Err(DigraphError::UnknownVertexInEdge(i, j));
            }
            if !w.is_finite() {
                return Err(DigraphError::InvalidWeight(format!("edge ({i}, {j})")));
            }
            if edge_weights.insert((i, j), w).is_some() {
                return Err(DigraphError::DuplicateEdge(i, j));
            }
            edge_list.push((i, j));
            out_adjacency.get_mut(&i).unwrap().push(j);
        }
        for targets in out_adjacency.values_mut() {
            targets.sort_unstable();
        }
        Ok(Self {
            vertices: vertex_weights.keys().copied().collect(),
            stable: stable.keys().copied().collect(),
            unstable: unstable.keys().copied().collect(),
            vertex_weights,
            edges: edge_list,
            edge_weights,
            out_adjacency,
        })
    }

    /// Builds the digraph from an injected `λ`/`μ` table (e.g. published
    /// estimates): `w(j) = |ln λ_j|`, `w(i,j) = ln μ_ij`, partition by
    /// `λ_j < 1`.
    pub fn build_with_weights(
        lambda: &BTreeMap<usize, f64>,
        mu: &BTreeMap<(usize, usize), f64>,
        edges: &[(usize, usize)],
    ) -> Result<Self, DigraphError> {
        let mut stable = BTreeMap::new();
        let mut unstable = BTreeMap::new();
        for (&v, &l) in lambda {
            if l <= 0.0 || !l.is_finite() || l == 1.0 {
                return Err(DigraphError::InvalidLambda { vertex: v, lambda: l });
            }
            let w = l.ln().abs();
            if l < 1.0 {
                stable.insert(v, w);
            } else {
                unstable.insert(v, w);
            }
        }
        let weighted = edges
            .iter()
            .map(|&(i, j)| {
                let m = *mu.get(&(i, j)).ok_or(DigraphError::MissingMu(i, j))?;
                if m <= 0.0 || !m.is_finite() {
                    return Err(DigraphError::InvalidMu { from: i, to: j, mu: m });
                }
                Ok(((i, j), m.ln()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parts(&stable, &unstable, &weighted)
    }

    /// Builds the digraph from explicit Lyapunov certificates; transition
    /// constants come from [`compute_mu`] on the certificate pair of each
    /// edge.
    pub fn build_with_certificates(
        certificates: &BTreeMap<usize, LyapunovCertificate>,
        edges: &[(usize, usize)],
    ) -> Result<Self, DigraphError> {
        let mut stable = BTreeMap::new();
        let mut unstable = BTreeMap::new();
        for (&v, cert) in certificates {
            let w = cert.lambda.ln().abs();
            match cert.stability_class {
                StabilityClass::Stable => stable.insert(v, w),
                StabilityClass::Unstable => unstable.insert(v, w),
            };
        }
        let weighted = edges
            .iter()
            .map(|&(i, j)| {
                let from = certificates
                    .get(&i)
                    .ok_or(DigraphError::MissingCertificate(i))?;
                let to = certificates
                    .get(&j)
                    .ok_or(DigraphError::MissingCertificate(j))?;
                let mu = compute_mu(&from.p, &to.p)?;
                Ok(((i, j), mu.ln()))
            })
            .collect::<Result<Vec<_>, DigraphError>>()?;
        Self::from_parts(&stable, &unstable, &weighted)
    }

    /// Builds the digraph by computing certificates for the whole family.
    pub fn build(
        family: &SubsystemFamily,
        edges: &[(usize, usize)],
        margin: f64,
    ) -> Result<Self, DigraphError> {
        let certs = certify_family(family, margin)?;
        Self::build_with_certificates(&certs, edges)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in construction order (the incidence-matrix column order).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn stable(&self) -> &BTreeSet<usize> {
        &self.stable
    }

    pub fn unstable(&self) -> &BTreeSet<usize> {
        &self.unstable
    }

    pub fn is_stable(&self, v: usize) -> bool {
        self.stable.contains(&v)
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertex_weights.contains_key(&v)
    }

    pub fn contains_edge(&self, from: usize, to: usize) -> bool {
        self.edge_weights.contains_key(&(from, to))
    }

    /// `w(j) = |ln λ_j|`.
    pub fn vertex_weight(&self, v: usize) -> Option<f64> {
        self.vertex_weights.get(&v).copied()
    }

    /// `w(i,j) = ln μ_ij`.
    pub fn edge_weight(&self, from: usize, to: usize) -> Option<f64> {
        self.edge_weights.get(&(from, to)).copied()
    }

    /// Out-neighbours of `v`, sorted ascending.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        self.out_adjacency.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Effective cost `c(k,ℓ) = w(k,ℓ) ± w(k)` (plus for unstable `k`,
    /// minus for stable `k`).
    pub fn edge_cost(&self, from: usize, to: usize) -> Result<f64, DigraphError> {
        let w_edge = self
            .edge_weight(from, to)
            .ok_or(DigraphError::NoSuchEdge(from, to))?;
        let w_vertex = self
            .vertex_weight(from)
            .ok_or(DigraphError::UnknownVertexInEdge(from, to))?;
        Ok(if self.stable.contains(&from) {
            w_edge - w_vertex
        } else {
            w_edge + w_vertex
        })
    }

    /// All effective edge costs in edge order.
    pub fn edge_costs(&self) -> Vec<EdgeCost> {
        self.edges
            .iter()
            .map(|&(i, j)| EdgeCost {
                edge: (i, j),
                cost: self.edge_cost(i, j).expect("edge list is consistent"),
            })
            .collect()
    }

    /// The node-arc incidence matrix with split self-loops.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        IncidenceMatrix::new(self)
    }

    /// Sub-digraph induced by a subset of edges; keeps only the touched
    /// vertices, preserves relative edge order.
    pub fn restrict_to_edges(&self, keep: &[(usize, usize)]) -> Result<Self, DigraphError> {
        let keep_set: BTreeSet<(usize, usize)> = keep.iter().copied().collect();
        for &(i, j) in &keep_set {
            if !self.contains_edge(i, j) {
                return Err(DigraphError::NoSuchEdge(i, j));
            }
        }
        let touched: BTreeSet<usize> = keep_set.iter().flat_map(|&(i, j)| [i, j]).collect();
        let stable = touched
            .iter()
            .filter(|v| self.stable.contains(v))
            .map(|&v| (v, self.vertex_weights[&v]))
            .collect();
        let unstable = touched
            .iter()
            .filter(|v| self.unstable.contains(v))
            .map(|&v| (v, self.vertex_weights[&v]))
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|e| keep_set.contains(e))
            .map(|&(i, j)| ((i, j), self.edge_weights[&(i, j)]))
            .collect();
        Self::from_parts(&stable, &unstable, &edges)
    }

    /// True when the digraph has no closed walk at all (no cycle, no
    /// self-loop), established by iterative removal of in-degree-zero
    /// vertices.
    pub fn is_acyclic(&self) -> bool {
        if self.edges.iter().any(|&(i, j)| i == j) {
            return false;
        }
        let mut in_degree: BTreeMap<usize, usize> =
            self.vertices.iter().map(|&v| (v, 0)).collect();
        for &(_, j) in &self.edges {
            *in_degree.get_mut(&j).unwrap() += 1;
        }
        let mut queue: Vec<usize> = in_degree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut removed = BTreeSet::new();
        while let Some(v) = queue.pop() {
            removed.insert(v);
            for &t in self.out_neighbors(v) {
                let d = in_degree.get_mut(&t).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(t);
                }
            }
        }
        removed.len() == self.vertices.len()
    }
}

/// Row of the incidence matrix: a real vertex or the auxiliary vertex
/// `j'` introduced for the self-loop at `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    Vertex(usize),
    Auxiliary(usize),
}

/// What an incidence-matrix column stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// A regular edge.
    Direct,
    /// The `j → j'` half of a split self-loop (carries the loop cost).
    LoopOut,
    /// The `j' → j` half of a split self-loop (zero cost).
    LoopBack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    /// Index into [`SwitchingDigraph::edges`].
    pub edge_index: usize,
    pub kind: ColumnKind,
}

/// Node-arc incidence matrix: entries in `{−1, 0, +1}`, one `+1` and one
/// `−1` per column, rows for vertices plus one auxiliary row per
/// self-loop, and per-column effective costs.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    pub matrix: DMatrix<f64>,
    pub rows: Vec<RowLabel>,
    pub columns: Vec<Column>,
    pub costs: Vec<f64>,
}

impl IncidenceMatrix {
    pub fn new(g: &SwitchingDigraph) -> Self {
        let loop_edges: Vec<usize> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| i == j)
            .map(|(idx, _)| idx)
            .collect();
        let mut rows: Vec<RowLabel> = g.vertices().iter().map(|&v| RowLabel::Vertex(v)).collect();
        let mut aux_row: BTreeMap<usize, usize> = BTreeMap::new();
        for &edge_idx in &loop_edges {
            let (j, _) = g.edges()[edge_idx];
            aux_row.insert(edge_idx, rows.len());
            rows.push(RowLabel::Auxiliary(j));
        }
        let row_of: BTreeMap<usize, usize> = g
            .vertices()
            .iter()
            .enumerate()
            .map(|(r, &v)| (v, r))
            .collect();

        let n_cols = g.edge_count() + loop_edges.len();
        let mut matrix = DMatrix::zeros(rows.len(), n_cols);
        let mut columns = Vec::with_capacity(n_cols);
        let mut costs = Vec::with_capacity(n_cols);
        for (edge_idx, &(i, j)) in g.edges().iter().enumerate() {
            let cost = g.edge_cost(i, j).expect("edge list is consistent");
            if i != j {
                let col = columns.len();
                matrix[(row_of[&i], col)] = 1.0;
                matrix[(row_of[&j], col)] = -1.0;
                columns.push(Column {
                    edge_index: edge_idx,
                    kind: ColumnKind::Direct,
                });
                costs.push(cost);
            } else {
                let aux = aux_row[&edge_idx];
                let col_out = columns.len();
                matrix[(row_of[&j], col_out)] = 1.0;
                matrix[(aux, col_out)] = -1.0;
                columns.push(Column {
                    edge_index: edge_idx,
                    kind: ColumnKind::LoopOut,
                });
                costs.push(cost);
                let col_back = columns.len();
                matrix[(aux, col_back)] = 1.0;
                matrix[(row_of[&j], col_back)] = -1.0;
                columns.push(Column {
                    edge_index: edge_idx,
                    kind: ColumnKind::LoopBack,
                });
                costs.push(0.0);
            }
        }
        Self {
            matrix,
            rows,
            columns,
            costs,
        }
    }

    /// Column indices representing a given edge (two for self-loops).
    pub fn columns_for_edge(&self, edge_index: usize) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.edge_index == edge_index)
            .map(|(i, _)| i)
            .collect()
    }

    /// The edge a column stands for.
    pub fn edge_of_column(&self, column: usize) -> usize {
        self.columns[column].edge_index
    }
}
