//! Walk algebra on the switching digraph.
//!
//! A walk is a vertex sequence `x₀, …, x_ℓ` whose consecutive pairs are
//! edges; `ℓ` (the edge count) is its length. A closed walk is a *circuit*
//! when all traversed edges are distinct and a *cycle* when the interior
//! vertices are distinct from each other and from `x₀`.
//!
//! Three scalar evaluations drive everything:
//!
//! * `ν(W) = N_W / |W|`, distinct vertices over length;
//! * `Ξ(W)`, the weighted transition/dwell ratio, `Undefined` when no
//!   stable vertex is visited (an `Undefined` verdict means no walk through
//!   those vertices can ever be contractive);
//! * `Ξ̄(W)`, defined for closed walks as the sum of effective edge costs; under
//!   the closed-walk vertex-counting convention (a vertex is counted once
//!   per outgoing edge traversal), `Ξ̄(W) < 0 ⟺ Ξ(W) < 1`.
//!
//! The decompositions split a closed walk into circuits (peeling repeated
//! edges) and a circuit into cycles (peeling repeated vertices), conserving
//! the edge multiset and the cost sum, which is how a contractive cycle is
//! extracted from any contractive closed walk.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::digraph::SwitchingDigraph;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("walk is empty (no edges)")]
    EmptyWalk,
    #[error("walk must have at least one vertex")]
    NoVertices,
    #[error("walk uses edge ({0}, {1}) which is not in the digraph")]
    EdgeNotInGraph(usize, usize),
    #[error("walk is not closed")]
    NotClosed,
    #[error("walk is not a circuit")]
    NotCircuit,
    #[error("walk is not contractive")]
    NotContractive,
    #[error("cannot concatenate: final vertex {0} differs from initial vertex {1}")]
    EndpointMismatch(usize, usize),
}

/// A walk, stored as its vertex sequence (edges are implied).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Walk {
    vertices: Vec<usize>,
}

impl Walk {
    /// A walk from a vertex sequence; must contain at least one vertex.
    pub fn new(vertices: Vec<usize>) -> Result<Self, WalkError> {
        if vertices.is_empty() {
            return Err(WalkError::NoVertices);
        }
        Ok(Self { vertices })
    }

    /// Like [`Walk::new`] but also checks every implied edge against the
    /// digraph.
    pub fn validated(vertices: Vec<usize>, g: &SwitchingDigraph) -> Result<Self, WalkError> {
        let walk = Self::new(vertices)?;
        walk.validate(g)?;
        Ok(walk)
    }

    /// Checks that every implied edge exists in `g`.
    pub fn validate(&self, g: &SwitchingDigraph) -> Result<(), WalkError> {
        for (i, j) in self.edges() {
            if !g.contains_edge(i, j) {
                return Err(WalkError::EdgeNotInGraph(i, j));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> usize {
        self.vertices[0]
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        !self.is_empty() && self.first() == self.last()
    }

    /// Closed with all edges distinct.
    pub fn is_circuit(&self) -> bool {
        if !self.is_closed() {
            return false;
        }
        let mut seen = std::collections::BTreeSet::new();
        self.edges().all(|e| seen.insert(e))
    }

    /// Closed with interior vertices distinct from each other and from the
    /// base vertex.
    pub fn is_cycle(&self) -> bool {
        if !self.is_closed() {
            return false;
        }
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(self.first());
        self.vertices[1..self.vertices.len() - 1]
            .iter()
            .all(|&v| seen.insert(v))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Edge multiplicities `♯{k→ℓ}_W`.
    pub fn edge_multiplicities(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for e in self.edges() {
            *counts.entry(e).or_insert(0) += 1;
        }
        counts
    }

    /// Vertex counts `♯{j}_W` under the closed-walk convention: each
    /// vertex is counted once per outgoing edge traversal, i.e. the final
    /// vertex of the sequence is excluded. On closed walks this equals the
    /// out-edge count of the vertex within the walk.
    pub fn vertex_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for &v in &self.vertices[..self.vertices.len() - 1] {
            *counts.entry(v).or_insert(0) += 1;
        }
        counts
    }

    /// Number of distinct vertices appearing anywhere in the walk.
    pub fn distinct_vertex_count(&self) -> usize {
        self.vertices
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    }

    /// Concatenation; the final vertex of `self` must equal the initial
    /// vertex of `other`.
    pub fn concat(&self, other: &Walk) -> Result<Walk, WalkError> {
        if self.last() != other.first() {
            return Err(WalkError::EndpointMismatch(self.last(), other.first()));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices[1..]);
        Ok(Walk { vertices })
    }

    /// The prefix with the first `length` edges.
    pub fn prefix(&self, length: usize) -> Walk {
        Walk {
            vertices: self.vertices[..=length.min(self.len())].to_vec(),
        }
    }
}

/// Result of evaluating `Ξ`: `Undefined` is a meaningful verdict (the
/// denominator vanishes when no stable vertex is visited), not an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum XiValue {
    Defined(f64),
    Undefined,
}

impl XiValue {
    pub fn value(self) -> Option<f64> {
        match self {
            XiValue::Defined(v) => Some(v),
            XiValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, XiValue::Defined(_))
    }
}

/// The scalar evaluations of one walk.
#[derive(Debug, Clone, Copy)]
pub struct WalkStats {
    pub nu: f64,
    pub xi: XiValue,
    /// Only for closed walks.
    pub xi_bar: Option<f64>,
}

/// Transition frequency `ν(W) = N_W / |W|`.
pub fn nu(walk: &Walk) -> Result<f64, WalkError> {
    if walk.is_empty() {
        return Err(WalkError::EmptyWalk);
    }
    Ok(walk.distinct_vertex_count() as f64 / walk.len() as f64)
}

/// `Ξ(W)`: numerator `Σ w(k,ℓ)♯{k→ℓ} + Σ_{j∈P_U} w(j)♯{j}`, denominator
/// `Σ_{j∈P_S} w(j)♯{j}`; `Undefined` when the denominator vanishes.
pub fn xi(walk: &Walk, g: &SwitchingDigraph) -> Result<XiValue, WalkError> {
    if walk.is_empty() {
        return Err(WalkError::EmptyWalk);
    }
    walk.validate(g)?;
    let mut numerator = 0.0;
    for ((i, j), count) in walk.edge_multiplicities() {
        numerator += g.edge_weight(i, j).unwrap() * count as f64;
    }
    let mut denominator = 0.0;
    for (v, count) in walk.vertex_counts() {
        let w = g.vertex_weight(v).ok_or(WalkError::EdgeNotInGraph(v, v))?;
        if g.is_stable(v) {
            denominator += w * count as f64;
        } else {
            numerator += w * count as f64;
        }
    }
    if denominator == 0.0 {
        Ok(XiValue::Undefined)
    } else {
        Ok(XiValue::Defined(numerator / denominator))
    }
}

/// `Ξ̄(W)`: the sum of effective edge costs along a closed walk, in
/// traversal order. `Ξ̄(W) < 0 ⟺ Ξ(W) < 1` whenever `Ξ` is defined.
pub fn xi_bar(walk: &Walk, g: &SwitchingDigraph) -> Result<f64, WalkError> {
    if !walk.is_closed() {
        return Err(WalkError::NotClosed);
    }
    let mut total = 0.0;
    for (i, j) in walk.edges() {
        total += g
            .edge_cost(i, j)
            .map_err(|_| WalkError::EdgeNotInGraph(i, j))?;
    }
    Ok(total)
}

/// All three evaluations at once.
pub fn stats(walk: &Walk, g: &SwitchingDigraph) -> Result<WalkStats, WalkError> {
    Ok(WalkStats {
        nu: nu(walk)?,
        xi: xi(walk, g)?,
        xi_bar: if walk.is_closed() {
            Some(xi_bar(walk, g)?)
        } else {
            None
        },
    })
}

/// Earliest repeated edge of a closed walk: returns the positions of its
/// first and last traversal.
fn earliest_repeated_edge(vertices: &[usize]) -> Option<(usize, usize)> {
    let n_edges = vertices.len() - 1;
    let mut first_seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut last_seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for idx in 0..n_edges {
        let e = (vertices[idx], vertices[idx + 1]);
        first_seen.entry(e).or_insert(idx);
        last_seen.insert(e, idx);
    }
    first_seen
        .iter()
        .filter(|(e, &first)| last_seen[*e] > first)
        .min_by_key(|(_, &first)| first)
        .map(|(e, &first)| (first, last_seen[e]))
}

/// Splits a closed walk at a repeated edge `e`: one part keeps the walk up
/// to the first traversal of `e` plus everything after the last traversal,
/// the other part is the stretch in between. Both parts are closed and
/// their edge multisets partition the original.
fn split_on_repeated_edge(vertices: &[usize], first: usize, last: usize) -> (Vec<usize>, Vec<usize>) {
    let mut outer = vertices[..=first + 1].to_vec();
    outer.extend_from_slice(&vertices[last + 2..]);
    let inner = vertices[first + 1..=last + 1].to_vec();
    (outer, inner)
}

/// Recursively decomposes a closed walk into circuits. The edge multisets
/// of the parts partition the walk's, so the costs add up exactly.
pub fn decompose_to_circuits(walk: &Walk) -> Result<Vec<Walk>, WalkError> {
    if !walk.is_closed() {
        return Err(WalkError::NotClosed);
    }
    let mut result = Vec::new();
    let mut stack = vec![walk.vertices.clone()];
    while let Some(vertices) = stack.pop() {
        match earliest_repeated_edge(&vertices) {
            None => result.push(Walk { vertices }),
            Some((first, last)) => {
                let (outer, inner) = split_on_repeated_edge(&vertices, first, last);
                // Inner is pushed last so it is processed first; output
                // order follows the traversal order of the splits.
                stack.push(outer);
                stack.push(inner);
            }
        }
    }
    Ok(result)
}

/// Interior positions (excluding both endpoints) where the base vertex
/// reappears.
fn interior_base_positions(vertices: &[usize]) -> Vec<usize> {
    let base = vertices[0];
    (1..vertices.len() - 1)
        .filter(|&i| vertices[i] == base)
        .collect()
}

/// Earliest interior vertex that appears more than once (first and last
/// positions of it), assuming the base vertex does not reappear.
fn earliest_repeated_interior(vertices: &[usize]) -> Option<(usize, usize)> {
    let mut first_seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut last_seen: BTreeMap<usize, usize> = BTreeMap::new();
    for (idx, &v) in vertices.iter().enumerate().take(vertices.len() - 1).skip(1) {
        first_seen.entry(v).or_insert(idx);
        last_seen.insert(v, idx);
    }
    first_seen
        .iter()
        .filter(|(v, &first)| last_seen[*v] > first)
        .min_by_key(|(_, &first)| first)
        .map(|(v, &first)| (first, last_seen[v]))
}

/// Recursively decomposes a circuit into cycles: first splitting at
/// repeated traversals of the base vertex, then peeling the stretch
/// between the first and last visit of a repeated interior vertex.
pub fn decompose_to_cycles(walk: &Walk) -> Result<Vec<Walk>, WalkError> {
    if !walk.is_circuit() {
        return Err(WalkError::NotCircuit);
    }
    let mut result = Vec::new();
    let mut stack = vec![walk.vertices.clone()];
    while let Some(vertices) = stack.pop() {
        let base_repeats = interior_base_positions(&vertices);
        if !base_repeats.is_empty() {
            let mut bounds = vec![0];
            bounds.extend(base_repeats);
            bounds.push(vertices.len() - 1);
            // Push in reverse so the earlier stretches are processed first.
            for pair in bounds.windows(2).rev() {
                stack.push(vertices[pair[0]..=pair[1]].to_vec());
            }
            continue;
        }
        match earliest_repeated_interior(&vertices) {
            None => result.push(Walk { vertices }),
            Some((first, last)) => {
                let mut outer = vertices[..=first].to_vec();
                outer.extend_from_slice(&vertices[last + 1..]);
                let inner = vertices[first..=last].to_vec();
                stack.push(outer);
                stack.push(inner);
            }
        }
    }
    Ok(result)
}

/// Extracts a contractive (negative-cost) simple cycle from a contractive
/// closed walk, via the circuit and cycle decompositions. Returns the most
/// negative cycle of the decomposition.
pub fn extract_contractive_cycle(
    walk: &Walk,
    g: &SwitchingDigraph,
) -> Result<Walk, WalkError> {
    let total = xi_bar(walk, g)?;
    if total >= 0.0 || total.is_nan() {
        return Err(WalkError::NotContractive);
    }
    let mut best: Option<(f64, Walk)> = None;
    for circuit in decompose_to_circuits(walk)? {
        for cycle in decompose_to_cycles(&circuit)? {
            let cost = xi_bar(&cycle, g)?;
            let better = match &best {
                None => true,
                Some((best_cost, best_walk)) => {
                    cost < *best_cost
                        || (cost == *best_cost && cycle.vertices < best_walk.vertices)
                }
            };
            if better {
                best = Some((cost, cycle));
            }
        }
    }
    let (cost, cycle) = best.expect("a closed walk decomposes into at least one cycle");
    if cost >= 0.0 || cost.is_nan() {
        // Cost additivity guarantees a negative part exists.
        return Err(WalkError::NotContractive);
    }
    Ok(cycle)
}

/// True when some closed walk on the graph has a defined `Ξ`, i.e. some
/// stable vertex lies on a cycle. When false, every closed walk has
/// `Ξ = Undefined` and no switching signal on this graph can satisfy the
/// contractivity condition.
pub fn xi_definable_on_closed_walks(g: &SwitchingDigraph) -> bool {
    g.stable().iter().any(|&v| lies_on_cycle(g, v))
}

fn lies_on_cycle(g: &SwitchingDigraph, v: usize) -> bool {
    let mut stack: Vec<usize> = g.out_neighbors(v).to_vec();
    let mut seen = std::collections::BTreeSet::new();
    while let Some(u) = stack.pop() {
        if u == v {
            return true;
        }
        if seen.insert(u) {
            stack.extend_from_slice(g.out_neighbors(u));
        }
    }
    false
}

/// One row of the prefix diagnostic series.
#[derive(Debug, Clone, Copy)]
pub struct PrefixStat {
    pub length: usize,
    pub nu: f64,
    pub xi: XiValue,
}

/// Evaluates `(|W'|, ν(W'), Ξ(W'))` on prefixes of the walk, every
/// `stride` edges (the full walk is always included). Used to inspect the
/// two stabilizing conditions on long finite prefixes.
pub fn prefix_stats(
    walk: &Walk,
    g: &SwitchingDigraph,
    stride: usize,
) -> Result<Vec<PrefixStat>, WalkError> {
    if walk.is_empty() {
        return Err(WalkError::EmptyWalk);
    }
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut lengths: Vec<usize> = (stride..=walk.len()).step_by(stride).collect();
    if *lengths.last().unwrap_or(&0) != walk.len() {
        lengths.push(walk.len());
    }
    for length in lengths {
        let prefix = walk.prefix(length);
        out.push(PrefixStat {
            length,
            nu: nu(&prefix)?,
            xi: xi(&prefix, g)?,
        });
    }
    Ok(out)
}

/// Serializes a prefix series as CSV with columns `length,nu,xi`
/// (undefined `Ξ` prints as `nan`).
pub fn prefix_stats_csv(stats: &[PrefixStat]) -> String {
    let mut out = String::from("length,nu,xi\n");
    for s in stats {
        let xi = match s.xi {
            XiValue::Defined(v) => v.to_string(),
            XiValue::Undefined => "nan".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", s.length, s.nu, xi));
    }
    out
}
