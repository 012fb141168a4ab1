//! Randomized cycle synthesis over the stable part of the graph.
//!
//! The randomized walk picks a uniformly random stable start vertex and
//! greedily extends through unvisited stable out-neighbours (uniformly at
//! random); when none remain it closes back to the earliest visited
//! stable out-neighbour of the endpoint, and the suffix from that vertex
//! is a simple cycle. The walk consults adjacency only, never weights,
//! which is what makes the method usable online on graphs too large to
//! hold all weights in memory.
//!
//! On a *nicely connected* graph (every vertex has at least
//! `⌊Φ(|P_S|)⌋` stable out-neighbours) the constructed cycle has length
//! at least `⌊Φ(|P_S|)⌋`. On a *nicely weighted* graph (edge weights in
//! `[−A, A]` with mean ≤ α, vertex weights in `(0, B]` with mean β,
//! α < β, drawn independently) the cycle statistic
//! `X_n = Σ w(j_{k−1}, j_k) − Σ_{k=0..n} w(j_k)` is negative (the cycle
//! is contractive) with probability at least
//! `1 − exp(−½((α−β)/(A+B))²·n)`, by Azuma's inequality applied to the
//! martingale part of its Doob decomposition.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::digraph::SwitchingDigraph;
use crate::walks::Walk;

#[derive(Debug, Error)]
pub enum RandomSynthError {
    #[error("vertex {vertex} has {degree} stable out-neighbours, niceness requires {required}")]
    NotNicelyConnected {
        vertex: usize,
        degree: usize,
        required: usize,
    },
    #[error("walk is stuck at vertex {vertex}: no stable out-neighbour at all")]
    DeadEnd { vertex: usize },
    #[error("stable vertex set is empty")]
    EmptyStableSet,
    #[error("cycle visits vertex {vertex} which is not stable")]
    UnstableVertexInCycle { vertex: usize },
    #[error("the cycle statistic requires a closed walk")]
    NotClosed,
    #[error("walk uses edge ({0}, {1}) with no weight in the digraph")]
    MissingWeight(usize, usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("degree floor {required} is infeasible with {available} candidate out-neighbours")]
    InfeasibleDegree { required: usize, available: usize },
    #[error("cycle lengths must be at least 1")]
    InvalidLength,
}

/// The degree profile `Φ`, a monotone nondecreasing map from the stable
/// set size to a real degree requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Phi {
    /// `Φ(r) = scale · √r`.
    ScaledSqrt { scale: f64 },
    /// `Φ(r) = value`.
    Constant { value: f64 },
}

impl Phi {
    pub fn eval(&self, r: usize) -> f64 {
        match self {
            Phi::ScaledSqrt { scale } => scale * (r as f64).sqrt(),
            Phi::Constant { value } => *value,
        }
    }

    /// `⌊Φ(r)⌋`, clamped below at zero.
    pub fn floor(&self, r: usize) -> usize {
        self.eval(r).floor().max(0.0) as usize
    }
}

/// The nicely-connected / nicely-weighted graph model: stable and
/// unstable set sizes, the degree profile `Φ`, and the weight-law
/// parameters `(A, B, α, β)`. Sampled weight laws are uniform on the
/// widest interval inside the stipulated support that realizes the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphModel {
    pub stable_count: usize,
    pub unstable_count: usize,
    pub phi: Phi,
    /// Edge weights live in `[-edge_bound, edge_bound]`.
    pub edge_bound: f64,
    /// Vertex weights live in `(0, vertex_bound]`.
    pub vertex_bound: f64,
    /// Mean edge weight α (must satisfy α < β and |α| ≤ A).
    pub edge_mean: f64,
    /// Mean vertex weight β (must satisfy 0 < β < B).
    pub vertex_mean: f64,
}

impl RandomGraphModel {
    pub fn validate(&self) -> Result<(), RandomSynthError> {
        let err = |msg: String| Err(RandomSynthError::InvalidModel(msg));
        if self.stable_count == 0 {
            return err("stable set must be nonempty".into());
        }
        if self.edge_bound <= 0.0 || !self.edge_bound.is_finite() {
            return err(format!("edge bound A = {} must be positive", self.edge_bound));
        }
        if self.vertex_mean <= 0.0 || self.vertex_mean >= self.vertex_bound {
            return err(format!(
                "vertex mean beta = {} must satisfy 0 < beta < B = {}",
                self.vertex_mean, self.vertex_bound
            ));
        }
        if self.edge_mean >= self.vertex_mean || self.edge_mean.is_nan() {
            return err(format!(
                "edge mean alpha = {} must be below the vertex mean beta = {}",
                self.edge_mean, self.vertex_mean
            ));
        }
        if self.edge_mean.abs() > self.edge_bound {
            return err(format!(
                "edge mean alpha = {} lies outside [-A, A] with A = {}",
                self.edge_mean, self.edge_bound
            ));
        }
        Ok(())
    }

    /// `⌊Φ(|P_S|)⌋`.
    pub fn degree_floor(&self) -> usize {
        self.phi.floor(self.stable_count)
    }

    /// Uniform edge-weight draw with mean α and support inside `[-A, A]`.
    pub fn sample_edge_weight(&self, rng: &mut impl Rng) -> f64 {
        let (a, alpha) = (self.edge_bound, self.edge_mean);
        if alpha >= 0.0 {
            rng.random_range(2.0 * alpha - a..=a)
        } else {
            rng.random_range(-a..=2.0 * alpha + a)
        }
    }

    /// Uniform vertex-weight draw with mean β and support inside
    /// `(0, B]`; a zero draw is rejected and resampled.
    pub fn sample_vertex_weight(&self, rng: &mut impl Rng) -> f64 {
        let (b, beta) = (self.vertex_bound, self.vertex_mean);
        let lo = if 2.0 * beta >= b { 2.0 * beta - b } else { 0.0 };
        let hi = if 2.0 * beta >= b { b } else { 2.0 * beta };
        loop {
            let w = rng.random_range(lo..=hi);
            if w > 0.0 {
                return w;
            }
        }
    }
}

/// Weightless adjacency structure consumed by the randomized walk: the
/// partition and, for every vertex, its stable out-neighbours. Taking
/// this (and not the weighted digraph) as input is what enforces the
/// online property structurally.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
    /// Stable out-neighbours (sorted) for every vertex of the graph.
    pub stable_out: BTreeMap<usize, Vec<usize>>,
}

impl Skeleton {
    /// Drops the weights of a digraph, keeping the stable-adjacency view.
    pub fn from_digraph(g: &SwitchingDigraph) -> Self {
        let stable: Vec<usize> = g.stable().iter().copied().collect();
        let unstable: Vec<usize> = g.unstable().iter().copied().collect();
        let stable_out = g
            .vertices()
            .iter()
            .map(|&v| {
                let nbrs = g
                    .out_neighbors(v)
                    .iter()
                    .copied()
                    .filter(|t| g.is_stable(*t))
                    .collect();
                (v, nbrs)
            })
            .collect();
        Self {
            stable,
            unstable,
            stable_out,
        }
    }

    fn check_nicely_connected(&self, degree_floor: usize) -> Result<(), RandomSynthError> {
        for (&v, nbrs) in &self.stable_out {
            if nbrs.len() < degree_floor {
                return Err(RandomSynthError::NotNicelyConnected {
                    vertex: v,
                    degree: nbrs.len(),
                    required: degree_floor,
                });
            }
        }
        Ok(())
    }
}

/// Runs the randomized walk and returns the cycle it closes on.
///
/// `degree_floor` is `⌊Φ(|P_S|)⌋`; the skeleton is checked against it
/// up front, which also guarantees (for positive floors) that the closing
/// step always finds a visited out-neighbour.
pub fn random_cycle(
    skeleton: &Skeleton,
    degree_floor: usize,
    seed: u64,
) -> Result<Walk, RandomSynthError> {
    skeleton.check_nicely_connected(degree_floor)?;
    if skeleton.stable.is_empty() {
        return Err(RandomSynthError::EmptyStableSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = skeleton.stable[rng.random_range(0..skeleton.stable.len())];
    let mut visited_order = vec![start];
    let mut visited: BTreeSet<usize> = BTreeSet::from([start]);
    loop {
        let current = *visited_order.last().unwrap();
        let neighbours = skeleton
            .stable_out
            .get(&current)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let fresh: Vec<usize> = neighbours
            .iter()
            .copied()
            .filter(|v| !visited.contains(v))
            .collect();
        if !fresh.is_empty() {
            let next = fresh[rng.random_range(0..fresh.len())];
            visited_order.push(next);
            visited.insert(next);
            continue;
        }
        // Close to the earliest visited out-neighbour, maximizing the
        // cycle length.
        let close_to = visited_order
            .iter()
            .position(|v| neighbours.contains(v))
            .ok_or(RandomSynthError::DeadEnd { vertex: current })?;
        let mut cycle = visited_order[close_to..].to_vec();
        cycle.push(visited_order[close_to]);
        return Ok(Walk::new(cycle).expect("cycle has at least one edge"));
    }
}

/// A cycle in the stable set together with its length and statistic.
#[derive(Debug, Clone)]
pub struct CycleStatistic {
    pub cycle: Walk,
    pub n: usize,
    pub x_n: f64,
}

/// Evaluates [`x_n`] and packages it with the cycle.
pub fn cycle_statistic(
    cycle: &Walk,
    g: &SwitchingDigraph,
) -> Result<CycleStatistic, RandomSynthError> {
    Ok(CycleStatistic {
        cycle: cycle.clone(),
        n: cycle.len(),
        x_n: x_n(cycle, g)?,
    })
}

/// The cycle statistic `X_n = Σ_{k=1..n} w(j_{k−1}, j_k) − Σ_{k=0..n}
/// w(j_k)`, evaluated on the digraph's weights. The vertex sum runs over
/// all `n+1` sequence positions, so the base vertex weight is counted
/// twice; `X_n = Ξ̄ − w(j_0)` on all-stable cycles.
pub fn x_n(cycle: &Walk, g: &SwitchingDigraph) -> Result<f64, RandomSynthError> {
    if !cycle.is_closed() {
        return Err(RandomSynthError::NotClosed);
    }
    for &v in cycle.vertices() {
        if !g.is_stable(v) {
            return Err(RandomSynthError::UnstableVertexInCycle { vertex: v });
        }
    }
    let mut total = 0.0;
    for (i, j) in cycle.edges() {
        total += g
            .edge_weight(i, j)
            .ok_or(RandomSynthError::MissingWeight(i, j))?;
    }
    for &v in cycle.vertices() {
        total -= g.vertex_weight(v).expect("stable vertex has a weight");
    }
    Ok(total)
}

/// The contractivity probability bound
/// `1 − exp(−½((α−β)/(A+B))²·n)`.
pub fn azuma_bound(model: &RandomGraphModel, n: usize) -> Result<f64, RandomSynthError> {
    model.validate()?;
    let ratio = (model.edge_mean - model.vertex_mean) / (model.edge_bound + model.vertex_bound);
    Ok(1.0 - (-0.5 * ratio * ratio * n as f64).exp())
}

/// Samples a nicely connected skeleton: stable vertices `1..=|P_S|`,
/// unstable vertices after them, and for every vertex a uniformly chosen
/// set of exactly `max(⌊Φ(|P_S|)⌋, 1)` distinct stable out-neighbours
/// (self-loops excluded).
pub fn generate_nicely_connected(
    model: &RandomGraphModel,
    seed: u64,
) -> Result<Skeleton, RandomSynthError> {
    model.validate()?;
    let n_stable = model.stable_count;
    let degree = model.degree_floor().max(1);
    let stable: Vec<usize> = (1..=n_stable).collect();
    let unstable: Vec<usize> = (n_stable + 1..=n_stable + model.unstable_count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stable_out = BTreeMap::new();
    for &v in stable.iter().chain(unstable.iter()) {
        let mut candidates: Vec<usize> = stable.iter().copied().filter(|&u| u != v).collect();
        if degree > candidates.len() {
            return Err(RandomSynthError::InfeasibleDegree {
                required: degree,
                available: candidates.len(),
            });
        }
        // Partial Fisher-Yates: the first `degree` entries end up a
        // uniform sample without replacement.
        for i in 0..degree {
            let j = rng.random_range(i..candidates.len());
            candidates.swap(i, j);
        }
        let mut chosen: Vec<usize> = candidates[..degree].to_vec();
        chosen.sort_unstable();
        stable_out.insert(v, chosen);
    }
    Ok(Skeleton {
        stable,
        unstable,
        stable_out,
    })
}

/// Attaches sampled weights to a skeleton, producing a weighted digraph
/// over the stable-adjacency view: one vertex-weight draw per vertex and
/// one edge-weight draw per stable out-edge, from the model's laws.
pub fn sample_weighted_digraph(
    skeleton: &Skeleton,
    model: &RandomGraphModel,
    seed: u64,
) -> Result<SwitchingDigraph, RandomSynthError> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stable: BTreeMap<usize, f64> = skeleton
        .stable
        .iter()
        .map(|&v| (v, model.sample_vertex_weight(&mut rng)))
        .collect();
    let unstable: BTreeMap<usize, f64> = skeleton
        .unstable
        .iter()
        .map(|&v| (v, model.sample_vertex_weight(&mut rng)))
        .collect();
    let mut edges = Vec::new();
    for (&v, targets) in &skeleton.stable_out {
        for &t in targets {
            edges.push(((v, t), model.sample_edge_weight(&mut rng)));
        }
    }
    SwitchingDigraph::from_parts(&stable, &unstable, &edges)
        .map_err(|e| RandomSynthError::InvalidModel(e.to_string()))
}

/// One row of the Monte Carlo table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub empirical: f64,
    pub bound: f64,
}

/// Auxiliary skeleton on which the randomized walk provably produces a
/// cycle of length exactly `n`: the complete digraph on `n` stable
/// vertices (every vertex stays fresh until all are visited, and the
/// earliest visited out-neighbour of the final vertex is the start), or a
/// single self-looped vertex for `n = 1`.
fn exact_length_skeleton(n: usize) -> Skeleton {
    let stable: Vec<usize> = (1..=n).collect();
    let stable_out = stable
        .iter()
        .map(|&v| {
            let nbrs: Vec<usize> = if n == 1 {
                vec![1]
            } else {
                stable.iter().copied().filter(|&u| u != v).collect()
            };
            (v, nbrs)
        })
        .collect();
    Skeleton {
        stable,
        unstable: Vec::new(),
        stable_out,
    }
}

/// For each requested cycle length: fixes a cycle of that length with the
/// randomized walk, then resamples its vertex and edge weights `trials`
/// times from the model's laws and reports the empirical probability of
/// `X_n < 0` next to the Azuma bound.
///
/// Each (length, trial) pair owns a dedicated RNG stream keyed by the
/// seed, so trials are order-independent and the table is reproducible.
pub fn monte_carlo_experiment(
    model: &RandomGraphModel,
    lengths: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ExperimentRow>, RandomSynthError> {
    model.validate()?;
    let mut rows = Vec::with_capacity(lengths.len());
    for &n in lengths {
        if n == 0 {
            return Err(RandomSynthError::InvalidLength);
        }
        let skeleton = exact_length_skeleton(n);
        let mut cycle_rng = ChaCha8Rng::seed_from_u64(seed);
        cycle_rng.set_stream((n as u64) << 32);
        let cycle = random_cycle(&skeleton, n.saturating_sub(1), cycle_rng.random())?;
        debug_assert_eq!(cycle.len(), n);
        let vertices = cycle.vertices();
        let mut negatives = 0usize;
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((n as u64) << 32) | (trial as u64 + 1));
            let mut x = 0.0;
            for _ in 0..n {
                x += model.sample_edge_weight(&mut rng);
            }
            // One independent draw per distinct vertex; the base vertex
            // weight enters twice (positions 0 and n of the sequence).
            let mut weight_of: BTreeMap<usize, f64> = BTreeMap::new();
            for &v in vertices {
                let w = *weight_of
                    .entry(v)
                    .or_insert_with(|| model.sample_vertex_weight(&mut rng));
                x -= w;
            }
            if x < 0.0 {
                negatives += 1;
            }
        }
        rows.push(ExperimentRow {
            n,
            empirical: negatives as f64 / trials.max(1) as f64,
            bound: azuma_bound(model, n)?,
        });
    }
    Ok(rows)
}
