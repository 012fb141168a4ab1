//! Minimum-cost contractive circuits.
//!
//! The feasibility program over circulations `η` (minimize `cᵀη` subject
//! to `Aη = 0`, `0 ≤ η ≤ 1`, `Ση ≥ 1`, with `A` the node-arc incidence
//! matrix) is a bounded network-flow LP, so it has integral (0/1) vertex
//! optima. It is solved here by its equivalent min-cost-circulation form:
//! start from `η = 0` and repeatedly cancel a negative-cost cycle in the
//! residual graph until none remains. Every cancellation keeps `η`
//! integral and strictly decreases the objective, so the final `η` is an
//! optimal basic solution.
//!
//! When the optimum is negative the support of `η` is a balanced subgraph
//! whose weakly connected components are Eulerian; Hierholzer's algorithm
//! turns each component into a circuit traversing every support edge
//! exactly once. The component with the most negative cost is the
//! synthesized contractive circuit. (The `Ση ≥ 1` constraint only rules
//! out the trivial all-zero solution; when no circulation has negative
//! cost the verdict is `NoneExists` and the trivial `η` is reported.)

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::cycle_synth::{find_negative_cycle_arcs, Arc};
use crate::digraph::{DigraphError, IncidenceMatrix, SwitchingDigraph};
use crate::walks::{xi_bar, Walk, WalkError};
use crate::CONTRACTIVE_EPS;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("graph admits no closed walk at all")]
    Infeasible,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("support subgraph is not balanced at vertex {0}")]
    Unbalanced(usize),
    #[error("support subgraph is empty")]
    EmptySupport,
    #[error(transparent)]
    Digraph(#[from] DigraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Verdict of the circulation program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisStatus {
    /// A circulation with negative cost exists; its support carries a
    /// contractive circuit.
    Contractive,
    /// Every nonzero circulation costs at least zero.
    NoneExists,
}

/// The circulation program data: incidence matrix (with split self-loop
/// columns) and the per-column cost vector. Variables are bounded by
/// `0 ≤ η ≤ 1` with the side constraint `Ση ≥ 1`.
#[derive(Debug, Clone)]
pub struct CirculationLp {
    pub incidence: IncidenceMatrix,
}

impl CirculationLp {
    pub fn new(g: &SwitchingDigraph) -> Self {
        Self {
            incidence: g.incidence_matrix(),
        }
    }

    pub fn num_columns(&self) -> usize {
        self.incidence.columns.len()
    }

    pub fn costs(&self) -> &[f64] {
        &self.incidence.costs
    }
}

/// One Eulerian component of the circulation support.
#[derive(Debug, Clone)]
pub struct ComponentCircuit {
    pub circuit: Walk,
    pub cost: f64,
}

/// Result of circuit synthesis.
#[derive(Debug, Clone)]
pub struct CircuitSolution {
    /// Optimal circulation per incidence-matrix column, exactly 0.0/1.0;
    /// the two columns of a split self-loop always agree.
    pub eta: Vec<f64>,
    /// Cost of the optimal circulation (0 when `NoneExists`).
    pub objective: f64,
    /// Support edges (η = 1), in edge order, self-loops re-merged.
    pub support: Vec<(usize, usize)>,
    /// The most negative per-component circuit, when contractive.
    pub circuit: Option<Walk>,
    /// All Eulerian components of the support, most negative first.
    pub components: Vec<ComponentCircuit>,
    pub status: SynthesisStatus,
}

/// Solves the circulation program. Returns the integral optimum without
/// extracting circuits yet (see [`synthesize_circuit`] for the full
/// pipeline).
pub fn solve_lp(g: &SwitchingDigraph) -> Result<CircuitSolution, SynthesisError> {
    if g.edge_count() == 0 || g.is_acyclic() {
        return Err(SynthesisError::Infeasible);
    }
    let lp = CirculationLp::new(g);
    let ids: BTreeMap<usize, usize> = g
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let costs: Vec<f64> = g
        .edges()
        .iter()
        .map(|&(i, j)| g.edge_cost(i, j).expect("edge list is consistent"))
        .collect();
    let mut eta: Vec<bool> = vec![false; g.edge_count()];
    let iteration_cap = 1000 * g.edge_count() + 1000;
    let mut converged = false;
    for _ in 0..iteration_cap {
        let residual: Vec<Arc> = g
            .edges()
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| {
                if eta[k] {
                    Arc {
                        from: ids[&v],
                        to: ids[&u],
                        cost: -costs[k],
                        tag: k,
                    }
                } else {
                    Arc {
                        from: ids[&u],
                        to: ids[&v],
                        cost: costs[k],
                        tag: k,
                    }
                }
            })
            .collect();
        match find_negative_cycle_arcs(ids.len(), &residual, 1e-12) {
            None => {
                converged = true;
                break;
            }
            Some(cycle) => {
                for arc_idx in cycle {
                    let k = residual[arc_idx].tag;
                    eta[k] = !eta[k];
                }
            }
        }
    }
    if !converged {
        return Err(SynthesisError::SolverFailure(
            "cycle canceling did not converge".into(),
        ));
    }
    let objective: f64 = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| eta[*k])
        .map(|(k, _)| costs[k])
        .sum();
    if objective < -CONTRACTIVE_EPS {
        let support: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(k, _)| eta[*k])
            .map(|(_, &e)| e)
            .collect();
        let column_eta = eta_by_column(&lp, &eta);
        debug_assert!(circulation_is_balanced(g, &support).is_ok());
        Ok(CircuitSolution {
            eta: column_eta,
            objective,
            support,
            circuit: None,
            components: Vec::new(),
            status: SynthesisStatus::Contractive,
        })
    } else {
        // No nonzero circulation beats the trivial one: report it.
        Ok(CircuitSolution {
            eta: vec![0.0; lp.num_columns()],
            objective: 0.0,
            support: Vec::new(),
            circuit: None,
            components: Vec::new(),
            status: SynthesisStatus::NoneExists,
        })
    }
}

/// Expands per-edge values to per-column values; both halves of a split
/// self-loop carry the edge's value.
fn eta_by_column(lp: &CirculationLp, eta: &[bool]) -> Vec<f64> {
    lp.incidence
        .columns
        .iter()
        .map(|col| if eta[col.edge_index] { 1.0 } else { 0.0 })
        .collect()
}

fn circulation_is_balanced(
    g: &SwitchingDigraph,
    support: &[(usize, usize)],
) -> Result<(), SynthesisError> {
    let mut balance: BTreeMap<usize, i64> = BTreeMap::new();
    for &(u, v) in support {
        *balance.entry(u).or_insert(0) += 1;
        *balance.entry(v).or_insert(0) -= 1;
    }
    let _ = g;
    match balance.iter().find(|(_, &b)| b != 0) {
        Some((&v, _)) => Err(SynthesisError::Unbalanced(v)),
        None => Ok(()),
    }
}

/// Hierholzer's algorithm on the support subgraph: every weakly connected
/// component of a balanced edge set is Eulerian, and each yields one
/// circuit using its edges exactly once. Components come back sorted by
/// cost, most negative first.
pub fn hierholzer(
    g: &SwitchingDigraph,
    support: &[(usize, usize)],
) -> Result<Vec<ComponentCircuit>, SynthesisError> {
    if support.is_empty() {
        return Err(SynthesisError::EmptySupport);
    }
    circulation_is_balanced(g, support)?;

    // Weakly connected components over the support edges.
    let vertices: BTreeSet<usize> = support.iter().flat_map(|&(u, v)| [u, v]).collect();
    let mut component_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut components: Vec<BTreeSet<usize>> = Vec::new();
    for &start in &vertices {
        if component_of.contains_key(&start) {
            continue;
        }
        let comp_id = components.len();
        let mut members = BTreeSet::new();
        let mut queue = vec![start];
        while let Some(v) = queue.pop() {
            if !members.insert(v) {
                continue;
            }
            component_of.insert(v, comp_id);
            for &(a, b) in support {
                if a == v && !members.contains(&b) {
                    queue.push(b);
                }
                if b == v && !members.contains(&a) {
                    queue.push(a);
                }
            }
        }
        components.push(members);
    }

    let mut result = Vec::new();
    for members in &components {
        // Adjacency sorted descending so pop() consumes targets smallest
        // first; the start vertex is the smallest member.
        let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut edge_count = 0;
        for &(u, v) in support {
            if members.contains(&u) {
                adjacency.entry(u).or_default().push(v);
                edge_count += 1;
            }
        }
        for targets in adjacency.values_mut() {
            targets.sort_unstable_by(|a, b| b.cmp(a));
        }
        let start = *members.iter().next().unwrap();
        let mut stack = vec![start];
        let mut path = Vec::new();
        while let Some(&v) = stack.last() {
            match adjacency.get_mut(&v).and_then(|t| t.pop()) {
                Some(next) => stack.push(next),
                None => path.push(stack.pop().unwrap()),
            }
        }
        path.reverse();
        if path.len() != edge_count + 1 {
            return Err(SynthesisError::SolverFailure(format!(
                "support component at vertex {start} is not connected-Eulerian"
            )));
        }
        let circuit = Walk::new(path)?;
        debug_assert!(circuit.is_circuit());
        let cost = xi_bar(&circuit, g)?;
        result.push(ComponentCircuit { circuit, cost });
    }
    result.sort_by(|a, b| {
        a.cost
            .partial_cmp(&b.cost)
            .unwrap()
            .then_with(|| a.circuit.vertices().cmp(b.circuit.vertices()))
    });
    Ok(result)
}

/// Full pipeline: circulation program, then circuit extraction from the
/// support.
pub fn synthesize_circuit(g: &SwitchingDigraph) -> Result<CircuitSolution, SynthesisError> {
    let mut solution = solve_lp(g)?;
    if solution.status == SynthesisStatus::Contractive {
        let components = hierholzer(g, &solution.support)?;
        solution.circuit = Some(components[0].circuit.clone());
        solution.components = components;
    }
    Ok(solution)
}
