//! Deterministic contractive-cycle detection.
//!
//! A contractive cycle is exactly a negative cycle under the effective
//! edge costs, so detection reduces to Bellman-Ford-Moore: all distances
//! start at zero (equivalent to a virtual source with zero-cost edges to
//! every vertex, which cannot introduce a spurious cycle since it has no
//! incoming edges), `|V|` relaxation rounds run, and any edge that still
//! relaxes witnesses a negative cycle reachable by walking the
//! predecessor graph. Negative self-loops are picked up by a direct
//! pre-scan first.
//!
//! A DFS-based enumerator lists all elementary cycles of small graphs in
//! ascending cost order; it is the oracle for the detection routines and
//! the "most negative cycle" finder when applied to the circulation
//! support subgraph.

use std::collections::BTreeMap;
use thiserror::Error;

use crate::circuit_synth::{solve_lp, SynthesisError, SynthesisStatus};
use crate::digraph::SwitchingDigraph;
use crate::walks::{xi_bar, Walk};
use crate::CONTRACTIVE_EPS;

/// Default vertex cap for the exponential cycle enumeration.
pub const ENUMERATION_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum CycleSynthError {
    #[error("graph has {size} vertices, enumeration is capped at {cap}")]
    GraphTooLarge { size: usize, cap: usize },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// An arc of the dense-index working graph handed to the Bellman-Ford
/// engine. `tag` is caller-defined identity carried through extraction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Arc {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
    pub tag: usize,
}

/// Finds a negative cycle among `arcs` over dense vertex ids `0..n`.
/// Returns the arc indices of the best cycle found (most negative total
/// cost, ties broken by the lexicographically smallest arc-index
/// sequence), or `None` when every cycle costs at least `-eps`.
pub(crate) fn find_negative_cycle_arcs(n: usize, arcs: &[Arc], eps: f64) -> Option<Vec<usize>> {
    // Negative self-loops are one-arc cycles; the relaxation loop below
    // skips loops, so certify the cheapest one directly.
    let loop_candidate = arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.from == a.to && a.cost < -eps)
        .min_by(|(i, a), (j, b)| a.cost.partial_cmp(&b.cost).unwrap().then(i.cmp(j)));
    let mut best: Option<(f64, Vec<usize>)> =
        loop_candidate.map(|(i, a)| (a.cost, vec![i]));

    if n > 0 {
        let mut dist = vec![0.0_f64; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        for _ in 0..n {
            let mut changed = false;
            for (ai, arc) in arcs.iter().enumerate() {
                if arc.from == arc.to {
                    continue;
                }
                let candidate = dist[arc.from] + arc.cost;
                if candidate < dist[arc.to] {
                    dist[arc.to] = candidate;
                    pred[arc.to] = Some(ai);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // Detection pass: every edge that still relaxes marks a vertex
        // whose predecessor chain leads into a negative cycle.
        let mut heads = Vec::new();
        for (ai, arc) in arcs.iter().enumerate() {
            if arc.from == arc.to {
                continue;
            }
            let candidate = dist[arc.from] + arc.cost;
            if candidate < dist[arc.to] {
                dist[arc.to] = candidate;
                pred[arc.to] = Some(ai);
                heads.push(arc.to);
            }
        }
        let mut seen_cycles = std::collections::BTreeSet::new();
        for head in heads {
            if let Some(cycle) = trace_predecessor_cycle(n, arcs, &pred, head) {
                if !seen_cycles.insert(cycle.clone()) {
                    continue;
                }
                let cost: f64 = cycle.iter().map(|&ai| arcs[ai].cost).sum();
                let better = match &best {
                    None => true,
                    Some((best_cost, best_seq)) => {
                        cost < *best_cost || (cost == *best_cost && cycle < *best_seq)
                    }
                };
                if better {
                    best = Some((cost, cycle));
                }
            }
        }
    }
    match best {
        Some((cost, seq)) if cost < -eps => Some(seq),
        _ => None,
    }
}

/// Walks the predecessor graph `n` steps back from `head` to land inside
/// a cycle, then traces that cycle. Returns arc indices in traversal
/// order, rotated to start from the smallest arc index.
fn trace_predecessor_cycle(
    n: usize,
    arcs: &[Arc],
    pred: &[Option<usize>],
    head: usize,
) -> Option<Vec<usize>> {
    let mut x = head;
    for _ in 0..n {
        x = arcs[pred[x]?].from;
    }
    let start = x;
    let mut cycle_rev = Vec::new();
    let mut cur = start;
    loop {
        let ai = pred[cur]?;
        cycle_rev.push(ai);
        cur = arcs[ai].from;
        if cur == start {
            break;
        }
        if cycle_rev.len() > n {
            return None;
        }
    }
    cycle_rev.reverse();
    let min_pos = cycle_rev
        .iter()
        .enumerate()
        .min_by_key(|(_, &ai)| ai)
        .map(|(p, _)| p)
        .unwrap();
    cycle_rev.rotate_left(min_pos);
    Some(cycle_rev)
}

fn dense_ids(g: &SwitchingDigraph) -> BTreeMap<usize, usize> {
    g.vertices()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect()
}

/// Rotates a simple cycle's vertex list so it starts (and closes) at its
/// minimum vertex.
fn canonical_cycle(mut interior: Vec<usize>) -> Walk {
    let min_pos = interior
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(p, _)| p)
        .unwrap();
    interior.rotate_left(min_pos);
    let mut vertices = interior;
    vertices.push(vertices[0]);
    Walk::new(vertices).expect("cycle is non-empty")
}

/// Bellman-Ford-Moore negative-cycle detection with extraction. Returns a
/// simple contractive cycle if one exists, `None` otherwise.
pub fn detect_negative_cycle(g: &SwitchingDigraph) -> Option<Walk> {
    let ids = dense_ids(g);
    let arcs: Vec<Arc> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(tag, &(i, j))| Arc {
            from: ids[&i],
            to: ids[&j],
            cost: g.edge_cost(i, j).expect("edge list is consistent"),
            tag,
        })
        .collect();
    let cycle = find_negative_cycle_arcs(g.vertex_count(), &arcs, CONTRACTIVE_EPS)?;
    let interior: Vec<usize> = cycle
        .iter()
        .map(|&ai| g.edges()[arcs[ai].tag].0)
        .collect();
    let walk = canonical_cycle(interior);
    debug_assert!(walk.is_cycle());
    debug_assert!(xi_bar(&walk, g).unwrap() < 0.0);
    Some(walk)
}

/// Enumerates all elementary cycles of length at most `max_len`, sorted
/// ascending by cost (ties by vertex sequence). Exponential; refuses
/// graphs larger than `cap` vertices.
pub fn enumerate_cycles_capped(
    g: &SwitchingDigraph,
    max_len: usize,
    cap: usize,
) -> Result<Vec<(Walk, f64)>, CycleSynthError> {
    if g.vertex_count() > cap {
        return Err(CycleSynthError::GraphTooLarge {
            size: g.vertex_count(),
            cap,
        });
    }
    let mut cycles = Vec::new();
    for &start in g.vertices() {
        // Each elementary cycle is reported once, rooted at its minimum
        // vertex: the DFS only descends into vertices larger than the root.
        let mut path = vec![start];
        let mut on_path = std::collections::BTreeSet::from([start]);
        dfs_cycles(g, start, max_len, &mut path, &mut on_path, &mut cycles);
    }
    let mut with_costs: Vec<(Walk, f64)> = cycles
        .into_iter()
        .map(|w| {
            let cost = xi_bar(&w, g).expect("enumerated cycles are closed");
            (w, cost)
        })
        .collect();
    with_costs.sort_by(|(wa, ca), (wb, cb)| {
        ca.partial_cmp(cb)
            .unwrap()
            .then_with(|| wa.vertices().cmp(wb.vertices()))
    });
    Ok(with_costs)
}

/// [`enumerate_cycles_capped`] at the default cap.
pub fn enumerate_cycles(
    g: &SwitchingDigraph,
    max_len: usize,
) -> Result<Vec<(Walk, f64)>, CycleSynthError> {
    enumerate_cycles_capped(g, max_len, ENUMERATION_CAP)
}

fn dfs_cycles(
    g: &SwitchingDigraph,
    start: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut std::collections::BTreeSet<usize>,
    out: &mut Vec<Walk>,
) {
    let current = *path.last().unwrap();
    for &next in g.out_neighbors(current) {
        if next == start && path.len() <= max_len {
            let mut vertices = path.clone();
            vertices.push(start);
            out.push(Walk::new(vertices).unwrap());
        } else if next > start && !on_path.contains(&next) && path.len() < max_len {
            path.push(next);
            on_path.insert(next);
            dfs_cycles(g, start, max_len, path, on_path, out);
            path.pop();
            on_path.remove(&next);
        }
    }
}

/// Runs the circulation program, then enumerates cycles inside the
/// support subgraph only, returning the most negative one. The support is
/// a cost-minimizing sub-digraph, so the search space is much smaller
/// than the full graph.
pub fn most_negative_cycle_via_lp_support(
    g: &SwitchingDigraph,
) -> Result<Option<Walk>, CycleSynthError> {
    let solution = match solve_lp(g) {
        Ok(s) => s,
        Err(SynthesisError::Infeasible) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if solution.status == SynthesisStatus::NoneExists {
        return Ok(None);
    }
    let support_graph = g
        .restrict_to_edges(&solution.support)
        .expect("support edges come from the digraph");
    let cycles = enumerate_cycles_capped(
        &support_graph,
        support_graph.edge_count(),
        support_graph.vertex_count(),
    )?;
    Ok(cycles.into_iter().next().map(|(w, _)| w))
}
