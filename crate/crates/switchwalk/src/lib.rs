//! Synthesis of stabilizing switching signals for discrete-time switched
//! linear systems `x(t+1) = A_{σ(t)} x(t)`.
//!
//! The toolkit associates a weighted digraph with a family of linear
//! subsystems: vertices are subsystem indices (partitioned into Schur-stable
//! and unstable sets), vertex weights are `|ln λ_j|` from per-subsystem
//! Lyapunov-like certificates, and edge weights are `ln μ_ij` from the
//! transition constants between certificate pairs. A switching signal is an
//! infinite walk on this digraph, and a periodic stabilizing signal exists
//! whenever the digraph carries a *contractive* closed walk, one whose
//! accumulated effective edge cost is negative.
//!
//! Three synthesis routes are provided:
//!
//! * [`circuit_synth`]: a min-cost circulation program over the node-arc
//!   incidence matrix, followed by Hierholzer extraction of the optimal
//!   contractive circuit;
//! * [`cycle_synth`]: Bellman-Ford-Moore negative-cycle detection with
//!   predecessor extraction, plus a brute-force elementary-cycle enumerator
//!   for small graphs;
//! * [`random_synth`]: a randomized online cycle construction over the
//!   stable part of the graph, with an Azuma-type lower bound on the
//!   probability that the constructed cycle is contractive.
//!
//! [`simulate`] turns a closed contractive walk into a periodic signal and
//! validates asymptotic stability numerically.

pub mod certificates;
pub mod circuit_synth;
pub mod cycle_synth;
pub mod digraph;
pub mod random_synth;
pub mod schema;
pub mod simulate;
pub mod walks;

pub use certificates::{
    check_certificate, compute_certificate, compute_mu, transition_constants, CertificateError,
    LyapunovCertificate, StabilityClass, SubsystemFamily, SubsystemMatrix, TransitionConstant,
};
pub use circuit_synth::{
    hierholzer, solve_lp, synthesize_circuit, CircuitSolution, CirculationLp, ComponentCircuit,
    SynthesisError, SynthesisStatus,
};
pub use cycle_synth::{
    detect_negative_cycle, enumerate_cycles, most_negative_cycle_via_lp_support, CycleSynthError,
};
pub use digraph::{DigraphError, IncidenceMatrix, SwitchingDigraph};
pub use random_synth::{
    azuma_bound, cycle_statistic, generate_nicely_connected, monte_carlo_experiment,
    random_cycle, sample_weighted_digraph, x_n, CycleStatistic, ExperimentRow, Phi,
    RandomGraphModel, RandomSynthError, Skeleton,
};
pub use simulate::{
    signal_from_walk, simulate, verify_gas, GasConfig, GasReport, SimulationError,
    SwitchingSignal, Trajectory,
};
pub use walks::{
    decompose_to_circuits, decompose_to_cycles, extract_contractive_cycle, prefix_stats,
    xi_definable_on_closed_walks, Walk, WalkError, WalkStats, XiValue,
};

/// Default relative tolerance for SPD and matrix-inequality checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Threshold below which a closed-walk cost counts as contractive.
///
/// Costs in `(-CONTRACTIVE_EPS, 0)` are treated as numerically zero, so
/// they never certify contractivity.
pub const CONTRACTIVE_EPS: f64 = 1e-9;
