//! Python bindings: the switching digraph with its synthesis and
//! validation operations, plus the certificate and randomized-experiment
//! helpers. Walks cross the boundary as plain vertex lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use switchwalk::certificates::{self, StabilityClass, SubsystemFamily, SubsystemMatrix};
use switchwalk::circuit_synth::{synthesize_circuit, SynthesisStatus};
use switchwalk::cycle_synth;
use switchwalk::digraph::SwitchingDigraph;
use switchwalk::random_synth::{self, Phi, RandomGraphModel, Skeleton};
use switchwalk::simulate::{signal_from_walk, verify_gas, GasConfig};
use switchwalk::walks::{self, Walk, XiValue};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if r == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(value_err("matrix rows must be nonempty and rectangular"));
    }
    Ok(DMatrix::from_row_slice(r, c, &rows.concat()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn walk_from_vertices(vertices: Vec<usize>, g: &SwitchingDigraph) -> PyResult<Walk> {
    Walk::validated(vertices, g).map_err(value_err)
}

fn family_from_entries(entries: Vec<(usize, Vec<Vec<f64>>)>) -> PyResult<SubsystemFamily> {
    let subsystems = entries
        .into_iter()
        .map(|(index, rows)| {
            SubsystemMatrix::new(index, matrix_from_rows(&rows)?).map_err(value_err)
        })
        .collect::<PyResult<Vec<_>>>()?;
    SubsystemFamily::new(subsystems).map_err(value_err)
}

/// Weighted switching digraph of a switched linear system.
#[pyclass(frozen)]
struct Digraph {
    inner: SwitchingDigraph,
}

#[pymethods]
impl Digraph {
    /// Build from an explicit weight table: `lambdas[v]` and
    /// `mus[(i, j)]` with edges as `(i, j)` pairs.
    #[staticmethod]
    fn from_weights(
        lambdas: BTreeMap<usize, f64>,
        mus: BTreeMap<(usize, usize), f64>,
        edges: Vec<(usize, usize)>,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: SwitchingDigraph::build_with_weights(&lambdas, &mus, &edges)
                .map_err(value_err)?,
        })
    }

    /// Build by computing Lyapunov certificates for the subsystem
    /// matrices, given as `(index, row_major_matrix)` pairs.
    #[staticmethod]
    #[pyo3(signature = (subsystems, edges, margin=0.01))]
    fn from_systems(
        subsystems: Vec<(usize, Vec<Vec<f64>>)>,
        edges: Vec<(usize, usize)>,
        margin: f64,
    ) -> PyResult<Self> {
        let family = family_from_entries(subsystems)?;
        Ok(Self {
            inner: SwitchingDigraph::build(&family, &edges, margin).map_err(value_err)?,
        })
    }

    fn vertices(&self) -> Vec<usize> {
        self.inner.vertices().to_vec()
    }

    fn stable(&self) -> Vec<usize> {
        self.inner.stable().iter().copied().collect()
    }

    fn unstable(&self) -> Vec<usize> {
        self.inner.unstable().iter().copied().collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn vertex_weight(&self, v: usize) -> Option<f64> {
        self.inner.vertex_weight(v)
    }

    fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        self.inner.edge_weight(i, j)
    }

    fn edge_cost(&self, i: usize, j: usize) -> PyResult<f64> {
        self.inner.edge_cost(i, j).map_err(value_err)
    }

    /// `ν(W)` of a walk given as its vertex list.
    fn nu(&self, walk: Vec<usize>) -> PyResult<f64> {
        let walk = walk_from_vertices(walk, &self.inner)?;
        walks::nu(&walk).map_err(value_err)
    }

    /// `Ξ(W)`; `None` when undefined (no stable vertex visited).
    fn xi(&self, walk: Vec<usize>) -> PyResult<Option<f64>> {
        let walk = walk_from_vertices(walk, &self.inner)?;
        match walks::xi(&walk, &self.inner).map_err(value_err)? {
            XiValue::Defined(v) => Ok(Some(v)),
            XiValue::Undefined => Ok(None),
        }
    }

    /// `Ξ̄(W)` of a closed walk.
    fn xi_bar(&self, walk: Vec<usize>) -> PyResult<f64> {
        let walk = walk_from_vertices(walk, &self.inner)?;
        walks::xi_bar(&walk, &self.inner).map_err(value_err)
    }

    /// Whether any closed walk has a defined `Ξ` at all.
    fn xi_definable(&self) -> bool {
        walks::xi_definable_on_closed_walks(&self.inner)
    }

    /// Minimum-cost contractive circuit via the circulation program plus
    /// Hierholzer extraction. Returns a dict with `status`, `objective`,
    /// `eta`, `support`, `walk`, `xi_bar` and `components`.
    fn synthesize_circuit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let solution = synthesize_circuit(&self.inner).map_err(value_err)?;
        let dict = PyDict::new(py);
        let contractive = solution.status == SynthesisStatus::Contractive;
        dict.set_item(
            "status",
            if contractive { "contractive" } else { "none-exists" },
        )?;
        dict.set_item("objective", solution.objective)?;
        dict.set_item("eta", solution.eta)?;
        dict.set_item("support", solution.support)?;
        dict.set_item(
            "walk",
            solution.circuit.as_ref().map(|w| w.vertices().to_vec()),
        )?;
        dict.set_item(
            "xi_bar",
            if contractive { Some(solution.objective) } else { None },
        )?;
        dict.set_item(
            "components",
            solution
                .components
                .iter()
                .map(|c| (c.circuit.vertices().to_vec(), c.cost))
                .collect::<Vec<_>>(),
        )?;
        Ok(dict)
    }

    /// Bellman-Ford-Moore negative-cycle detection; vertex list or `None`.
    fn detect_negative_cycle(&self) -> Option<Vec<usize>> {
        cycle_synth::detect_negative_cycle(&self.inner).map(|w| w.vertices().to_vec())
    }

    /// Most negative cycle inside the circulation support subgraph.
    fn most_negative_cycle_via_lp_support(&self) -> PyResult<Option<Vec<usize>>> {
        Ok(cycle_synth::most_negative_cycle_via_lp_support(&self.inner)
            .map_err(value_err)?
            .map(|w| w.vertices().to_vec()))
    }

    /// All elementary cycles up to `max_len`, ascending by cost.
    fn enumerate_cycles(&self, max_len: usize) -> PyResult<Vec<(Vec<usize>, f64)>> {
        Ok(cycle_synth::enumerate_cycles(&self.inner, max_len)
            .map_err(value_err)?
            .into_iter()
            .map(|(w, c)| (w.vertices().to_vec(), c))
            .collect())
    }

    /// Contractive simple cycle extracted from a contractive closed walk.
    fn extract_contractive_cycle(&self, walk: Vec<usize>) -> PyResult<Vec<usize>> {
        let walk = walk_from_vertices(walk, &self.inner)?;
        Ok(walks::extract_contractive_cycle(&walk, &self.inner)
            .map_err(value_err)?
            .vertices()
            .to_vec())
    }

    /// Randomized cycle inside the stable vertex set (adjacency only).
    #[pyo3(signature = (degree_floor=1, seed=0))]
    fn random_cycle(&self, degree_floor: usize, seed: u64) -> PyResult<Vec<usize>> {
        let skeleton = Skeleton::from_digraph(&self.inner);
        Ok(random_synth::random_cycle(&skeleton, degree_floor, seed)
            .map_err(value_err)?
            .vertices()
            .to_vec())
    }

    /// Norm sequence of `x(t+1) = A_{σ(t)} x(t)` under the periodic
    /// signal generated by a closed walk.
    fn simulate(
        &self,
        subsystems: Vec<(usize, Vec<Vec<f64>>)>,
        walk: Vec<usize>,
        x0: Vec<f64>,
        steps: usize,
    ) -> PyResult<Vec<f64>> {
        let family = family_from_entries(subsystems)?;
        let walk = walk_from_vertices(walk, &self.inner)?;
        let signal = signal_from_walk(&walk, &self.inner).map_err(value_err)?;
        let trajectory = switchwalk::simulate::simulate(
            &family,
            &signal,
            &DVector::from_vec(x0),
            steps,
        )
        .map_err(value_err)?;
        Ok(trajectory.norms)
    }

    /// Stability validation over sampled initial conditions; returns a
    /// dict with `passed`, `failures`, the worst ratios and the transient.
    #[pyo3(signature = (subsystems, walk, samples=100, radius=1000.0, steps=200,
                        threshold=1e-6, bound_factor=1e3, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn verify_gas<'py>(
        &self,
        py: Python<'py>,
        subsystems: Vec<(usize, Vec<Vec<f64>>)>,
        walk: Vec<usize>,
        samples: usize,
        radius: f64,
        steps: usize,
        threshold: f64,
        bound_factor: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let family = family_from_entries(subsystems)?;
        let walk = walk_from_vertices(walk, &self.inner)?;
        let signal = signal_from_walk(&walk, &self.inner).map_err(value_err)?;
        let config = GasConfig {
            samples,
            box_radius: radius,
            steps,
            decay_threshold: threshold,
            boundedness_factor: bound_factor,
            seed,
        };
        let report = verify_gas(&family, &signal, &config).map_err(value_err)?;
        let dict = PyDict::new(py);
        dict.set_item("passed", report.passed)?;
        dict.set_item("failures", report.failures)?;
        dict.set_item("worst_decay_ratio", report.worst_decay_ratio)?;
        dict.set_item("worst_boundedness_ratio", report.worst_boundedness_ratio)?;
        dict.set_item("max_transient_periods", report.max_transient_periods)?;
        dict.set_item("xi_bar", signal.xi_bar())?;
        Ok(dict)
    }
}

/// Canonical Lyapunov certificate `(P, λ, is_stable)` for a full-rank
/// dynamics matrix.
#[pyfunction]
#[pyo3(signature = (a, margin=0.01))]
fn compute_certificate(a: Vec<Vec<f64>>, margin: f64) -> PyResult<(Vec<Vec<f64>>, f64, bool)> {
    let sub = SubsystemMatrix::new(0, matrix_from_rows(&a)?).map_err(value_err)?;
    let cert = certificates::compute_certificate(&sub, margin).map_err(value_err)?;
    Ok((
        matrix_to_rows(&cert.p),
        cert.lambda,
        cert.stability_class == StabilityClass::Stable,
    ))
}

/// `μ = λ_max(P_to P_from⁻¹)` for a pair of SPD matrices.
#[pyfunction]
fn compute_mu(p_from: Vec<Vec<f64>>, p_to: Vec<Vec<f64>>) -> PyResult<f64> {
    certificates::compute_mu(&matrix_from_rows(&p_from)?, &matrix_from_rows(&p_to)?)
        .map_err(value_err)
}

fn model_from_params(
    stable_count: usize,
    phi_scale: f64,
    edge_bound: f64,
    vertex_bound: f64,
    edge_mean: f64,
    vertex_mean: f64,
) -> RandomGraphModel {
    RandomGraphModel {
        stable_count,
        unstable_count: 0,
        phi: Phi::ScaledSqrt { scale: phi_scale },
        edge_bound,
        vertex_bound,
        edge_mean,
        vertex_mean,
    }
}

/// Contractivity probability bound `1 − exp(−½((α−β)/(A+B))²·n)`.
#[pyfunction]
fn azuma_bound(
    edge_bound: f64,
    vertex_bound: f64,
    edge_mean: f64,
    vertex_mean: f64,
    n: usize,
) -> PyResult<f64> {
    let model = model_from_params(1, 0.0, edge_bound, vertex_bound, edge_mean, vertex_mean);
    random_synth::azuma_bound(&model, n).map_err(value_err)
}

/// Monte Carlo table `(n, empirical P(X_n < 0), bound)` for the given
/// cycle lengths under the nicely-weighted model.
#[pyfunction]
#[pyo3(signature = (lengths, trials=1000, seed=0, stable_count=1000, phi_scale=0.1,
                    edge_bound=2.5, vertex_bound=5.0, edge_mean=0.0, vertex_mean=2.5))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo_experiment(
    lengths: Vec<usize>,
    trials: usize,
    seed: u64,
    stable_count: usize,
    phi_scale: f64,
    edge_bound: f64,
    vertex_bound: f64,
    edge_mean: f64,
    vertex_mean: f64,
) -> PyResult<Vec<(usize, f64, f64)>> {
    let model = model_from_params(
        stable_count,
        phi_scale,
        edge_bound,
        vertex_bound,
        edge_mean,
        vertex_mean,
    );
    Ok(
        random_synth::monte_carlo_experiment(&model, &lengths, trials, seed)
            .map_err(value_err)?
            .into_iter()
            .map(|row| (row.n, row.empirical, row.bound))
            .collect(),
    )
}

#[pymodule]
fn switchwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Digraph>()?;
    m.add_function(wrap_pyfunction!(compute_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(compute_mu, m)?)?;
    m.add_function(wrap_pyfunction!(azuma_bound, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_experiment, m)?)?;
    Ok(())
}
