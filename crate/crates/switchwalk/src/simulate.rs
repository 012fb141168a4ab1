//! Simulation and numerical stability validation.
//!
//! A closed walk generates a periodic switching signal `σ(t) =
//! W.vertex(t mod |W|)`; repeating a contractive closed walk yields a
//! stabilizing signal. The validator samples initial states uniformly
//! from a box, iterates `x(t+1) = A_{σ(t)} x(t)` exactly, and checks a
//! decay threshold at the horizon together with a boundedness proxy along
//! the way (the stability theorem guarantees no explicit overshoot
//! constant, so the proxy factor is configurable).

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::certificates::SubsystemFamily;
use crate::digraph::SwitchingDigraph;
use crate::walks::{xi_bar, Walk, WalkError};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("generator walk is not closed")]
    NotClosed,
    #[error("state dimension {state} does not match the family dimension {family}")]
    DimensionMismatch { state: usize, family: usize },
    #[error("signal activates subsystem {0} which is not in the family")]
    UnknownSubsystem(usize),
    #[error("family is empty")]
    EmptyFamily,
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Periodic switching signal generated by repeating a closed walk.
#[derive(Debug, Clone)]
pub struct SwitchingSignal {
    generator: Walk,
    xi_bar: f64,
}

impl SwitchingSignal {
    pub fn generator(&self) -> &Walk {
        &self.generator
    }

    pub fn period(&self) -> usize {
        self.generator.len()
    }

    /// `σ(t)`.
    pub fn at(&self, t: usize) -> usize {
        self.generator.vertices()[t % self.period()]
    }

    pub fn xi_bar(&self) -> f64 {
        self.xi_bar
    }

    /// Whether the generator is contractive. A non-contractive generator
    /// is allowed (diagnostic runs), it just carries no stability promise.
    pub fn is_contractive(&self) -> bool {
        self.xi_bar < 0.0
    }
}

/// Builds the periodic signal of a closed walk, recording its cost for
/// diagnostics.
pub fn signal_from_walk(
    walk: &Walk,
    g: &SwitchingDigraph,
) -> Result<SwitchingSignal, SimulationError> {
    if !walk.is_closed() {
        return Err(SimulationError::NotClosed);
    }
    let cost = xi_bar(walk, g)?;
    Ok(SwitchingSignal {
        generator: walk.clone(),
        xi_bar: cost,
    })
}

/// A simulated state sequence with per-step Euclidean norms.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
}

/// Iterates `x(t+1) = A_{σ(t)} x(t)` for `steps` steps.
pub fn simulate(
    family: &SubsystemFamily,
    signal: &SwitchingSignal,
    x0: &DVector<f64>,
    steps: usize,
) -> Result<Trajectory, SimulationError> {
    let dim = family.dim().ok_or(SimulationError::EmptyFamily)?;
    if x0.len() != dim {
        return Err(SimulationError::DimensionMismatch {
            state: x0.len(),
            family: dim,
        });
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    states.push(x.clone());
    norms.push(x.norm());
    for t in 0..steps {
        let index = signal.at(t);
        let sub = family
            .get(index)
            .ok_or(SimulationError::UnknownSubsystem(index))?;
        x = &sub.a * x;
        states.push(x.clone());
        norms.push(x.norm());
    }
    Ok(Trajectory { states, norms })
}

/// Validation settings; the defaults match the four-system example
/// (100 initial conditions from `[-1000, 1000]²`, 200 steps, decay to
/// `1e-6` of the initial norm, overshoot within `10³`).
#[derive(Debug, Clone, Copy)]
pub struct GasConfig {
    pub samples: usize,
    pub box_radius: f64,
    pub steps: usize,
    pub decay_threshold: f64,
    pub boundedness_factor: f64,
    pub seed: u64,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            box_radius: 1000.0,
            steps: 200,
            decay_threshold: 1e-6,
            boundedness_factor: 1e3,
            seed: 0,
        }
    }
}

/// Per-initial-condition outcome.
#[derive(Debug, Clone)]
pub struct GasSample {
    pub initial: Vec<f64>,
    /// `‖x(T)‖ / ‖x(0)‖` (zero for a zero initial state).
    pub decay_ratio: f64,
    /// `sup_t ‖x(t)‖ / ‖x(0)‖`.
    pub boundedness_ratio: f64,
    /// Periods before `‖x(k·period)‖` becomes monotonically
    /// non-increasing, `None` if it never does within the horizon.
    pub transient_periods: Option<usize>,
    pub norms: Vec<f64>,
    pub passed: bool,
}

/// Aggregate validation report.
#[derive(Debug, Clone)]
pub struct GasReport {
    pub passed: bool,
    pub failures: usize,
    pub worst_decay_ratio: f64,
    pub worst_boundedness_ratio: f64,
    /// Largest transient across samples, `None` when some sample never
    /// settles (or there are no samples).
    pub max_transient_periods: Option<usize>,
    pub samples: Vec<GasSample>,
}

fn transient_periods(norms: &[f64], period: usize) -> Option<usize> {
    let period_norms: Vec<f64> = norms.iter().step_by(period.max(1)).copied().collect();
    if period_norms.len() < 2 {
        return Some(0);
    }
    let mut settle = 0;
    for k in 0..period_norms.len() - 1 {
        if period_norms[k + 1] > period_norms[k] {
            settle = k + 1;
        }
    }
    if settle == period_norms.len() - 1 {
        None
    } else {
        Some(settle)
    }
}

/// Samples initial states uniformly from `[-r, r]^d` and validates decay
/// and boundedness of every trajectory under the signal.
pub fn verify_gas(
    family: &SubsystemFamily,
    signal: &SwitchingSignal,
    config: &GasConfig,
) -> Result<GasReport, SimulationError> {
    let dim = family.dim().ok_or(SimulationError::EmptyFamily)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.samples);
    let mut worst_decay: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    let mut failures = 0;
    let mut max_transient: Option<usize> = Some(0);
    for _ in 0..config.samples {
        let x0 = DVector::from_fn(dim, |_, _| {
            rng.random_range(-config.box_radius..=config.box_radius)
        });
        let trajectory = simulate(family, signal, &x0, config.steps)?;
        let initial_norm = trajectory.norms[0];
        let (decay_ratio, boundedness_ratio) = if initial_norm > 0.0 {
            let peak = trajectory.norms.iter().copied().fold(0.0_f64, f64::max);
            (
                trajectory.norms[config.steps] / initial_norm,
                peak / initial_norm,
            )
        } else {
            (0.0, 0.0)
        };
        let transient = transient_periods(&trajectory.norms, signal.period());
        let passed = decay_ratio <= config.decay_threshold
            && boundedness_ratio <= config.boundedness_factor;
        worst_decay = worst_decay.max(decay_ratio);
        worst_bound = worst_bound.max(boundedness_ratio);
        if !passed {
            failures += 1;
        }
        max_transient = match (max_transient, transient) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        samples.push(GasSample {
            initial: x0.iter().copied().collect(),
            decay_ratio,
            boundedness_ratio,
            transient_periods: transient,
            norms: trajectory.norms,
            passed,
        });
    }
    Ok(GasReport {
        passed: failures == 0,
        failures,
        worst_decay_ratio: worst_decay,
        worst_boundedness_ratio: worst_bound,
        max_transient_periods: max_transient,
        samples,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::certificates::{certify_family, compute_mu, SubsystemMatrix};
    use crate::digraph::tests::example_digraph;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    pub(crate) fn example_family() -> SubsystemFamily {
        let mats: Vec<(usize, [[f64; 2]; 2])> = vec![
            (1, [[0.2, -0.7], [0.8, 0.3]]),
            (2, [[0.5, 0.1], [0.4, 0.2]]),
            (3, [[1.2, 0.9], [1.4, 0.2]]),
            (4, [[1.1, 0.2], [0.2, 0.7]]),
        ];
        SubsystemFamily::new(
            mats.into_iter()
                .map(|(i, rows)| {
                    SubsystemMatrix::new(
                        i,
                        DMatrix::from_row_slice(2, 2, &[rows[0], rows[1]].concat()),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    fn example_signal() -> SwitchingSignal {
        let g = example_digraph();
        signal_from_walk(&Walk::new(vec![1, 2, 1]).unwrap(), &g).unwrap()
    }

    #[test]
    fn signal_indexing_is_periodic() {
        let signal = example_signal();
        assert_eq!(signal.period(), 2);
        let expected = [1, 2, 1, 2, 1];
        for (t, &v) in expected.iter().enumerate() {
            assert_eq!(signal.at(t), v);
        }
        let g = example_digraph();
        let three = signal_from_walk(&Walk::new(vec![1, 2, 3, 1]).unwrap(), &g).unwrap();
        assert_eq!(three.at(10), three.generator().vertices()[1]);
        assert!(matches!(
            signal_from_walk(&Walk::new(vec![1, 2]).unwrap(), &g),
            Err(SimulationError::NotClosed)
        ));
    }

    #[test]
    fn signal_stays_admissible_for_many_steps() {
        let signal = example_signal();
        let g = example_digraph();
        for t in 0..10_000 {
            assert!(g.contains_edge(signal.at(t), signal.at(t + 1)));
        }
    }

    #[test]
    fn constant_signal_halves_the_norm() {
        let family = SubsystemFamily::new(vec![SubsystemMatrix::new(
            1,
            DMatrix::identity(2, 2) * 0.5,
        )
        .unwrap()])
        .unwrap();
        let lambda = std::collections::BTreeMap::from([(1, 0.2525)]);
        let mu = std::collections::BTreeMap::from([((1, 1), 1.0)]);
        let g = SwitchingDigraph::build_with_weights(&lambda, &mu, &[(1, 1)]).unwrap();
        let signal = signal_from_walk(&Walk::new(vec![1, 1]).unwrap(), &g).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        let trajectory = simulate(&family, &signal, &x0, 3).unwrap();
        assert_eq!(trajectory.norms, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn period_map_contracts_at_its_spectral_radius() {
        let family = example_family();
        let signal = example_signal();
        let x0 = DVector::from_vec(vec![3.0, -4.0]);
        let trajectory = simulate(&family, &signal, &x0, 80).unwrap();
        // rho(A2 A1) = sqrt(det) ~ 0.1929. The complex eigenvalue pair
        // makes the single-period ratio oscillate (it peaks near 0.48),
        // so the 0.2 rate is asserted over a 25-period window where the
        // rotation has averaged out.
        for t in (0..30).step_by(2) {
            assert!(
                trajectory.norms[t + 50] <= 0.2_f64.powi(25) * trajectory.norms[t],
                "window starting at t = {t}"
            );
        }
        // Per-period norms are eventually monotone.
        let transient = transient_periods(&trajectory.norms, 2);
        assert!(transient.is_some());
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let family = example_family();
        let signal = example_signal();
        let x0 = DVector::zeros(2);
        let trajectory = simulate(&family, &signal, &x0, 10).unwrap();
        assert!(trajectory.norms.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn trajectories_are_homogeneous() {
        let family = example_family();
        let signal = example_signal();
        let x0 = DVector::from_vec(vec![0.3, 0.7]);
        let c = 17.5;
        let base = simulate(&family, &signal, &x0, 25).unwrap();
        let scaled = simulate(&family, &signal, &(&x0 * c), 25).unwrap();
        for (a, b) in base.states.iter().zip(scaled.states.iter()) {
            assert_relative_eq!((a * c - b).norm(), 0.0, epsilon = 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn certificate_inequalities_hold_along_the_trajectory() {
        let family = example_family();
        let signal = example_signal();
        let certs = certify_family(&family, 0.01).unwrap();
        let x0 = DVector::from_vec(vec![123.0, -45.0]);
        let trajectory = simulate(&family, &signal, &x0, 60).unwrap();
        for t in 0..60 {
            let active = signal.at(t);
            let next = signal.at(t + 1);
            let cert = &certs[&active];
            let v_now = cert.quadratic_form(&trajectory.states[t]);
            let v_next = cert.quadratic_form(&trajectory.states[t + 1]);
            assert!(v_next <= cert.lambda * v_now * (1.0 + 1e-9) + 1e-12);
            let mu = compute_mu(&cert.p, &certs[&next].p).unwrap();
            let v_switch = certs[&next].quadratic_form(&trajectory.states[t + 1]);
            assert!(v_switch <= mu * v_next * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn gas_holds_for_the_synthesized_signal() {
        let family = example_family();
        let signal = example_signal();
        let report = verify_gas(&family, &signal, &GasConfig::default()).unwrap();
        assert!(report.passed, "worst decay {}", report.worst_decay_ratio);
        assert_eq!(report.failures, 0);
        assert!(report.worst_decay_ratio <= 1e-6);
        assert!(report.worst_boundedness_ratio <= 1e3);
        assert!(report.max_transient_periods.is_some());
    }

    #[test]
    fn gas_fails_on_an_unstable_constant_signal() {
        let family = example_family();
        let g = example_digraph();
        let signal = signal_from_walk(&Walk::new(vec![3, 3]).unwrap(), &g).unwrap();
        assert!(!signal.is_contractive());
        let config = GasConfig {
            samples: 10,
            steps: 60,
            ..GasConfig::default()
        };
        let report = verify_gas(&family, &signal, &config).unwrap();
        assert!(!report.passed);
        assert_eq!(report.failures, 10);
    }

    #[test]
    fn zero_radius_box_passes_vacuously() {
        let family = example_family();
        let signal = example_signal();
        let config = GasConfig {
            samples: 5,
            box_radius: 0.0,
            ..GasConfig::default()
        };
        let report = verify_gas(&family, &signal, &config).unwrap();
        assert!(report.passed);
        assert_eq!(report.worst_decay_ratio, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let family = example_family();
        let signal = example_signal();
        let x0 = DVector::zeros(3);
        assert!(matches!(
            simulate(&family, &signal, &x0, 5),
            Err(SimulationError::DimensionMismatch { state: 3, family: 2 })
        ));
    }
}
