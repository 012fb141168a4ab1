//! Lyapunov-like certificates for the subsystem family.
//!
//! For each subsystem `x(t+1) = A_i x(t)` a pair `(P_i, λ_i)` is computed
//! with `P_i` symmetric positive definite and `A_iᵀ P_i A_i ⪯ λ_i P_i`,
//! where `0 < λ_i < 1` for Schur-stable subsystems and `λ_i > 1` for
//! unstable ones. The quadratic forms `V_i(ξ) = ξᵀ P_i ξ` then satisfy
//! `V_i(A_i ξ) ≤ λ_i V_i(ξ)`. Between subsystems, the smallest constant
//! with `V_j(ξ) ≤ μ_ij V_i(ξ)` is `μ_ij = λ_max(P_j P_i⁻¹)`.
//!
//! The pair is constructed canonically: `λ = ρ(A)²·(1 + margin)` with `ρ`
//! the spectral radius, and `P` solving the Stein equation
//! `(A/√λ)ᵀ P (A/√λ) − P = −I` via the Kronecker vectorization (the
//! dimensions in this domain are small, so the dense d²×d² solve is fine).

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::DEFAULT_TOL;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("matrix is invalid: {0}")]
    InvalidMatrix(String),
    #[error("dynamics matrix is not full rank")]
    NotFullRank,
    #[error("lambda = {lambda} lands on the forbidden boundary 1; adjust the margin")]
    LambdaOnBoundary { lambda: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("no certificate for subsystem {0}")]
    MissingCertificate(usize),
}

/// Whether a subsystem is Schur stable (`ρ(A) < 1`) or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StabilityClass {
    Stable,
    Unstable,
}

/// One subsystem of the switched family: an index and a full-rank
/// dynamics matrix.
#[derive(Debug, Clone)]
pub struct SubsystemMatrix {
    pub index: usize,
    pub a: DMatrix<f64>,
}

impl SubsystemMatrix {
    /// Validates squareness, finiteness and full rank.
    pub fn new(index: usize, a: DMatrix<f64>) -> Result<Self, CertificateError> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(CertificateError::InvalidMatrix(format!(
                "expected a square matrix with d >= 1, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(CertificateError::InvalidMatrix(
                "matrix has non-finite entries".into(),
            ));
        }
        let svd = a.clone().svd(false, false);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if max_sv <= 0.0 || min_sv <= 1e-12 * max_sv {
            return Err(CertificateError::NotFullRank);
        }
        Ok(Self { index, a })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// An indexed family of subsystems sharing one state dimension.
#[derive(Debug, Clone, Default)]
pub struct SubsystemFamily {
    subsystems: BTreeMap<usize, SubsystemMatrix>,
}

impl SubsystemFamily {
    pub fn new(subsystems: Vec<SubsystemMatrix>) -> Result<Self, CertificateError> {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for sub in subsystems {
            match dim {
                None => dim = Some(sub.dim()),
                Some(d) if d != sub.dim() => {
                    return Err(CertificateError::DimensionMismatch {
                        left: d,
                        right: sub.dim(),
                    })
                }
                _ => {}
            }
            if map.insert(sub.index, sub).is_some() {
                return Err(CertificateError::InvalidMatrix(
                    "duplicate subsystem index".into(),
                ));
            }
        }
        Ok(Self { subsystems: map })
    }

    pub fn get(&self, index: usize) -> Option<&SubsystemMatrix> {
        self.subsystems.get(&index)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.subsystems.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubsystemMatrix> {
        self.subsystems.values()
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.subsystems.values().next().map(|s| s.dim())
    }
}

/// A Lyapunov-like pair `(P, λ)` with its stability class.
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub p: DMatrix<f64>,
    pub lambda: f64,
    pub stability_class: StabilityClass,
}

impl LyapunovCertificate {
    /// Evaluates `V(ξ) = ξᵀ P ξ`.
    pub fn quadratic_form(&self, xi: &DVector<f64>) -> f64 {
        (xi.transpose() * &self.p * xi)[(0, 0)]
    }
}

/// The smallest constant with `V_to(ξ) ≤ μ V_from(ξ)` for an admissible
/// switch, `μ = λ_max(P_to P_from⁻¹)`.
#[derive(Debug, Clone, Copy)]
pub struct TransitionConstant {
    pub from: usize,
    pub to: usize,
    pub mu: f64,
}

/// Outcome of [`check_certificate`]: whether the defining inequalities
/// hold, and the magnitude of the worst violation (0 when they do).
#[derive(Debug, Clone, Copy)]
pub struct CertificateCheck {
    pub ok: bool,
    pub violation: f64,
}

/// Spectral radius via the complex eigenvalues of a real square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

fn is_spd(p: &DMatrix<f64>, tol: f64) -> bool {
    if p.nrows() != p.ncols() {
        return false;
    }
    let scale = p.norm().max(1.0);
    if (p - p.transpose()).norm() > tol * scale {
        return false;
    }
    min_symmetric_eigenvalue(p) > tol * scale
}

/// Solves `Mᵀ P M − P = −I` for symmetric `P` by vectorization:
/// `(I − Mᵀ ⊗ Mᵀ) vec(P) = vec(I)`.
fn solve_stein(m: &DMatrix<f64>) -> Result<DMatrix<f64>, CertificateError> {
    let d = m.nrows();
    let mt = m.transpose();
    let sys = DMatrix::<f64>::identity(d * d, d * d) - mt.kronecker(&mt);
    let rhs = DVector::from_column_slice(DMatrix::<f64>::identity(d, d).as_slice());
    let p_vec = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CertificateError::NumericalFailure("Stein system is singular".into()))?;
    let p = DMatrix::from_column_slice(d, d, p_vec.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Computes the canonical certificate for one subsystem:
/// `λ = ρ(A)²·(1 + margin)` and `P` from the Stein equation with
/// right-hand side `−I`.
///
/// Fails with [`CertificateError::LambdaOnBoundary`] when the produced λ
/// does not fall strictly on the same side of 1 as the stability class
/// demands; the caller must then pick a smaller margin.
pub fn compute_certificate(
    sub: &SubsystemMatrix,
    margin: f64,
) -> Result<LyapunovCertificate, CertificateError> {
    if margin <= 0.0 || !margin.is_finite() {
        return Err(CertificateError::NumericalFailure(format!(
            "margin must be a positive finite number, got {margin}"
        )));
    }
    let rho = spectral_radius(&sub.a);
    if !rho.is_finite() || rho <= 0.0 {
        // Full-rank matrices have nonzero determinant, hence rho > 0.
        return Err(CertificateError::NotFullRank);
    }
    let lambda = rho * rho * (1.0 + margin);
    let stability_class = if rho < 1.0 {
        StabilityClass::Stable
    } else {
        StabilityClass::Unstable
    };
    let boundary = 1e-9;
    let boundary_ok = match stability_class {
        StabilityClass::Stable => lambda < 1.0 - boundary,
        StabilityClass::Unstable => lambda > 1.0 + boundary,
    };
    if !boundary_ok {
        return Err(CertificateError::LambdaOnBoundary { lambda });
    }
    let m = &sub.a / lambda.sqrt();
    let p = solve_stein(&m)?;
    if !is_spd(&p, DEFAULT_TOL) {
        return Err(CertificateError::NumericalFailure(
            "Stein solution is not positive definite".into(),
        ));
    }
    Ok(LyapunovCertificate {
        p,
        lambda,
        stability_class,
    })
}

/// Computes `μ = λ_max(P_to P_from⁻¹)` as the largest generalized
/// eigenvalue of the symmetric-definite pair `(P_to, P_from)`, via the
/// Cholesky reduction `L⁻¹ P_to L⁻ᵀ` with `P_from = L Lᵀ`.
pub fn compute_mu(p_from: &DMatrix<f64>, p_to: &DMatrix<f64>) -> Result<f64, CertificateError> {
    if p_from.nrows() != p_to.nrows() || p_from.ncols() != p_to.ncols() {
        return Err(CertificateError::DimensionMismatch {
            left: p_from.nrows(),
            right: p_to.nrows(),
        });
    }
    if !is_spd(p_from, DEFAULT_TOL) || !is_spd(p_to, DEFAULT_TOL) {
        return Err(CertificateError::NotPositiveDefinite);
    }
    let chol = nalgebra::Cholesky::new(p_from.clone())
        .ok_or(CertificateError::NotPositiveDefinite)?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(p_to)
        .ok_or(CertificateError::NotPositiveDefinite)?;
    // S = L⁻¹ P_to L⁻ᵀ, obtained from Sᵀ = L⁻¹ Yᵀ.
    let s_t = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(CertificateError::NotPositiveDefinite)?;
    let s = (&s_t + s_t.transpose()) * 0.5;
    Ok(s.symmetric_eigen().eigenvalues.max())
}

/// Checks `AᵀPA ⪯ λP`, positive definiteness of `P` and the
/// class-appropriate range of `λ`, at a relative tolerance `tol`.
pub fn check_certificate(
    sub: &SubsystemMatrix,
    cert: &LyapunovCertificate,
    tol: f64,
) -> CertificateCheck {
    if sub.dim() != cert.p.nrows() {
        return CertificateCheck {
            ok: false,
            violation: f64::INFINITY,
        };
    }
    let residual = &cert.p * cert.lambda - sub.a.transpose() * &cert.p * &sub.a;
    let min_eig = min_symmetric_eigenvalue(&residual);
    let scale = cert.p.norm().max(1.0);
    let inequality_ok = min_eig >= -tol * scale;
    let spd_ok = is_spd(&cert.p, tol);
    let range_ok = match cert.stability_class {
        StabilityClass::Stable => cert.lambda > 0.0 && cert.lambda < 1.0,
        StabilityClass::Unstable => cert.lambda > 1.0,
    };
    CertificateCheck {
        ok: inequality_ok && spd_ok && range_ok,
        violation: (-min_eig).max(0.0),
    }
}

/// Computes certificates for every member of a family with a shared margin.
pub fn certify_family(
    family: &SubsystemFamily,
    margin: f64,
) -> Result<BTreeMap<usize, LyapunovCertificate>, CertificateError> {
    family
        .iter()
        .map(|sub| Ok((sub.index, compute_certificate(sub, margin)?)))
        .collect()
}

/// Transition constants for every admissible switch, from the certificate
/// table.
pub fn transition_constants(
    certificates: &BTreeMap<usize, LyapunovCertificate>,
    edges: &[(usize, usize)],
) -> Result<Vec<TransitionConstant>, CertificateError> {
    edges
        .iter()
        .map(|&(from, to)| {
            let p_from = certificates
                .get(&from)
                .ok_or(CertificateError::MissingCertificate(from))?;
            let p_to = certificates
                .get(&to)
                .ok_or(CertificateError::MissingCertificate(to))?;
            Ok(TransitionConstant {
                from,
                to,
                mu: compute_mu(&p_from.p, &p_to.p)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        let r = rows.len();
        let c = rows[0].len();
        DMatrix::from_row_slice(r, c, &rows.concat())
    }

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &m * m.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn certificate_for_half_identity() {
        let sub = SubsystemMatrix::new(1, DMatrix::identity(2, 2) * 0.5).unwrap();
        let cert = compute_certificate(&sub, 0.01).unwrap();
        assert_relative_eq!(cert.lambda, 0.2525, epsilon = 1e-12);
        assert_eq!(cert.stability_class, StabilityClass::Stable);
        // Closed form for scalar multiples of the identity: P = I/(1 - rho^2/lambda).
        assert_relative_eq!(cert.p[(0, 0)], 101.0, epsilon = 1e-6);
        assert_relative_eq!(cert.p[(1, 1)], 101.0, epsilon = 1e-6);
        assert_relative_eq!(cert.p[(0, 1)], 0.0, epsilon = 1e-9);
        let check = check_certificate(&sub, &cert, DEFAULT_TOL);
        assert!(check.ok);
        assert_eq!(check.violation, 0.0);
    }

    #[test]
    fn identity_dynamics_is_classified_unstable() {
        let sub = SubsystemMatrix::new(1, DMatrix::identity(2, 2)).unwrap();
        let cert = compute_certificate(&sub, 0.01).unwrap();
        assert_eq!(cert.stability_class, StabilityClass::Unstable);
        assert_relative_eq!(cert.lambda, 1.01, epsilon = 1e-12);
        assert_relative_eq!(cert.p[(0, 0)], 101.0, epsilon = 1e-6);
        assert!(check_certificate(&sub, &cert, DEFAULT_TOL).ok);
    }

    #[test]
    fn certificate_for_rotational_stable_matrix() {
        // First subsystem of the four-system example family.
        let sub = SubsystemMatrix::new(1, mat(&[&[0.2, -0.7], &[0.8, 0.3]])).unwrap();
        let rho = spectral_radius(&sub.a);
        let cert = compute_certificate(&sub, 0.01).unwrap();
        assert!(cert.lambda > rho * rho && cert.lambda < 1.0);
        assert_eq!(cert.stability_class, StabilityClass::Stable);
        assert!(check_certificate(&sub, &cert, DEFAULT_TOL).ok);
    }

    #[test]
    fn published_lambda_estimate_is_in_certifiable_range() {
        // lambda = 0.4200 for A2 of the example family: our own pair must
        // also pass the eigencheck.
        let sub = SubsystemMatrix::new(2, mat(&[&[0.5, 0.1], &[0.4, 0.2]])).unwrap();
        let cert = compute_certificate(&sub, 0.01).unwrap();
        assert!(cert.lambda < 0.4200); // rho^2 * 1.01 = 0.3636
        assert!(check_certificate(&sub, &cert, DEFAULT_TOL).ok);
    }

    #[test]
    fn halved_lambda_fails_the_check() {
        let sub = SubsystemMatrix::new(1, mat(&[&[0.2, -0.7], &[0.8, 0.3]])).unwrap();
        let cert = compute_certificate(&sub, 0.01).unwrap();
        let broken = LyapunovCertificate {
            lambda: cert.lambda / 2.0,
            ..cert
        };
        let check = check_certificate(&sub, &broken, DEFAULT_TOL);
        assert!(!check.ok);
        assert!(check.violation > 0.0);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(
            SubsystemMatrix::new(1, a),
            Err(CertificateError::NotFullRank)
        ));
    }

    #[test]
    fn lambda_crossing_one_is_a_boundary_error() {
        // rho = 0.999 < 1, but rho^2 * 1.01 > 1: the margin pushes a stable
        // system's lambda across the forbidden value.
        let sub = SubsystemMatrix::new(1, DMatrix::identity(2, 2) * 0.999).unwrap();
        assert!(matches!(
            compute_certificate(&sub, 0.01),
            Err(CertificateError::LambdaOnBoundary { .. })
        ));
        // A smaller margin resolves it.
        let cert = compute_certificate(&sub, 1e-4).unwrap();
        assert_eq!(cert.stability_class, StabilityClass::Stable);
        assert!(cert.lambda < 1.0);
    }

    #[test]
    fn mu_of_identical_matrices_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_spd(&mut rng, 3);
            let mu = compute_mu(&p, &p).unwrap();
            assert_relative_eq!(mu, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mu_reads_off_diagonal_for_diagonal_pair() {
        let p_from = DMatrix::identity(2, 2);
        let p_to = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        assert_relative_eq!(compute_mu(&p_from, &p_to).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mu_bounds_the_quadratic_form_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p_from = random_spd(&mut rng, 3);
        let p_to = random_spd(&mut rng, 3);
        let mu = compute_mu(&p_from, &p_to).unwrap();
        let mut max_ratio: f64 = 0.0;
        for _ in 0..10_000 {
            let xi = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let v_from = (xi.transpose() * &p_from * &xi)[(0, 0)];
            let v_to = (xi.transpose() * &p_to * &xi)[(0, 0)];
            assert!(v_to <= mu * v_from + 1e-9 * xi.norm_squared());
            if v_from > 1e-12 {
                max_ratio = max_ratio.max(v_to / v_from);
            }
        }
        assert!(max_ratio <= mu + 1e-9);
        assert!(max_ratio > 0.5 * mu);
        // Equality is attained by the generalized eigenvector: with
        // P_from = L L^T, take x = L^-T u for the top eigenvector u of
        // L^-1 P_to L^-T.
        let chol = nalgebra::Cholesky::new(p_from.clone()).unwrap();
        let l = chol.l();
        let y = l.solve_lower_triangular(&p_to).unwrap();
        let s_t = l.solve_lower_triangular(&y.transpose()).unwrap();
        let s = (&s_t + s_t.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        let top = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let u = eig.eigenvectors.column(top).into_owned();
        let x = l
            .transpose()
            .solve_upper_triangular(&u)
            .unwrap();
        let v_from = (x.transpose() * &p_from * &x)[(0, 0)];
        let v_to = (x.transpose() * &p_to * &x)[(0, 0)];
        assert_relative_eq!(v_to / v_from, mu, epsilon = 1e-9 * mu);
    }

    #[test]
    fn mu_scaling_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p_from = random_spd(&mut rng, 2);
        let p_to = random_spd(&mut rng, 2);
        let mu = compute_mu(&p_from, &p_to).unwrap();
        let c = 3.75;
        let both = compute_mu(&(&p_from * c), &(&p_to * c)).unwrap();
        assert_relative_eq!(both, mu, epsilon = 1e-9 * mu.abs());
        let only_to = compute_mu(&p_from, &(&p_to * c)).unwrap();
        assert_relative_eq!(only_to, c * mu, epsilon = 1e-9 * (c * mu).abs());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p2 = DMatrix::identity(2, 2);
        let p3 = DMatrix::identity(3, 3);
        assert!(matches!(
            compute_mu(&p2, &p3),
            Err(CertificateError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_spd_input_is_rejected() {
        let p = mat(&[&[1.0, 2.0], &[2.0, 1.0]]); // indefinite
        let i = DMatrix::identity(2, 2);
        assert!(matches!(
            compute_mu(&p, &i),
            Err(CertificateError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn transition_constants_cover_the_edge_list() {
        let family = SubsystemFamily::new(vec![
            SubsystemMatrix::new(1, mat(&[&[0.2, -0.7], &[0.8, 0.3]])).unwrap(),
            SubsystemMatrix::new(2, mat(&[&[0.5, 0.1], &[0.4, 0.2]])).unwrap(),
        ])
        .unwrap();
        let certs = certify_family(&family, 0.01).unwrap();
        let constants =
            transition_constants(&certs, &[(1, 2), (2, 1), (1, 1)]).unwrap();
        assert_eq!(constants.len(), 3);
        for c in &constants {
            assert!(c.mu > 0.0);
        }
        // mu_jj = 1 when a vertex pairs with its own certificate.
        let own = constants.iter().find(|c| c.from == 1 && c.to == 1).unwrap();
        assert_relative_eq!(own.mu, 1.0, epsilon = 1e-12);
        assert!(matches!(
            transition_constants(&certs, &[(1, 3)]),
            Err(CertificateError::MissingCertificate(3))
        ));
    }

    #[test]
    fn fact_inequalities_hold_along_random_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let family = SubsystemFamily::new(vec![
            SubsystemMatrix::new(1, mat(&[&[0.2, -0.7], &[0.8, 0.3]])).unwrap(),
            SubsystemMatrix::new(2, mat(&[&[0.5, 0.1], &[0.4, 0.2]])).unwrap(),
            SubsystemMatrix::new(3, mat(&[&[1.2, 0.9], &[1.4, 0.2]])).unwrap(),
        ])
        .unwrap();
        let certs = certify_family(&family, 0.01).unwrap();
        for sub in family.iter() {
            let cert = &certs[&sub.index];
            for _ in 0..1000 {
                let xi = DVector::from_fn(2, |_, _| rng.random_range(-10.0..10.0));
                let v = cert.quadratic_form(&xi);
                let v_next = cert.quadratic_form(&(&sub.a * &xi));
                assert!(v_next <= cert.lambda * v + 1e-9 * xi.norm_squared());
            }
        }
        for i in family.indices() {
            for j in family.indices() {
                let mu = compute_mu(&certs[&i].p, &certs[&j].p).unwrap();
                for _ in 0..1000 {
                    let xi = DVector::from_fn(2, |_, _| rng.random_range(-10.0..10.0));
                    let vi = certs[&i].quadratic_form(&xi);
                    let vj = certs[&j].quadratic_form(&xi);
                    assert!(vj <= mu * vi + 1e-9 * xi.norm_squared());
                }
            }
        }
    }
}
