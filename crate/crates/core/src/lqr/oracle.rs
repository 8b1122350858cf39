//! Model-based oracles. These read the system matrices directly and are used
//! for verification and baselines only; the learners never call them.

use nalgebra::DMatrix;

use super::system::MasLqrSystem;
use crate::error::{Error, Result};

/// Stability margin: `sqrt(gamma) (A - BK)` must have spectral radius below `1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-12;
const LYAP_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100_000;
/// Largest dimension solved by the vectorized direct method.
const DIRECT_DIM: usize = 16;

/// `A - BK` with block-diagonal `A`, `B`.
pub fn assemble_closed_loop(sys: &MasLqrSystem, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = (sys.input_dim() * sys.n_agents(), sys.state_dim() * sys.n_agents());
    if k.shape() != (rows, cols) {
        return Err(Error::arg(format!("gain must be {rows} x {cols}, got {:?}", k.shape())));
    }
    Ok(sys.a_full() - sys.b_full() * k)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Spectral radius of `sqrt(gamma) (A - BK)`.
pub fn scaled_radius(sys: &MasLqrSystem, k: &DMatrix<f64>) -> Result<f64> {
    Ok(sys.gamma().sqrt() * spectral_radius(&assemble_closed_loop(sys, k)?))
}

pub fn is_schur_stable(sys: &MasLqrSystem, k: &DMatrix<f64>) -> bool {
    scaled_radius(sys, k).is_ok_and(|r| r < 1.0 - STABILITY_MARGIN)
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Solves `P = Q + A' P A` for Schur-stable `A`.
///
/// Small problems use the vectorized system `(I - A' (x) A') vec P = vec Q`;
/// larger ones use the doubling iteration `P += A_j' P A_j`, `A_{j+1} = A_j^2`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if !a.is_square() || q.shape() != (d, d) {
        return Err(Error::arg("Lyapunov data must be square and of equal size"));
    }
    let rho = spectral_radius(a);
    if !(rho < 1.0) {
        return Err(Error::NotStabilizing { radius: rho });
    }
    let mut p = if d <= DIRECT_DIM {
        let at = a.transpose();
        let lhs = DMatrix::<f64>::identity(d * d, d * d) - at.kronecker(&at);
        let rhs = DMatrix::from_column_slice(d * d, 1, q.as_slice());
        let sol = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Internal("singular Lyapunov operator".into()))?;
        DMatrix::from_column_slice(d, d, sol.as_slice())
    } else {
        let mut p = q.clone();
        let mut aj = a.clone();
        let mut done = false;
        for _ in 0..200 {
            let term = aj.transpose() * &p * &aj;
            p += &term;
            if frob(&term) <= 1e-17 * frob(&p).max(1.0) {
                done = true;
                break;
            }
            aj = &aj * &aj;
            if aj.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        if !done {
            return Err(Error::NoConvergence {
                what: "Lyapunov doubling",
                iterations: 200,
                residual: f64::NAN,
            });
        }
        p
    };
    p = (&p + p.transpose()) * 0.5;
    let mut residual = lyapunov_residual(a, q, &p);
    // fixed-point polish: each pass contracts the residual by rho^2
    let mut it = 0;
    while residual > LYAP_TOL * frob(&p).max(1.0) && it < MAX_ITER {
        p = q + a.transpose() * &p * a;
        residual = lyapunov_residual(a, q, &p);
        it += 1;
    }
    if residual > LYAP_TOL * frob(&p).max(1.0) {
        return Err(Error::NoConvergence {
            what: "Lyapunov solve",
            iterations: it,
            residual,
        });
    }
    Ok(p)
}

pub fn lyapunov_residual(a: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    frob(&(q + a.transpose() * p * a - p))
}

fn scaled_closed_loop(sys: &MasLqrSystem, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let acl = assemble_closed_loop(sys, k)? * sys.gamma().sqrt();
    let rho = spectral_radius(&acl);
    if !(rho < 1.0 - STABILITY_MARGIN) {
        return Err(Error::NotStabilizing { radius: rho });
    }
    Ok(acl)
}

/// Value matrix `P_K = Qc + K' Rc K + gamma (A - BK)' P_K (A - BK)`.
pub fn value_matrix(sys: &MasLqrSystem, k: &DMatrix<f64>, qc: &DMatrix<f64>, rc: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let acl = scaled_closed_loop(sys, k)?;
    solve_discrete_lyapunov(&acl, &(qc + k.transpose() * rc * k))
}

/// `J(K) = <P_K, Sigma_x>` for the given state and input costs.
pub fn exact_cost(sys: &MasLqrSystem, k: &DMatrix<f64>, qc: &DMatrix<f64>, rc: &DMatrix<f64>) -> Result<f64> {
    let p = value_matrix(sys, k, qc, rc)?;
    Ok(p.component_mul(&sys.sigma_x()).sum())
}

/// Cost under the system's own `Q` and `R`.
pub fn global_cost(sys: &MasLqrSystem, k: &DMatrix<f64>) -> Result<f64> {
    exact_cost(sys, k, &sys.q_full(), &sys.r_full())
}

/// Dense gradient `2 [(Rc + gamma B'PB) K - gamma B'PA] Sigma_K`, where
/// `Sigma_K = Sigma_x + gamma (A - BK) Sigma_K (A - BK)'`. Project it onto the
/// gain pattern to get the gradient over distributed gains.
pub fn exact_gradient(
    sys: &MasLqrSystem,
    k: &DMatrix<f64>,
    qc: &DMatrix<f64>,
    rc: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let acl = scaled_closed_loop(sys, k)?;
    let p = solve_discrete_lyapunov(&acl, &(qc + k.transpose() * rc * k))?;
    let sigma_k = solve_discrete_lyapunov(&acl.transpose(), &sys.sigma_x())?;
    let g = sys.gamma();
    let (a, b) = (sys.a_full(), sys.b_full());
    let btp = b.transpose() * &p;
    let e = (rc + &btp * &b * g) * k - &btp * &a * g;
    Ok(e * sigma_k * 2.0)
}

#[derive(Debug, Clone)]
pub struct CentralizedOptimum {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// Unconstrained optimal gain by discounted Riccati recursion from `P = Q`.
pub fn centralized_optimum(sys: &MasLqrSystem) -> Result<CentralizedOptimum> {
    let sg = sys.gamma().sqrt();
    let a = sys.a_full() * sg;
    let b = sys.b_full() * sg;
    let q = sys.q_full();
    let r = sys.r_full();
    let at = a.transpose();
    let bt = b.transpose();
    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let btpa = &bt * &p * &a;
        let s = &r + &bt * &p * &b;
        let gain = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Internal("Riccati inner matrix lost definiteness".into()))?
            .solve(&btpa);
        let mut next = &q + &at * &p * &a - btpa.transpose() * &gain;
        next = (&next + next.transpose()) * 0.5;
        residual = frob(&(&next - &p));
        if !residual.is_finite() {
            break;
        }
        p = next;
        if residual <= LYAP_TOL * frob(&p).max(1.0) {
            let s = &r + &bt * &p * &b;
            let k = s
                .cholesky()
                .ok_or_else(|| Error::Internal("Riccati inner matrix lost definiteness".into()))?
                .solve(&(&bt * &p * &a));
            let cost = p.component_mul(&sys.sigma_x()).sum();
            return Ok(CentralizedOptimum {
                k,
                p,
                cost,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "Riccati recursion",
        iterations: MAX_ITER,
        residual,
    })
}
