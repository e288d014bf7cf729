//! Maximum-entropy states under fixed subsystem Bloch vectors, and Gibbs states.
//!
//! The max-ent state has the exponential form `ρ(α) = exp(−α·Λ) / Z` with
//! `Λ = (G_{1,0}, …, G_{0,1}, …)`. The multipliers minimize the convex dual
//! `L(α) = log Z(α) + α·t`, whose gradient is `t − ⟨Λ⟩_{ρ(α)}`.

use nalgebra::{DMatrix, DVector};

use crate::bloch::{bloch_matrix, bloch_vectors, ProductOperatorBasis};
use crate::error::{Error, Result};
use crate::hermitian::{herm_eig, trace_product, CMatrix, DensityMatrix, C64};

/// `e^{−βH} / Tr e^{−βH}`, built from the spectrum of `H`.
pub fn gibbs_state(h: &CMatrix, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite, got {beta}")));
    }
    let spec = herm_eig(h)?;
    let shift = spec
        .eigenvalues
        .iter()
        .map(|&e| -beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = spec.eigenvalues.iter().map(|&e| (-beta * e - shift).exp()).sum();
    let rho = spec.map(|e| (-beta * e - shift).exp() / z);
    DensityMatrix::single(rho)
}

#[derive(Clone, Debug)]
pub struct MaxEntProblem {
    pub basis: ProductOperatorBasis,
    /// Target `P_a`, length `D_a² − 1`.
    pub targets_a: Vec<f64>,
    /// Target `P_b`, length `D_b² − 1`.
    pub targets_b: Vec<f64>,
    /// Gradient-norm stopping threshold.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl MaxEntProblem {
    pub fn new(basis: ProductOperatorBasis, targets_a: Vec<f64>, targets_b: Vec<f64>) -> Result<Self> {
        if targets_a.len() != basis.rows() - 1 || targets_b.len() != basis.cols() - 1 {
            return Err(Error::Dimension(format!(
                "targets of length ({}, {}) for basis dims {:?}",
                targets_a.len(),
                targets_b.len(),
                basis.dims
            )));
        }
        Ok(Self {
            basis,
            targets_a,
            targets_b,
            tolerance: 1e-10,
            max_iter: 200,
        })
    }

    /// Targets read off the Bloch vectors of `rho`.
    pub fn from_state(rho: &DensityMatrix, basis: ProductOperatorBasis) -> Result<Self> {
        let v = bloch_vectors(&bloch_matrix(rho, &basis)?);
        Self::new(basis, v.p_a, v.p_b)
    }

    pub fn targets(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.targets_a.len() + self.targets_b.len(),
            self.targets_a.iter().chain(&self.targets_b).copied(),
        )
    }

    pub fn num_multipliers(&self) -> usize {
        self.targets_a.len() + self.targets_b.len()
    }
}

/// One accepted iterate of the dual descent.
#[derive(Clone, Debug, PartialEq)]
pub struct DualIterate {
    pub alpha: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
}

struct DualPoint {
    value: f64,
    gradient: DVector<f64>,
    rho: CMatrix,
    /// Eigen-data of `−α·Λ` for the Hessian.
    exponents: DVector<f64>,
    weights: DVector<f64>,
    vectors: CMatrix,
}

fn dual_point(alpha: &DVector<f64>, problem: &MaxEntProblem) -> Result<DualPoint> {
    let lambdas = problem.basis.marginal_operators();
    if alpha.len() != lambdas.len() {
        return Err(Error::Dimension(format!(
            "expected {} multipliers, got {}",
            lambdas.len(),
            alpha.len()
        )));
    }
    let d = problem.basis.total_dim();
    let mut exponent = CMatrix::zeros(d, d);
    for (a, l) in alpha.iter().zip(&lambdas) {
        exponent -= *l * C64::from(*a);
    }
    let spec = herm_eig(&exponent)?;
    // shift by the largest exponent so nothing overflows
    let top = spec.max();
    let unnorm: Vec<f64> = spec.eigenvalues.iter().map(|&e| (e - top).exp()).collect();
    let z_shifted: f64 = unnorm.iter().sum();
    let log_z = top + z_shifted.ln();
    let weights = DVector::from_iterator(d, unnorm.iter().map(|u| u / z_shifted));
    let rho = spec.map(|e| (e - top).exp() / z_shifted);
    let targets = problem.targets();
    let gradient = DVector::from_iterator(
        lambdas.len(),
        lambdas.iter().zip(targets.iter()).map(|(l, t)| t - trace_product(l, &rho).re),
    );
    Ok(DualPoint {
        value: log_z + alpha.dot(&targets),
        gradient,
        rho,
        exponents: spec.eigenvalues,
        weights,
        vectors: spec.eigenvectors,
    })
}

/// `(L(α), ∇L(α))` of the dual objective.
pub fn dual_value_and_gradient(alpha: &DVector<f64>, problem: &MaxEntProblem) -> Result<(f64, DVector<f64>)> {
    let p = dual_point(alpha, problem)?;
    Ok((p.value, p.gradient))
}

/// Exact Hessian of `log Z`: the Kubo–Mori covariance
/// `Σ_nm Re[(Λ_i)_nm (Λ_j)_mn] w_nm − ⟨Λ_i⟩⟨Λ_j⟩`, with `w_nm` the
/// logarithmic mean of the weights `p_n`, `p_m`.
fn dual_hessian(point: &DualPoint, problem: &MaxEntProblem) -> DMatrix<f64> {
    let lambdas = problem.basis.marginal_operators();
    let v = &point.vectors;
    let rotated: Vec<CMatrix> = lambdas.iter().map(|l| v.adjoint() * *l * v).collect();
    let d = point.weights.len();
    let p = &point.weights;
    let e = &point.exponents;
    let w = DMatrix::from_fn(d, d, |n, m| {
        let de = e[n] - e[m];
        if de.abs() < 1e-10 {
            0.5 * (p[n] + p[m])
        } else {
            (p[n] - p[m]) / de
        }
    });
    let means: Vec<f64> = rotated
        .iter()
        .map(|l| (0..d).map(|n| l[(n, n)].re * p[n]).sum())
        .collect();
    let k = lambdas.len();
    DMatrix::from_fn(k, k, |i, j| {
        let (li, lj) = (&rotated[i], &rotated[j]);
        let mut acc = 0.0;
        for n in 0..d {
            for m in 0..d {
                acc += (li[(n, m)] * lj[(m, n)]).re * w[(n, m)];
            }
        }
        acc - means[i] * means[j]
    })
}

#[derive(Clone, Debug)]
pub struct MaxEntSolution {
    pub rho: DensityMatrix,
    pub alpha: DVector<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub history: Vec<DualIterate>,
}

/// Minimizes the dual by damped Newton steps with a backtracking line search.
///
/// Infeasible targets (outside the state space, or on its pure boundary)
/// make the multipliers diverge and surface as [`Error::NonConverged`].
pub fn maxent_state(problem: &MaxEntProblem) -> Result<MaxEntSolution> {
    let k = problem.num_multipliers();
    let mut alpha = DVector::zeros(k);
    let mut point = dual_point(&alpha, problem)?;
    let mut history = vec![DualIterate {
        alpha: alpha.clone(),
        value: point.value,
        grad_norm: point.gradient.norm(),
    }];
    let mut damping = 1e-12;

    for iter in 0..problem.max_iter {
        let grad_norm = point.gradient.norm();
        if grad_norm <= problem.tolerance {
            let (da, db) = problem.basis.dims;
            return Ok(MaxEntSolution {
                rho: DensityMatrix::new(point.rho, vec![da, db])?,
                alpha,
                iterations: iter,
                grad_norm,
                history,
            });
        }
        let hess = dual_hessian(&point, problem) + DMatrix::identity(k, k) * damping;
        let mut step = match hess.cholesky() {
            Some(ch) => -ch.solve(&point.gradient),
            None => -point.gradient.clone(),
        };
        let mut slope = step.dot(&point.gradient);
        if !(slope < 0.0) {
            step = -point.gradient.clone();
            slope = -grad_norm * grad_norm;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial_alpha = &alpha + &step * t;
            let trial = dual_point(&trial_alpha, problem)?;
            let armijo = trial.value <= point.value + 1e-4 * t * slope;
            // near the optimum the decrease drowns in round-off of log Z;
            // fall back on the gradient norm there
            let flat = trial.value <= point.value + 1e-14 * point.value.abs().max(1.0)
                && trial.gradient.norm() < grad_norm;
            if trial.value.is_finite() && (armijo || flat) {
                accepted = Some((trial_alpha, trial));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((a, p)) => {
                alpha = a;
                point = p;
                damping = (damping * 0.1).max(1e-14);
            }
            None => {
                // no decrease even along tiny steps: numerically at the optimum
                // or the Hessian model is off; stiffen and retry
                damping *= 100.0;
                if damping > 1e6 {
                    break;
                }
            }
        }
        history.push(DualIterate {
            alpha: alpha.clone(),
            value: point.value,
            grad_norm: point.gradient.norm(),
        });
    }
    Err(Error::NonConverged {
        iterations: problem.max_iter,
        grad_norm: point.gradient.norm(),
    })
}
