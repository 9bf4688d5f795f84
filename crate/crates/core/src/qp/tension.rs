use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BoxQpSolver, QpProblem, TensionSolution};
use crate::error::{Error, Result};
use crate::pulley::EtaMatrix;

/// Torque weighting and tension box for the distribution problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TensionWeights {
    /// Diagonal of Λ, one entry per joint ((N·m)⁻²). A single entry is
    /// broadcast to every joint.
    pub lambda: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub tol: f64,
}

impl Default for TensionWeights {
    fn default() -> Self {
        TensionWeights {
            lambda: vec![1e6],
            t_min: 5.0,
            t_max: 400.0,
            tol: super::DEFAULT_TOL,
        }
    }
}

impl TensionWeights {
    pub fn lambda_diag(&self, n_joints: usize) -> Result<DVector<f64>> {
        let diag = match self.lambda.len() {
            1 => DVector::from_element(n_joints, self.lambda[0]),
            k if k == n_joints => DVector::from_column_slice(&self.lambda),
            k => {
                return Err(Error::contract(format!(
                    "lambda has {k} entries for {n_joints} joints"
                )))
            }
        };
        Ok(diag)
    }
}

/// Solved tensions together with the torque they produce under the model
/// used to compute them.
#[derive(Debug, Clone, PartialEq)]
pub struct TensionDistribution {
    pub solution: TensionSolution,
    /// `-(η ⊙ G)ᵀ T` (or `-Gᵀ T` uncompensated).
    pub achieved_torque: DVector<f64>,
    /// `τ_ref - achieved_torque`.
    pub torque_residual: DVector<f64>,
}

/// Minimise `(τ + AᵀT)ᵀ Λ (τ + AᵀT) + |T|²` over the box, where `A` is the
/// (possibly efficiency-weighted) muscle Jacobian.
fn distribute(
    tau_ref: &DVector<f64>,
    a: &DMatrix<f64>,
    lambda: &DVector<f64>,
    t_min: &DVector<f64>,
    t_max: &DVector<f64>,
    tol: f64,
) -> Result<TensionDistribution> {
    let (m, n) = a.shape();
    if tau_ref.len() != n || lambda.len() != n || t_min.len() != m || t_max.len() != m {
        return Err(Error::contract(format!(
            "dimension mismatch: G is {m}x{n}, tau {}, lambda {}, bounds {}/{}",
            tau_ref.len(),
            lambda.len(),
            t_min.len(),
            t_max.len()
        )));
    }
    if lambda.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::domain("lambda entries must be non-negative"));
    }
    if t_min.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::domain("minimum tensions must be non-negative"));
    }

    let a_lambda = a * DMatrix::from_diagonal(lambda);
    let mut h = &a_lambda * a.transpose();
    for i in 0..m {
        h[(i, i)] += 1.0;
    }
    h *= 2.0;
    // symmetrise the rounding in A Λ Aᵀ
    let h = (&h + h.transpose()) * 0.5;
    let g = &a_lambda * tau_ref * 2.0;

    let problem = QpProblem::new(h, g, t_min.clone(), t_max.clone())?;
    let mut solution = BoxQpSolver::new(tol)?.solve(&problem)?;
    solution.objective += tau_ref.dot(&lambda.component_mul(tau_ref));

    let achieved_torque = -a.tr_mul(&solution.t_ref);
    let torque_residual = tau_ref - &achieved_torque;
    Ok(TensionDistribution {
        solution,
        achieved_torque,
        torque_residual,
    })
}

pub fn solve_tension(
    tau_ref: &DVector<f64>,
    g: &DMatrix<f64>,
    lambda: &DVector<f64>,
    t_min: &DVector<f64>,
    t_max: &DVector<f64>,
    tol: f64,
) -> Result<TensionDistribution> {
    distribute(tau_ref, g, lambda, t_min, t_max, tol)
}

/// Same problem with `G` replaced by `η ⊙ G`, so that the commanded tensions
/// anticipate the attenuation through the pulleys.
pub fn solve_tension_compensated(
    tau_ref: &DVector<f64>,
    g: &DMatrix<f64>,
    eta: &EtaMatrix,
    lambda: &DVector<f64>,
    t_min: &DVector<f64>,
    t_max: &DVector<f64>,
    tol: f64,
) -> Result<TensionDistribution> {
    let weighted = eta.weight(g)?;
    distribute(tau_ref, &weighted, lambda, t_min, t_max, tol)
}
