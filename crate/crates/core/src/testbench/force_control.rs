use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulley::EtaMatrix;
use crate::qp::{solve_tension, solve_tension_compensated, TensionWeights};
use crate::routing::{joint_torque_from_force, torque_from_tension, RobotModel};

/// Linear ramp of the commanded vertical end-effector force from 0 to `peak`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceRamp {
    pub peak: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for ForceRamp {
    fn default() -> Self {
        ForceRamp {
            peak: 40.0,
            duration: 10.0,
            dt: 0.01,
        }
    }
}

impl ForceRamp {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn value(&self, t: f64) -> f64 {
        self.peak * (t / self.duration).clamp(0.0, 1.0)
    }
}

/// Relative Gaussian error on every realized wire tension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantNoise {
    pub relative_sd: f64,
    pub seed: u64,
}

impl Default for PlantNoise {
    fn default() -> Self {
        PlantNoise {
            relative_sd: 0.002,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceControlTrace {
    pub time: Vec<f64>,
    /// Commanded end-effector force (x, y) per step.
    pub commanded: Vec<[f64; 2]>,
    pub realized: Vec<[f64; 2]>,
    pub tensions: Vec<DVector<f64>>,
    /// RMSE of the vertical component over the ramp (N).
    pub rmse: f64,
}

/// Ramp the vertical end-effector force and track it through the tension
/// distribution. `eta` is the controller's belief, `plant_eta` the
/// attenuation the simulated arm actually applies.
#[allow(clippy::too_many_arguments)]
pub fn run_force_control(
    robot: &RobotModel,
    q: &DVector<f64>,
    eta: &EtaMatrix,
    plant_eta: &EtaMatrix,
    ramp: &ForceRamp,
    compensate: bool,
    weights: &TensionWeights,
    noise: &PlantNoise,
) -> Result<ForceControlTrace> {
    if !(ramp.duration > 0.0 && ramp.dt > 0.0) {
        return Err(Error::contract("ramp duration and step must be positive"));
    }
    let (m, n) = (robot.m_wires(), robot.n_joints());
    for e in [eta, plant_eta] {
        if (e.nrows(), e.ncols()) != (m, n) {
            return Err(Error::contract(format!(
                "efficiency matrix is {}x{}, robot is {m}x{n}",
                e.nrows(),
                e.ncols()
            )));
        }
    }
    let pair = robot.jacobians(q)?;
    let lambda = weights.lambda_diag(n)?;
    let t_min = DVector::from_element(m, weights.t_min);
    let t_max = DVector::from_element(m, weights.t_max);
    // least-squares inverse of J_rᵀ maps realized torque back to force
    let jt_pinv = pair
        .j_r
        .transpose()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Numerical(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let steps = ramp.steps();
    let mut trace = ForceControlTrace {
        time: Vec::with_capacity(steps + 1),
        commanded: Vec::with_capacity(steps + 1),
        realized: Vec::with_capacity(steps + 1),
        tensions: Vec::with_capacity(steps + 1),
        rmse: 0.0,
    };
    let mut sq = 0.0;
    for k in 0..=steps {
        let t = k as f64 * ramp.dt;
        let f_ref = DVector::from_vec(vec![0.0, ramp.value(t)]);
        let tau_ref = joint_torque_from_force(&pair.j_r, &f_ref)?;
        let dist = if compensate {
            solve_tension_compensated(&tau_ref, &pair.g, eta, &lambda, &t_min, &t_max, weights.tol)?
        } else {
            solve_tension(&tau_ref, &pair.g, &lambda, &t_min, &t_max, weights.tol)?
        };
        let mut realized_t = dist.solution.t_ref;
        for v in realized_t.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = (*v * (1.0 + noise.relative_sd * z)).max(0.0);
        }
        let tau = torque_from_tension(&pair.g, &realized_t, Some(plant_eta))?;
        let f: DVector<f64> = &jt_pinv * tau;
        sq += (f[1] - f_ref[1]).powi(2);
        trace.time.push(t);
        trace.commanded.push([f_ref[0], f_ref[1]]);
        trace.realized.push([f[0], f[1]]);
        trace.tensions.push(realized_t);
    }
    trace.rmse = (sq / (steps + 1) as f64).sqrt();
    Ok(trace)
}

/// Plant attenuation whose per-pulley loss `1 - η_p` is scaled by `factor`.
pub fn scale_loss(counts: &DMatrix<u32>, eta_p: f64, factor: f64) -> Result<EtaMatrix> {
    crate::pulley::build_eta_matrix(counts, 1.0 - factor * (1.0 - eta_p))
}
