use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::RigConfig;
use crate::error::{Error, Result};
use crate::pulley::EfficiencyTable;

/// Steady-state pulls through the configured pulley chain. Returns
/// `(t_in, t_out)` pairs, `trials` per setpoint, setpoint-major. The output
/// reading carries multiplicative Gaussian noise of relative standard
/// deviation `noise_sd`, seeded from `config.seed`.
pub fn run_efficiency_rig(
    config: &RigConfig,
    table: &EfficiencyTable,
    setpoints: &[f64],
    trials: usize,
    noise_sd: f64,
) -> Result<Vec<(f64, f64)>> {
    if trials == 0 {
        return Err(Error::contract("at least one trial is required"));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::contract(format!(
            "noise sd {noise_sd} must be non-negative"
        )));
    }
    for &s in setpoints {
        if s > config.motor_max_tension {
            return Err(Error::contract(format!(
                "setpoint {s} N exceeds the motor limit {} N",
                config.motor_max_tension
            )));
        }
        if !(s > 0.0) {
            return Err(Error::domain(format!("setpoint {s} N must be positive")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(setpoints.len() * trials);
    for &t_in in setpoints {
        let chain = config.chain_efficiency(table, t_in)?;
        for _ in 0..trials {
            let z: f64 = StandardNormal.sample(&mut rng);
            let noisy = t_in * chain * (1.0 + noise_sd * z);
            // a load cell cannot read more tension downstream than upstream
            out.push((t_in, noisy.clamp(f64::MIN_POSITIVE, t_in)));
        }
    }
    Ok(out)
}
