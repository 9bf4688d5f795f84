//! Wire and pulley descriptions, the per-pulley tension-loss model and the
//! efficiency bookkeeping that feeds the tension distribution.
//!
//! All efficiencies stored or returned here are *per pulley*: a chain of `n`
//! identical pulleys attenuates tension by `E^n`.

mod eta;
mod table;

pub use eta::{build_eta_matrix, EtaMatrix};
pub use table::{
    EfficiencyEntry, EfficiencyLookup, EfficiencyTable, MonotonicityWarning, Provenance,
    SyntheticLossModel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Material and mechanical parameters of one wire type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    pub name: String,
    pub diameter_mm: f64,
    /// Force per unit strain (N). In the four-element model this is the
    /// spring parallel to the damper.
    pub axial_stiffness: f64,
    /// Force per unit strain rate (N·s).
    pub axial_damping: f64,
    /// Series spring of the four-element model, force per unit strain (N).
    pub secondary_stiffness: f64,
    pub rated_max_tension: f64,
}

impl WireSpec {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.diameter_mm > 0.0, "diameter_mm must be > 0"),
            (self.axial_stiffness > 0.0, "axial_stiffness must be > 0"),
            (self.axial_damping >= 0.0, "axial_damping must be >= 0"),
            (
                self.secondary_stiffness > 0.0,
                "secondary_stiffness must be > 0",
            ),
            (
                self.rated_max_tension > 0.0,
                "rated_max_tension must be > 0",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::domain(format!("wire '{}': {msg}", self.name)));
            }
        }
        Ok(())
    }
}

/// An idler pulley. Bearing friction is carried for reporting only; the
/// measured loss is dominated by the wire, not the bearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulleySpec {
    pub diameter_mm: f64,
    #[serde(default = "PulleySpec::default_bearing_friction")]
    pub bearing_friction_coeff: f64,
}

impl PulleySpec {
    /// Pulley diameters available on the efficiency rig (mm).
    pub const RIG_DIAMETERS_MM: [f64; 8] = [12.0, 14.0, 16.0, 18.0, 20.0, 30.0, 40.0, 60.0];

    fn default_bearing_friction() -> f64 {
        0.0015
    }

    pub fn new(diameter_mm: f64) -> Result<Self> {
        let p = PulleySpec {
            diameter_mm,
            bearing_friction_coeff: Self::default_bearing_friction(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_mm > 0.0) {
            return Err(Error::domain(format!(
                "pulley diameter must be > 0, got {}",
                self.diameter_mm
            )));
        }
        if !(0.0..0.01).contains(&self.bearing_friction_coeff) {
            return Err(Error::domain(format!(
                "bearing friction coefficient must lie in [0, 0.01), got {}",
                self.bearing_friction_coeff
            )));
        }
        Ok(())
    }
}

/// Per-pulley efficiency from tensions measured before and after a chain of
/// `n_pulleys` identical pulleys: `(t_out / t_in)^(1/n)`.
pub fn per_pulley_efficiency(t_in: f64, t_out: f64, n_pulleys: u32) -> Result<f64> {
    if !(t_in > 0.0) || !(t_out > 0.0) {
        return Err(Error::domain(format!(
            "tensions must be positive (t_in = {t_in}, t_out = {t_out})"
        )));
    }
    if n_pulleys == 0 {
        return Err(Error::domain("pulley count must be at least 1"));
    }
    if t_out > t_in {
        return Err(Error::InconsistentMeasurement { t_in, t_out });
    }
    let ratio = t_out / t_in;
    Ok(match n_pulleys {
        1 => ratio,
        2 => ratio.sqrt(),
        n => ratio.powf(1.0 / f64::from(n)),
    })
}

/// Mean and sample standard deviation of a set of efficiency trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; zero for a single trial.
    pub std_dev: f64,
    pub count: usize,
}

/// Reduce repeated `(t_in, t_out)` measurements to per-pulley efficiency
/// statistics.
pub fn ingest_efficiency_trials(trials: &[(f64, f64)], n_pulleys: u32) -> Result<TrialSummary> {
    if trials.is_empty() {
        return Err(Error::domain("no efficiency trials supplied"));
    }
    let efficiencies = trials
        .iter()
        .map(|&(t_in, t_out)| per_pulley_efficiency(t_in, t_out, n_pulleys))
        .collect::<Result<Vec<_>>>()?;
    let count = efficiencies.len();
    let mean = efficiencies.iter().sum::<f64>() / count as f64;
    let std_dev = if count > 1 {
        let ss: f64 = efficiencies.iter().map(|e| (e - mean).powi(2)).sum();
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(TrialSummary {
        mean,
        std_dev,
        count,
    })
}
