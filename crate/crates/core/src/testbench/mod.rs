//! Virtual wire testing machine: the efficiency rig, the linear loading unit
//! in free and fixed modes, and the end-effector force experiment on the
//! reference arm.

mod chirp;
mod efficiency_rig;
mod force_control;
mod linear_load;

pub use chirp::{chirp, ChirpSpec};
pub use efficiency_rig::run_efficiency_rig;
pub use force_control::{run_force_control, scale_loss, ForceControlTrace, ForceRamp, PlantNoise};
pub use linear_load::{balanced_pretension, run_linear_load};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::pulley::{EfficiencyTable, PulleySpec, WireSpec};
use crate::wire::WireModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigMode {
    EfficiencyRig,
    LinearLoadFree,
    LinearLoadFixed,
    ForceControlArm,
    PreStretchRig,
}

/// Paper-scale motor limit of the winding module (N).
pub const MOTOR_TENSION_LIMIT: f64 = 400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RigConfig {
    pub mode: RigMode,
    pub load_mass: f64,
    /// Symmetric stroke of the loading unit, ± this value (m).
    pub stroke_limit: f64,
    pub pulley_chain: Vec<PulleySpec>,
    pub wire: WireSpec,
    pub wire_model: WireModelKind,
    pub motor_max_tension: f64,
    pub gravity: f64,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    /// Winding-drum inertia reflected to the wire (kg).
    pub motor_mass: f64,
    /// Viscous friction of the winding drum (N·s/m).
    pub motor_damping: f64,
    /// Viscous friction of the load's linear guide (N·s/m). Without it the
    /// free load keeps any momentum the servo lag leaves it with.
    pub load_damping: f64,
    /// First-order tension servo bandwidth (Hz); `None` applies the command
    /// instantly.
    pub servo_bandwidth_hz: Option<f64>,
    /// Unstretched wire span between winding drum and load (m).
    pub wire_length: f64,
    /// Constant tension added to every command (N).
    pub pretension: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        RigConfig {
            mode: RigMode::LinearLoadFixed,
            load_mass: 8.1,
            stroke_limit: 0.35,
            pulley_chain: vec![
                PulleySpec {
                    diameter_mm: 40.0,
                    bearing_friction_coeff: 0.0015,
                };
                2
            ],
            wire: catalog::vectran_1mm(),
            wire_model: WireModelKind::KelvinVoigt,
            motor_max_tension: MOTOR_TENSION_LIMIT,
            gravity: 9.80665,
            dt: 5e-4,
            duration: 60.0,
            seed: 0,
            motor_mass: 6.3,
            motor_damping: 0.0,
            load_damping: 15.0,
            servo_bandwidth_hz: Some(50.0),
            wire_length: 3.0,
            pretension: 0.0,
        }
    }
}

impl RigConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0 && self.dt <= 1e-3) {
            return bad(format!("rig.dt = {} must lie in (0, 0.001] s", self.dt));
        }
        if !(self.duration > 0.0) {
            return bad(format!("rig.duration = {} must be positive", self.duration));
        }
        if !(self.load_mass > 0.0) {
            return bad(format!(
                "rig.load_mass = {} must be positive",
                self.load_mass
            ));
        }
        if !(self.stroke_limit > 0.0) {
            return bad(format!(
                "rig.stroke_limit = {} must be positive",
                self.stroke_limit
            ));
        }
        if !(self.motor_max_tension > 0.0 && self.motor_max_tension <= MOTOR_TENSION_LIMIT) {
            return bad(format!(
                "rig.motor_max_tension = {} must lie in (0, {MOTOR_TENSION_LIMIT}] N",
                self.motor_max_tension
            ));
        }
        if !(self.motor_mass > 0.0) || !(self.motor_damping >= 0.0) {
            return bad(
                "rig.motor_mass must be positive and rig.motor_damping non-negative".into(),
            );
        }
        if !(self.load_damping >= 0.0) {
            return bad(format!(
                "rig.load_damping = {} must be non-negative",
                self.load_damping
            ));
        }
        if let Some(bw) = self.servo_bandwidth_hz {
            if !(bw > 0.0) {
                return bad(format!("rig.servo_bandwidth_hz = {bw} must be positive"));
            }
        }
        if !(self.wire_length > 0.0) {
            return bad(format!(
                "rig.wire_length = {} must be positive",
                self.wire_length
            ));
        }
        if !(self.gravity >= 0.0) || !(self.pretension >= 0.0) {
            return bad("rig.gravity and rig.pretension must be non-negative".into());
        }
        for p in &self.pulley_chain {
            p.validate()
                .map_err(|e| Error::Config(format!("rig.pulley_chain: {e}")))?;
        }
        self.wire
            .validate()
            .map_err(|e| Error::Config(format!("rig.wire: {e}")))
    }

    /// Product of per-pulley efficiencies along the chain at `tension`.
    pub fn chain_efficiency(&self, table: &EfficiencyTable, tension: f64) -> Result<f64> {
        self.pulley_chain.iter().try_fold(1.0, |acc, p| {
            Ok(acc
                * table
                    .lookup(&self.wire.name, p.diameter_mm, tension)?
                    .efficiency)
        })
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventTag {
    StrokeUpper,
    StrokeLower,
    SlackOnset,
}

impl EventTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventTag::StrokeUpper => "stroke_upper",
            EventTag::StrokeLower => "stroke_lower",
            EventTag::SlackOnset => "slack_onset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub tag: EventTag,
}

/// Sampled signals of one linear-load run. Sample `k` holds the state at
/// `time[k]` and the tensions acting during the step that leaves it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub commanded_tension: Vec<f64>,
    pub actual_tension_in: Vec<f64>,
    pub actual_tension_out: Vec<f64>,
    pub load_position: Vec<f64>,
    pub load_velocity: Vec<f64>,
    pub wire_total_length: Vec<f64>,
    pub events: Vec<TraceEvent>,
}

impl SimTrace {
    pub const CSV_HEADER: &'static str = "t,cmd_n,tin_n,tout_n,x_m,v_mps,l_m";

    pub fn with_capacity(n: usize) -> Self {
        SimTrace {
            time: Vec::with_capacity(n),
            commanded_tension: Vec::with_capacity(n),
            actual_tension_in: Vec::with_capacity(n),
            actual_tension_out: Vec::with_capacity(n),
            load_position: Vec::with_capacity(n),
            load_velocity: Vec::with_capacity(n),
            wire_total_length: Vec::with_capacity(n),
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.time[k],
                self.commanded_tension[k],
                self.actual_tension_in[k],
                self.actual_tension_out[k],
                self.load_position[k],
                self.load_velocity[k],
                self.wire_total_length[k]
            )?;
        }
        Ok(())
    }
}

/// SplitMix64 finaliser; derives independent per-trial seeds from a master
/// seed so trial order does not matter.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RigConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejects_large_step_and_motor() {
        let c = RigConfig {
            dt: 2e-3,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RigConfig {
            motor_max_tension: 500.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
