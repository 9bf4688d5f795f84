use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wirebench_core::catalog;
use wirebench_core::pulley::PulleySpec;
use wirebench_core::qp::TensionWeights;
use wirebench_core::testbench::{ChirpSpec, ForceRamp, RigConfig};
use wirebench_core::wire::CreepParams;
use wirebench_core::RobotConfig;

use crate::ConfigError;

/// Everything one invocation needs. Every section is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub seed: u64,
    pub efficiency: EfficiencySection,
    pub rig: RigConfig,
    pub chirp: ChirpSpec,
    pub freq_response: FreqResponseSection,
    pub prestretch: PrestretchSection,
    pub force_control: ForceControlSection,
    pub solve: SolveSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfficiencySection {
    pub wires: Vec<String>,
    pub diameters_mm: Vec<f64>,
    pub tensions_n: Vec<f64>,
    pub trials: usize,
    /// Relative sd of the output load-cell reading.
    pub noise: f64,
    /// Measured table to simulate against instead of the synthetic one.
    pub table: Option<PathBuf>,
}

impl Default for EfficiencySection {
    fn default() -> Self {
        EfficiencySection {
            wires: catalog::efficiency_rig_wires()
                .into_iter()
                .map(|w| w.name)
                .collect(),
            diameters_mm: PulleySpec::RIG_DIAMETERS_MM.to_vec(),
            tensions_n: vec![200.0, 400.0],
            trials: 20,
            noise: 0.001,
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqResponseSection {
    /// Pretension for the fixed run; keeps the wire taut through resonance.
    pub fixed_pretension: f64,
    /// Pretension for the free run; unset balances the load's weight.
    pub free_pretension: Option<f64>,
    pub n_bins: usize,
    /// Write every n-th trace sample; 0 skips the trace files.
    pub trace_decimation: usize,
}

impl Default for FreqResponseSection {
    fn default() -> Self {
        FreqResponseSection {
            fixed_pretension: 100.0,
            free_pretension: None,
            n_bins: 24,
            trace_decimation: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrestretchSection {
    pub wire: String,
    pub tension_n: f64,
    pub initial_length_m: f64,
    pub hours: f64,
    pub step_minutes: f64,
    pub creep: CreepParams,
}

impl Default for PrestretchSection {
    fn default() -> Self {
        PrestretchSection {
            wire: catalog::DYNEEMA_3MM.into(),
            tension_n: 510.0,
            initial_length_m: 8.2,
            hours: 12.0,
            step_minutes: 15.0,
            creep: CreepParams::dyneema(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceControlSection {
    pub repetitions: usize,
    /// Wire and pulley the controller's efficiency belief is read from.
    pub wire: String,
    pub pulley_diameter_mm: f64,
    pub table_tension_n: f64,
    /// The plant's per-pulley loss is also run at (1 ± perturbation) × belief.
    pub perturbation: f64,
    pub noise: f64,
    pub ramp: ForceRamp,
    pub tension: TensionWeights,
    /// Joint angles (rad); unset uses the reference posture.
    pub posture: Option<Vec<f64>>,
    /// Robot description file; unset uses the reference arm.
    pub robot: Option<PathBuf>,
}

impl Default for ForceControlSection {
    fn default() -> Self {
        ForceControlSection {
            repetitions: 5,
            wire: catalog::VECTRAN_1MM.into(),
            pulley_diameter_mm: 12.0,
            table_tension_n: 200.0,
            perturbation: 0.2,
            noise: 0.002,
            ramp: ForceRamp::default(),
            tension: TensionWeights::default(),
            posture: None,
            robot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    /// End-effector force (x, y) in N.
    pub force: [f64; 2],
    pub posture: Option<Vec<f64>>,
    /// Per-pulley efficiency used when compensating.
    pub eta_p: f64,
    pub tension: TensionWeights,
    pub robot: Option<PathBuf>,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            force: [0.0, 0.0],
            posture: None,
            eta_p: 0.985,
            tension: TensionWeights::default(),
            robot: None,
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.efficiency;
        if e.trials == 0 {
            return Err(ConfigError("efficiency.trials must be at least 1".into()));
        }
        if !(e.noise >= 0.0) {
            return Err(ConfigError(format!(
                "efficiency.noise = {} must be non-negative",
                e.noise
            )));
        }
        if e.wires.is_empty() || e.diameters_mm.is_empty() || e.tensions_n.is_empty() {
            return Err(ConfigError(
                "efficiency.wires, diameters_mm and tensions_n must be non-empty".into(),
            ));
        }
        for w in e
            .wires
            .iter()
            .chain([&self.force_control.wire, &self.prestretch.wire])
        {
            if catalog::wire_by_name(w).is_none() {
                return Err(ConfigError(format!("unknown wire '{w}'")));
            }
        }
        self.rig
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        self.chirp
            .validate()
            .map_err(|e| ConfigError(format!("chirp: {e}")))?;
        if self.chirp.duration > self.rig.duration + 1e-9 {
            return Err(ConfigError(format!(
                "chirp.duration = {} exceeds rig.duration = {}",
                self.chirp.duration, self.rig.duration
            )));
        }
        let f = &self.freq_response;
        if !(f.fixed_pretension >= 0.0) || f.free_pretension.is_some_and(|p| !(p >= 0.0)) {
            return Err(ConfigError(
                "freq_response pretensions must be non-negative".into(),
            ));
        }
        if f.n_bins == 0 {
            return Err(ConfigError(
                "freq_response.n_bins must be at least 1".into(),
            ));
        }
        let p = &self.prestretch;
        if !(p.tension_n >= 0.0
            && p.initial_length_m > 0.0
            && p.hours > 0.0
            && p.step_minutes > 0.0)
        {
            return Err(ConfigError(
                "prestretch.tension_n, initial_length_m, hours and step_minutes must be positive"
                    .into(),
            ));
        }
        let fc = &self.force_control;
        if fc.repetitions == 0 {
            return Err(ConfigError(
                "force_control.repetitions must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&fc.perturbation) {
            return Err(ConfigError(format!(
                "force_control.perturbation = {} must lie in [0, 1)",
                fc.perturbation
            )));
        }
        if !(fc.noise >= 0.0) {
            return Err(ConfigError(
                "force_control.noise must be non-negative".into(),
            ));
        }
        if !(fc.ramp.duration > 0.0 && fc.ramp.dt > 0.0) {
            return Err(ConfigError(
                "force_control.ramp duration and dt must be positive".into(),
            ));
        }
        for (key, w) in [
            ("force_control.tension", &fc.tension),
            ("solve.tension", &self.solve.tension),
        ] {
            if !(w.t_min >= 0.0 && w.t_min <= w.t_max && w.tol > 0.0) {
                return Err(ConfigError(format!(
                    "{key}: need 0 <= t_min <= t_max and tol > 0"
                )));
            }
        }
        if !(self.solve.eta_p > 0.0 && self.solve.eta_p <= 1.0) {
            return Err(ConfigError(format!(
                "solve.eta_p = {} must lie in (0, 1]",
                self.solve.eta_p
            )));
        }
        Ok(())
    }
}

pub fn load_robot(path: Option<&PathBuf>) -> anyhow::Result<wirebench_core::RobotModel> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("robot file {}: {e}", p.display())))?;
            RobotConfig::from_toml_str(&text)?
        }
        None => RobotConfig::reference(),
    };
    Ok(cfg.build()?)
}
