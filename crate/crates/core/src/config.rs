//! Human-readable robot descriptions.
//!
//! ```toml
//! link_lengths = [0.2, 0.2]
//! pulley_counts = [[3, 5], [3, 6]]
//! tension_min = 5.0
//! tension_max = 400.0
//!
//! [[joints]]
//! name = "shoulder"
//! lower = -1.57
//! upper = 1.57
//!
//! [[wires]]
//! name = "w0"
//! features = [{ type = "wrap", joint = 0, radius = 0.01 }]
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::routing::{Joint, RobotModel, WireRoute};

/// A bound given once for every wire or per wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerWire {
    All(f64),
    Each(Vec<f64>),
}

impl PerWire {
    fn expand(&self, m: usize, key: &str) -> Result<DVector<f64>> {
        match self {
            PerWire::All(v) => Ok(DVector::from_element(m, *v)),
            PerWire::Each(v) if v.len() == m => Ok(DVector::from_column_slice(v)),
            PerWire::Each(v) => Err(Error::Config(format!(
                "{key} has {} entries for {m} wires",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub joints: Vec<Joint>,
    pub link_lengths: Vec<f64>,
    pub wires: Vec<WireRoute>,
    /// One row per wire, one column per joint.
    pub pulley_counts: Vec<Vec<u32>>,
    pub tension_min: PerWire,
    pub tension_max: PerWire,
}

impl RobotConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn reference() -> Self {
        Self::from_model(&catalog::reference_robot())
    }

    pub fn from_model(model: &RobotModel) -> Self {
        let counts = model.pulley_counts();
        RobotConfig {
            joints: model.joints().to_vec(),
            link_lengths: model.link_lengths().to_vec(),
            wires: model.wires().to_vec(),
            pulley_counts: counts
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            tension_min: PerWire::Each(model.tension_min().iter().copied().collect()),
            tension_max: PerWire::Each(model.tension_max().iter().copied().collect()),
        }
    }

    pub fn build(&self) -> Result<RobotModel> {
        let m = self.wires.len();
        let n = self.joints.len();
        if self.pulley_counts.len() != m {
            return Err(Error::Config(format!(
                "pulley_counts has {} rows for {m} wires",
                self.pulley_counts.len()
            )));
        }
        if let Some(i) = self.pulley_counts.iter().position(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "pulley_counts row {i} has {} entries for {n} joints",
                self.pulley_counts[i].len()
            )));
        }
        let counts = DMatrix::from_fn(m, n, |i, j| self.pulley_counts[i][j]);
        RobotModel::new(
            self.joints.clone(),
            self.link_lengths.clone(),
            self.wires.clone(),
            counts,
            self.tension_min.expand(m, "tension_min")?,
            self.tension_max.expand(m, "tension_max")?,
        )
        .map_err(|e| Error::Config(format!("robot: {e}")))
    }
}
