use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: String,
    /// Trace or run the value was computed from.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn new(scenario: impl Into<String>, config_hash: impl Into<String>, seed: u64) -> Self {
        ExperimentReport {
            scenario: scenario.into(),
            config_hash: config_hash.into(),
            seed,
            ..Default::default()
        }
    }

    pub fn metric(&mut self, source: &str, name: &str, value: f64, unit: &str) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            unit: unit.into(),
            source: source.into(),
        });
    }

    pub fn get(&self, source: &str, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.source == source && m.name == name)
            .map(|m| m.value)
    }

    /// Plain-text rendering; deterministic for identical reports.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "config_sha256: {}", self.config_hash);
        let _ = writeln!(s, "seed: {}", self.seed);
        for m in &self.metrics {
            let _ = writeln!(s, "[{}] {} = {:.6} {}", m.source, m.name, m.value, m.unit);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact: {}", a.display());
        }
        s
    }
}
