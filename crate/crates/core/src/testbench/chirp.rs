use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant-amplitude tension command whose instantaneous frequency sweeps
/// linearly from `f_low` to `f_high` over `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChirpSpec {
    pub t_min_tension: f64,
    pub t_max_tension: f64,
    pub f_low: f64,
    pub f_high: f64,
    pub duration: f64,
}

impl Default for ChirpSpec {
    fn default() -> Self {
        ChirpSpec {
            t_min_tension: 0.0,
            t_max_tension: 150.0,
            f_low: 2.0,
            f_high: 20.0,
            duration: 60.0,
        }
    }
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.t_min_tension && self.t_min_tension < self.t_max_tension) {
            return Err(Error::domain(format!(
                "chirp tension range [{}, {}] invalid",
                self.t_min_tension, self.t_max_tension
            )));
        }
        if !(0.0 < self.f_low && self.f_low < self.f_high) {
            return Err(Error::domain(format!(
                "chirp band [{}, {}] Hz invalid",
                self.f_low, self.f_high
            )));
        }
        if !(self.duration > 0.0) {
            return Err(Error::domain("chirp duration must be positive"));
        }
        Ok(())
    }

    pub fn offset(&self) -> f64 {
        0.5 * (self.t_max_tension + self.t_min_tension)
    }

    pub fn amplitude(&self) -> f64 {
        0.5 * (self.t_max_tension - self.t_min_tension)
    }

    /// Sweep rate (Hz/s).
    pub fn rate(&self) -> f64 {
        (self.f_high - self.f_low) / self.duration
    }

    /// Phase φ(t) = 2π (f_low t + rate t² / 2). Defined for any t.
    pub fn phase(&self, t: f64) -> f64 {
        2.0 * PI * (self.f_low * t + 0.5 * self.rate() * t * t)
    }

    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        self.f_low + self.rate() * t
    }

    /// Time at which the sweep passes `f`.
    pub fn time_at_frequency(&self, f: f64) -> f64 {
        (f - self.f_low) / self.rate()
    }

    /// Command value without the range check.
    pub fn value(&self, t: f64) -> f64 {
        self.offset() - self.amplitude() * self.phase(t).cos()
    }
}

/// Commanded tension at time `t`, starting at the minimum.
pub fn chirp(spec: &ChirpSpec, t: f64) -> Result<f64> {
    if !(0.0..=spec.duration).contains(&t) {
        return Err(Error::contract(format!(
            "t = {t} s outside the chirp [0, {}] s",
            spec.duration
        )));
    }
    Ok(spec.value(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn starts_at_minimum() {
        assert_eq!(chirp(&ChirpSpec::default(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn ends_at_highest_frequency() {
        let c = ChirpSpec::default();
        assert!((c.instantaneous_frequency(c.duration) - 20.0).abs() < 1e-12);
        // numerical derivative of the phase agrees
        let h = 1e-6;
        let f = (c.phase(c.duration) - c.phase(c.duration - h)) / h / (2.0 * PI);
        assert!((f - 20.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_out_of_range_time() {
        let c = ChirpSpec::default();
        assert!(matches!(chirp(&c, -0.1), Err(Error::Contract(_))));
        assert!(chirp(&c, c.duration + 0.1).is_err());
    }

    #[test]
    fn validate_catches_bad_specs() {
        let c = ChirpSpec {
            f_low: 30.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ChirpSpec {
            t_min_tension: 200.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn bounded(t in 0.0f64..60.0) {
            let v = chirp(&ChirpSpec::default(), t).unwrap();
            prop_assert!((0.0..=150.0).contains(&v));
        }
    }
}
