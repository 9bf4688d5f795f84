//! Frequency-response estimation, error metrics and experiment reports.

mod bode;
mod report;

pub use bode::{estimate_bode, log_spaced, BodeCurve, BodeOptions, DroppedBin};
pub use report::{ExperimentReport, Metric};

use crate::error::{Error, Result};

/// Uniformly sampled signal; sample `k` is taken at `start + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub start: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: f64, dt: f64, values: Vec<f64>) -> Self {
        TimeSeries { start, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }
}

/// Root-mean-square difference of two equally long series.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::contract(format!(
            "rmse needs equal non-empty lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

/// `(off − on) / off`, as a fraction.
pub fn percentage_reduction(off: f64, on: f64) -> f64 {
    (off - on) / off
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        let a: Vec<f64> = (0..17).map(|k| k as f64 * 0.3).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.75).collect();
        assert!((rmse(&a, &b).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::Contract(_))));
    }

    proptest! {
        #[test]
        fn rmse_is_a_metric(
            v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 1..40)
        ) {
            let a: Vec<f64> = v.iter().map(|t| t.0).collect();
            let b: Vec<f64> = v.iter().map(|t| t.1).collect();
            let c: Vec<f64> = v.iter().map(|t| t.2).collect();
            let ab = rmse(&a, &b).unwrap();
            prop_assert_eq!(ab, rmse(&b, &a).unwrap());
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(ab == 0.0, a == b);
            let ac = rmse(&a, &c).unwrap();
            let cb = rmse(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
        }
    }
}
