use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-wire, per-joint transmission efficiency: entry `(i, j)` is the
/// per-pulley efficiency raised to the number of pulleys wire `i` passes
/// before reaching joint `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaMatrix {
    values: DMatrix<f64>,
    pulley_counts: DMatrix<u32>,
}

impl EtaMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn pulley_counts(&self) -> &DMatrix<u32> {
        &self.pulley_counts
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// All-ones matrix (no attenuation anywhere).
    pub fn lossless(m_wires: usize, n_joints: usize) -> Self {
        EtaMatrix {
            values: DMatrix::from_element(m_wires, n_joints, 1.0),
            pulley_counts: DMatrix::zeros(m_wires, n_joints),
        }
    }

    /// Builds a matrix from explicit entries. Used for plants whose per-wire
    /// pulley efficiency differs from the controller's belief.
    pub fn from_values(values: DMatrix<f64>, pulley_counts: DMatrix<u32>) -> Result<Self> {
        if values.shape() != pulley_counts.shape() {
            return Err(Error::contract(
                "eta values and pulley counts differ in shape",
            ));
        }
        for (v, &n) in values.iter().zip(pulley_counts.iter()) {
            if !(*v > 0.0 && *v <= 1.0) {
                return Err(Error::domain(format!("eta entry {v} outside (0, 1]")));
            }
            if n == 0 && *v != 1.0 {
                return Err(Error::domain(
                    "eta entry must be 1 where no pulley is traversed",
                ));
            }
        }
        Ok(EtaMatrix {
            values,
            pulley_counts,
        })
    }

    /// Hadamard product `eta ⊙ g`.
    pub fn weight(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if g.shape() != self.values.shape() {
            return Err(Error::contract(format!(
                "eta is {:?} but the Jacobian is {:?}",
                self.values.shape(),
                g.shape()
            )));
        }
        Ok(self.values.component_mul(g))
    }
}

pub fn build_eta_matrix(pulley_counts: &DMatrix<u32>, eta_p: f64) -> Result<EtaMatrix> {
    if !(eta_p > 0.0 && eta_p <= 1.0) {
        return Err(Error::domain(format!(
            "per-pulley efficiency {eta_p} outside (0, 1]"
        )));
    }
    let values = pulley_counts.map(|n| eta_p.powi(n as i32));
    Ok(EtaMatrix {
        values,
        pulley_counts: pulley_counts.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn repeated(eta: f64, n: u32) -> f64 {
        (0..n).fold(1.0, |acc, _| acc * eta)
    }

    #[test]
    fn zero_counts_give_ones() {
        let eta = build_eta_matrix(&DMatrix::zeros(4, 2), 0.9).unwrap();
        assert!(eta.values().iter().all(|&v| v == 1.0));
        assert_eq!(eta.values().shape(), (4, 2));
    }

    #[test]
    fn two_pulleys() {
        let eta = build_eta_matrix(&DMatrix::from_element(1, 1, 2), 0.95).unwrap();
        assert!((eta.values()[(0, 0)] - 0.9025).abs() < 1e-15);
    }

    #[test]
    fn seven_pulleys_matches_repeated_product() {
        let eta = build_eta_matrix(&DMatrix::from_element(1, 1, 7), 0.95).unwrap();
        let oracle = repeated(0.95, 7);
        assert!((eta.values()[(0, 0)] - oracle).abs() < 1e-14);
        assert!((eta.values()[(0, 0)] - 0.69834).abs() < 5e-6);
    }

    #[test]
    fn rejects_out_of_range_efficiency() {
        let n = DMatrix::from_element(1, 1, 1);
        assert!(matches!(build_eta_matrix(&n, 0.0), Err(Error::Domain(_))));
        assert!(matches!(build_eta_matrix(&n, 1.01), Err(Error::Domain(_))));
        assert!(build_eta_matrix(&n, 1.0).is_ok());
    }

    #[test]
    fn weight_checks_shape() {
        let eta = EtaMatrix::lossless(2, 1);
        assert!(eta.weight(&DMatrix::zeros(1, 2)).is_err());
        let g = DMatrix::from_row_slice(2, 1, &[-0.01, 0.01]);
        assert_eq!(eta.weight(&g).unwrap(), g);
    }

    proptest! {
        #[test]
        fn monotone_in_pulley_count(eta_p in 0.5f64..=1.0, n in 0u32..7) {
            let lo = build_eta_matrix(&DMatrix::from_element(1, 1, n), eta_p).unwrap();
            let hi = build_eta_matrix(&DMatrix::from_element(1, 1, n + 1), eta_p).unwrap();
            prop_assert!(hi.values()[(0, 0)] <= lo.values()[(0, 0)]);
            prop_assert!(lo.values()[(0, 0)] > 0.0 && lo.values()[(0, 0)] <= 1.0);
        }
    }
}
