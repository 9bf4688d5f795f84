//! Built-in wires, the reference coupled-wire arm and default rig settings.
//!
//! Stiffness and damping values are calibration choices (the linear-load rig
//! resonates near 6 Hz with the 8.1 kg load), not measured material data.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::pulley::WireSpec;
use crate::routing::{Joint, RobotModel, RoutingFeature, WireRoute};

pub const VECTRAN_1MM: &str = "vectran-1.0";
pub const ZYLON_2MM: &str = "zylon-2.0";
pub const ZYLON_2_5MM: &str = "zylon-2.5";
pub const ZYLON_3MM: &str = "zylon-3.0";
pub const DYNEEMA_3MM: &str = "dyneema-3.0";

fn wire(name: &str, diameter_mm: f64, stiffness: f64, damping: f64, rated: f64) -> WireSpec {
    WireSpec {
        name: name.to_owned(),
        diameter_mm,
        axial_stiffness: stiffness,
        axial_damping: damping,
        secondary_stiffness: 5.0 * stiffness,
        rated_max_tension: rated,
    }
}

/// 1 mm Vectran braid (VB-175), used on the robot and the linear-load rig.
pub fn vectran_1mm() -> WireSpec {
    wire(VECTRAN_1MM, 1.0, 27_000.0, 360.0, 1_700.0)
}

pub fn zylon_2mm() -> WireSpec {
    wire(ZYLON_2MM, 2.0, 110_000.0, 1_400.0, 4_000.0)
}

pub fn zylon_2_5mm() -> WireSpec {
    wire(ZYLON_2_5MM, 2.5, 170_000.0, 2_200.0, 6_000.0)
}

pub fn zylon_3mm() -> WireSpec {
    wire(ZYLON_3MM, 3.0, 250_000.0, 3_200.0, 8_000.0)
}

/// 3 mm Dyneema (DB-100), the pre-stretch specimen.
pub fn dyneema_3mm() -> WireSpec {
    wire(DYNEEMA_3MM, 3.0, 150_000.0, 2_000.0, 9_800.0)
}

/// The four wires characterised on the efficiency rig.
pub fn efficiency_rig_wires() -> Vec<WireSpec> {
    vec![vectran_1mm(), zylon_2mm(), zylon_2_5mm(), zylon_3mm()]
}

pub fn all_wires() -> Vec<WireSpec> {
    let mut w = efficiency_rig_wires();
    w.push(dyneema_3mm());
    w
}

pub fn wire_by_name(name: &str) -> Option<WireSpec> {
    all_wires().into_iter().find(|w| w.name == name)
}

/// Moment arm of every joint drum on the reference arm (m).
pub const REFERENCE_MOMENT_ARM: f64 = 0.01;

/// Planar two-joint arm driven by four coupled wires. Every wire wraps both
/// joint drums; the sign pattern lets any torque pair be produced with all
/// wires in tension, and equal tensions produce no torque.
pub fn reference_robot() -> RobotModel {
    let r = REFERENCE_MOMENT_ARM;
    let signs = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    let wires = signs
        .iter()
        .enumerate()
        .map(|(i, &(s0, s1))| WireRoute {
            name: format!("w{i}"),
            features: vec![
                RoutingFeature::Wrap {
                    joint: 0,
                    radius: s0 * r,
                },
                RoutingFeature::Wrap {
                    joint: 1,
                    radius: s1 * r,
                },
            ],
        })
        .collect();
    let joints = vec![
        Joint {
            name: "shoulder".into(),
            lower: -FRAC_PI_2,
            upper: FRAC_PI_2,
        },
        Joint {
            name: "elbow".into(),
            lower: -2.0,
            upper: 2.0,
        },
    ];
    // pulleys passed before reaching the shoulder, then the elbow
    let pulley_counts = DMatrix::from_row_slice(4, 2, &[3, 5, 3, 6, 4, 7, 4, 7]);
    RobotModel::new(
        joints,
        vec![0.2, 0.2],
        wires,
        pulley_counts,
        DVector::from_element(4, 5.0),
        DVector::from_element(4, 400.0),
    )
    .expect("reference robot is well formed")
}

/// Posture used for the end-effector force experiment (rad).
pub fn reference_posture() -> DVector<f64> {
    DVector::from_vec(vec![1.2, 0.6])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wires_validate() {
        for w in all_wires() {
            w.validate().unwrap();
        }
        assert!(wire_by_name(DYNEEMA_3MM).is_some());
        assert!(wire_by_name("hemp").is_none());
    }

    #[test]
    fn reference_robot_shape() {
        let r = reference_robot();
        assert_eq!((r.m_wires(), r.n_joints()), (4, 2));
        assert!(r.warnings().is_empty());
        let g = r.muscle_jacobian(&reference_posture()).unwrap();
        for v in g.iter() {
            assert_eq!(v.abs(), REFERENCE_MOMENT_ARM);
        }
        // uniform tension is torque-free
        let tau = -g.tr_mul(&DVector::from_element(4, 1.0));
        assert_eq!(tau, DVector::zeros(2));
    }
}
