//! Planar robot and wire-routing geometry: wire lengths, the muscle-length
//! Jacobian `G = ∂l/∂q`, the end-effector Jacobian and the torque maps built
//! on them.
//!
//! Frames: link 0 is the fixed base. Joint `j` sits at the origin of link
//! `j + 1` and rotates it (and every distal link) by `q[j]`. Link `k` extends
//! `link_lengths[k - 1]` along its own x axis; the end effector is the tip of
//! the last link.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulley::EtaMatrix;

/// Central-difference step for the muscle Jacobian (rad).
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoutingFeature {
    /// Fixed anchor or eyelet, expressed in the frame of `link`.
    Via { link: usize, position: [f64; 2] },
    /// Wire wrapped on a joint drum. Positive radius lengthens the wire as the
    /// joint angle grows.
    Wrap { joint: usize, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireRoute {
    pub name: String,
    pub features: Vec<RoutingFeature>,
}

/// Validated robot description. Construct with [`RobotModel::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    joints: Vec<Joint>,
    link_lengths: Vec<f64>,
    wires: Vec<WireRoute>,
    pulley_counts: DMatrix<u32>,
    tension_min: DVector<f64>,
    tension_max: DVector<f64>,
    warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianPair {
    /// m × n, entry `∂l_i/∂q_j` (m/rad).
    pub g: DMatrix<f64>,
    /// 2 × n, entry `∂p/∂q_j` (m/rad).
    pub j_r: DMatrix<f64>,
}

impl RobotModel {
    pub fn new(
        joints: Vec<Joint>,
        link_lengths: Vec<f64>,
        wires: Vec<WireRoute>,
        pulley_counts: DMatrix<u32>,
        tension_min: DVector<f64>,
        tension_max: DVector<f64>,
    ) -> Result<Self> {
        let n = joints.len();
        let m = wires.len();
        if n == 0 || m == 0 {
            return Err(Error::domain("robot needs at least one joint and one wire"));
        }
        if link_lengths.len() != n {
            return Err(Error::contract(format!(
                "{n} joints but {} link lengths",
                link_lengths.len()
            )));
        }
        if pulley_counts.shape() != (m, n) {
            return Err(Error::contract(format!(
                "pulley_counts is {:?}, expected ({m}, {n})",
                pulley_counts.shape()
            )));
        }
        if tension_min.len() != m || tension_max.len() != m {
            return Err(Error::contract(
                "tension bounds must have one entry per wire",
            ));
        }
        for (lo, hi) in tension_min.iter().zip(tension_max.iter()) {
            if !(*lo >= 0.0 && lo <= hi) {
                return Err(Error::domain(format!(
                    "tension bounds [{lo}, {hi}] invalid"
                )));
            }
        }
        for j in &joints {
            if !(j.lower < j.upper) {
                return Err(Error::domain(format!(
                    "joint '{}' has empty limits",
                    j.name
                )));
            }
        }
        for w in &wires {
            for f in &w.features {
                match *f {
                    RoutingFeature::Via { link, .. } if link > n => {
                        return Err(Error::domain(format!(
                            "wire '{}' references link {link} of {n}",
                            w.name
                        )))
                    }
                    RoutingFeature::Wrap { joint, .. } if joint >= n => {
                        return Err(Error::domain(format!(
                            "wire '{}' wraps joint {joint} of {n}",
                            w.name
                        )))
                    }
                    RoutingFeature::Wrap { radius: 0.0, .. } => {
                        return Err(Error::domain(format!(
                            "wire '{}' has a zero wrap radius",
                            w.name
                        )))
                    }
                    _ => {}
                }
            }
        }

        let mut warnings = Vec::new();
        if m < n + 1 {
            warnings.push(format!(
                "{m} wires cannot fully constrain {n} joints (need at least {})",
                n + 1
            ));
        }
        if pulley_counts.iter().any(|&c| c > 7) {
            warnings.push("pulley counts above 7 exceed the reference hardware".into());
        }
        Ok(RobotModel {
            joints,
            link_lengths,
            wires,
            pulley_counts,
            tension_min,
            tension_max,
            warnings,
        })
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn m_wires(&self) -> usize {
        self.wires.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn wires(&self) -> &[WireRoute] {
        &self.wires
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn pulley_counts(&self) -> &DMatrix<u32> {
        &self.pulley_counts
    }

    pub fn tension_min(&self) -> &DVector<f64> {
        &self.tension_min
    }

    pub fn tension_max(&self) -> &DVector<f64> {
        &self.tension_max
    }

    /// Soft-constraint violations found at construction.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn check_q(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n_joints() {
            return Err(Error::contract(format!(
                "expected {} joint angles, got {}",
                self.n_joints(),
                q.len()
            )));
        }
        for (j, (joint, &qj)) in self.joints.iter().zip(q.iter()).enumerate() {
            if !(joint.lower..=joint.upper).contains(&qj) {
                return Err(Error::contract(format!(
                    "q[{j}] = {qj} outside [{}, {}]",
                    joint.lower, joint.upper
                )));
            }
        }
        Ok(())
    }

    /// Origin and absolute angle of every link frame, base first.
    fn frames(&self, q: &DVector<f64>) -> Vec<(Vector2<f64>, f64)> {
        let mut frames = Vec::with_capacity(self.n_joints() + 1);
        frames.push((Vector2::zeros(), 0.0));
        let mut origin = Vector2::zeros();
        let mut angle = 0.0_f64;
        for (k, &qk) in q.iter().enumerate() {
            if k > 0 {
                let len = self.link_lengths[k - 1];
                origin += Vector2::new(angle.cos(), angle.sin()) * len;
            }
            angle += qk;
            frames.push((origin, angle));
        }
        frames
    }

    fn to_world(frames: &[(Vector2<f64>, f64)], link: usize, p: [f64; 2]) -> Vector2<f64> {
        let (o, a) = frames[link];
        let (s, c) = a.sin_cos();
        o + Vector2::new(c * p[0] - s * p[1], s * p[0] + c * p[1])
    }

    fn route(&self, wire: usize) -> Result<&WireRoute> {
        self.wires.get(wire).ok_or_else(|| {
            Error::NotFound(format!("wire index {wire} (robot has {})", self.m_wires()))
        })
    }

    /// Straight-segment part of a wire's length, without limit checks.
    fn segment_length(&self, route: &WireRoute, q: &DVector<f64>) -> f64 {
        let frames = self.frames(q);
        let mut total = 0.0;
        let mut prev: Option<Vector2<f64>> = None;
        for f in &route.features {
            if let RoutingFeature::Via { link, position } = *f {
                let p = Self::to_world(&frames, link, position);
                if let Some(a) = prev {
                    total += (p - a).norm();
                }
                prev = Some(p);
            }
        }
        total
    }

    fn wrap_length(route: &WireRoute, q: &DVector<f64>) -> f64 {
        route
            .features
            .iter()
            .map(|f| match *f {
                RoutingFeature::Wrap { joint, radius } => radius * q[joint],
                RoutingFeature::Via { .. } => 0.0,
            })
            .sum()
    }

    /// True when some straight segment of the wire spans joint `j`.
    fn segment_spans_joint(route: &WireRoute, j: usize) -> bool {
        let links: Vec<usize> = route
            .features
            .iter()
            .filter_map(|f| match *f {
                RoutingFeature::Via { link, .. } => Some(link),
                RoutingFeature::Wrap { .. } => None,
            })
            .collect();
        links
            .windows(2)
            .any(|w| w[0].min(w[1]) <= j && j < w[0].max(w[1]))
    }

    pub fn wire_length(&self, wire: usize, q: &DVector<f64>) -> Result<f64> {
        let route = self.route(wire)?;
        self.check_q(q)?;
        Ok(self.segment_length(route, q) + Self::wrap_length(route, q))
    }

    /// `G(q) = ∂l/∂q`. Wrap contributions are exact; straight segments use
    /// central differences with [`JACOBIAN_STEP`]. Entries for joints that no
    /// segment spans are exactly zero.
    pub fn muscle_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        let (m, n) = (self.m_wires(), self.n_joints());
        let mut g = DMatrix::zeros(m, n);
        for (i, route) in self.wires.iter().enumerate() {
            for f in &route.features {
                if let RoutingFeature::Wrap { joint, radius } = *f {
                    g[(i, joint)] += radius;
                }
            }
            for j in 0..n {
                if !Self::segment_spans_joint(route, j) {
                    continue;
                }
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += JACOBIAN_STEP;
                qm[j] -= JACOBIAN_STEP;
                let d = (self.segment_length(route, &qp) - self.segment_length(route, &qm))
                    / (2.0 * JACOBIAN_STEP);
                g[(i, j)] += d;
            }
        }
        Ok(g)
    }

    pub fn end_effector(&self, q: &DVector<f64>) -> Result<Vector2<f64>> {
        self.check_q(q)?;
        let frames = self.frames(q);
        let n = self.n_joints();
        Ok(Self::to_world(&frames, n, [self.link_lengths[n - 1], 0.0]))
    }

    /// Planar end-effector Jacobian, 2 × n.
    pub fn joint_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let tip = self.end_effector(q)?;
        let frames = self.frames(q);
        let n = self.n_joints();
        let mut j_r = DMatrix::zeros(2, n);
        for j in 0..n {
            let r = tip - frames[j + 1].0;
            j_r[(0, j)] = -r.y;
            j_r[(1, j)] = r.x;
        }
        Ok(j_r)
    }

    pub fn jacobians(&self, q: &DVector<f64>) -> Result<JacobianPair> {
        Ok(JacobianPair {
            g: self.muscle_jacobian(q)?,
            j_r: self.joint_jacobian(q)?,
        })
    }
}

/// `τ_ref = J_rᵀ f_ref`.
pub fn joint_torque_from_force(j_r: &DMatrix<f64>, f_ref: &DVector<f64>) -> Result<DVector<f64>> {
    if j_r.nrows() != f_ref.len() {
        return Err(Error::contract(format!(
            "Jacobian has {} rows but force has {} components",
            j_r.nrows(),
            f_ref.len()
        )));
    }
    Ok(j_r.tr_mul(f_ref))
}

/// Joint torque produced by wire tensions: `-Gᵀ T`, or `-(η ⊙ G)ᵀ T` when an
/// efficiency matrix is supplied.
pub fn torque_from_tension(
    g: &DMatrix<f64>,
    tension: &DVector<f64>,
    eta: Option<&EtaMatrix>,
) -> Result<DVector<f64>> {
    if g.nrows() != tension.len() {
        return Err(Error::contract(format!(
            "G has {} rows but {} tensions were given",
            g.nrows(),
            tension.len()
        )));
    }
    if let Some(i) = tension.iter().position(|&t| !(t >= 0.0)) {
        return Err(Error::domain(format!(
            "tension {i} is negative ({})",
            tension[i]
        )));
    }
    let tau = match eta {
        Some(eta) => -eta.weight(g)?.tr_mul(tension),
        None => -g.tr_mul(tension),
    };
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn limits(n: usize) -> Vec<Joint> {
        (0..n)
            .map(|i| Joint {
                name: format!("j{i}"),
                lower: -PI,
                upper: PI,
            })
            .collect()
    }

    fn one_joint(features: Vec<RoutingFeature>) -> RobotModel {
        RobotModel::new(
            limits(1),
            vec![0.3],
            vec![WireRoute {
                name: "w".into(),
                features,
            }],
            DMatrix::zeros(1, 1),
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 100.0),
        )
        .unwrap()
    }

    /// Anchor a = 0.10 m behind the joint on the base, b = 0.05 m out on
    /// the link: l(q) = sqrt(a² + b² - 2ab cos(π - q)).
    fn law_of_cosines() -> RobotModel {
        one_joint(vec![
            RoutingFeature::Via {
                link: 0,
                position: [-0.10, 0.0],
            },
            RoutingFeature::Via {
                link: 1,
                position: [0.05, 0.0],
            },
        ])
    }

    fn q1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn wrap_arc_length() {
        let m = one_joint(vec![RoutingFeature::Wrap {
            joint: 0,
            radius: 0.01,
        }]);
        let dl = m.wire_length(0, &q1(1.0)).unwrap() - m.wire_length(0, &q1(0.0)).unwrap();
        assert_eq!(dl, 0.01);
        assert_eq!(m.muscle_jacobian(&q1(0.3)).unwrap()[(0, 0)], 0.01);
    }

    #[test]
    fn rigid_segment() {
        let m = one_joint(vec![
            RoutingFeature::Via {
                link: 0,
                position: [0.0, 0.0],
            },
            RoutingFeature::Via {
                link: 0,
                position: [0.3, 0.4],
            },
        ]);
        for q in [-1.0, 0.0, 2.0] {
            assert!((m.wire_length(0, &q1(q)).unwrap() - 0.5).abs() < 1e-15);
        }
        assert_eq!(m.muscle_jacobian(&q1(0.7)).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn law_of_cosines_length_and_slope() {
        let m = law_of_cosines();
        let q = PI / 2.0;
        let l = m.wire_length(0, &q1(q)).unwrap();
        assert!((l - 0.0125f64.sqrt()).abs() < 1e-12);
        assert!((l - 0.1118).abs() < 5e-5);
        let (a, b) = (0.10, 0.05);
        let analytic = -a * b * (PI - q).sin() / l;
        let g = m.muscle_jacobian(&q1(q)).unwrap()[(0, 0)];
        assert!((g - analytic).abs() < 1e-6);
        assert!((g.abs() - 0.04472).abs() < 1e-5);
    }

    #[test]
    fn unknown_wire_and_bad_q() {
        let m = law_of_cosines();
        assert!(matches!(
            m.wire_length(3, &q1(0.0)),
            Err(Error::NotFound(_))
        ));
        assert!(matches!(
            m.wire_length(0, &q1(4.0)),
            Err(Error::Contract(_))
        ));
        assert!(m.wire_length(0, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn one_link_vertical_force() {
        let m = law_of_cosines();
        let j_r = m.joint_jacobian(&q1(0.0)).unwrap();
        assert!((j_r[(0, 0)]).abs() < 1e-15 && (j_r[(1, 0)] - 0.3).abs() < 1e-15);
        let tau = joint_torque_from_force(&j_r, &DVector::from_vec(vec![0.0, 40.0])).unwrap();
        assert!((tau[0] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn torque_from_force_edge_cases() {
        let eye = DMatrix::<f64>::identity(2, 2);
        let f = DVector::from_vec(vec![3.0, -4.0]);
        assert_eq!(joint_torque_from_force(&eye, &f).unwrap(), f);
        assert_eq!(
            joint_torque_from_force(&eye, &DVector::zeros(2)).unwrap(),
            DVector::zeros(2)
        );
        assert!(matches!(
            joint_torque_from_force(&eye, &DVector::zeros(3)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn antagonistic_tension_torques() {
        let g = DMatrix::from_row_slice(2, 1, &[-0.01, 0.01]);
        let t = DVector::from_vec(vec![10.0, 10.0]);
        assert_eq!(torque_from_tension(&g, &t, None).unwrap()[0], 0.0);
        assert_eq!(
            torque_from_tension(&g, &DVector::zeros(2), None).unwrap()[0],
            0.0
        );
        let eta = EtaMatrix::from_values(
            DMatrix::from_row_slice(2, 1, &[0.9, 1.0]),
            DMatrix::from_row_slice(2, 1, &[1, 0]),
        )
        .unwrap();
        let tau = torque_from_tension(&g, &t, Some(&eta)).unwrap()[0];
        assert!((tau - -0.01).abs() < 1e-15);
        assert!(matches!(
            torque_from_tension(&g, &DVector::from_vec(vec![-1.0, 1.0]), None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn under_constrained_model_warns() {
        let m = law_of_cosines();
        assert!(!m.warnings().is_empty());
    }

    fn two_link_mixed() -> RobotModel {
        RobotModel::new(
            limits(2),
            vec![0.25, 0.2],
            vec![
                WireRoute {
                    name: "spanning".into(),
                    features: vec![
                        RoutingFeature::Via {
                            link: 0,
                            position: [-0.05, 0.02],
                        },
                        RoutingFeature::Via {
                            link: 2,
                            position: [0.04, -0.01],
                        },
                        RoutingFeature::Wrap {
                            joint: 1,
                            radius: -0.012,
                        },
                    ],
                },
                WireRoute {
                    name: "distal".into(),
                    features: vec![
                        RoutingFeature::Via {
                            link: 1,
                            position: [0.1, 0.02],
                        },
                        RoutingFeature::Via {
                            link: 2,
                            position: [0.05, 0.01],
                        },
                    ],
                },
                WireRoute {
                    name: "wrap".into(),
                    features: vec![RoutingFeature::Wrap {
                        joint: 0,
                        radius: 0.01,
                    }],
                },
            ],
            DMatrix::zeros(3, 2),
            DVector::zeros(3),
            DVector::from_element(3, 400.0),
        )
        .unwrap()
    }

    #[test]
    fn decoupled_entries_are_exact_zero() {
        let m = two_link_mixed();
        let g = m
            .muscle_jacobian(&DVector::from_vec(vec![0.4, -0.3]))
            .unwrap();
        // the distal wire only crosses joint 1
        assert_eq!(g[(1, 0)], 0.0);
        assert_eq!(g[(2, 1)], 0.0);
        assert_eq!(g[(2, 0)], 0.01);
    }

    proptest! {
        #[test]
        fn jacobian_matches_coarse_differences(q0 in -2.5f64..2.5, q1 in -2.5f64..2.5) {
            let m = two_link_mixed();
            let q = DVector::from_vec(vec![q0, q1]);
            let g = m.muscle_jacobian(&q).unwrap();
            let h = 1e-5;
            for i in 0..m.m_wires() {
                for j in 0..2 {
                    let mut qp = q.clone();
                    let mut qm = q.clone();
                    qp[j] += h;
                    qm[j] -= h;
                    let fd = (m.wire_length(i, &qp).unwrap() - m.wire_length(i, &qm).unwrap()) / (2.0 * h);
                    prop_assert!((g[(i, j)] - fd).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn length_is_lipschitz(q0 in -2.5f64..2.5, q1 in -2.5f64..2.5, d0 in -1e-3f64..1e-3, d1 in -1e-3f64..1e-3) {
            let m = two_link_mixed();
            let qa = DVector::from_vec(vec![q0, q1]);
            let qb = DVector::from_vec(vec![q0 + d0, q1 + d1]);
            let ga = m.muscle_jacobian(&qa).unwrap();
            let gb = m.muscle_jacobian(&qb).unwrap();
            let lip = (0..m.m_wires())
                .map(|i| ga.row(i).abs().sum().max(gb.row(i).abs().sum()))
                .fold(0.0, f64::max);
            let dq = d0.abs().max(d1.abs());
            for i in 0..m.m_wires() {
                let dl = (m.wire_length(i, &qa).unwrap() - m.wire_length(i, &qb).unwrap()).abs();
                prop_assert!(dl <= lip * dq * 1.01 + 1e-12);
            }
        }

        #[test]
        fn tension_torque_is_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            t1 in prop::collection::vec(0.0f64..400.0, 3),
            t2 in prop::collection::vec(0.0f64..400.0, 3),
        ) {
            let m = two_link_mixed();
            let g = m.muscle_jacobian(&DVector::from_vec(vec![0.2, 0.1])).unwrap();
            let (t1, t2) = (DVector::from_vec(t1), DVector::from_vec(t2));
            let lin = |t: &DVector<f64>| -g.tr_mul(t);
            let combo = &t1 * a + &t2 * b;
            let expect = lin(&t1) * a + lin(&t2) * b;
            prop_assert!((lin(&combo) - expect).norm() < 1e-9);
            // the public map agrees on the non-negative cone
            prop_assert_eq!(torque_from_tension(&g, &t1, None).unwrap(), lin(&t1));
        }

        #[test]
        fn all_ones_eta_is_bit_identical(t in prop::collection::vec(0.0f64..400.0, 3)) {
            let m = two_link_mixed();
            let g = m.muscle_jacobian(&DVector::from_vec(vec![-0.6, 0.9])).unwrap();
            let t = DVector::from_vec(t);
            let ones = EtaMatrix::lossless(3, 2);
            prop_assert_eq!(
                torque_from_tension(&g, &t, Some(&ones)).unwrap(),
                torque_from_tension(&g, &t, None).unwrap()
            );
        }
    }
}
