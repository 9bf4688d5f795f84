//! Virtual wire testing machine.
//!
//! Models passive-pulley tension loss, distributes tensions over a coupled
//! wire-driven arm with a box-constrained QP (optionally compensating the
//! loss), simulates viscoelastic wires on a linear loading rig, and
//! estimates frequency responses from chirp runs.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod config;
pub mod error;
pub mod pulley;
pub mod qp;
pub mod routing;
pub mod testbench;
pub mod wire;

pub use analysis::{estimate_bode, rmse, BodeCurve, BodeOptions, ExperimentReport, TimeSeries};
pub use config::RobotConfig;
pub use error::{Error, Result};
pub use pulley::{
    build_eta_matrix, ingest_efficiency_trials, per_pulley_efficiency, EfficiencyTable, EtaMatrix,
    PulleySpec, WireSpec,
};
pub use qp::{
    solve_box_qp, solve_tension, solve_tension_compensated, BoxQpSolver, QpProblem,
    TensionSolution, TensionWeights,
};
pub use routing::{joint_torque_from_force, torque_from_tension, JacobianPair, RobotModel};
pub use testbench::{
    chirp, run_efficiency_rig, run_force_control, run_linear_load, ChirpSpec, RigConfig, RigMode,
    SimTrace,
};
pub use wire::{creep_elongation, CreepParams, WireModelKind, WireState};
