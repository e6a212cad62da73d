//! Simulation and design of measurement-assisted linear-optical gates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fock;
pub mod gates;
pub mod io;
pub mod metrics;
pub mod optimize;
pub mod reck;
pub mod run;

pub use error::{Error, Result};
pub use fock::{AncillaSpec, ModeMatrix, OccupationVector, StateVector};
pub use gates::{DualRailEncoding, KnillAnsatz};
pub use metrics::{GateMap, TargetGate};
pub use optimize::{AnsatzKind, CurvePoint, FitResult, OptimizerConfig, Problem};
pub use reck::{Decomposition, GaugeFrame, RotationElement};
