//! Simulation and experiment harness for robot swarms that couple through
//! passive knob-and-hole joints.
//!
//! The crate is split along the physical layers of the system:
//!
//! - [`kinematics`]: gear train, differential drive and pose integration
//! - [`coupling`]: knob/hook joint model and the coupling graph
//! - [`statics`]: quasi-static gap-crossing solver
//! - [`control`]: rendezvous, anti-rendezvous, wall alignment, go-to-goal
//! - [`engine`]: fixed-step world simulation and scripted scenarios
//! - [`harness`]: parameter sweeps, aggregation, CSV output and config files

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod coupling;
pub mod engine;
pub mod harness;
pub mod kinematics;
pub mod params;
pub mod rng;
pub mod statics;
pub mod validation;

pub use control::SwarmPositions;
pub use coupling::{CouplingGraph, CouplingTolerances, Face, JointState, KnobGeometry, RobotId};
pub use engine::{ScenarioReport, ScenarioScript, World};
pub use harness::{SweepGrid, TrialRecord};
pub use kinematics::{BodyTwist, DrivetrainParams, GearTrain, Pose};
pub use params::RobotParams;
pub use statics::{BodyDims, CrossingClass, CrossingOutcome, CrossingParams, Environment};
