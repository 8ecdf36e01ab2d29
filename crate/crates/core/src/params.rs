//! Physical description of one robot.

use serde::{Deserialize, Serialize};

use crate::coupling::{effective_joint_tilt, KnobGeometry};
use crate::kinematics::{DrivetrainParams, GearTrain};
use crate::statics::BodyDims;

/// Body, drivetrain and coupling geometry of a single robot (mm, g).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub body: BodyDims,
    pub body_height: f64,
    pub mass: f64,
    pub gears: GearTrain,
    pub drivetrain: DrivetrainParams,
    pub knob: KnobGeometry,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            body: BodyDims::default(),
            body_height: 35.0,
            mass: 62.0,
            gears: GearTrain::default(),
            drivetrain: DrivetrainParams::default(),
            knob: KnobGeometry::default(),
        }
    }
}

impl RobotParams {
    pub fn body_length(&self) -> f64 {
        self.body.length
    }

    pub fn joint_tilt(&self) -> f64 {
        effective_joint_tilt(&self.knob)
    }
}
