//! Gear-train and differential-drive relations, plus exact unicycle stepping.
//!
//! Lengths are millimetres, angles radians, time seconds. The robot body frame
//! has `x` pointing forward and `y` to the left.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Yaw rates below this magnitude are integrated as straight-line motion.
pub const OMEGA_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("module coefficient must be positive, got {0}")]
    BadModule(f64),
    #[error("tooth count z{index} must be at least 1")]
    BadToothCount { index: usize },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Double-reduction gear set driving one side of the robot.
///
/// `g1` sits on the motor shaft, `g2`/`g3` share the centre rod and `g4` is the
/// wheel itself. Every gear shares the same module coefficient, so the
/// reference diameter of gear `i` is `module_coeff * z_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearTrain {
    pub module_coeff: f64,
    pub z1: u32,
    pub z2: u32,
    pub z3: u32,
    pub z4: u32,
}

impl Default for GearTrain {
    fn default() -> Self {
        Self {
            module_coeff: 0.5,
            z1: 8,
            z2: 26,
            z3: 8,
            z4: 68,
        }
    }
}

impl GearTrain {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.module_coeff > 0.0 && self.module_coeff.is_finite()) {
            return Err(KinematicsError::BadModule(self.module_coeff));
        }
        for (index, z) in [self.z1, self.z2, self.z3, self.z4].into_iter().enumerate() {
            if z == 0 {
                return Err(KinematicsError::BadToothCount { index: index + 1 });
            }
        }
        Ok(())
    }

    /// Reference diameter of gear `index` (1-based), in mm.
    pub fn reference_diameter(&self, index: usize) -> f64 {
        let z = match index {
            1 => self.z1,
            2 => self.z2,
            3 => self.z3,
            4 => self.z4,
            _ => panic!("gear index {index} out of range 1..=4"),
        };
        self.module_coeff * f64::from(z)
    }

    /// Motor revolutions per wheel revolution.
    pub fn total_reduction(&self) -> f64 {
        (f64::from(self.z2) / f64::from(self.z1)) * (f64::from(self.z4) / f64::from(self.z3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivetrainParams {
    /// Distance between the left and right wheels.
    pub wheel_base: f64,
    pub wheel_radius: f64,
    /// Motor speed cap in rad/s; `None` leaves commands unsaturated.
    pub max_motor_speed: Option<f64>,
}

impl Default for DrivetrainParams {
    fn default() -> Self {
        Self {
            wheel_base: 40.0,
            wheel_radius: 17.0,
            max_motor_speed: None,
        }
    }
}

impl DrivetrainParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.wheel_base > 0.0) {
            return Err(KinematicsError::NonPositive {
                name: "wheel_base",
                value: self.wheel_base,
            });
        }
        if !(self.wheel_radius > 0.0) {
            return Err(KinematicsError::NonPositive {
                name: "wheel_radius",
                value: self.wheel_radius,
            });
        }
        if let Some(cap) = self.max_motor_speed {
            if !(cap > 0.0) {
                return Err(KinematicsError::NonPositive {
                    name: "max_motor_speed",
                    value: cap,
                });
            }
        }
        Ok(())
    }
}

/// Planar pose; `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn heading(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// Expresses a world point in this pose's body frame.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (c, s) = self.heading();
        let (dx, dy) = (x - self.x, y - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }
}

/// Commanded body velocity: forward speed (mm/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyTwist {
    pub v_x: f64,
    pub omega: f64,
}

impl BodyTwist {
    pub const ZERO: BodyTwist = BodyTwist {
        v_x: 0.0,
        omega: 0.0,
    };

    pub fn new(v_x: f64, omega: f64) -> Self {
        Self { v_x, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.v_x.is_finite() && self.omega.is_finite()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Rim speed of the wheel gear for a motor turning at `omega1`.
///
/// `v1 = v2`, `omega2 = omega3` and `v3 = v4` give
/// `v4 = omega1 * M * z1 * z3 / (2 * z2)`.
pub fn wheel_speed_from_motor(omega1: f64, g: &GearTrain) -> f64 {
    omega1 * g.module_coeff * f64::from(g.z1) * f64::from(g.z3) / (2.0 * f64::from(g.z2))
}

/// Right and left wheel angular rates for a body twist.
pub fn wheel_rates_from_twist(t: BodyTwist, d: &DrivetrainParams) -> (f64, f64) {
    let turn = t.omega * d.wheel_base;
    let right = (2.0 * t.v_x + turn) / (2.0 * d.wheel_radius);
    let left = (2.0 * t.v_x - turn) / (2.0 * d.wheel_radius);
    (right, left)
}

/// Motor speeds from the closed form that carries an extra `1/R` factor.
///
/// Kept for comparison with hardware tables built from that form; multiply
/// by the wheel radius to obtain motor rad/s (see
/// [`motor_speeds_from_twist_consistent`]).
pub fn motor_speeds_from_twist_literal(
    t: BodyTwist,
    g: &GearTrain,
    d: &DrivetrainParams,
) -> (f64, f64) {
    let turn = t.omega * d.wheel_base;
    let denom = g.module_coeff * f64::from(g.z1) * f64::from(g.z3) * d.wheel_radius;
    let z2 = f64::from(g.z2);
    (
        z2 * (2.0 * t.v_x + turn) / denom,
        z2 * (2.0 * t.v_x - turn) / denom,
    )
}

/// Motor speeds in rad/s: wheel rim speed pushed back through the gear set.
pub fn motor_speeds_from_twist_consistent(
    t: BodyTwist,
    g: &GearTrain,
    d: &DrivetrainParams,
) -> (f64, f64) {
    let turn = t.omega * d.wheel_base;
    let denom = g.module_coeff * f64::from(g.z1) * f64::from(g.z3);
    let z2 = f64::from(g.z2);
    (
        z2 * (2.0 * t.v_x + turn) / denom,
        z2 * (2.0 * t.v_x - turn) / denom,
    )
}

/// Scales a twist down so the faster motor sits exactly at the cap.
///
/// Both components are scaled by the same factor, which keeps the turn
/// curvature. Returns the twist untouched when no cap is configured.
pub fn saturate_twist(t: BodyTwist, g: &GearTrain, d: &DrivetrainParams) -> BodyTwist {
    let Some(cap) = d.max_motor_speed else {
        return t;
    };
    let (r, l) = motor_speeds_from_twist_consistent(t, g, d);
    let peak = r.abs().max(l.abs());
    if peak <= cap {
        return t;
    }
    let k = cap / peak;
    BodyTwist::new(t.v_x * k, t.omega * k)
}

/// Integrates a constant twist exactly over `dt`.
///
/// Follows a circular arc of radius `v_x / omega`, or a straight line when the
/// yaw rate is below [`OMEGA_EPSILON`].
pub fn integrate_unicycle(p: Pose, t: BodyTwist, dt: f64) -> Pose {
    debug_assert!(dt > 0.0, "dt must be positive");
    let dtheta = t.omega * dt;
    if t.omega.abs() < OMEGA_EPSILON {
        let d = t.v_x * dt;
        return Pose::new(
            p.x + d * p.theta.cos(),
            p.y + d * p.theta.sin(),
            p.theta + dtheta,
        );
    }
    let radius = t.v_x / t.omega;
    let theta1 = p.theta + dtheta;
    Pose::new(
        p.x + radius * (theta1.sin() - p.theta.sin()),
        p.y - radius * (theta1.cos() - p.theta.cos()),
        theta1,
    )
}
