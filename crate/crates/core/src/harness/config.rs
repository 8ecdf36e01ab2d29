//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Lists are comma separated; a numeric list may also be written as an
//! inclusive range `start:stop:step`. Unknown keys are rejected so typos
//! do not silently fall back to defaults.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::{Marginal, SweepGrid};
use crate::engine::{EngineParams, ScenarioLayout};
use crate::params::RobotParams;
use crate::statics::{CrossingParams, Environment};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for '{key}': {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    /// Worker threads for sweeps; 0 means one per core.
    pub jobs: usize,
    pub robot: RobotParams,
    pub engine: EngineParams,
    pub grid: SweepGrid,
    pub success_threshold: f64,
    pub marginal: Marginal,
    pub hook_widths: Vec<f64>,
    pub hook_robots: usize,
    pub scenario: ScenarioLayout,
    pub scenario_max_time: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 0,
            robot: RobotParams::default(),
            engine: EngineParams::default(),
            grid: SweepGrid::default(),
            success_threshold: 0.5,
            marginal: Marginal::BestHeading,
            hook_widths: vec![1.0, 1.5, 2.0],
            hook_robots: 3,
            scenario: ScenarioLayout::default(),
            scenario_max_time: 300.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

fn parse_list<T: FromStr + Copy + Into<f64>>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: Display,
{
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() == 1 {
        return parse_list(key, value);
    }
    let bad = |reason: &str| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    };
    if parts.len() != 3 {
        return Err(bad("ranges are written start:stop:step"));
    }
    let (start, stop, step): (f64, f64, f64) = (
        parse(key, parts[0])?,
        parse(key, parts[1])?,
        parse(key, parts[2])?,
    );
    if !(step > 0.0) || stop < start {
        return Err(bad("range needs a positive step and stop >= start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Applies one setting; used for both file lines and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let r = &mut self.robot;
        let e = &mut self.engine;
        let c = &mut e.crossing;
        let s = &mut self.scenario;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "tick_s" => e.tick = parse(key, value)?,

            "body_length_mm" => r.body.length = parse(key, value)?,
            "body_width_mm" => r.body.width = parse(key, value)?,
            "body_height_mm" => r.body_height = parse(key, value)?,
            "mass_g" => r.mass = parse(key, value)?,
            "module_coeff" => r.gears.module_coeff = parse(key, value)?,
            "z1" => r.gears.z1 = parse(key, value)?,
            "z2" => r.gears.z2 = parse(key, value)?,
            "z3" => r.gears.z3 = parse(key, value)?,
            "z4" => r.gears.z4 = parse(key, value)?,
            "wheel_base_mm" => r.drivetrain.wheel_base = parse(key, value)?,
            "wheel_radius_mm" => r.drivetrain.wheel_radius = parse(key, value)?,
            "max_motor_speed_rad_s" => {
                r.drivetrain.max_motor_speed = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }

            "knob_radius_mm" => r.knob.knob_radius = parse(key, value)?,
            "knob_depth_mm" => r.knob.knob_depth = parse(key, value)?,
            "hook_width_mm" => r.knob.hook_width = parse(key, value)?,
            "knob_height_mm" => r.knob.knob_height = parse(key, value)?,
            "hole_height_mm" => r.knob.hole_height = parse(key, value)?,
            "wall_thickness_mm" => r.knob.wall_thickness = parse(key, value)?,
            "friction_tilt_rad" => r.knob.friction_tilt = parse(key, value)?,
            "slip_threshold_mm" => r.knob.slip_threshold = parse(key, value)?,

            "couple_gap_tol_mm" => e.tolerances.gap = parse(key, value)?,
            "couple_lateral_tol_mm" => e.tolerances.lateral = parse(key, value)?,
            "couple_heading_tol_rad" => e.tolerances.heading = parse(key, value)?,

            "march_step_mm" => c.march_step = parse(key, value)?,
            "pitch_cap_rad" => c.pitch_cap = parse(key, value)?,
            "climb_threshold_mm" => c.climb_threshold = parse(key, value)?,
            "break_drop_threshold_mm" => c.break_drop_threshold = parse(key, value)?,
            "tumble_pitch_threshold_rad" => c.tumble_pitch_threshold = parse(key, value)?,
            "advance_noise_frac" => c.noise.advance_frac = parse(key, value)?,
            "lateral_noise_mm" => c.noise.lateral = parse(key, value)?,

            "twist_noise" => e.twist_noise = parse(key, value)?,
            "lateral_drift_mm" => e.lateral_drift = parse(key, value)?,
            "consensus_speed_cap_mm_s" => e.consensus_speed_cap = parse(key, value)?,
            "cruise_speed_mm_s" => e.cruise_speed = parse(key, value)?,
            "k_heading" => e.k_heading = parse(key, value)?,
            "k_lane" => e.k_lane = parse(key, value)?,
            "decouple_distance_mm" => e.decouple_distance = parse(key, value)?,
            "landing_clearance_mm" => e.landing_clearance = parse(key, value)?,
            "goal_k_v" => e.goal.k_v = parse(key, value)?,
            "goal_v_max_mm_s" => e.goal.v_max = parse(key, value)?,
            "goal_k_omega" => e.goal.k_omega = parse(key, value)?,
            "goal_tolerance_mm" => e.goal.goal_tolerance = parse(key, value)?,
            "wall_push_speed_mm_s" => e.wall.push_speed = parse(key, value)?,
            "wall_hold_speed_mm_s" => e.wall.hold_speed = parse(key, value)?,
            "wall_k_omega" => e.wall.k_omega = parse(key, value)?,

            "robot_counts" => self.grid.robot_counts = parse_usize_list(key, value)?,
            "gaps_mm" => self.grid.gaps_mm = parse_f64_list(key, value)?,
            "headings_deg" => self.grid.headings_deg = parse_f64_list(key, value)?,
            "height_diffs_mm" => self.grid.height_diffs_mm = parse_f64_list(key, value)?,
            "reps" => self.grid.reps = parse(key, value)?,
            "success_threshold" => self.success_threshold = parse(key, value)?,
            "pooled" => {
                self.marginal = if parse_bool(key, value)? {
                    Marginal::Pooled
                } else {
                    Marginal::BestHeading
                }
            }
            "hook_widths_mm" => self.hook_widths = parse_f64_list(key, value)?,
            "hook_robots" => self.hook_robots = parse(key, value)?,

            "scenario_robots" => s.n_robots = parse(key, value)?,
            "scenario_gap_mm" => s.environment.gap_width = parse(key, value)?,
            "scenario_height_mm" => s.environment.height_diff = parse(key, value)?,
            "scenario_lead_start_mm" => s.lead_start_x = parse(key, value)?,
            "scenario_wall_clearance_mm" => s.wall_clearance = parse(key, value)?,
            "scenario_position_jitter_mm" => s.position_jitter = parse(key, value)?,
            "scenario_heading_jitter_rad" => s.heading_jitter = parse(key, value)?,
            "scenario_goal_offset_mm" => s.goal_offset = parse(key, value)?,
            "scenario_goal_pitch_mm" => s.goal_pitch = parse(key, value)?,
            "scenario_goal_spread_mm" => s.goal_spread = parse(key, value)?,
            "scenario_max_time_s" => self.scenario_max_time = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn Display| ConfigError::Invalid(e.to_string());
        self.robot.gears.validate().map_err(|e| invalid(&e))?;
        self.robot.drivetrain.validate().map_err(|e| invalid(&e))?;
        self.robot.knob.validate().map_err(|e| invalid(&e))?;
        self.crossing_params().validate().map_err(|e| invalid(&e))?;
        self.grid.validate().map_err(|e| invalid(&e))?;
        Environment::validate(&self.scenario.environment).map_err(|e| invalid(&e))?;
        if !(self.engine.tick > 0.0) {
            return Err(ConfigError::Invalid("tick_s must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.success_threshold) {
            return Err(ConfigError::Invalid(
                "success_threshold must be in [0, 1)".into(),
            ));
        }
        if self.scenario.n_robots == 0 {
            return Err(ConfigError::Invalid(
                "scenario_robots must be positive".into(),
            ));
        }
        if self.hook_robots < 2 {
            return Err(ConfigError::Invalid(
                "hook_robots must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Statics parameters with body, mass and joint tilt taken from the robot.
    pub fn crossing_params(&self) -> CrossingParams {
        CrossingParams {
            body: self.robot.body,
            mass: self.robot.mass,
            joint_tilt: self.robot.joint_tilt(),
            ..self.engine.crossing
        }
    }

    /// Engine parameters with the crossing block synced to the robot.
    pub fn engine_params(&self) -> EngineParams {
        EngineParams {
            crossing: self.crossing_params(),
            ..self.engine
        }
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            base_seed: self.seed,
            ..self.grid.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(Config::parse("# nothing\n\n").unwrap(), Config::default());
    }

    #[test]
    fn parses_values_lists_and_ranges() {
        let cfg = Config::parse(
            "seed = 42\n robot_counts = 1, 3 # inline comment\ngaps_mm = 10:50:10\nheadings_deg=0,20\npooled = yes\nhook_width_mm = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.grid.robot_counts, vec![1, 3]);
        assert_eq!(cfg.grid.gaps_mm, vec![10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(cfg.grid.headings_deg, vec![0.0, 20.0]);
        assert_eq!(cfg.marginal, Marginal::Pooled);
        assert_eq!(cfg.robot.knob.hook_width, 1.0);
        assert_eq!(cfg.sweep_grid().base_seed, 42);
    }

    #[test]
    fn unknown_key_is_an_error() {
        assert!(matches!(Config::parse("gap = 3"), Err(ConfigError::UnknownKey(k)) if k == "gap"));
    }

    #[test]
    fn missing_equals_is_a_syntax_error() {
        assert!(matches!(
            Config::parse("seed 3"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn bad_number_is_reported() {
        assert!(matches!(
            Config::parse("reps = many"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn invalid_grid_is_rejected() {
        assert!(matches!(
            Config::parse("reps = 0"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn crossing_params_follow_robot() {
        let cfg = Config::parse("hook_width_mm = 2.0\nmass_g = 80").unwrap();
        let p = cfg.crossing_params();
        assert_eq!(p.mass, 80.0);
        assert_eq!(p.joint_tilt, cfg.robot.knob.friction_tilt);
    }
}
