//! Quasi-static gap crossing.
//!
//! A coupled chain is marched across the gap in small steps. At every step
//! the solver checks the support rule (the assembly only falls once its
//! combined centre of mass has left the start platform and nothing rests on
//! the target platform), works out how far the lead robot sags through the
//! joint backlash, and decides whether the lead can climb onto the far side.
//!
//! Positions along the chain are measured in the direction of travel with the
//! start edge at zero. Platform edges are parallel to the world `y` axis, so a
//! heading of zero is perpendicular to them.

use std::f64::consts::FRAC_PI_3;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaticsError {
    #[error("chain is fully supported; no robot overhangs the edge")]
    NoOverhang,
    #[error("invalid crossing configuration: {0}")]
    InvalidConfig(String),
}

/// Two platforms separated by a gap; the start platform is the higher one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Horizontal clearance between the platform edges (mm).
    pub gap_width: f64,
    /// Start platform top minus target platform top (mm, >= 0).
    pub height_diff: f64,
    /// World `x` of the start platform edge; the target edge sits at
    /// `start_edge_x + gap_width`.
    pub start_edge_x: f64,
}

impl Environment {
    pub fn new(gap_width: f64, height_diff: f64) -> Self {
        Self {
            gap_width,
            height_diff,
            start_edge_x: 0.0,
        }
    }

    pub fn target_edge_x(&self) -> f64 {
        self.start_edge_x + self.gap_width
    }

    pub fn validate(&self) -> Result<(), StaticsError> {
        if !(self.gap_width > 0.0 && self.gap_width.is_finite()) {
            return Err(StaticsError::InvalidConfig(format!(
                "gap width must be positive, got {}",
                self.gap_width
            )));
        }
        if !(self.height_diff >= 0.0 && self.height_diff.is_finite()) {
            return Err(StaticsError::InvalidConfig(format!(
                "height difference must be non-negative, got {}",
                self.height_diff
            )));
        }
        Ok(())
    }
}

/// Footprint of one robot body, excluding knobs (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyDims {
    /// Extent along the direction of travel.
    pub length: f64,
    pub width: f64,
}

impl Default for BodyDims {
    fn default() -> Self {
        Self {
            length: 50.0,
            width: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    OnStart,
    OverGap,
    OnTarget,
}

/// A straight front-to-back chain, lead robot first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfiguration {
    /// Position of the lead robot's front face past the start edge.
    pub lead_front: f64,
    pub body_length: f64,
    pub masses: Vec<f64>,
    /// Some robot rests on the target platform.
    pub target_contact: bool,
}

impl ChainConfiguration {
    pub fn uniform(n: usize, body_length: f64, mass: f64) -> Self {
        Self {
            lead_front: 0.0,
            body_length,
            masses: vec![mass; n],
            target_contact: false,
        }
    }

    pub fn at(mut self, lead_front: f64) -> Self {
        self.lead_front = lead_front;
        self
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn front(&self, k: usize) -> f64 {
        self.lead_front - k as f64 * self.body_length
    }

    pub fn rear(&self, k: usize) -> f64 {
        self.front(k) - self.body_length
    }

    pub fn center(&self, k: usize) -> f64 {
        self.front(k) - 0.5 * self.body_length
    }

    /// Support state of each robot given the along-travel distance to the
    /// target edge. A robot counts as resting on a platform while its centre
    /// of mass is over it.
    pub fn supports(&self, travel_gap: f64) -> Vec<Support> {
        (0..self.len())
            .map(|k| {
                let c = self.center(k);
                if c <= 0.0 {
                    Support::OnStart
                } else if c >= travel_gap {
                    Support::OnTarget
                } else {
                    Support::OverGap
                }
            })
            .collect()
    }

    /// Mass-weighted centre of the planar footprint.
    pub fn com(&self) -> f64 {
        let total: f64 = self.masses.iter().sum();
        let moment: f64 = self
            .masses
            .iter()
            .enumerate()
            .map(|(k, m)| m * self.center(k))
            .sum();
        moment / total
    }

    /// Number of robots whose centre has passed the start edge.
    pub fn overhang_count(&self) -> usize {
        (0..self.len()).filter(|&k| self.center(k) > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComSupport {
    pub supported: bool,
    /// Signed distance from the centre of mass to the nearest support
    /// boundary; negative once the assembly is unsupported.
    pub margin: f64,
}

/// Support rule for the whole assembly.
///
/// `travel_gap` is the along-travel distance from the start edge to the
/// target edge; it bounds the support region once the chain has landed.
pub fn com_supported(chain: &ChainConfiguration, travel_gap: f64) -> ComSupport {
    let com = chain.com();
    if chain.target_contact {
        let margin = travel_gap - com;
        return ComSupport {
            supported: true,
            margin,
        };
    }
    ComSupport {
        supported: com <= 0.0,
        margin: -com,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltProfile {
    /// Pitch of each robot w.r.t. the horizontal, lead first (rad, nose down).
    pub pitches: Vec<f64>,
    /// Lead tip position past the start edge, along travel.
    pub tip_reach: f64,
    pub tip_drop: f64,
    /// Some robot would exceed the pitch cap.
    pub saturated: bool,
}

/// Sag of the overhanging part of a chain.
///
/// Every joint ahead of the last supported robot opens to `joint_tilt`, so the
/// k-th overhanging robot counted from the edge pitches by `k * joint_tilt`.
/// The first overhanging robot pivots on the platform edge while its rear
/// face is still over the platform, and on its rear joint afterwards.
pub fn tilt_profile(
    chain: &ChainConfiguration,
    joint_tilt: f64,
    pitch_cap: f64,
) -> Result<TiltProfile, StaticsError> {
    let m = chain.overhang_count();
    if m == 0 {
        return Err(StaticsError::NoOverhang);
    }
    let b = chain.body_length;
    let first = m - 1;
    let mut pitches = vec![0.0; chain.len()];
    let mut saturated = false;
    for (k, p) in pitches.iter_mut().enumerate().take(m) {
        let raw = (first - k + 1) as f64 * joint_tilt;
        saturated |= raw > pitch_cap;
        *p = raw.min(pitch_cap);
    }

    let rear = chain.rear(first);
    let (mut x, mut z) = if rear < 0.0 {
        let f = chain.front(first);
        (f * pitches[first].cos(), -f * pitches[first].sin())
    } else {
        (rear + b * pitches[first].cos(), -b * pitches[first].sin())
    };
    for k in (0..first).rev() {
        x += b * pitches[k].cos();
        z -= b * pitches[k].sin();
    }
    Ok(TiltProfile {
        pitches,
        tip_reach: x,
        tip_drop: -z,
        saturated,
    })
}

/// Lead tip reach and drop, treating a fully supported chain as flat.
fn tip_state(chain: &ChainConfiguration, joint_tilt: f64, pitch_cap: f64) -> (f64, f64, bool) {
    match tilt_profile(chain, joint_tilt, pitch_cap) {
        Ok(p) => (p.tip_reach, p.tip_drop, p.saturated),
        Err(_) => (chain.lead_front, 0.0, false),
    }
}

/// Pitch of each robot at the moment the second robot reaches the start edge.
///
/// The lead hangs off the second robot's front joint. From there gravity tips
/// the second robot about its wheel axle, which lifts the third robot's front
/// until the joint between them is fully open. Robots further back stay flat.
/// Requires `n >= 2`; with two robots only the lead tilts.
pub fn pre_departure_tilts(n: usize, body: BodyDims, joint_tilt: f64, pitch_cap: f64) -> Vec<f64> {
    assert!(n >= 2, "need at least two robots");
    let chain = ChainConfiguration::uniform(n, body.length, 1.0).at(body.length);
    let mut pitches = tilt_profile(&chain, joint_tilt, pitch_cap)
        .map(|p| p.pitches)
        .unwrap_or_else(|_| vec![0.0; n]);
    if n >= 3 {
        // rear robot pitches up on its rear edge by asin(sin(a) / 2) while the
        // middle pitches down by a; together they use up the joint backlash.
        let rear_lift = |a: f64| (0.5 * a.sin()).asin();
        let (mut lo, mut hi) = (0.0, joint_tilt);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid + rear_lift(mid) > joint_tilt {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let alpha = lo;
        pitches[0] = (pitches[0] + alpha).min(pitch_cap);
        pitches[1] = alpha;
        pitches[2] = rear_lift(alpha);
    }
    pitches
}

/// Along-travel distance across the gap and the extra reach of the leading
/// corner when approaching at `heading` (rad from the edge normal).
pub fn effective_gap(env: &Environment, heading: f64, body: BodyDims) -> (f64, f64) {
    let (s, c) = heading.sin_cos();
    let travel = env.gap_width / c;
    let bonus = 0.5 * body.width * s.abs() + 0.5 * body.length * c - 0.5 * body.length;
    (travel, bonus)
}

/// The lead can mount the target platform.
pub fn landing_feasible(tip_drop: f64, env: &Environment, climb_threshold: f64) -> bool {
    tip_drop - env.height_diff <= climb_threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrossingClass {
    Success,
    StallAtFarPlatform,
    ConnectionBreak,
    Tumble,
    FallInGap,
}

impl CrossingClass {
    pub const ALL: [CrossingClass; 5] = [
        CrossingClass::Success,
        CrossingClass::StallAtFarPlatform,
        CrossingClass::ConnectionBreak,
        CrossingClass::Tumble,
        CrossingClass::FallInGap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CrossingClass::Success => "Success",
            CrossingClass::StallAtFarPlatform => "StallAtFarPlatform",
            CrossingClass::ConnectionBreak => "ConnectionBreak",
            CrossingClass::Tumble => "Tumble",
            CrossingClass::FallInGap => "FallInGap",
        }
    }

    pub fn is_success(&self) -> bool {
        *self == CrossingClass::Success
    }
}

impl std::fmt::Display for CrossingClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CrossingClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown crossing outcome '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingOutcome {
    pub class: CrossingClass,
    /// Largest lead tip drop seen during the march (mm).
    pub max_tip_drop: f64,
    /// Centre-of-mass margin at the deciding step (mm).
    pub com_margin: f64,
    /// Body pitch when the lead met the target platform (rad).
    pub landing_pitch: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchNoise {
    /// Standard deviation of each advance as a fraction of the step.
    pub advance_frac: f64,
    /// Standard deviation of the sideways drift per step (mm).
    pub lateral: f64,
}

impl MarchNoise {
    pub const NONE: MarchNoise = MarchNoise {
        advance_frac: 0.0,
        lateral: 0.0,
    };
}

impl Default for MarchNoise {
    fn default() -> Self {
        Self {
            advance_frac: 0.02,
            lateral: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingParams {
    pub body: BodyDims,
    pub mass: f64,
    /// Backlash tilt of each joint under gravity (rad).
    pub joint_tilt: f64,
    pub march_step: f64,
    pub pitch_cap: f64,
    pub climb_threshold: f64,
    pub break_drop_threshold: f64,
    pub tumble_pitch_threshold: f64,
    pub noise: MarchNoise,
}

impl Default for CrossingParams {
    fn default() -> Self {
        Self {
            body: BodyDims::default(),
            mass: 62.0,
            joint_tilt: crate::coupling::effective_joint_tilt(
                &crate::coupling::KnobGeometry::default(),
            ),
            march_step: 1.0,
            pitch_cap: 0.6,
            climb_threshold: 5.0,
            break_drop_threshold: 15.0,
            tumble_pitch_threshold: 0.45,
            noise: MarchNoise::default(),
        }
    }
}

impl CrossingParams {
    pub fn without_noise(self) -> Self {
        Self {
            noise: MarchNoise::NONE,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), StaticsError> {
        let bad = |what: &str, v: f64| Err(StaticsError::InvalidConfig(format!("{what}: {v}")));
        if !(self.march_step > 0.0 && self.march_step.is_finite()) {
            return bad("march step must be positive", self.march_step);
        }
        if !(self.body.length > 0.0 && self.body.width > 0.0) {
            return bad(
                "body dimensions must be positive",
                self.body.length.min(self.body.width),
            );
        }
        if !(self.mass > 0.0) {
            return bad("mass must be positive", self.mass);
        }
        if !(self.joint_tilt >= 0.0) {
            return bad("joint tilt must be non-negative", self.joint_tilt);
        }
        if !(self.pitch_cap > 0.0) {
            return bad("pitch cap must be positive", self.pitch_cap);
        }
        if !(self.noise.advance_frac >= 0.0 && self.noise.lateral >= 0.0) {
            return bad(
                "noise must be non-negative",
                self.noise.advance_frac.min(self.noise.lateral),
            );
        }
        Ok(())
    }
}

/// Marches an `n`-robot chain from the start edge across the gap and
/// classifies the attempt.
///
/// The chain starts with the lead front face on the start edge. Each step
/// advances it by `march_step` (perturbed by `noise`, drawn from a ChaCha8
/// stream seeded with `seed`). A single robot has no joints, so it only lands
/// when its front face reaches the far edge; a corner-only touch followed by
/// the centre of mass leaving the start edge tips it over.
pub fn classify_crossing(
    n: usize,
    env: &Environment,
    heading: f64,
    params: &CrossingParams,
    seed: u64,
) -> Result<CrossingOutcome, StaticsError> {
    if n == 0 {
        return Err(StaticsError::InvalidConfig(
            "need at least one robot".into(),
        ));
    }
    params.validate()?;
    env.validate()?;
    if !(heading.abs() < FRAC_PI_3) {
        return Err(StaticsError::InvalidConfig(format!(
            "heading must be within (-pi/3, pi/3), got {heading}"
        )));
    }

    let b = params.body.length;
    let (travel, bonus) = effective_gap(env, heading, params.body);
    let corner_reach = travel - bonus;
    let (sin_h, cos_h) = heading.abs().sin_cos();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chain = ChainConfiguration::uniform(n, b, params.mass);
    let mut progress = 0.0;
    let mut max_tip_drop: f64 = 0.0;
    // a lone robot has no joints to sag through
    let joint_tilt = if n == 1 { 0.0 } else { params.joint_tilt };
    // a lone robot stays flat, so its centre of mass leaves the edge at a
    // known lead position and event order can be settled exactly
    let lone_com_limit = 0.5 * b;

    // generous bound: the lead has to pass the centre of mass limit long before this
    let max_steps = (((n as f64 + 2.0) * b + travel) / params.march_step * 4.0) as usize + 1000;
    for steps in 0..max_steps {
        chain.lead_front = progress / cos_h;
        let (tip_reach, tip_drop, saturated) = tip_state(&chain, joint_tilt, params.pitch_cap);
        max_tip_drop = max_tip_drop.max(tip_drop);
        let com = com_supported(&chain, travel);
        let outcome = |class, landing_pitch| CrossingOutcome {
            class,
            max_tip_drop,
            com_margin: com.margin,
            landing_pitch,
            steps,
        };

        let landed = if n == 1 {
            chain.lead_front >= travel && travel <= lone_com_limit
        } else {
            // the centre of mass leaving the edge within the same step
            // counts as happening first
            tip_reach >= corner_reach && com.supported
        };
        if landed {
            chain.target_contact = true;
            let lead_pitch = tilt_profile(&chain, joint_tilt, params.pitch_cap)
                .map(|p| p.pitches[0])
                .unwrap_or(0.0);
            if !landing_feasible(tip_drop, env, params.climb_threshold) {
                return Ok(outcome(CrossingClass::StallAtFarPlatform, lead_pitch));
            }
            if tip_drop > params.break_drop_threshold {
                return Ok(outcome(CrossingClass::ConnectionBreak, lead_pitch));
            }
            if n == 1 && lead_pitch > params.tumble_pitch_threshold {
                return Ok(outcome(CrossingClass::Tumble, lead_pitch));
            }
            return Ok(outcome(CrossingClass::Success, lead_pitch));
        }

        if !com.supported {
            if n == 1 && corner_reach <= lone_com_limit {
                // resting on one corner with the centre of mass past the edge:
                // nothing limits the roll
                let pitch = params.pitch_cap;
                let class = if pitch > params.tumble_pitch_threshold {
                    CrossingClass::Tumble
                } else {
                    CrossingClass::FallInGap
                };
                return Ok(outcome(class, pitch));
            }
            return Ok(outcome(CrossingClass::FallInGap, 0.0));
        }
        if saturated {
            return Ok(outcome(CrossingClass::FallInGap, params.pitch_cap));
        }
        debug_assert!(com.supported, "advancing an unsupported chain");

        let e_adv: f64 = StandardNormal.sample(&mut rng);
        let e_lat: f64 = StandardNormal.sample(&mut rng);
        let advance = params.march_step * (1.0 + params.noise.advance_frac * e_adv);
        let drift = params.noise.lateral * e_lat;
        progress += advance * cos_h - drift * sin_h;
    }
    Err(StaticsError::InvalidConfig(
        "march did not terminate; step too small for the configuration".into(),
    ))
}
