//! Fixed-step world simulation.
//!
//! Each tick: controllers produce body twists, actuation noise scales them,
//! coupled groups move as rigid bodies, walls and robot-robot contacts are
//! resolved along the rendezvous axis, new couplings are detected, and any
//! group that reaches the start edge of a gap is handed to the quasi-static
//! crossing solver.

mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{
    anti_rendezvous_velocities, go_to_goal, rendezvous_velocities, wall_align, GoalGains,
    SwarmPositions, Wall, WallAlignParams,
};
use crate::coupling::{CouplingGraph, CouplingTolerances, Face, RobotId};
use crate::kinematics::{integrate_unicycle, normalize_angle, BodyTwist, Pose};
use crate::params::RobotParams;
use crate::rng::stream_rng;
use crate::statics::{classify_crossing, CrossingOutcome, CrossingParams, Environment};

pub use scenario::{
    couple_cross_decouple, run_scenario, GoalSet, Phase, PhaseReport, ScenarioLayout,
    ScenarioReport, ScenarioScript, TrajectoryRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("scenario timed out after {time:.2} s in phase {phase}")]
    Timeout { phase: String, time: f64 },
    #[error("scenario script has no phases")]
    EmptyScript,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    /// Simulation tick (s).
    pub tick: f64,
    /// Std-dev of the multiplicative noise on each twist component.
    pub twist_noise: f64,
    /// Sideways drift std-dev per `drift_length` mm travelled.
    pub lateral_drift: f64,
    pub drift_length: f64,
    pub tolerances: CouplingTolerances,
    pub goal: GoalGains,
    pub wall: WallAlignParams,
    /// Speed clamp for the consensus controllers (mm/s).
    pub consensus_speed_cap: f64,
    /// Forward speed while driving over the gap (mm/s).
    pub cruise_speed: f64,
    /// Heading-hold gain (1/s).
    pub k_heading: f64,
    /// Lane-keeping gain (rad per mm of lateral offset).
    pub k_lane: f64,
    /// Anti-rendezvous stops once every neighbour gap reaches this (mm).
    pub decouple_distance: f64,
    /// How far past the target edge the trailing robot must get (mm).
    pub landing_clearance: f64,
    pub crossing: CrossingParams,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            tick: 0.02,
            twist_noise: 0.02,
            lateral_drift: 0.2,
            drift_length: 1.0,
            tolerances: CouplingTolerances::default(),
            goal: GoalGains::default(),
            wall: WallAlignParams::default(),
            consensus_speed_cap: 40.0,
            cruise_speed: 30.0,
            k_heading: 2.0,
            k_lane: 0.05,
            decouple_distance: 80.0,
            landing_clearance: 40.0,
            crossing: CrossingParams::default(),
        }
    }
}

impl EngineParams {
    pub fn without_noise(self) -> Self {
        Self {
            twist_noise: 0.0,
            lateral_drift: 0.0,
            crossing: self.crossing.without_noise(),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub params: RobotParams,
    /// Dropped into the gap or stuck on a failed crossing; no longer driven.
    pub disabled: bool,
}

/// What the robots are currently told to do.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlMode {
    Idle,
    /// 1D rendezvous along world `x`; `anchor` pushes into `wall` instead.
    Rendezvous {
        anchor: Option<(RobotId, usize)>,
        lane_y: f64,
    },
    /// Drive along `+x` across the gap.
    Cross {
        lane_y: f64,
    },
    AntiRendezvous,
    GoToGoals(Vec<(f64, f64)>),
}

impl ControlMode {
    pub fn name(&self) -> &'static str {
        match self {
            ControlMode::Idle => "Idle",
            ControlMode::Rendezvous { .. } => "Rendezvous",
            ControlMode::Cross { .. } => "CrossGap",
            ControlMode::AntiRendezvous => "AntiRendezvous",
            ControlMode::GoToGoals(_) => "GoToGoals",
        }
    }

    fn allows_coupling(&self) -> bool {
        matches!(self, ControlMode::Rendezvous { .. })
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub robots: Vec<RobotState>,
    pub graph: CouplingGraph,
    pub environment: Option<Environment>,
    pub walls: Vec<Wall>,
    pub params: EngineParams,
    pub mode: ControlMode,
    /// Outcome of the last gap crossing handed to the statics solver.
    pub crossing: Option<CrossingOutcome>,
    seed: u64,
    time: f64,
    ticks: u64,
    robot_rngs: Vec<ChaCha8Rng>,
    crossing_rng: ChaCha8Rng,
    /// Robots that belong to a chain whose crossing succeeded.
    crossed: BTreeSet<RobotId>,
}

impl World {
    pub fn new(seed: u64, params: EngineParams) -> Self {
        Self {
            robots: Vec::new(),
            graph: CouplingGraph::default(),
            environment: None,
            walls: Vec::new(),
            params,
            mode: ControlMode::Idle,
            crossing: None,
            seed,
            time: 0.0,
            ticks: 0,
            robot_rngs: Vec::new(),
            crossing_rng: stream_rng(seed, 0),
            crossed: BTreeSet::new(),
        }
    }

    pub fn with_environment(mut self, env: Environment) -> Self {
        self.environment = Some(env);
        self
    }

    pub fn with_wall(mut self, wall: Wall) -> Self {
        self.walls.push(wall);
        self
    }

    pub fn add_robot(&mut self, pose: Pose, params: RobotParams) -> RobotId {
        let id = self.robots.len();
        self.robots.push(RobotState {
            pose,
            params,
            disabled: false,
        });
        self.graph.add_node(id);
        self.robot_rngs.push(stream_rng(self.seed, id as u64 + 1));
        id
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.robots.iter().map(|r| r.pose).collect()
    }

    fn half_length(&self, id: RobotId) -> f64 {
        0.5 * self.robots[id].params.body.length
    }

    /// Robot rests on a platform (not over the gap and not disabled).
    pub fn is_supported(&self, id: RobotId) -> bool {
        let r = &self.robots[id];
        if r.disabled {
            return false;
        }
        match &self.environment {
            Some(env) => !over_gap(env, r.pose.x),
            None => true,
        }
    }

    /// Front/back coupling flags of a robot, e.g. `"FB"`, `"F-"`, `"--"`.
    pub fn coupled_flags(&self, id: RobotId) -> String {
        let f = if self.graph.face_free(id, Face::Front) {
            '-'
        } else {
            'F'
        };
        let b = if self.graph.face_free(id, Face::Back) {
            '-'
        } else {
            'B'
        };
        format!("{f}{b}")
    }

    /// Advances the world by `dt` seconds.
    pub fn step(&mut self, dt: f64) {
        debug_assert!(dt > 0.0);
        self.ticks += 1;
        self.time += dt;
        if self.robots.is_empty() {
            return;
        }

        let commands = self.commands();
        let mut noisy = Vec::with_capacity(commands.len());
        for (id, cmd) in commands.into_iter().enumerate() {
            let rng = &mut self.robot_rngs[id];
            let e_v: f64 = StandardNormal.sample(rng);
            let e_w: f64 = StandardNormal.sample(rng);
            let sigma = self.params.twist_noise;
            noisy.push(BodyTwist::new(
                cmd.v_x * (1.0 + sigma * e_v),
                cmd.omega * (1.0 + sigma * e_w),
            ));
        }

        let groups = self.graph.components();
        for members in &groups {
            let members: Vec<RobotId> = members
                .iter()
                .copied()
                .filter(|&m| !self.robots[m].disabled)
                .collect();
            if members.is_empty() {
                continue;
            }
            let k = members.len() as f64;
            let twist = BodyTwist::new(
                members.iter().map(|&m| noisy[m].v_x).sum::<f64>() / k,
                members.iter().map(|&m| noisy[m].omega).sum::<f64>() / k,
            );
            self.move_group(&members, twist, dt);
        }

        self.resolve_walls();
        self.resolve_robot_contacts();
        if self.mode.allows_coupling() {
            self.detect_couplings();
            // snapping can nudge a group into a third robot
            self.resolve_robot_contacts();
        }
        self.check_gap();
    }

    fn commands(&self) -> Vec<BodyTwist> {
        let n = self.robots.len();
        let p = &self.params;
        let mut out = vec![BodyTwist::ZERO; n];
        let heading_hold = |pose: &Pose, v: f64, lane_y: Option<f64>| {
            let target = match lane_y {
                Some(y) => -(p.k_lane * (pose.y - y)).atan() * if v < 0.0 { -1.0 } else { 1.0 },
                None => 0.0,
            };
            p.k_heading * normalize_angle(target - pose.theta)
        };
        match &self.mode {
            ControlMode::Idle => {}
            ControlMode::Rendezvous { anchor, lane_y } => {
                let xs: Vec<f64> = self.robots.iter().map(|r| r.pose.x).collect();
                if let Ok(u) = SwarmPositions::new(xs).and_then(|s| rendezvous_velocities(&s)) {
                    for (id, ui) in u.into_iter().enumerate() {
                        let pose = &self.robots[id].pose;
                        let v = ui.clamp(-p.consensus_speed_cap, p.consensus_speed_cap);
                        out[id] = BodyTwist::new(v, heading_hold(pose, v, Some(*lane_y)));
                    }
                }
                if let Some((a, w)) = anchor {
                    let wall = &self.walls[*w];
                    let pose = &self.robots[*a].pose;
                    let contact = wall.distance(pose.x, pose.y) <= self.half_length(*a) + 0.5;
                    out[*a] = wall_align(pose, wall, &p.wall, contact);
                }
            }
            ControlMode::Cross { lane_y } => {
                for (id, r) in self.robots.iter().enumerate() {
                    let v = p.cruise_speed;
                    out[id] = BodyTwist::new(v, heading_hold(&r.pose, v, Some(*lane_y)));
                }
            }
            ControlMode::AntiRendezvous => {
                let xs: Vec<f64> = self.robots.iter().map(|r| r.pose.x).collect();
                if let Ok(a) = SwarmPositions::new(xs).and_then(|s| anti_rendezvous_velocities(&s))
                {
                    for (id, ui) in a.velocities.into_iter().enumerate() {
                        let v = ui.clamp(-p.consensus_speed_cap, p.consensus_speed_cap);
                        out[id] = BodyTwist::new(v, heading_hold(&self.robots[id].pose, v, None));
                    }
                }
            }
            ControlMode::GoToGoals(goals) => {
                for (id, r) in self.robots.iter().enumerate() {
                    if let Some(g) = goals.get(id) {
                        out[id] = go_to_goal(&r.pose, *g, &p.goal);
                    }
                }
            }
        }
        for (id, r) in self.robots.iter().enumerate() {
            if r.disabled {
                out[id] = BodyTwist::ZERO;
            }
        }
        out
    }

    /// Moves a rigid group with one twist, pivoting about the member nearest
    /// the group centroid, plus a sideways drift that grows with distance.
    fn move_group(&mut self, members: &[RobotId], twist: BodyTwist, dt: f64) {
        let k = members.len() as f64;
        let cx = members.iter().map(|&m| self.robots[m].pose.x).sum::<f64>() / k;
        let cy = members.iter().map(|&m| self.robots[m].pose.y).sum::<f64>() / k;
        let pivot = *members
            .iter()
            .min_by(|&&a, &&b| {
                let da = self.robots[a].pose.distance_to(cx, cy);
                let db = self.robots[b].pose.distance_to(cx, cy);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("non-empty group");
        let base = self.robots[pivot].pose;
        let locals: Vec<(f64, f64, f64)> = members
            .iter()
            .map(|&m| {
                let p = self.robots[m].pose;
                let (lx, ly) = base.to_local(p.x, p.y);
                (lx, ly, normalize_angle(p.theta - base.theta))
            })
            .collect();

        let mut moved = integrate_unicycle(base, twist, dt);
        let travelled = (twist.v_x * dt).abs();
        if self.params.lateral_drift > 0.0 && travelled > 0.0 {
            let e: f64 = StandardNormal.sample(&mut self.robot_rngs[pivot]);
            let sigma = self.params.lateral_drift * (travelled / self.params.drift_length).sqrt();
            let (c, s) = moved.heading();
            moved.x -= s * sigma * e;
            moved.y += c * sigma * e;
        }
        let (c, s) = moved.heading();
        for (&m, (lx, ly, dth)) in members.iter().zip(locals) {
            self.robots[m].pose = Pose::new(
                moved.x + c * lx - s * ly,
                moved.y + s * lx + c * ly,
                moved.theta + dth,
            );
        }
    }

    fn group_of(&self, id: RobotId) -> Vec<RobotId> {
        self.graph.component_of(id).into_iter().collect()
    }

    fn translate(&mut self, members: &[RobotId], dx: f64, dy: f64) {
        for &m in members {
            self.robots[m].pose.x += dx;
            self.robots[m].pose.y += dy;
        }
    }

    /// Robots touching a wall (within `slack` mm).
    fn wall_contacts(&self, slack: f64) -> BTreeSet<RobotId> {
        let mut out = BTreeSet::new();
        for wall in &self.walls {
            for (id, r) in self.robots.iter().enumerate() {
                if wall.distance(r.pose.x, r.pose.y) <= self.half_length(id) + slack {
                    out.insert(id);
                }
            }
        }
        out
    }

    fn resolve_walls(&mut self) {
        for w in 0..self.walls.len() {
            let wall = self.walls[w];
            for members in self.graph.components() {
                let members: Vec<RobotId> = members.into_iter().collect();
                let depth = members
                    .iter()
                    .map(|&m| {
                        let p = self.robots[m].pose;
                        self.half_length(m) - wall.distance(p.x, p.y)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                if depth > 0.0 {
                    self.translate(&members, wall.normal.0 * depth, wall.normal.1 * depth);
                    if members.len() == 1 {
                        // flush against the wall: heading pinned to the wall normal
                        let r = &mut self.robots[members[0]].pose;
                        let n = wall.normal_angle();
                        let flipped = normalize_angle(n + PI);
                        r.theta = if normalize_angle(r.theta - n).abs() <= FRAC_PI_2 {
                            n
                        } else {
                            flipped
                        };
                    }
                }
            }
        }
    }

    /// Separates overlapping robots of different groups along world `x`.
    fn resolve_robot_contacts(&mut self) {
        for _ in 0..100 {
            let pinned = self.wall_contacts(1e-6);
            let mut worst: f64 = 0.0;
            let n = self.robots.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    if self.graph.component_of(i).contains(&j) {
                        continue;
                    }
                    let (pi, pj) = (self.robots[i].pose, self.robots[j].pose);
                    let reach = self.half_length(i) + self.half_length(j);
                    let width =
                        0.5 * (self.robots[i].params.body.width + self.robots[j].params.body.width);
                    let dx = pj.x - pi.x;
                    if (pj.y - pi.y).abs() >= width || dx.abs() >= reach {
                        continue;
                    }
                    let overlap = reach - dx.abs();
                    worst = worst.max(overlap);
                    let dir = if dx >= 0.0 { 1.0 } else { -1.0 };
                    let gi = self.group_of(i);
                    let gj = self.group_of(j);
                    let pin_i = gi.iter().any(|m| pinned.contains(m));
                    let pin_j = gj.iter().any(|m| pinned.contains(m));
                    let (share_i, share_j) = match (pin_i, pin_j) {
                        (true, false) => (0.0, 1.0),
                        (false, true) => (1.0, 0.0),
                        _ => (0.5, 0.5),
                    };
                    self.translate(&gi, -dir * overlap * share_i, 0.0);
                    self.translate(&gj, dir * overlap * share_j, 0.0);
                }
            }
            if worst <= 1e-9 {
                break;
            }
        }
    }

    fn detect_couplings(&mut self) {
        let n = self.robots.len();
        let pinned = self.wall_contacts(1e-6);
        for i in 0..n {
            for j in (i + 1)..n {
                let gi = self.group_of(i);
                if gi.contains(&j) || self.robots[i].disabled || self.robots[j].disabled {
                    continue;
                }
                let gj = self.group_of(j);
                let (pi, pj) = (self.robots[i].pose, self.robots[j].pose);
                let spacing = self.half_length(i) + self.half_length(j);
                let knob = self.robots[i].params.knob;
                let tol = self.params.tolerances;
                if let Ok(true) = self.graph.try_couple(i, &pi, j, &pj, &tol, spacing, &knob) {
                    // knobs seat fully: snap the free group onto the anchored one
                    let j_pinned = gj.iter().any(|m| pinned.contains(m));
                    if j_pinned {
                        self.snap(j, i, &gi, spacing);
                    } else {
                        self.snap(i, j, &gj, spacing);
                    }
                }
            }
        }
    }

    /// Rigidly moves `group` so `mover` sits exactly `spacing` ahead of or
    /// behind `fixed`, with the same heading.
    fn snap(&mut self, fixed: RobotId, mover: RobotId, group: &[RobotId], spacing: f64) {
        let f = self.robots[fixed].pose;
        let m = self.robots[mover].pose;
        let (lx, _) = f.to_local(m.x, m.y);
        let sign = if lx >= 0.0 { 1.0 } else { -1.0 };
        let (c, s) = f.heading();
        let (tx, ty) = (f.x + sign * spacing * c, f.y + sign * spacing * s);
        let dth = normalize_angle(f.theta - m.theta);
        let (cd, sd) = (dth.cos(), dth.sin());
        for &r in group {
            let p = self.robots[r].pose;
            let (rx, ry) = (p.x - m.x, p.y - m.y);
            self.robots[r].pose = Pose::new(
                tx + cd * rx - sd * ry,
                ty + sd * rx + cd * ry,
                p.theta + dth,
            );
        }
    }

    /// Hands a group reaching the start edge to the statics solver, and
    /// disables robots that end up over the gap without a successful crossing.
    fn check_gap(&mut self) {
        let Some(env) = self.environment else {
            return;
        };
        for members in self.graph.components() {
            let members: Vec<RobotId> = members.into_iter().collect();
            if members
                .iter()
                .any(|m| self.robots[*m].disabled || self.crossed.contains(m))
            {
                continue;
            }
            let front = members
                .iter()
                .map(|&m| self.robots[m].pose.x + self.half_length(m))
                .fold(f64::NEG_INFINITY, f64::max);
            let all_before_gap = members
                .iter()
                .all(|&m| self.robots[m].pose.x <= env.start_edge_x);
            if front < env.start_edge_x || !all_before_gap {
                continue;
            }
            let heading = members
                .iter()
                .map(|&m| normalize_angle(self.robots[m].pose.theta))
                .sum::<f64>()
                / members.len() as f64;
            let heading = heading.abs().min(FRAC_PI_3 - 1e-9);
            let mut params = self.params.crossing;
            params.joint_tilt = self.robots[members[0]].params.joint_tilt();
            params.body = self.robots[members[0]].params.body;
            params.mass = self.robots[members[0]].params.mass;
            let seed = self.crossing_rng.next_u64();
            let outcome = classify_crossing(members.len(), &env, heading, &params, seed);
            let outcome = match outcome {
                Ok(o) => o,
                Err(_) => CrossingOutcome {
                    class: crate::statics::CrossingClass::FallInGap,
                    max_tip_drop: 0.0,
                    com_margin: 0.0,
                    landing_pitch: 0.0,
                    steps: 0,
                },
            };
            self.crossing = Some(outcome);
            if outcome.class.is_success() {
                self.crossed.extend(members.iter().copied());
            } else {
                for &m in &members {
                    self.robots[m].disabled = true;
                }
            }
        }
        for id in 0..self.robots.len() {
            let r = &self.robots[id];
            if r.disabled || !over_gap(&env, r.pose.x) {
                continue;
            }
            let in_crossing_chain =
                self.crossed.contains(&id) && self.graph.component_of(id).len() > 1;
            if !in_crossing_chain {
                self.robots[id].disabled = true;
            }
        }
    }

    pub fn decouple_all(&mut self) -> Result<(), crate::coupling::CouplingError> {
        let edges: Vec<(RobotId, RobotId)> = self.graph.edges().map(|(k, _)| k.robots()).collect();
        let supported: BTreeMap<RobotId, bool> = (0..self.robots.len())
            .map(|r| (r, self.is_supported(r)))
            .collect();
        for (i, j) in edges {
            self.graph.decouple(i, j, |r| supported[&r])?;
        }
        Ok(())
    }
}

fn over_gap(env: &Environment, x: f64) -> bool {
    x > env.start_edge_x && x < env.target_edge_x()
}

/// Pushes sorted 1D positions apart to at least `spacing` with the least
/// total squared displacement. Order and mean are preserved.
///
/// Substituting `z_k = x_k - k * spacing` turns this into isotonic regression,
/// solved here by pool-adjacent-violators.
pub fn resolve_line_contacts(positions: &mut [f64], spacing: f64) {
    let n = positions.len();
    if n < 2 {
        return;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]).then(a.cmp(&b)));
    let z: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(k, &i)| positions[i] - k as f64 * spacing)
        .collect();
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(n);
    for v in z {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                *last = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut k = 0;
    for (sum, count) in blocks {
        let mean = sum / count as f64;
        for _ in 0..count {
            positions[idx[k]] = mean + k as f64 * spacing;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_world_is_unchanged() {
        let mut w = World::new(1, EngineParams::default());
        w.step(0.02);
        assert!(w.robots.is_empty());
        assert_eq!(w.graph, CouplingGraph::default());
        assert!((w.time() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn robots_closing_at_body_length_couple() {
        let mut w = World::new(3, EngineParams::default().without_noise());
        let p = RobotParams::default();
        w.add_robot(Pose::new(0.0, 0.0, 0.0), p);
        w.add_robot(Pose::new(50.5, 0.0, 0.0), p);
        w.mode = ControlMode::Rendezvous {
            anchor: None,
            lane_y: 0.0,
        };
        w.step(0.02);
        assert!(w.graph.are_coupled(0, 1));
        let d = w.robots[0]
            .pose
            .distance_to(w.robots[1].pose.x, w.robots[1].pose.y);
        assert!((d - 50.0).abs() < 1e-9);
    }

    #[test]
    fn coupled_pair_moves_rigidly() {
        let mut w = World::new(5, EngineParams::default());
        let p = RobotParams::default();
        w.add_robot(Pose::new(0.0, 0.0, 0.0), p);
        w.add_robot(Pose::new(50.0, 0.0, 0.0), p);
        w.mode = ControlMode::Rendezvous {
            anchor: None,
            lane_y: 0.0,
        };
        w.step(0.02);
        w.mode = ControlMode::Cross { lane_y: 0.0 };
        for _ in 0..200 {
            w.step(0.02);
            let (a, b) = (w.robots[0].pose, w.robots[1].pose);
            assert!((a.distance_to(b.x, b.y) - 50.0).abs() < 1e-9);
        }
        assert!(w.robots[0].pose.x > 100.0);
    }

    #[test]
    fn contacts_never_overlap() {
        let mut w = World::new(11, EngineParams::default());
        let p = RobotParams::default();
        for x in [0.0, 70.0, 200.0, 260.0] {
            w.add_robot(Pose::new(x, 0.0, 0.0), p);
        }
        w.mode = ControlMode::Rendezvous {
            anchor: None,
            lane_y: 0.0,
        };
        for _ in 0..500 {
            w.step(0.02);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let (a, b) = (w.robots[i].pose, w.robots[j].pose);
                    if w.graph.component_of(i).contains(&j) {
                        let d = a.distance_to(b.x, b.y);
                        assert!(d >= 50.0 - 0.1, "coupled {i},{j} at {d}");
                    } else if (a.y - b.y).abs() < 50.0 {
                        assert!(
                            (a.x - b.x).abs() >= 50.0 - 0.1,
                            "{i},{j}: {a:?} {b:?} t={}",
                            w.time()
                        );
                    }
                }
            }
        }
        assert_eq!(w.graph.chain_order().unwrap().len(), 4);
    }

    #[test]
    fn wall_blocks_and_squares_robot() {
        let mut w = World::new(2, EngineParams::default()).with_wall(Wall::vertical(0.0));
        w.add_robot(Pose::new(40.0, 0.0, 0.05), RobotParams::default());
        w.mode = ControlMode::Rendezvous {
            anchor: Some((0, 0)),
            lane_y: 0.0,
        };
        for _ in 0..200 {
            w.step(0.02);
        }
        let pose = w.robots[0].pose;
        assert!(pose.x >= 25.0 - 1e-9 && pose.x < 25.5);
        assert!(pose.theta.abs() < 1e-3);
    }

    #[test]
    fn line_contacts_examples() {
        let mut x = vec![0.0, 10.0];
        resolve_line_contacts(&mut x, 50.0);
        assert_eq!(x, vec![-20.0, 30.0]);
        let mut x = vec![100.0, 0.0, 49.0];
        resolve_line_contacts(&mut x, 50.0);
        assert_eq!(x, vec![100.0, -0.5, 49.5]);
        let mut x = vec![0.0, 0.0, 0.0];
        resolve_line_contacts(&mut x, 50.0);
        assert_eq!(x, vec![-50.0, 0.0, 50.0]);
    }

    proptest! {
        #[test]
        fn line_contacts_keep_mean_and_order(x in proptest::collection::vec(-300.0f64..300.0, 1..10)) {
            let mut y = x.clone();
            resolve_line_contacts(&mut y, 50.0);
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            prop_assert!((mean(&x) - mean(&y)).abs() < 1e-9);
            let mut order: Vec<usize> = (0..x.len()).collect();
            order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            for w in order.windows(2) {
                prop_assert!(y[w[1]] - y[w[0]] >= 50.0 - 1e-9);
            }
        }
    }
}
