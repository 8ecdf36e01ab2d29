//! Phase sequencing on top of [`World`].

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ControlMode, EngineError, EngineParams, World};
use crate::control::Wall;
use crate::kinematics::Pose;
use crate::params::RobotParams;
use crate::rng::stream_rng;
use crate::statics::{CrossingOutcome, Environment};

/// Goal position per robot id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSet(pub Vec<(f64, f64)>);

#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    /// Gather along `x`; with `wall`, the robot nearest that wall backs into it.
    Rendezvous {
        wall: Option<usize>,
    },
    CrossGap,
    AntiRendezvous,
    GoToGoals(GoalSet),
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Rendezvous { .. } => "Rendezvous",
            Phase::CrossGap => "CrossGap",
            Phase::AntiRendezvous => "AntiRendezvous",
            Phase::GoToGoals(_) => "GoToGoals",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScript {
    pub phases: Vec<Phase>,
    /// Simulated-time budget (s).
    pub max_time: f64,
    pub record_trajectory: bool,
}

impl ScenarioScript {
    pub fn new(phases: Vec<Phase>) -> Self {
        Self {
            phases,
            max_time: 300.0,
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub name: String,
    pub started_at: f64,
    pub completed_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub robot_id: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub coupled_flags: String,
    pub phase: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub phases: Vec<PhaseReport>,
    /// Every phase finished.
    pub completed: bool,
    /// Why the script stopped early, e.g. a failed gap crossing.
    pub halted: Option<String>,
    pub crossing: Option<CrossingOutcome>,
    pub final_poses: Vec<Pose>,
    /// Distance of each robot to its goal after the last goal phase.
    pub goal_errors: Vec<f64>,
    pub duration: f64,
    pub trajectory: Vec<TrajectoryRow>,
}

impl ScenarioReport {
    pub fn write_trajectory_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.trajectory {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs each phase until its completion predicate holds.
///
/// A failed gap crossing halts the script and is reported, not returned as
/// an error. Running out of simulated time is an error.
pub fn run_scenario(
    world: &mut World,
    script: &ScenarioScript,
) -> Result<ScenarioReport, EngineError> {
    if script.phases.is_empty() {
        return Err(EngineError::EmptyScript);
    }
    let dt = world.params.tick;
    let mut report = ScenarioReport {
        phases: Vec::new(),
        completed: false,
        halted: None,
        crossing: None,
        final_poses: Vec::new(),
        goal_errors: Vec::new(),
        duration: 0.0,
        trajectory: Vec::new(),
    };

    'phases: for phase in &script.phases {
        report.phases.push(PhaseReport {
            name: phase.name().to_string(),
            started_at: world.time(),
            completed_at: None,
        });
        enter(world, phase)?;
        if let Phase::AntiRendezvous = phase {
            if let Err(e) = world.decouple_all() {
                report.halted = Some(format!("decoupling failed: {e}"));
                break 'phases;
            }
        }
        loop {
            match status(world, phase) {
                Status::Done => break,
                Status::Failed(why) => {
                    report.halted = Some(why);
                    break 'phases;
                }
                Status::Running => {}
            }
            if world.time() >= script.max_time {
                return Err(EngineError::Timeout {
                    phase: phase.name().to_string(),
                    time: world.time(),
                });
            }
            world.step(dt);
            if script.record_trajectory {
                for (id, r) in world.robots.iter().enumerate() {
                    report.trajectory.push(TrajectoryRow {
                        t: world.time(),
                        robot_id: id,
                        x: r.pose.x,
                        y: r.pose.y,
                        theta: r.pose.theta,
                        coupled_flags: world.coupled_flags(id),
                        phase: phase.name().to_string(),
                    });
                }
            }
        }
        world.mode = ControlMode::Idle;
        report.phases.last_mut().unwrap().completed_at = Some(world.time());
    }

    report.completed = report.halted.is_none();
    report.crossing = world.crossing;
    report.final_poses = world.poses();
    report.duration = world.time();
    if let Some(Phase::GoToGoals(goals)) = script
        .phases
        .iter()
        .rev()
        .find(|p| matches!(p, Phase::GoToGoals(_)))
    {
        report.goal_errors = world
            .robots
            .iter()
            .zip(&goals.0)
            .map(|(r, g)| r.pose.distance_to(g.0, g.1))
            .collect();
    }
    Ok(report)
}

enum Status {
    Running,
    Done,
    Failed(String),
}

fn enter(world: &mut World, phase: &Phase) -> Result<(), EngineError> {
    let n = world.robots.len();
    if n == 0 {
        return Err(EngineError::InvalidScenario("world has no robots".into()));
    }
    let mean_y = world.robots.iter().map(|r| r.pose.y).sum::<f64>() / n as f64;
    world.mode = match phase {
        Phase::Rendezvous { wall } => {
            let anchor = match wall {
                Some(w) => {
                    let wall = world
                        .walls
                        .get(*w)
                        .ok_or_else(|| EngineError::InvalidScenario(format!("no wall {w}")))?;
                    let nearest = (0..n)
                        .min_by(|&a, &b| {
                            let pa = world.robots[a].pose;
                            let pb = world.robots[b].pose;
                            wall.distance(pa.x, pa.y)
                                .total_cmp(&wall.distance(pb.x, pb.y))
                        })
                        .unwrap();
                    Some((nearest, *w))
                }
                None => None,
            };
            let lane_y = anchor
                .map(|(a, _)| world.robots[a].pose.y)
                .unwrap_or(mean_y);
            ControlMode::Rendezvous { anchor, lane_y }
        }
        Phase::CrossGap => {
            if world.environment.is_none() {
                return Err(EngineError::InvalidScenario("no gap to cross".into()));
            }
            ControlMode::Cross { lane_y: mean_y }
        }
        Phase::AntiRendezvous => ControlMode::AntiRendezvous,
        Phase::GoToGoals(goals) => {
            if goals.0.len() != n {
                return Err(EngineError::InvalidScenario(format!(
                    "{} goals for {n} robots",
                    goals.0.len()
                )));
            }
            ControlMode::GoToGoals(goals.0.clone())
        }
    };
    Ok(())
}

fn status(world: &World, phase: &Phase) -> Status {
    let n = world.robots.len();
    match phase {
        Phase::Rendezvous { .. } => {
            let joined = n == 1
                || world
                    .graph
                    .chain_order()
                    .map(|c| c.len() == n)
                    .unwrap_or(false);
            if joined {
                Status::Done
            } else {
                Status::Running
            }
        }
        Phase::CrossGap => {
            let env = world.environment.expect("checked on entry");
            match world.crossing {
                Some(o) if !o.class.is_success() => Status::Failed(o.class.name().to_string()),
                Some(_) => {
                    let landed = world.robots.iter().all(|r| {
                        r.pose.x - 0.5 * r.params.body.length
                            >= env.target_edge_x() + world.params.landing_clearance
                    });
                    if landed {
                        Status::Done
                    } else {
                        Status::Running
                    }
                }
                None => Status::Running,
            }
        }
        Phase::AntiRendezvous => {
            let mut xs: Vec<f64> = world.robots.iter().map(|r| r.pose.x).collect();
            xs.sort_by(f64::total_cmp);
            let spread = xs
                .windows(2)
                .all(|w| w[1] - w[0] >= world.params.decouple_distance);
            if spread {
                Status::Done
            } else {
                Status::Running
            }
        }
        Phase::GoToGoals(goals) => {
            let tol = world.params.goal.goal_tolerance;
            let arrived = world
                .robots
                .iter()
                .zip(&goals.0)
                .all(|(r, g)| r.pose.distance_to(g.0, g.1) <= tol);
            if arrived {
                Status::Done
            } else {
                Status::Running
            }
        }
    }
}

/// Geometry of the couple, cross, decouple and disperse demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLayout {
    pub n_robots: usize,
    pub environment: Environment,
    /// Centre of the lead robot at the start (mm).
    pub lead_start_x: f64,
    /// Clearance between the rear robot and the wall at the start (mm).
    pub wall_clearance: f64,
    /// Std-dev of the initial lateral offset (mm) and heading (rad).
    pub position_jitter: f64,
    pub heading_jitter: f64,
    /// Goals: first one this far past the target edge, then `goal_pitch`
    /// further per robot, fanned out by `goal_spread` sideways.
    pub goal_offset: f64,
    pub goal_pitch: f64,
    pub goal_spread: f64,
}

impl Default for ScenarioLayout {
    fn default() -> Self {
        Self {
            n_robots: 3,
            environment: Environment::new(60.0, 6.0),
            lead_start_x: -140.0,
            wall_clearance: 30.0,
            position_jitter: 1.0,
            heading_jitter: 0.02,
            goal_offset: 160.0,
            goal_pitch: 80.0,
            goal_spread: 90.0,
        }
    }
}

const SPACINGS: [f64; 4] = [110.0, 95.0, 105.0, 100.0];

/// Builds the world and script for: back into a wall and couple, cross the
/// gap as one chain, split apart, then drive to individual goals.
///
/// Robot ids are ordered rear (next to the wall) to lead.
pub fn couple_cross_decouple(
    layout: &ScenarioLayout,
    robot: RobotParams,
    params: EngineParams,
    seed: u64,
) -> (World, ScenarioScript) {
    let n = layout.n_robots.max(1);
    let b = robot.body.length;
    let mut xs = vec![layout.lead_start_x];
    for k in 0..n - 1 {
        let prev = *xs.last().unwrap();
        xs.push(prev - SPACINGS[k % SPACINGS.len()]);
    }
    xs.reverse();
    let wall_x = xs[0] - 0.5 * b - layout.wall_clearance;

    let mut rng = stream_rng(seed, u64::MAX);
    let lateral = Normal::new(0.0, layout.position_jitter.max(0.0)).unwrap();
    let heading = Normal::new(0.0, layout.heading_jitter.max(0.0)).unwrap();

    let mut world = World::new(seed, params)
        .with_environment(layout.environment)
        .with_wall(Wall::vertical(wall_x));
    for x in &xs {
        let y = lateral.sample(&mut rng);
        let th = heading.sample(&mut rng);
        // small start jitter along x too, so runs with different seeds differ
        let dx = rng.random_range(-2.0..2.0);
        world.add_robot(Pose::new(x + dx, y, th), robot);
    }

    let te = layout.environment.target_edge_x();
    let mid = (n as f64 - 1.0) / 2.0;
    let goals = (0..n)
        .map(|i| {
            (
                te + layout.goal_offset + layout.goal_pitch * i as f64,
                (i as f64 - mid) * layout.goal_spread,
            )
        })
        .collect();
    let script = ScenarioScript::new(vec![
        Phase::Rendezvous { wall: Some(0) },
        Phase::CrossGap,
        Phase::AntiRendezvous,
        Phase::GoToGoals(GoalSet(goals)),
    ]);
    (world, script)
}
