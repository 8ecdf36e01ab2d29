//! Swarm controllers: 1D rendezvous / anti-rendezvous consensus, coupling
//! detection, wall alignment and go-to-goal.
//!
//! All robots talk to one central computer, so the consensus terms use the
//! full swarm rather than a neighbour graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{normalize_angle, BodyTwist, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("consensus needs at least two robots, got {0}")]
    DegenerateSwarm(usize),
    #[error("robot positions must be finite")]
    NonFinite,
}

/// Robot positions projected onto the rendezvous axis (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmPositions(Vec<f64>);

impl SwarmPositions {
    pub fn new(positions: Vec<f64>) -> Result<Self, ControlError> {
        if positions.is_empty() {
            return Err(ControlError::DegenerateSwarm(0));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(ControlError::NonFinite);
        }
        Ok(Self(positions))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        hi - lo
    }

    /// Gaps between neighbours after sorting.
    pub fn adjacent_gaps(&self) -> Vec<f64> {
        let mut sorted = self.0.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// `u_i = (1/N) * sum_{j != i} (x_j - x_i)`.
pub fn rendezvous_velocities(s: &SwarmPositions) -> Result<Vec<f64>, ControlError> {
    let x = s.as_slice();
    let n = x.len();
    if n < 2 {
        return Err(ControlError::DegenerateSwarm(n));
    }
    let inv_n = 1.0 / n as f64;
    Ok(x.iter()
        .enumerate()
        .map(|(i, xi)| {
            let pull: f64 = x
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, xj)| xj - xi)
                .sum();
            inv_n * pull
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntiRendezvous {
    pub velocities: Vec<f64>,
    /// Every robot sits at the same point; the output is all zeros and the
    /// caller has to perturb the swarm.
    pub zero_separation: bool,
}

/// Negated rendezvous: pushes every robot away from the others.
pub fn anti_rendezvous_velocities(s: &SwarmPositions) -> Result<AntiRendezvous, ControlError> {
    let velocities: Vec<f64> = rendezvous_velocities(s)?.into_iter().map(|u| -u).collect();
    let first = s.as_slice()[0];
    let zero_separation = s.as_slice().iter().all(|x| *x == first);
    Ok(AntiRendezvous {
        velocities,
        zero_separation,
    })
}

/// Every neighbouring pair on the line sits one body length apart, within `tol`.
pub fn coupling_reached(s: &SwarmPositions, body_length: f64, tol: f64) -> bool {
    s.len() >= 2
        && s.adjacent_gaps()
            .iter()
            .all(|g| (g - body_length).abs() <= tol)
}

/// One forward-Euler step of the rendezvous dynamics with step `h`.
pub fn rendezvous_euler_step(positions: &mut [f64], h: f64) -> Result<(), ControlError> {
    let s = SwarmPositions::new(positions.to_vec())?;
    let u = rendezvous_velocities(&s)?;
    for (x, ui) in positions.iter_mut().zip(u) {
        *x += h * ui;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalGains {
    /// Forward gain (1/s).
    pub k_v: f64,
    /// Forward speed clamp (mm/s).
    pub v_max: f64,
    pub k_omega: f64,
    /// Inside this radius the robot stops (mm).
    pub goal_tolerance: f64,
}

impl Default for GoalGains {
    fn default() -> Self {
        Self {
            k_v: 0.5,
            v_max: 30.0,
            k_omega: 2.0,
            goal_tolerance: 2.0,
        }
    }
}

/// Proportional go-to-goal for a unicycle.
///
/// Forward speed is gated by `max(0, cos(heading_error))`, so the robot turns
/// in place when the goal is behind it and never backs away from the goal.
pub fn go_to_goal(p: &Pose, goal: (f64, f64), gains: &GoalGains) -> BodyTwist {
    let (dx, dy) = (goal.0 - p.x, goal.1 - p.y);
    let dist = dx.hypot(dy);
    if dist <= gains.goal_tolerance {
        return BodyTwist::ZERO;
    }
    let err = normalize_angle(dy.atan2(dx) - p.theta);
    let gate = err.cos().max(0.0);
    let v = (gains.k_v * dist).min(gains.v_max) * gate;
    BodyTwist::new(v, gains.k_omega * err)
}

/// A straight wall through `point` with unit `normal` pointing into free space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub point: (f64, f64),
    pub normal: (f64, f64),
}

impl Wall {
    /// Wall along the world `y` axis at `x`, free space on the `+x` side.
    pub fn vertical(x: f64) -> Self {
        Self {
            point: (x, 0.0),
            normal: (1.0, 0.0),
        }
    }

    /// Signed distance of a point from the wall line (positive in free space).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        (x - self.point.0) * self.normal.0 + (y - self.point.1) * self.normal.1
    }

    pub fn normal_angle(&self) -> f64 {
        self.normal.1.atan2(self.normal.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallAlignParams {
    pub push_speed: f64,
    /// Speed kept up against the wall once in contact.
    pub hold_speed: f64,
    pub k_omega: f64,
}

impl Default for WallAlignParams {
    fn default() -> Self {
        Self {
            push_speed: 20.0,
            hold_speed: 2.0,
            k_omega: 2.0,
        }
    }
}

/// Drives a robot squarely into a wall, forwards or in reverse depending on
/// which end faces it. Heading is steered onto the wall normal.
pub fn wall_align(p: &Pose, wall: &Wall, params: &WallAlignParams, in_contact: bool) -> BodyTwist {
    let into_wall = normalize_angle(wall.normal_angle() + std::f64::consts::PI);
    let facing = normalize_angle(into_wall - p.theta).cos() >= 0.0;
    let (target_heading, sign) = if facing {
        (into_wall, 1.0)
    } else {
        (wall.normal_angle(), -1.0)
    };
    let speed = if in_contact {
        params.hold_speed
    } else {
        params.push_speed
    };
    BodyTwist::new(
        sign * speed,
        params.k_omega * normalize_angle(target_heading - p.theta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::integrate_unicycle;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pos(v: &[f64]) -> SwarmPositions {
        SwarmPositions::new(v.to_vec()).unwrap()
    }

    /// Rendezvous term written as the swarm mean minus the robot's own position.
    fn mean_pull(x: &[f64]) -> Vec<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|xi| mean - xi).collect()
    }

    #[test]
    fn rendezvous_examples() {
        assert_eq!(
            rendezvous_velocities(&pos(&[0.0, 100.0])).unwrap(),
            vec![50.0, -50.0]
        );
        let u = rendezvous_velocities(&pos(&[0.0, 30.0, 90.0])).unwrap();
        for (a, b) in u.iter().zip([40.0, 10.0, -50.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(u.iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(
            rendezvous_velocities(&pos(&[7.0; 4])).unwrap(),
            vec![0.0; 4]
        );
        assert_eq!(
            rendezvous_velocities(&pos(&[1.0])),
            Err(ControlError::DegenerateSwarm(1))
        );
    }

    #[test]
    fn anti_rendezvous_examples() {
        let a = anti_rendezvous_velocities(&pos(&[0.0, 100.0])).unwrap();
        assert_eq!(a.velocities, vec![-50.0, 50.0]);
        assert!(!a.zero_separation);
        let a = anti_rendezvous_velocities(&pos(&[0.0, 30.0, 90.0])).unwrap();
        for (x, y) in a.velocities.iter().zip([-40.0, -10.0, 50.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        let a = anti_rendezvous_velocities(&pos(&[3.0, 3.0, 3.0])).unwrap();
        assert!(a.zero_separation);
        assert!(a.velocities.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn coupling_reached_examples() {
        assert!(coupling_reached(&pos(&[0.0, 50.0, 100.0]), 50.0, 2.0));
        assert!(!coupling_reached(&pos(&[0.0, 50.0, 105.0]), 50.0, 2.0));
        assert!(coupling_reached(&pos(&[10.0, -40.0]), 50.0, 2.0));
        assert!(!coupling_reached(&pos(&[10.0]), 50.0, 2.0));
    }

    #[test]
    fn go_to_goal_examples() {
        let g = GoalGains::default();
        assert_eq!(
            go_to_goal(&Pose::new(5.0, 5.0, 1.0), (5.0, 5.0), &g),
            BodyTwist::ZERO
        );
        assert_eq!(
            go_to_goal(&Pose::default(), (100.0, 0.0), &g),
            BodyTwist::new(30.0, 0.0)
        );
        let behind = go_to_goal(&Pose::default(), (-100.0, 0.0), &g);
        assert!((behind.omega.abs() - g.k_omega * PI).abs() < 1e-12);
        assert_eq!(behind.v_x, 0.0);
    }

    #[test]
    fn wall_align_examples() {
        let wall = Wall::vertical(0.0);
        let p = WallAlignParams::default();
        // facing the wall 20 mm away
        let facing = Pose::new(20.0 + 25.0, 0.0, PI);
        assert_eq!(
            wall_align(&facing, &wall, &p, false),
            BodyTwist::new(p.push_speed, 0.0)
        );
        assert_eq!(
            wall_align(&facing, &wall, &p, true),
            BodyTwist::new(p.hold_speed, 0.0)
        );
        let skew = Pose::new(45.0, 0.0, PI - 0.05);
        let t = wall_align(&skew, &wall, &p, false);
        assert!(t.omega > 0.0);
        assert!((t.omega - p.k_omega * 0.05).abs() < 1e-12);
        // back end towards the wall: reverse in
        let t = wall_align(&Pose::new(45.0, 0.0, 0.02), &wall, &p, false);
        assert_eq!(t.v_x, -p.push_speed);
        assert!(t.omega < 0.0);
    }

    proptest! {
        #[test]
        fn rendezvous_matches_mean_pull(x in proptest::collection::vec(-500.0f64..500.0, 2..12)) {
            let u = rendezvous_velocities(&pos(&x)).unwrap();
            let scale: f64 = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in u.iter().zip(mean_pull(&x)) {
                prop_assert!((a - b).abs() <= 1e-12 * scale * x.len() as f64);
            }
            prop_assert!(u.iter().sum::<f64>().abs() <= 1e-12 * scale * x.len() as f64);
            let anti = anti_rendezvous_velocities(&pos(&x)).unwrap();
            for (a, b) in anti.velocities.iter().zip(&u) {
                prop_assert_eq!(*a, -*b);
            }
        }

        #[test]
        fn euler_contracts_and_keeps_order(x in proptest::collection::vec(-500.0f64..500.0, 2..10)) {
            let mut cur = x.clone();
            let mut order: Vec<usize> = (0..x.len()).collect();
            order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
            for _ in 0..20 {
                let before = pos(&cur).spread();
                rendezvous_euler_step(&mut cur, 0.1).unwrap();
                let after = pos(&cur).spread();
                prop_assert!(after < before || before == 0.0);
                prop_assert!(order.windows(2).all(|w| cur[w[0]] <= cur[w[1]]));
            }
        }

        #[test]
        fn go_to_goal_never_recedes(
            x in -300.0f64..300.0, y in -300.0f64..300.0, th in -3.1f64..3.1,
        ) {
            let g = GoalGains::default();
            let goal = (0.0, 0.0);
            let mut p = Pose::new(x, y, th);
            let mut d = p.distance_to(goal.0, goal.1);
            for _ in 0..3000 {
                p = integrate_unicycle(p, go_to_goal(&p, goal, &g), 0.02);
                let nd = p.distance_to(goal.0, goal.1);
                prop_assert!(nd <= d + 1e-9);
                d = nd;
            }
            prop_assert!(d <= g.goal_tolerance + 1e-9);
        }
    }
}
