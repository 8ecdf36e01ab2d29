//! Knob/hole coupling: joint backlash and hook locking, and the graph of
//! which robot faces are mated.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{normalize_angle, Pose};

pub type RobotId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("robot {robot} face {face:?} is already coupled")]
    FaceOccupied { robot: RobotId, face: Face },
    #[error("side-face coupling is not supported")]
    NotSupported,
    #[error("a robot cannot couple with itself ({0})")]
    SelfCoupling(RobotId),
    #[error("no edge between robots {0} and {1}")]
    EdgeMissing(RobotId, RobotId),
    #[error("robots {0} and {1} cannot decouple while unsupported or tilted")]
    UnsupportedDecouple(RobotId, RobotId),
    #[error("coupling graph is not a single front-to-back chain")]
    NotAChain,
    #[error("invalid knob geometry: {0}")]
    InvalidGeometry(&'static str),
}

/// Knob, hook and hole dimensions shared by every robot face (mm, rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnobGeometry {
    pub knob_radius: f64,
    /// Protrusion of the knob from the body face.
    pub knob_depth: f64,
    pub hook_width: f64,
    /// Knob height including the top and bottom hooks.
    pub knob_height: f64,
    pub hole_height: f64,
    pub wall_thickness: f64,
    /// Tilt reached when the hooks do not catch and only friction holds.
    pub friction_tilt: f64,
    /// Hooks wider than this no longer lock.
    pub slip_threshold: f64,
}

impl Default for KnobGeometry {
    fn default() -> Self {
        Self {
            knob_radius: 5.0,
            knob_depth: 5.0,
            hook_width: 1.5,
            knob_height: 9.0,
            hole_height: 10.0,
            wall_thickness: 2.0,
            friction_tilt: 0.160,
            slip_threshold: 1.75,
        }
    }
}

impl KnobGeometry {
    pub fn with_hook_width(self, hook_width: f64) -> Self {
        Self { hook_width, ..self }
    }

    pub fn vertical_clearance(&self) -> f64 {
        self.hole_height - self.knob_height
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        let lengths = [
            self.knob_radius,
            self.knob_depth,
            self.hook_width,
            self.knob_height,
            self.hole_height,
            self.wall_thickness,
        ];
        if lengths.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(CouplingError::InvalidGeometry(
                "all lengths must be positive",
            ));
        }
        if self.vertical_clearance() < 0.0 {
            return Err(CouplingError::InvalidGeometry("knob taller than hole"));
        }
        if self.hook_width >= self.knob_radius - self.wall_thickness {
            return Err(CouplingError::InvalidGeometry(
                "hook width must be below knob radius minus wall thickness",
            ));
        }
        if !(self.friction_tilt >= 0.0) || !(self.slip_threshold > 0.0) {
            return Err(CouplingError::InvalidGeometry(
                "friction tilt and slip threshold must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Backlash tilt of a locked joint: the vertical clearance taken up over the
/// lever from the body face to the hook tip.
pub fn joint_tilt_limit(k: &KnobGeometry) -> f64 {
    (k.vertical_clearance() / (k.knob_depth + k.hook_width)).atan()
}

pub fn hook_locks(k: &KnobGeometry) -> bool {
    k.hook_width <= k.slip_threshold
}

/// Tilt the joint actually settles at under gravity.
pub fn effective_joint_tilt(k: &KnobGeometry) -> f64 {
    if hook_locks(k) {
        joint_tilt_limit(k)
    } else {
        k.friction_tilt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Face {
    Front,
    Back,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub engaged: bool,
    /// Hooks block the motion; `false` means friction only.
    pub locked: bool,
    pub tilt_limit: f64,
    pub current_tilt: f64,
}

impl JointState {
    pub fn engaged(k: &KnobGeometry) -> Self {
        Self {
            engaged: true,
            locked: hook_locks(k),
            tilt_limit: effective_joint_tilt(k),
            current_tilt: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingTolerances {
    /// Allowed deviation of the centre spacing from one body length.
    pub gap: f64,
    pub lateral: f64,
    pub heading: f64,
}

impl Default for CouplingTolerances {
    fn default() -> Self {
        Self {
            gap: 2.0,
            lateral: 3.0,
            heading: 0.1,
        }
    }
}

/// Unordered pair of mated faces, stored with the smaller robot id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub a: (RobotId, Face),
    pub b: (RobotId, Face),
}

impl EdgeKey {
    pub fn new(i: (RobotId, Face), j: (RobotId, Face)) -> Self {
        if i <= j {
            Self { a: i, b: j }
        } else {
            Self { a: j, b: i }
        }
    }

    pub fn robots(&self) -> (RobotId, RobotId) {
        (self.a.0, self.b.0)
    }

    pub fn touches(&self, r: RobotId) -> bool {
        self.a.0 == r || self.b.0 == r
    }

    fn other(&self, r: RobotId) -> Option<RobotId> {
        if self.a.0 == r {
            Some(self.b.0)
        } else if self.b.0 == r {
            Some(self.a.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingGraph {
    nodes: BTreeSet<RobotId>,
    edges: BTreeMap<EdgeKey, JointState>,
}

impl CouplingGraph {
    pub fn with_nodes(ids: impl IntoIterator<Item = RobotId>) -> Self {
        Self {
            nodes: ids.into_iter().collect(),
            edges: BTreeMap::new(),
        }
    }

    pub fn add_node(&mut self, id: RobotId) {
        self.nodes.insert(id);
    }

    pub fn nodes(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, &JointState)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_free(&self, robot: RobotId, face: Face) -> bool {
        !self
            .edges
            .keys()
            .any(|e| e.a == (robot, face) || e.b == (robot, face))
    }

    pub fn edge_between(&self, i: RobotId, j: RobotId) -> Option<EdgeKey> {
        self.edges
            .keys()
            .find(|e| {
                let (a, b) = e.robots();
                (a, b) == (i, j) || (a, b) == (j, i)
            })
            .copied()
    }

    pub fn are_coupled(&self, i: RobotId, j: RobotId) -> bool {
        self.edge_between(i, j).is_some()
    }

    pub fn joint(&self, key: &EdgeKey) -> Option<&JointState> {
        self.edges.get(key)
    }

    /// Records the present tilt of a joint, clamped to its limit.
    pub fn set_tilt(&mut self, key: &EdgeKey, tilt: f64) -> Result<(), CouplingError> {
        let (i, j) = key.robots();
        let joint = self
            .edges
            .get_mut(key)
            .ok_or(CouplingError::EdgeMissing(i, j))?;
        joint.current_tilt = tilt.clamp(0.0, joint.tilt_limit);
        Ok(())
    }

    pub fn neighbors(&self, r: RobotId) -> impl Iterator<Item = RobotId> + '_ {
        self.edges.keys().filter_map(move |e| e.other(r))
    }

    /// Robots reachable from `r` through coupled joints, including `r`.
    pub fn component_of(&self, r: RobotId) -> BTreeSet<RobotId> {
        let mut seen = BTreeSet::from([r]);
        let mut stack = vec![r];
        while let Some(cur) = stack.pop() {
            for n in self.neighbors(cur) {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen
    }

    pub fn components(&self) -> Vec<BTreeSet<RobotId>> {
        let mut left: BTreeSet<RobotId> = self.nodes.clone();
        let mut out = Vec::new();
        while let Some(&r) = left.iter().next() {
            let comp = self.component_of(r);
            for c in &comp {
                left.remove(c);
            }
            out.push(comp);
        }
        out
    }

    /// Attempts a front/back coupling between robots `i` and `j`.
    ///
    /// Returns `Ok(true)` when a new edge was added and `Ok(false)` when the
    /// poses are outside the coupling tolerances.
    #[allow(clippy::too_many_arguments)]
    pub fn try_couple(
        &mut self,
        i: RobotId,
        pose_i: &Pose,
        j: RobotId,
        pose_j: &Pose,
        tol: &CouplingTolerances,
        body_length: f64,
        knob: &KnobGeometry,
    ) -> Result<bool, CouplingError> {
        if i == j {
            return Err(CouplingError::SelfCoupling(i));
        }
        let (dx, dy) = pose_i.to_local(pose_j.x, pose_j.y);
        let heading_ok = normalize_angle(pose_j.theta - pose_i.theta).abs() <= tol.heading;
        let in_range = |along: f64, across: f64| {
            (along.abs() - body_length).abs() <= tol.gap && across.abs() <= tol.lateral
        };
        if !heading_ok {
            return Ok(false);
        }
        if !in_range(dx, dy) {
            if in_range(dy, dx) {
                return Err(CouplingError::NotSupported);
            }
            return Ok(false);
        }
        let (face_i, face_j) = if dx >= 0.0 {
            (Face::Front, Face::Back)
        } else {
            (Face::Back, Face::Front)
        };
        for (r, f) in [(i, face_i), (j, face_j)] {
            if !self.face_free(r, f) {
                return Err(CouplingError::FaceOccupied { robot: r, face: f });
            }
        }
        self.nodes.insert(i);
        self.nodes.insert(j);
        self.edges.insert(
            EdgeKey::new((i, face_i), (j, face_j)),
            JointState::engaged(knob),
        );
        debug_assert!(self.faces_unique());
        Ok(true)
    }

    /// Removes the edge between `i` and `j`.
    ///
    /// Both robots must be resting on a platform (`supported`) and the joint
    /// must be untilted.
    pub fn decouple(
        &mut self,
        i: RobotId,
        j: RobotId,
        supported: impl Fn(RobotId) -> bool,
    ) -> Result<(), CouplingError> {
        let key = self
            .edge_between(i, j)
            .ok_or(CouplingError::EdgeMissing(i, j))?;
        let joint = self.edges[&key];
        if !supported(i) || !supported(j) || joint.current_tilt != 0.0 {
            return Err(CouplingError::UnsupportedDecouple(i, j));
        }
        self.edges.remove(&key);
        Ok(())
    }

    /// No face appears in two edges.
    pub fn faces_unique(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.edges
            .keys()
            .all(|e| seen.insert(e.a) && seen.insert(e.b))
    }

    /// Robot ids of a single front-to-back chain, lead (free front face) first.
    pub fn chain_order(&self) -> Result<Vec<RobotId>, CouplingError> {
        if self.nodes.is_empty() {
            return Err(CouplingError::NotAChain);
        }
        // behind[a] = b when a's back face mates b's front face
        let mut behind: BTreeMap<RobotId, RobotId> = BTreeMap::new();
        let mut has_front_partner = BTreeSet::new();
        for e in self.edges.keys() {
            let (back_of, front_of) = match (e.a.1, e.b.1) {
                (Face::Back, Face::Front) => (e.a.0, e.b.0),
                (Face::Front, Face::Back) => (e.b.0, e.a.0),
                _ => return Err(CouplingError::NotAChain),
            };
            if behind.insert(back_of, front_of).is_some() {
                return Err(CouplingError::NotAChain);
            }
            if !has_front_partner.insert(front_of) {
                return Err(CouplingError::NotAChain);
            }
        }
        let leads: Vec<RobotId> = self
            .nodes
            .iter()
            .copied()
            .filter(|n| !has_front_partner.contains(n))
            .collect();
        if leads.len() != 1 {
            return Err(CouplingError::NotAChain);
        }
        let mut order = vec![leads[0]];
        while let Some(&next) = behind.get(order.last().unwrap()) {
            if order.contains(&next) {
                return Err(CouplingError::NotAChain);
            }
            order.push(next);
        }
        if order.len() != self.nodes.len() {
            return Err(CouplingError::NotAChain);
        }
        Ok(order)
    }

    pub fn chain_assembly_length(&self, body_length: f64) -> Result<f64, CouplingError> {
        Ok(self.chain_order()?.len() as f64 * body_length)
    }
}
