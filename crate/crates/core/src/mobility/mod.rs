//! Node movement over time, two ways: a road-constrained car-following
//! simulation of [`Trip`](crate::demand::Trip)s, and the random waypoint
//! model.
//!
//! Both produce a [`MobilityTrace`]: for every node a piecewise-linear
//! trajectory given as timestamped waypoints. Waypoint 0 is always the
//! initial position at `t = 0` with speed 0; each later waypoint carries
//! the speed used on the segment that ends at it.

mod krauss;
mod microsim;
mod rwp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road_net::{EdgeId, Point};

pub use krauss::{krauss_speed, krauss_step, safe_speed};
pub use microsim::{simulate, simulate_with_stats, MicrosimReport, MicrosimStats, MIN_GAP};
pub use rwp::{random_waypoint, rwp_walk, RwpSpec};

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("trip for vehicle {vehicle} uses edge {edge}, which is not in the network")]
    UnknownEdge { vehicle: u32, edge: EdgeId },
    #[error("trip for vehicle {0} has an empty or disconnected route")]
    BadRoute(u32),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("unknown trace node {0}")]
    UnknownNode(usize),
}

/// Car-following constants shared by every vehicle of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// Maximum acceleration, m/s².
    pub accel: f64,
    /// Comfortable deceleration, m/s².
    pub decel: f64,
    pub v_max: f64,
    pub length: f64,
    /// Driver reaction time, s.
    pub tau: f64,
    /// Driver imperfection in [0, 1].
    pub sigma: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { accel: 2.6, decel: 4.5, v_max: 13.9, length: 5.0, tau: 1.0, sigma: 0.5 }
    }
}

impl VehicleParams {
    pub fn check(&self) -> Result<(), MobilityError> {
        let positive = [self.accel, self.decel, self.v_max, self.length];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(MobilityError::InvalidParams("accel, decel, v_max and length must be > 0".into()));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(MobilityError::InvalidParams("tau must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(MobilityError::InvalidParams("sigma must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

impl Waypoint {
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrack {
    pub initial: Point,
    pub waypoints: Vec<Waypoint>,
}

impl NodeTrack {
    /// A node that sits at `p` from time 0 on.
    pub fn parked(p: Point) -> Self {
        Self { initial: p, waypoints: vec![Waypoint { t: 0.0, x: p.x, y: p.y, speed: 0.0 }] }
    }

    pub fn position_at(&self, t: f64) -> Point {
        let wps = &self.waypoints;
        let i = wps.partition_point(|w| w.t <= t);
        if i == 0 {
            return self.initial;
        }
        let a = &wps[i - 1];
        match wps.get(i) {
            None => a.pos(),
            Some(b) => a.pos().lerp(b.pos(), (t - a.t) / (b.t - a.t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    pub nodes: Vec<NodeTrack>,
    /// Vehicle id of each trace node, for the sidecar mapping file.
    pub vehicle_ids: Vec<u32>,
    pub duration: f64,
    pub width: f64,
    pub height: f64,
}

impl MobilityTrace {
    pub fn empty() -> Self {
        Self { nodes: Vec::new(), vehicle_ids: Vec::new(), duration: 0.0, width: 0.0, height: 0.0 }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Linearly interpolated position; before the first waypoint the initial
    /// position, after the last one the node stays put.
    pub fn position_at(&self, node: usize, t: f64) -> Result<Point, MobilityError> {
        self.nodes.get(node).map(|n| n.position_at(t)).ok_or(MobilityError::UnknownNode(node))
    }

    pub fn waypoint_count(&self) -> usize {
        self.nodes.iter().map(|n| n.waypoints.len()).sum()
    }

    /// Rounds every number to 2 decimals the way the trace writer does, and
    /// drops waypoints whose rounded time collides with the previous one.
    /// A declared speed below what its rounded segment needs is raised to
    /// the next 2-decimal value, and so is the area.
    pub fn quantized(&self) -> MobilityTrace {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let mut waypoints: Vec<Waypoint> = Vec::with_capacity(n.waypoints.len());
                for w in &n.waypoints {
                    let mut q = Waypoint { t: quantize2(w.t), x: quantize2(w.x), y: quantize2(w.y), speed: quantize2(w.speed) };
                    if let Some(p) = waypoints.last() {
                        if p.t >= q.t {
                            continue;
                        }
                        let needed = p.pos().distance(q.pos()) / (q.t - p.t);
                        if needed > q.speed {
                            q.speed = quantize2_up(needed);
                        }
                    }
                    waypoints.push(q);
                }
                NodeTrack { initial: Point::new(quantize2(n.initial.x), quantize2(n.initial.y)), waypoints }
            })
            .collect();
        MobilityTrace {
            nodes,
            vehicle_ids: self.vehicle_ids.clone(),
            width: quantize2_up(self.width),
            height: quantize2_up(self.height),
            ..*self
        }
    }

    /// Every broken trace invariant, as human-readable strings.
    pub fn problems(&self) -> Vec<String> {
        const EPS: f64 = 1e-6;
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            match n.waypoints.first() {
                Some(w) if w.t == 0.0 && w.pos() == n.initial => {}
                _ => out.push(format!("node {i}: waypoint 0 is not the initial position at t=0")),
            }
            for w in &n.waypoints {
                let inside = (-EPS..=self.width + EPS).contains(&w.x) && (-EPS..=self.height + EPS).contains(&w.y);
                if !inside {
                    out.push(format!("node {i}: ({}, {}) at t={} outside bounds", w.x, w.y, w.t));
                }
            }
            for pair in n.waypoints.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                if !(b.t > a.t) {
                    out.push(format!("node {i}: time {} does not follow {}", b.t, a.t));
                    continue;
                }
                let v = a.pos().distance(b.pos()) / (b.t - a.t);
                if v > b.speed + EPS {
                    out.push(format!("node {i}: segment ending at t={} needs {v} m/s, declared {}", b.t, b.speed));
                }
            }
        }
        out
    }
}

/// The value `format!("{:.2}")` would print, parsed back.
pub fn quantize2(v: f64) -> f64 {
    let q: f64 = format!("{v:.2}").parse().unwrap_or(v);
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Smallest 2-decimal value not below `v`, up to a 1e-9 slack.
pub fn quantize2_up(v: f64) -> f64 {
    quantize2(((v - 1e-9) * 100.0).ceil() / 100.0)
}
