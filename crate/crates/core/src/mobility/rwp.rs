//! Random waypoint: each node repeatedly picks a uniform destination in the
//! area and a uniform speed, travels there in a straight line, then pauses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::road_net::Point;

use super::{MobilityError, MobilityTrace, NodeTrack, Waypoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwpSpec {
    pub n_nodes: usize,
    pub width: f64,
    pub height: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Pause at each destination, s.
    pub pause: f64,
    pub duration: f64,
    pub seed: u64,
}

impl RwpSpec {
    fn check(&self) -> Result<(), MobilityError> {
        let bad = |m: &str| Err(MobilityError::InvalidParams(m.into()));
        if !(self.width >= 0.0 && self.height >= 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return bad("area must be finite and non-negative");
        }
        if !(self.v_min > 0.0 && self.v_min <= self.v_max && self.v_max.is_finite()) {
            return bad("speeds must satisfy 0 < v_min <= v_max");
        }
        if !(self.pause >= 0.0 && self.pause.is_finite()) {
            return bad("pause must be >= 0");
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad("duration must be >= 0");
        }
        Ok(())
    }
}

/// Builds one node's waypoints from an explicit start and a list of
/// `(destination, speed)` legs, stopping once a leg starts at or after
/// `duration`. The final leg may end after `duration`.
pub fn rwp_walk(start: Point, legs: &[(Point, f64)], pause: f64, duration: f64) -> NodeTrack {
    let mut track = NodeTrack::parked(start);
    let mut t = 0.0;
    let mut here = start;
    for &(dest, speed) in legs {
        if t >= duration {
            break;
        }
        let travel = here.distance(dest) / speed;
        if travel > 0.0 {
            t += travel;
            track.waypoints.push(Waypoint { t, x: dest.x, y: dest.y, speed });
        }
        if pause > 0.0 {
            t += pause;
            track.waypoints.push(Waypoint { t, x: dest.x, y: dest.y, speed: 0.0 });
        }
        here = dest;
    }
    track
}

/// Random waypoint trace; all randomness comes from the `mobility` stream of
/// `spec.seed`.
pub fn random_waypoint(spec: &RwpSpec) -> Result<MobilityTrace, MobilityError> {
    spec.check()?;
    let mut r = rng::stream(spec.seed, "mobility");
    let uniform_point = |r: &mut rng::SimRng| Point::new(r.random::<f64>() * spec.width, r.random::<f64>() * spec.height);
    let mut nodes = Vec::with_capacity(spec.n_nodes);
    for _ in 0..spec.n_nodes {
        let start = uniform_point(&mut r);
        if spec.width == 0.0 && spec.height == 0.0 && spec.pause == 0.0 {
            nodes.push(NodeTrack::parked(start));
            continue;
        }
        let mut legs = Vec::new();
        let mut t = 0.0;
        let mut here = start;
        while t < spec.duration {
            let dest = uniform_point(&mut r);
            let speed = spec.v_min + r.random::<f64>() * (spec.v_max - spec.v_min);
            legs.push((dest, speed));
            t += here.distance(dest) / speed + spec.pause;
            here = dest;
        }
        nodes.push(rwp_walk(start, &legs, spec.pause, spec.duration));
    }
    Ok(MobilityTrace {
        nodes,
        vehicle_ids: (0..spec.n_nodes as u32).collect(),
        duration: spec.duration,
        width: spec.width,
        height: spec.height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> RwpSpec {
        RwpSpec { n_nodes: 10, width: 500.0, height: 300.0, v_min: 1.0, v_max: 10.0, pause: 2.0, duration: 200.0, seed: 4 }
    }

    #[test]
    fn scripted_legs_time_arithmetic() {
        let legs = [(Point::new(30.0, 40.0), 5.0), (Point::new(30.0, 0.0), 10.0)];
        let track = rwp_walk(Point::new(0.0, 0.0), &legs, 1.0, 100.0);
        let times: Vec<f64> = track.waypoints.iter().map(|w| w.t).collect();
        assert_eq!(times, [0.0, 10.0, 11.0, 15.0, 16.0]);
        assert_eq!(track.position_at(13.0), Point::new(30.0, 20.0));
    }

    #[test]
    fn point_area_without_pause_is_stationary() {
        let trace = random_waypoint(&RwpSpec { width: 0.0, height: 0.0, pause: 0.0, ..spec() }).unwrap();
        assert!(trace.nodes.iter().all(|n| n.waypoints.len() == 1));
        let legs = [(Point::new(0.0, 0.0), 1.0), (Point::new(3.0, 4.0), 1.0)];
        let track = rwp_walk(Point::new(0.0, 0.0), &legs, 0.0, 100.0);
        assert_eq!(track.waypoints.iter().map(|w| w.t).collect::<Vec<_>>(), [0.0, 5.0]);
    }

    #[test]
    fn walk_stops_at_duration() {
        let legs = [(Point::new(10.0, 0.0), 1.0), (Point::new(0.0, 0.0), 1.0)];
        let track = rwp_walk(Point::new(0.0, 0.0), &legs, 0.0, 5.0);
        assert_eq!(track.waypoints.len(), 2);
    }

    #[test]
    fn trace_is_valid_and_covers_duration() {
        let trace = random_waypoint(&spec()).unwrap();
        assert_eq!(trace.node_count(), 10);
        assert!(trace.problems().is_empty(), "{:?}", trace.problems());
        for n in &trace.nodes {
            assert!(n.waypoints.last().unwrap().t >= 200.0);
            for w in n.waypoints.iter().skip(1) {
                assert!(w.speed == 0.0 || (1.0..=10.0).contains(&w.speed));
            }
        }
    }

    #[test]
    fn seeded_and_reproducible() {
        assert_eq!(random_waypoint(&spec()).unwrap(), random_waypoint(&spec()).unwrap());
        let other = RwpSpec { seed: 5, ..spec() };
        assert_ne!(random_waypoint(&spec()).unwrap(), random_waypoint(&other).unwrap());
    }

    #[test]
    fn rejects_bad_speeds() {
        assert!(random_waypoint(&RwpSpec { v_min: 0.0, ..spec() }).is_err());
        assert!(random_waypoint(&RwpSpec { v_min: 11.0, ..spec() }).is_err());
    }
}
