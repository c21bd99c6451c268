//! Time-stepped car-following on a road network.
//!
//! Each step (length `dt`):
//!
//! 1. pending vehicles whose departure has come are inserted at offset 0 of
//!    their first edge, one per lane and only if the entry segment is free;
//! 2. every vehicle picks a new speed with the Krauss rule against whatever
//!    is ahead within the look-ahead window: the vehicle in front on the same
//!    lane, the last vehicle on the next edge of its route, or a closed stop
//!    line (red signal, or a higher-ranked approach occupied at an
//!    unsignalised junction) treated as a stopped leader;
//! 3. vehicles advance; those reaching the end of an edge move onto the next
//!    one if it has room, in right-of-way order, otherwise they wait at the
//!    stop line. Vehicles leave at the end of their route and their trace
//!    node stays at the exit point.
//!
//! Vehicles never change lane.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::demand::Trip;
use crate::rng::{self, SimRng};
use crate::road_net::{EdgeId, NodeId, NodeKind, Point, RoadEdge, RoadNetwork};

use super::krauss::safe_speed;
use super::{MobilityError, MobilityTrace, NodeTrack, VehicleParams, Waypoint};

use rand::Rng;

/// Standstill distance kept to the vehicle in front, m.
pub const MIN_GAP: f64 = 2.5;
/// How far ahead drivers look for leaders, signals and speed limits, m.
const LOOKAHEAD: f64 = 150.0;
/// Distance to an unsignalised junction at which yielding starts, m.
const YIELD_ZONE: f64 = 30.0;
/// A conflicting approach counts as occupied when a vehicle on it is this
/// close to the junction, m.
const APPROACH_ZONE: f64 = 20.0;
/// Minimum spacing between recorded waypoints, s; matches the 2-decimal
/// trace resolution.
const MIN_WP_SEP: f64 = 0.01;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MicrosimStats {
    pub steps: u64,
    pub inserted: usize,
    pub finished: usize,
    /// Longest wait between a trip's departure time and its insertion, s.
    pub max_insert_delay: f64,
    /// Same-lane pairs found overlapping after a step.
    pub gap_violations: usize,
    /// Smallest same-lane bumper-to-bumper gap seen, m.
    pub min_gap: f64,
    /// Vehicles found above their own top speed or the edge limit.
    pub speed_violations: usize,
    /// Vehicles whose driven edges are not a prefix of their route.
    pub route_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicrosimReport {
    pub trace: MobilityTrace,
    pub stats: MicrosimStats,
}

#[derive(Debug, Clone)]
struct Vehicle {
    cursor: usize,
    lane: u32,
    pos: f64,
    speed: f64,
    v_max: f64,
    driven: Vec<EdgeId>,
}

struct Sim<'a> {
    net: &'a RoadNetwork,
    trips: &'a [Trip],
    params: VehicleParams,
    dt: f64,
    duration: f64,
    edges: BTreeMap<EdgeId, &'a RoadEdge>,
    conflict_nodes: BTreeSet<NodeId>,
    queues: BTreeMap<(EdgeId, u32), VecDeque<usize>>,
    vehicles: Vec<Option<Vehicle>>,
    pending: Vec<usize>,
    tracks: Vec<NodeTrack>,
    origin: Point,
    rng: SimRng,
    stats: MicrosimStats,
}

/// Runs the car-following simulation and returns the trace only.
pub fn simulate(
    net: &RoadNetwork,
    trips: &[Trip],
    params: &VehicleParams,
    dt: f64,
    duration: f64,
    seed: u64,
) -> Result<MobilityTrace, MobilityError> {
    simulate_with_stats(net, trips, params, dt, duration, seed).map(|r| r.trace)
}

/// Runs the car-following simulation. Trace node `i` is `trips[i]`.
///
/// Coordinates are shifted so the network's bounding box starts at (0, 0).
/// `dt` must lie in (0, 1] so that waypoints are at most 1 s apart.
pub fn simulate_with_stats(
    net: &RoadNetwork,
    trips: &[Trip],
    params: &VehicleParams,
    dt: f64,
    duration: f64,
    seed: u64,
) -> Result<MicrosimReport, MobilityError> {
    params.check()?;
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(MobilityError::InvalidParams(format!("dt must lie in (0, 1], got {dt}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(MobilityError::InvalidParams(format!("bad duration {duration}")));
    }
    for trip in trips {
        for &e in &trip.route {
            if net.edge(e).is_none() {
                return Err(MobilityError::UnknownEdge { vehicle: trip.vehicle_id, edge: e });
            }
        }
        if !net.is_connected_route(&trip.route) || !(trip.depart >= 0.0 && trip.depart.is_finite()) {
            return Err(MobilityError::BadRoute(trip.vehicle_id));
        }
        if let Some(v) = trip.max_speed {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MobilityError::InvalidParams(format!("vehicle {} max speed {v}", trip.vehicle_id)));
            }
        }
    }
    let (lo, hi) = net.bounding_box().unwrap_or((Point::new(0.0, 0.0), Point::new(0.0, 0.0)));
    let mut sim = Sim::new(net, trips, *params, dt, duration, seed, lo);
    let mut k: u64 = 0;
    while (k + 1) as f64 * dt <= duration + 1e-9 {
        sim.step(k);
        k += 1;
    }
    sim.stats.steps = k;
    sim.finish_checks();
    let trace = MobilityTrace {
        nodes: sim.tracks,
        vehicle_ids: trips.iter().map(|t| t.vehicle_id).collect(),
        duration,
        width: hi.x - lo.x,
        height: hi.y - lo.y,
    };
    Ok(MicrosimReport { trace, stats: sim.stats })
}

impl<'a> Sim<'a> {
    fn new(
        net: &'a RoadNetwork,
        trips: &'a [Trip],
        params: VehicleParams,
        dt: f64,
        duration: f64,
        seed: u64,
        origin: Point,
    ) -> Self {
        let edges: BTreeMap<EdgeId, &RoadEdge> = net.edges().map(|e| (e.id, e)).collect();
        let conflict_nodes = net
            .nodes()
            .filter(|n| n.kind == NodeKind::Junction && net.neighbor_count(n.id) >= 3)
            .map(|n| n.id)
            .collect();
        let mut pending: Vec<usize> = (0..trips.len()).collect();
        pending.sort_by(|&a, &b| trips[a].depart.total_cmp(&trips[b].depart).then(a.cmp(&b)));
        let tracks = trips
            .iter()
            .map(|trip| {
                let first = edges[&trip.route[0]];
                let p = net.position_on_edge(first, 0.0);
                NodeTrack::parked(Point::new(p.x - origin.x, p.y - origin.y))
            })
            .collect();
        Sim {
            net,
            trips,
            params,
            dt,
            duration,
            edges,
            conflict_nodes,
            queues: BTreeMap::new(),
            vehicles: vec![None; trips.len()],
            pending,
            tracks,
            origin,
            rng: rng::stream(seed, "mobility"),
            stats: MicrosimStats { min_gap: f64::INFINITY, ..Default::default() },
        }
    }

    fn edge(&self, id: EdgeId) -> &'a RoadEdge {
        self.edges[&id]
    }

    fn record(&mut self, i: usize, t: f64, speed: f64) {
        let v = self.vehicles[i].as_ref().expect("recording an inactive vehicle");
        let e = self.edge(self.trips[i].route[v.cursor]);
        let p = self.net.position_on_edge(e, v.pos);
        self.tracks[i].waypoints.push(Waypoint { t, x: p.x - self.origin.x, y: p.y - self.origin.y, speed });
    }

    fn last_time(&self, i: usize) -> f64 {
        self.tracks[i].waypoints.last().map_or(0.0, |w| w.t)
    }

    fn step(&mut self, k: u64) {
        let t = k as f64 * self.dt;
        let t_next = (k + 1) as f64 * self.dt;
        self.insert(t);

        let active: Vec<usize> = (0..self.vehicles.len()).filter(|&i| self.vehicles[i].is_some()).collect();
        let speeds: Vec<(usize, f64)> = active.iter().map(|&i| (i, self.next_speed(i, t))).collect();

        let mut crossing = Vec::new();
        for (i, v) in speeds {
            let trip = &self.trips[i];
            let veh = self.vehicles[i].as_mut().expect("active");
            let len = self.edges[&trip.route[veh.cursor]].length;
            if veh.pos + v * self.dt > len {
                crossing.push((i, v));
            } else {
                veh.pos += v * self.dt;
                veh.speed = v;
            }
        }
        // simultaneous entries resolve by approach priority, then edge id,
        // then order within the lane
        let mut keyed: Vec<(Reverse<u32>, EdgeId, usize, usize, f64)> = crossing
            .into_iter()
            .map(|(i, v)| {
                let veh = self.vehicles[i].as_ref().expect("active");
                let e = self.edge(self.trips[i].route[veh.cursor]);
                let q = &self.queues[&(e.id, veh.lane)];
                let place = q.iter().position(|&j| j == i).unwrap_or(usize::MAX);
                (Reverse(e.priority), e.id, place, i, v)
            })
            .collect();
        keyed.sort_by_key(|k| (k.0, k.1, k.2));
        for (_, _, _, i, v) in keyed {
            self.advance_crossing(i, v, t, t_next);
        }

        for &i in &active {
            if let Some(v) = &self.vehicles[i] {
                let speed = v.speed;
                self.record(i, t_next, speed);
            }
        }
        self.check_step();
    }

    fn insert(&mut self, t: f64) {
        let mut still = Vec::with_capacity(self.pending.len());
        let pending = std::mem::take(&mut self.pending);
        for i in pending {
            let trip = &self.trips[i];
            if trip.depart > t + 1e-9 {
                still.push(i);
                continue;
            }
            let first = self.edge(trip.route[0]);
            let lane = (0..first.lanes).find(|&l| match self.queues.get(&(first.id, l)).and_then(|q| q.back()) {
                None => true,
                Some(&b) => {
                    let b = self.vehicles[b].as_ref().expect("queued vehicles are active");
                    b.pos - self.params.length >= MIN_GAP
                }
            });
            let Some(lane) = lane else {
                still.push(i);
                continue;
            };
            let v_max = trip.max_speed.map_or(self.params.v_max, |v| v.min(self.params.v_max));
            self.vehicles[i] = Some(Vehicle { cursor: 0, lane, pos: 0.0, speed: 0.0, v_max, driven: vec![first.id] });
            self.queues.entry((first.id, lane)).or_default().push_back(i);
            self.stats.inserted += 1;
            self.stats.max_insert_delay = self.stats.max_insert_delay.max(t - trip.depart);
            if t - self.last_time(i) >= MIN_WP_SEP {
                self.record(i, t, 0.0);
            }
        }
        self.pending = still;
    }

    /// What is ahead of vehicle `i`: (gap for the car-following rule,
    /// leader speed, hard distance budget for this step).
    fn leader(&self, i: usize, t: f64) -> (f64, f64, f64) {
        let route = &self.trips[i].route;
        let veh = self.vehicles[i].as_ref().expect("active");
        let len = self.params.length;
        let q = &self.queues[&(route[veh.cursor], veh.lane)];
        let place = q.iter().position(|&j| j == i).expect("vehicle is in its lane queue");
        if place > 0 {
            let lead = self.vehicles[q[place - 1]].as_ref().expect("active");
            let raw = lead.pos - len - veh.pos;
            return (raw - MIN_GAP, lead.speed, raw);
        }
        let mut dist = self.edge(route[veh.cursor]).length - veh.pos;
        let (mut c, mut lane) = (veh.cursor, veh.lane);
        loop {
            if c + 1 >= route.len() {
                return (f64::INFINITY, 0.0, f64::INFINITY);
            }
            let here = self.edge(route[c]);
            if self.must_stop(here, t, dist) {
                return (dist, 0.0, dist);
            }
            let next = self.edge(route[c + 1]);
            let target = lane.min(next.lanes - 1);
            if let Some(&b) = self.queues.get(&(next.id, target)).and_then(|q| q.back()) {
                let back = self.vehicles[b].as_ref().expect("active");
                let raw = dist + back.pos - len;
                return (raw - MIN_GAP, back.speed, raw);
            }
            if dist > LOOKAHEAD {
                return (f64::INFINITY, 0.0, f64::INFINITY);
            }
            dist += next.length;
            c += 1;
            lane = target;
        }
    }

    /// Whether the stop line at the end of `approach` is closed at time `t`.
    fn must_stop(&self, approach: &RoadEdge, t: f64, dist: f64) -> bool {
        let node = approach.to;
        if let Some(program) = self.net.program(node) {
            return !program.is_green(approach.id, t);
        }
        if dist > YIELD_ZONE || !self.conflict_nodes.contains(&node) {
            return false;
        }
        self.net.in_edges(node).iter().any(|&other| {
            let o = self.edge(other);
            let outranks = o.priority > approach.priority || (o.priority == approach.priority && o.id < approach.id);
            outranks
                && other != approach.id
                && (0..o.lanes).any(|l| {
                    self.queues
                        .get(&(other, l))
                        .and_then(|q| q.front())
                        .and_then(|&f| self.vehicles[f].as_ref())
                        .is_some_and(|f| o.length - f.pos <= APPROACH_ZONE)
                })
        })
    }

    fn next_speed(&mut self, i: usize, t: f64) -> f64 {
        let (gap, v_lead, budget) = self.leader(i, t);
        let r: f64 = self.rng.random();
        let route = &self.trips[i].route;
        let veh = self.vehicles[i].as_ref().expect("active");
        let p = &self.params;
        let here = self.edge(route[veh.cursor]);
        let v = veh.speed;

        let mut v_safe = safe_speed(v, v_lead, gap.max(0.0), p.decel, p.tau);
        let mut dist = here.length - veh.pos;
        for &e in &route[veh.cursor + 1..] {
            if dist > LOOKAHEAD {
                break;
            }
            let e = self.edge(e);
            if e.speed_limit < v {
                v_safe = v_safe.min(safe_speed(v, e.speed_limit, dist, p.decel, p.tau));
            }
            dist += e.length;
        }
        let v_top = veh.v_max.min(here.speed_limit);
        let v_des = v_top.min(v + p.accel * self.dt).min(v_safe);
        let mut next = (v_des - r * p.sigma * p.accel * self.dt).max(0.0);
        next = next.min(budget.max(0.0) / self.dt);

        // never enter an edge faster than its limit
        let mut dist = here.length - veh.pos;
        for &e in &route[veh.cursor + 1..] {
            if dist >= next * self.dt {
                break;
            }
            let e = self.edge(e);
            next = next.min(e.speed_limit);
            dist += e.length;
        }
        next
    }

    fn advance_crossing(&mut self, i: usize, v: f64, t: f64, t_next: f64) {
        let trip = &self.trips[i];
        let mut remaining = v * self.dt;
        let mut traveled = 0.0;
        let mut clamped = false;
        loop {
            let (cursor, lane, pos) = {
                let veh = self.vehicles[i].as_ref().expect("active");
                (veh.cursor, veh.lane, veh.pos)
            };
            let here = self.edge(trip.route[cursor]);
            let to_end = here.length - pos;
            if remaining <= to_end {
                let veh = self.vehicles[i].as_mut().expect("active");
                veh.pos += remaining;
                traveled += remaining;
                break;
            }
            let at_node = t + (traveled + to_end) / v;
            if cursor + 1 == trip.route.len() {
                self.vehicles[i].as_mut().expect("active").pos = here.length;
                if at_node - self.last_time(i) >= MIN_WP_SEP {
                    self.record(i, at_node, v);
                }
                self.queues.get_mut(&(here.id, lane)).expect("queue").retain(|&j| j != i);
                self.vehicles[i] = None;
                self.stats.finished += 1;
                return;
            }
            let next = self.edge(trip.route[cursor + 1]);
            let target = lane.min(next.lanes - 1);
            let room = match self.queues.get(&(next.id, target)).and_then(|q| q.back()) {
                Some(&b) => self.vehicles[b].as_ref().expect("active").pos - self.params.length,
                None => f64::INFINITY,
            };
            if room <= 0.0 {
                let veh = self.vehicles[i].as_mut().expect("active");
                veh.pos = here.length;
                traveled += to_end;
                clamped = true;
                break;
            }
            self.vehicles[i].as_mut().expect("active").pos = here.length;
            if at_node - self.last_time(i) >= MIN_WP_SEP && t_next - at_node >= MIN_WP_SEP {
                self.record(i, at_node, v);
            }
            self.queues.get_mut(&(here.id, lane)).expect("queue").retain(|&j| j != i);
            self.queues.entry((next.id, target)).or_default().push_back(i);
            {
                let veh = self.vehicles[i].as_mut().expect("active");
                veh.cursor += 1;
                veh.lane = target;
                veh.pos = 0.0;
                veh.driven.push(next.id);
            }
            traveled += to_end;
            remaining -= to_end;
            if remaining > room {
                remaining = room;
                clamped = true;
            }
        }
        let veh = self.vehicles[i].as_mut().expect("active");
        veh.speed = if clamped { traveled / self.dt } else { v };
    }

    fn check_step(&mut self) {
        for q in self.queues.values() {
            for pair in q.iter().collect::<Vec<_>>().windows(2) {
                let front = self.vehicles[*pair[0]].as_ref().expect("active");
                let back = self.vehicles[*pair[1]].as_ref().expect("active");
                let gap = front.pos - self.params.length - back.pos;
                self.stats.min_gap = self.stats.min_gap.min(gap);
                if gap < -1e-9 {
                    self.stats.gap_violations += 1;
                }
            }
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            if let Some(v) = v {
                let limit = self.edges[&self.trips[i].route[v.cursor]].speed_limit;
                if v.speed > v.v_max.min(limit) + 1e-9 || v.speed < 0.0 {
                    self.stats.speed_violations += 1;
                }
            }
        }
    }

    fn finish_checks(&mut self) {
        for (i, v) in self.vehicles.iter().enumerate() {
            if let Some(v) = v {
                if !self.trips[i].route.starts_with(&v.driven) {
                    self.stats.route_violations += 1;
                }
            }
        }
        debug_assert!(self.duration >= 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::VehicleClass;
    use crate::road_net::{Phase, RoadNode, TrafficLightProgram};

    fn line_net(lengths: &[f64], speed_limit: f64) -> RoadNetwork {
        let mut net = RoadNetwork::new();
        let mut x = 0.0;
        net.add_node(RoadNode { id: 0, pos: Point::new(0.0, 0.0), kind: NodeKind::Junction }).unwrap();
        for (i, &len) in lengths.iter().enumerate() {
            x += len;
            net.add_node(RoadNode { id: i as u32 + 1, pos: Point::new(x, 0.0), kind: NodeKind::Junction }).unwrap();
            net.add_edge(RoadEdge {
                id: i as u32,
                from: i as u32,
                to: i as u32 + 1,
                length: len,
                speed_limit,
                lanes: 1,
                priority: 0,
            })
            .unwrap();
        }
        net
    }

    fn trip(id: u32, depart: f64, route: Vec<EdgeId>) -> Trip {
        Trip { vehicle_id: id, depart, route, class: VehicleClass::Car, max_speed: None }
    }

    #[test]
    fn instant_acceleration_exits_after_length_over_speed() {
        let net = line_net(&[100.0], 50.0);
        let p = VehicleParams { accel: 1000.0, v_max: 10.0, sigma: 0.0, ..Default::default() };
        let rep = simulate_with_stats(&net, &[trip(0, 3.0, vec![0])], &p, 1.0, 30.0, 1).unwrap();
        assert_eq!(rep.stats.finished, 1);
        let last = rep.trace.nodes[0].waypoints.last().unwrap();
        assert!((last.t - 13.0).abs() <= 1.0, "exit at {}", last.t);
        assert_eq!((last.x, last.y), (100.0, 0.0));
        assert!(rep.trace.problems().is_empty(), "{:?}", rep.trace.problems());
    }

    #[test]
    fn follower_never_overlaps_leader() {
        let net = line_net(&[300.0, 200.0], 13.9);
        let trips: Vec<Trip> = (0..6).map(|i| trip(i, f64::from(i) * 0.5, vec![0, 1])).collect();
        let rep = simulate_with_stats(&net, &trips, &VehicleParams::default(), 1.0, 200.0, 5).unwrap();
        assert_eq!(rep.stats.gap_violations, 0);
        assert!(rep.stats.min_gap >= 0.0);
        assert_eq!(rep.stats.inserted, 6);
        assert_eq!(rep.stats.finished, 6);
        assert!(rep.stats.max_insert_delay > 0.0, "entry segment should delay later vehicles");
        assert!(rep.trace.problems().is_empty(), "{:?}", rep.trace.problems());
    }

    #[test]
    fn red_light_holds_vehicle_at_stop_line() {
        let mut net = line_net(&[100.0, 50.0], 13.9);
        // node 1 becomes a signal that is red for edge 0 for thousands of seconds
        net.set_kind(1, NodeKind::TrafficLight);
        let side = RoadNode { id: 9, pos: Point::new(100.0, 80.0), kind: NodeKind::Junction };
        net.add_node(side).unwrap();
        net.add_edge(RoadEdge { id: 7, from: 9, to: 1, length: 80.0, speed_limit: 13.9, lanes: 1, priority: 0 }).unwrap();
        net.add_program(TrafficLightProgram {
            node: 1,
            offset: 0.0,
            phases: vec![
                Phase { duration: 10_000.0, green: [7].into() },
                Phase { duration: 1.0, green: [0].into() },
            ],
        })
        .unwrap();
        assert!(net.validate().is_empty());
        let rep = simulate_with_stats(&net, &[trip(0, 0.0, vec![0, 1])], &VehicleParams::default(), 1.0, 120.0, 2).unwrap();
        let wps = &rep.trace.nodes[0].waypoints;
        assert!(wps.iter().all(|w| w.x <= 100.0 + 1e-9));
        let last = wps.last().unwrap();
        assert!(last.speed < 1e-9 && last.x > 90.0, "{last:?}");
        assert_eq!(rep.stats.finished, 0);
    }

    #[test]
    fn lower_speed_limit_is_respected_on_entry() {
        let mut net = line_net(&[200.0], 20.0);
        net.add_node(RoadNode { id: 2, pos: Point::new(300.0, 0.0), kind: NodeKind::Junction }).unwrap();
        net.add_edge(RoadEdge { id: 1, from: 1, to: 2, length: 100.0, speed_limit: 5.0, lanes: 1, priority: 0 }).unwrap();
        let p = VehicleParams { v_max: 20.0, ..Default::default() };
        let rep = simulate_with_stats(&net, &[trip(0, 0.0, vec![0, 1])], &p, 1.0, 100.0, 3).unwrap();
        assert_eq!(rep.stats.speed_violations, 0);
        assert_eq!(rep.stats.finished, 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let net = line_net(&[300.0, 200.0], 13.9);
        let trips: Vec<Trip> = (0..4).map(|i| trip(i, f64::from(i) * 3.0, vec![0, 1])).collect();
        let a = simulate(&net, &trips, &VehicleParams::default(), 1.0, 100.0, 9).unwrap();
        let b = simulate(&net, &trips, &VehicleParams::default(), 1.0, 100.0, 9).unwrap();
        let c = simulate(&net, &trips, &VehicleParams::default(), 1.0, 100.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_unknown_edges_and_bad_dt() {
        let net = line_net(&[100.0], 10.0);
        let err = simulate(&net, &[trip(4, 0.0, vec![3])], &VehicleParams::default(), 1.0, 10.0, 0).unwrap_err();
        assert_eq!(err, MobilityError::UnknownEdge { vehicle: 4, edge: 3 });
        assert!(simulate(&net, &[], &VehicleParams::default(), 2.0, 10.0, 0).is_err());
    }

    #[test]
    fn undeparted_vehicle_waits_at_route_start() {
        let net = line_net(&[100.0], 10.0);
        let trace = simulate(&net, &[trip(0, 500.0, vec![0])], &VehicleParams::default(), 1.0, 20.0, 0).unwrap();
        assert_eq!(trace.nodes[0].waypoints.len(), 1);
        assert_eq!(trace.position_at(0, 20.0).unwrap(), Point::new(0.0, 0.0));
    }
}
