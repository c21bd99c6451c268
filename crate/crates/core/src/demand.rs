//! Travel demand: flows, bus lines, turning tables and explicit trips, all
//! expanded into a flat list of routed [`Trip`]s.
//!
//! Demand files are line oriented:
//!
//! ```text
//! flow <origin> <dest> <count> <begin> <end>
//! bus <first> <last> <headway> <edge,edge,...>
//! turn <junction> <in-edge> <out-edge>:<p> ...
//! trip <depart> <edge,edge,...> [max-speed]
//! walk <depart> <start-edge> <max-edges>
//! ```
//!
//! `walk` sends one vehicle from `start-edge` through the turning table.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::rng::{self, SimRng};
use crate::road_net::{format_num as num, EdgeId, NodeId, NodeKind, RoadNetError, RoadNetwork};
use crate::ParseError;

/// Sum-to-one tolerance for turning probabilities.
const PROB_EPS: f64 = 1e-9;
/// Fresh origin/destination draws allowed per random trip.
const MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VehicleClass {
    Car,
    Bus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub vehicle_id: u32,
    pub depart: f64,
    pub route: Vec<EdgeId>,
    pub class: VehicleClass,
    /// Overrides the vehicle's own top speed for this trip.
    pub max_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub origin: NodeId,
    pub dest: NodeId,
    pub count: u32,
    pub begin: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusLine {
    pub route: Vec<EdgeId>,
    pub first_depart: f64,
    pub last_depart: f64,
    pub headway: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("no route from node {origin} to node {dest}")]
    NoRoute { origin: NodeId, dest: NodeId },
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
    #[error("invalid bus line: {0}")]
    InvalidBusLine(String),
    #[error("turn entry at junction {junction} from edge {in_edge}: {reason}")]
    InvalidTurn { junction: NodeId, in_edge: EdgeId, reason: String },
    #[error("route {0:?} is empty, disconnected or uses unknown edges")]
    BadRoute(Vec<EdgeId>),
    #[error("gave up after {0} draws; is the map disconnected?")]
    RetriesExhausted(usize),
    #[error("invalid departure window [{0}, {1}]")]
    BadWindow(f64, f64),
    #[error(transparent)]
    Network(#[from] RoadNetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Turning probabilities keyed by (junction, incoming edge).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TurnTable {
    entries: BTreeMap<(NodeId, EdgeId), Vec<(EdgeId, f64)>>,
}

impl TurnTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        net: &RoadNetwork,
        junction: NodeId,
        in_edge: EdgeId,
        choices: Vec<(EdgeId, f64)>,
    ) -> Result<(), DemandError> {
        let bad = |reason: String| DemandError::InvalidTurn { junction, in_edge, reason };
        match net.edge(in_edge) {
            Some(e) if e.to == junction => {}
            Some(_) => return Err(bad("incoming edge does not end at the junction".into())),
            None => return Err(bad("unknown incoming edge".into())),
        }
        if choices.is_empty() {
            return Err(bad("no outgoing choices".into()));
        }
        let mut total = 0.0;
        for &(out, p) in &choices {
            match net.edge(out) {
                Some(e) if e.from == junction => {}
                _ => return Err(bad(format!("edge {out} does not leave the junction"))),
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(bad(format!("probability {p} is negative")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROB_EPS {
            return Err(bad(format!("probabilities sum to {total}")));
        }
        self.entries.insert((junction, in_edge), choices);
        Ok(())
    }

    pub fn get(&self, junction: NodeId, in_edge: EdgeId) -> Option<&[(EdgeId, f64)]> {
        self.entries.get(&(junction, in_edge)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `count` trips spaced evenly over `[begin, end)`, all on the shortest route.
pub fn expand_flow(net: &RoadNetwork, flow: &Flow, first_id: u32) -> Result<Vec<Trip>, DemandError> {
    if flow.count < 1 {
        return Err(DemandError::InvalidFlow("count must be >= 1".into()));
    }
    if !(flow.begin >= 0.0 && flow.end >= flow.begin && flow.end.is_finite()) {
        return Err(DemandError::InvalidFlow(format!("bad window [{}, {}]", flow.begin, flow.end)));
    }
    if flow.origin == flow.dest {
        return Err(DemandError::InvalidFlow("origin equals destination".into()));
    }
    let route = net
        .shortest_route(flow.origin, flow.dest)?
        .ok_or(DemandError::NoRoute { origin: flow.origin, dest: flow.dest })?;
    let spacing = (flow.end - flow.begin) / f64::from(flow.count);
    Ok((0..flow.count)
        .map(|i| Trip {
            vehicle_id: first_id + i,
            depart: flow.begin + f64::from(i) * spacing,
            route: route.edges.clone(),
            class: VehicleClass::Car,
            max_speed: None,
        })
        .collect())
}

/// Number of departures `first, first + h, …` not later than `last`.
pub fn busline_count(line: &BusLine) -> u32 {
    // the epsilon keeps e.g. (0.3 - 0) / 0.1 from flooring to 2
    ((line.last_depart - line.first_depart) / line.headway + 1e-9).floor() as u32 + 1
}

/// Constant-headway bus departures from `first_depart` to `last_depart`.
pub fn expand_busline(line: &BusLine, first_id: u32) -> Result<Vec<Trip>, DemandError> {
    if line.route.is_empty() {
        return Err(DemandError::InvalidBusLine("empty route".into()));
    }
    if !(line.headway > 0.0 && line.headway.is_finite()) {
        return Err(DemandError::InvalidBusLine("headway must be > 0".into()));
    }
    if !(line.first_depart >= 0.0 && line.last_depart >= line.first_depart && line.last_depart.is_finite()) {
        return Err(DemandError::InvalidBusLine("need 0 <= first <= last".into()));
    }
    Ok((0..busline_count(line))
        .map(|i| Trip {
            vehicle_id: first_id + i,
            depart: line.first_depart + f64::from(i) * line.headway,
            route: line.route.clone(),
            class: VehicleClass::Bus,
            max_speed: None,
        })
        .collect())
}

fn check_window(window: (f64, f64)) -> Result<(), DemandError> {
    if !(window.0 >= 0.0 && window.1 >= window.0 && window.1.is_finite()) {
        return Err(DemandError::BadWindow(window.0, window.1));
    }
    Ok(())
}

fn depart_in(rng: &mut SimRng, window: (f64, f64)) -> f64 {
    if window.1 > window.0 {
        rng.random_range(window.0..window.1)
    } else {
        window.0
    }
}

/// `n` trips between uniformly drawn node pairs on their shortest routes.
pub fn random_trips(
    net: &RoadNetwork,
    n: u32,
    window: (f64, f64),
    seed: u64,
    first_id: u32,
) -> Result<Vec<Trip>, DemandError> {
    check_window(window)?;
    let mut rng = rng::stream(seed, "demand");
    let ids: Vec<NodeId> = net.nodes().map(|n| n.id).collect();
    let mut trips = Vec::with_capacity(n as usize);
    for i in 0..n {
        let route = (0..MAX_RETRIES).find_map(|_| {
            if ids.len() < 2 {
                return None;
            }
            let o = ids[rng.random_range(0..ids.len())];
            let d = ids[rng.random_range(0..ids.len())];
            if o == d {
                return None;
            }
            net.shortest_route(o, d).ok().flatten()
        });
        let route = route.ok_or(DemandError::RetriesExhausted(MAX_RETRIES))?;
        trips.push(Trip {
            vehicle_id: first_id + i,
            depart: depart_in(&mut rng, window),
            route: route.edges,
            class: VehicleClass::Car,
            max_speed: None,
        });
    }
    Ok(trips)
}

/// Random walk through the junctions starting with `start_edge`.
///
/// At each junction the next edge comes from the table entry for the
/// incoming edge; without an entry the choice is uniform over the outgoing
/// edges other than the straight U-turn (kept only when it is the sole way
/// out). The walk stops at a dead end, at a node without exits, or after
/// `max_edges` edges.
pub fn turn_route(
    net: &RoadNetwork,
    table: &TurnTable,
    start_edge: EdgeId,
    max_edges: usize,
    rng: &mut SimRng,
) -> Result<Vec<EdgeId>, DemandError> {
    let mut current = net.edge(start_edge).ok_or(RoadNetError::UnknownEdge(start_edge))?;
    let mut route = vec![start_edge];
    while route.len() < max_edges {
        let junction = current.to;
        if net.node(junction).is_some_and(|n| n.kind == NodeKind::DeadEnd) {
            break;
        }
        let next = match table.get(junction, current.id) {
            Some(choices) => {
                let r: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = choices[choices.len() - 1].0;
                for &(e, p) in choices {
                    acc += p;
                    if r < acc {
                        pick = e;
                        break;
                    }
                }
                pick
            }
            None => {
                let all = net.out_edges(junction);
                let forward: Vec<EdgeId> = all
                    .iter()
                    .copied()
                    .filter(|&e| net.edge(e).is_some_and(|e| e.to != current.from))
                    .collect();
                let options = if forward.is_empty() { all } else { forward.as_slice() };
                match options.len() {
                    0 => break,
                    len => options[rng.random_range(0..len)],
                }
            }
        };
        route.push(next);
        current = net.edge(next).ok_or(RoadNetError::UnknownEdge(next))?;
    }
    Ok(route)
}

/// `n` walks of at most `max_edges` edges from uniformly drawn start edges.
pub fn random_walks(
    net: &RoadNetwork,
    table: &TurnTable,
    n: u32,
    window: (f64, f64),
    max_edges: usize,
    seed: u64,
    first_id: u32,
) -> Result<Vec<Trip>, DemandError> {
    check_window(window)?;
    let edges: Vec<EdgeId> = net.edges().map(|e| e.id).collect();
    if edges.is_empty() && n > 0 {
        return Err(DemandError::BadRoute(Vec::new()));
    }
    let mut rng = rng::stream(seed, "demand");
    let mut trips = Vec::with_capacity(n as usize);
    for i in 0..n {
        let start = edges[rng.random_range(0..edges.len())];
        let depart = depart_in(&mut rng, window);
        let route = turn_route(net, table, start, max_edges, &mut rng)?;
        trips.push(Trip { vehicle_id: first_id + i, depart, route, class: VehicleClass::Car, max_speed: None });
    }
    Ok(trips)
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Flow(Flow),
    Bus(BusLine),
    Trip { depart: f64, route: Vec<EdgeId>, max_speed: Option<f64> },
    Walk { depart: f64, start: EdgeId, max_edges: usize },
}

/// Turning probabilities for traffic arriving at a junction over one edge.
type TurnRule = (NodeId, EdgeId, Vec<(EdgeId, f64)>);

/// Parsed demand file, expanded against a network with [`Demand::expand`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Demand {
    items: Vec<Item>,
    turns: Vec<TurnRule>,
}

impl Demand {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut demand = Demand::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let f: Vec<&str> = content.split_whitespace().collect();
            let arity = |n: usize| {
                if f.len() == n + 1 {
                    Ok(())
                } else {
                    Err(ParseError::new(line, format!("{} expects {n} fields", f[0])))
                }
            };
            match f[0] {
                "flow" => {
                    arity(5)?;
                    demand.items.push(Item::Flow(Flow {
                        origin: num(f[1], line)?,
                        dest: num(f[2], line)?,
                        count: num(f[3], line)?,
                        begin: num(f[4], line)?,
                        end: num(f[5], line)?,
                    }));
                }
                "bus" => {
                    arity(4)?;
                    demand.items.push(Item::Bus(BusLine {
                        first_depart: num(f[1], line)?,
                        last_depart: num(f[2], line)?,
                        headway: num(f[3], line)?,
                        route: edge_list(f[4], line)?,
                    }));
                }
                "turn" => {
                    if f.len() < 4 {
                        return Err(ParseError::new(line, "turn expects a junction, an edge and choices"));
                    }
                    let choices = f[3..]
                        .iter()
                        .map(|c| {
                            let (e, p) = c
                                .split_once(':')
                                .ok_or_else(|| ParseError::new(line, format!("choice `{c}` lacks `:`")))?;
                            Ok((num(e, line)?, num(p, line)?))
                        })
                        .collect::<Result<Vec<_>, ParseError>>()?;
                    demand.turns.push((num(f[1], line)?, num(f[2], line)?, choices));
                }
                "trip" => {
                    if f.len() != 3 && f.len() != 4 {
                        return Err(ParseError::new(line, "trip expects a departure, edges and an optional speed"));
                    }
                    let max_speed = f.get(3).map(|s| num(s, line)).transpose()?;
                    demand.items.push(Item::Trip { depart: num(f[1], line)?, route: edge_list(f[2], line)?, max_speed });
                }
                "walk" => {
                    arity(3)?;
                    demand.items.push(Item::Walk {
                        depart: num(f[1], line)?,
                        start: num(f[2], line)?,
                        max_edges: num(f[3], line)?,
                    });
                }
                other => return Err(ParseError::new(line, format!("unknown record `{other}`"))),
            }
        }
        Ok(demand)
    }

    pub fn turn_table(&self, net: &RoadNetwork) -> Result<TurnTable, DemandError> {
        let mut table = TurnTable::new();
        for (junction, in_edge, choices) in &self.turns {
            table.insert(net, *junction, *in_edge, choices.clone())?;
        }
        Ok(table)
    }

    /// Expands every entry in file order; vehicle ids are dense from 0.
    pub fn expand(&self, net: &RoadNetwork, seed: u64) -> Result<Vec<Trip>, DemandError> {
        let table = self.turn_table(net)?;
        let mut rng = rng::stream(seed, "demand");
        let mut trips: Vec<Trip> = Vec::new();
        for item in &self.items {
            let next = trips.len() as u32;
            match item {
                Item::Flow(flow) => trips.extend(expand_flow(net, flow, next)?),
                Item::Bus(line) => {
                    if !net.is_connected_route(&line.route) {
                        return Err(DemandError::BadRoute(line.route.clone()));
                    }
                    trips.extend(expand_busline(line, next)?);
                }
                Item::Trip { depart, route, max_speed } => {
                    if !net.is_connected_route(route) || !(*depart >= 0.0 && depart.is_finite()) {
                        return Err(DemandError::BadRoute(route.clone()));
                    }
                    trips.push(Trip {
                        vehicle_id: next,
                        depart: *depart,
                        route: route.clone(),
                        class: VehicleClass::Car,
                        max_speed: *max_speed,
                    });
                }
                Item::Walk { depart, start, max_edges } => {
                    let route = turn_route(net, &table, *start, (*max_edges).max(1), &mut rng)?;
                    trips.push(Trip { vehicle_id: next, depart: *depart, route, class: VehicleClass::Car, max_speed: None });
                }
            }
        }
        Ok(trips)
    }
}

fn edge_list(s: &str, line: usize) -> Result<Vec<EdgeId>, ParseError> {
    s.split(',').filter(|p| !p.is_empty()).map(|p| num(p, line)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_gen::{generate_grid, GridSpec};
    use crate::road_net::{Point, RoadEdge, RoadNode};

    fn grid3() -> RoadNetwork {
        generate_grid(&GridSpec { k: 3, block_len: 100.0, defaults: Default::default() }).unwrap()
    }

    fn flow(count: u32, begin: f64, end: f64) -> Flow {
        Flow { origin: 0, dest: 8, count, begin, end }
    }

    #[test]
    fn single_vehicle_flow() {
        let trips = expand_flow(&grid3(), &flow(1, 5.0, 5.0), 0).unwrap();
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].depart, 5.0);
    }

    #[test]
    fn flow_departures_are_evenly_spaced() {
        let net = grid3();
        let trips = expand_flow(&net, &flow(4, 0.0, 100.0), 10).unwrap();
        let departs: Vec<f64> = trips.iter().map(|t| t.depart).collect();
        assert_eq!(departs, [0.0, 25.0, 50.0, 75.0]);
        assert_eq!(trips.iter().map(|t| t.vehicle_id).collect::<Vec<_>>(), [10, 11, 12, 13]);
        let best = net.shortest_route(0, 8).unwrap().unwrap().edges;
        assert!(trips.iter().all(|t| t.route == best));
    }

    #[test]
    fn unreachable_flow_is_an_error() {
        let net = RoadNetwork::from_parts(
            [
                RoadNode { id: 0, pos: Point::new(0.0, 0.0), kind: NodeKind::Junction },
                RoadNode { id: 1, pos: Point::new(10.0, 0.0), kind: NodeKind::Junction },
            ],
            [RoadEdge { id: 0, from: 1, to: 0, length: 10.0, speed_limit: 10.0, lanes: 1, priority: 0 }],
            [],
        );
        let err = expand_flow(&net, &Flow { origin: 0, dest: 1, count: 1, begin: 0.0, end: 0.0 }, 0);
        assert_eq!(err, Err(DemandError::NoRoute { origin: 0, dest: 1 }));
    }

    fn line(first: f64, last: f64, headway: f64) -> BusLine {
        BusLine { route: vec![0], first_depart: first, last_depart: last, headway }
    }

    #[test]
    fn bus_timetables() {
        let departs = |l: BusLine| expand_busline(&l, 0).unwrap().iter().map(|t| t.depart).collect::<Vec<_>>();
        assert_eq!(departs(line(0.0, 30.0, 10.0)), [0.0, 10.0, 20.0, 30.0]);
        assert_eq!(departs(line(7.0, 7.0, 10.0)), [7.0]);
        assert_eq!(departs(line(0.0, 25.0, 10.0)), [0.0, 10.0, 20.0]);
        assert!(expand_busline(&line(0.0, 30.0, 10.0), 0).unwrap().iter().all(|t| t.class == VehicleClass::Bus));
        assert!(expand_busline(&line(0.0, 30.0, 0.0), 0).is_err());
    }

    #[test]
    fn random_trips_basics() {
        let net = grid3();
        assert!(random_trips(&net, 0, (0.0, 10.0), 1, 0).unwrap().is_empty());
        let a = random_trips(&net, 50, (0.0, 100.0), 9, 0).unwrap();
        let b = random_trips(&net, 50, (0.0, 100.0), 9, 0).unwrap();
        assert_eq!(a, b);
        for t in &a {
            assert!(net.is_connected_route(&t.route));
            let first = net.edge(t.route[0]).unwrap().from;
            let last = net.edge(*t.route.last().unwrap()).unwrap().to;
            assert_ne!(first, last);
            assert!((0.0..100.0).contains(&t.depart));
        }
    }

    #[test]
    fn random_trips_give_up_on_single_node() {
        let net = generate_grid(&GridSpec { k: 1, block_len: 10.0, defaults: Default::default() }).unwrap();
        assert_eq!(random_trips(&net, 1, (0.0, 1.0), 1, 0), Err(DemandError::RetriesExhausted(MAX_RETRIES)));
    }

    #[test]
    fn certain_turn_is_always_taken() {
        let net = grid3();
        // edge 0: 0 -> 1; from node 1 go up to node 4
        let up = net.out_edges(1).iter().copied().find(|&e| net.edge(e).unwrap().to == 4).unwrap();
        let mut table = TurnTable::new();
        table.insert(&net, 1, 0, vec![(up, 1.0)]).unwrap();
        for seed in 0..20 {
            let r = turn_route(&net, &table, 0, 2, &mut rng::from_seed(seed)).unwrap();
            assert_eq!(r, [0, up]);
        }
    }

    #[test]
    fn walk_stops_at_dead_end() {
        let net = RoadNetwork::from_parts(
            [
                RoadNode { id: 0, pos: Point::new(0.0, 0.0), kind: NodeKind::Junction },
                RoadNode { id: 1, pos: Point::new(10.0, 0.0), kind: NodeKind::DeadEnd },
            ],
            [
                RoadEdge { id: 0, from: 0, to: 1, length: 10.0, speed_limit: 10.0, lanes: 1, priority: 0 },
                RoadEdge { id: 1, from: 1, to: 0, length: 10.0, speed_limit: 10.0, lanes: 1, priority: 0 },
            ],
            [],
        );
        let r = turn_route(&net, &TurnTable::new(), 0, 50, &mut rng::from_seed(1)).unwrap();
        assert_eq!(r, [0]);
    }

    #[test]
    fn turn_table_rejects_bad_entries() {
        let net = grid3();
        let outs = net.out_edges(1).to_vec();
        let mut t = TurnTable::new();
        assert!(t.insert(&net, 1, 0, vec![(outs[0], 0.5), (outs[1], 0.4)]).is_err());
        assert!(t.insert(&net, 1, 0, vec![(outs[0], -0.5), (outs[1], 1.5)]).is_err());
        assert!(t.insert(&net, 2, 0, vec![(outs[0], 1.0)]).is_err());
        assert!(t.insert(&net, 1, 0, vec![(0, 1.0)]).is_err());
        assert!(t.insert(&net, 1, 0, vec![(outs[0], 0.25), (outs[1], 0.75)]).is_ok());
    }

    #[test]
    fn demand_file_expands_in_order() {
        let net = grid3();
        let up = net.out_edges(1).iter().copied().find(|&e| net.edge(e).unwrap().to == 4).unwrap();
        let text = format!(
            "# demand\nflow 0 8 2 0 10\nbus 0 20 10 0\ntrip 3.5 0,{up} 8.5\nturn 1 0 {up}:1.0\nwalk 1 0 2\n"
        );
        let d = Demand::parse(&text).unwrap();
        let trips = d.expand(&net, 4).unwrap();
        assert_eq!(trips.len(), 2 + 3 + 1 + 1);
        assert_eq!(trips.iter().map(|t| t.vehicle_id).collect::<Vec<_>>(), (0..7).collect::<Vec<_>>());
        assert_eq!(trips[2].class, VehicleClass::Bus);
        assert_eq!(trips[5].max_speed, Some(8.5));
        assert_eq!(trips[6].route, [0, up]);
    }

    #[test]
    fn demand_file_errors() {
        assert_eq!(Demand::parse("flow 0 1 2\n").unwrap_err().line, 1);
        assert_eq!(Demand::parse("\nteleport 3\n").unwrap_err().line, 2);
        let d = Demand::parse("trip 0 0,5\n").unwrap();
        assert!(matches!(d.expand(&grid3(), 0), Err(DemandError::BadRoute(_))));
    }
}
