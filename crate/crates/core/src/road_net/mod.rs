//! Directed road graph: junctions, dead ends and traffic-light nodes joined
//! by one-way road edges.
//!
//! A network built through [`RoadNetwork::add_node`], [`RoadNetwork::add_edge`]
//! and [`RoadNetwork::add_program`] rejects items that break their own
//! invariants. Whole-network rules (program coverage, every light having a
//! program) can only be judged once construction is over, so they are checked
//! by [`RoadNetwork::validate`], which reports violations as data.

mod format;
mod route;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub(crate) use format::num as format_num;
pub use format::{parse_network, write_network};
pub use route::{route_cost, Route};

pub type NodeId = u32;
pub type EdgeId = u32;

/// Slack allowed when comparing an edge length against the straight-line
/// distance between its endpoints.
const LENGTH_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point at fraction `f` of the way from `self` to `other`.
    pub fn lerp(self, other: Point, f: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * f, self.y + (other.y - self.y) * f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Junction,
    TrafficLight,
    DeadEnd,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Junction => "junction",
            NodeKind::TrafficLight => "traffic_light",
            NodeKind::DeadEnd => "dead_end",
        }
    }
}

impl std::str::FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "junction" => Ok(NodeKind::Junction),
            "traffic_light" => Ok(NodeKind::TrafficLight),
            "dead_end" => Ok(NodeKind::DeadEnd),
            other => Err(format!("unknown node kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNode {
    pub id: NodeId,
    pub pos: Point,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    /// Meters along the road; never shorter than the endpoint chord.
    pub length: f64,
    /// Meters per second.
    pub speed_limit: f64,
    pub lanes: u32,
    /// Right-of-way rank at unsignalised junctions. Ignored by routing.
    pub priority: u32,
}

impl RoadEdge {
    /// Free-flow travel time in seconds.
    pub fn travel_time(&self) -> f64 {
        self.length / self.speed_limit
    }
}

/// Default attributes stamped onto generated edges.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdgeDefaults {
    pub speed_limit: f64,
    pub lanes: u32,
    pub priority: u32,
}

impl Default for EdgeDefaults {
    fn default() -> Self {
        Self { speed_limit: 13.9, lanes: 1, priority: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub duration: f64,
    pub green: BTreeSet<EdgeId>,
}

/// Fixed-time signal plan for one traffic-light node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficLightProgram {
    pub node: NodeId,
    pub offset: f64,
    pub phases: Vec<Phase>,
}

impl TrafficLightProgram {
    pub fn cycle(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    /// Whether `edge` may cross the stop line at simulation time `t`.
    pub fn is_green(&self, edge: EdgeId, t: f64) -> bool {
        let cycle = self.cycle();
        if cycle <= 0.0 {
            return false;
        }
        let mut local = (t - self.offset).rem_euclid(cycle);
        for phase in &self.phases {
            if local < phase.duration {
                return phase.green.contains(&edge);
            }
            local -= phase.duration;
        }
        // rem_euclid can land exactly on `cycle` through rounding; that is the
        // start of the first phase.
        self.phases[0].green.contains(&edge)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoadNetError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("edge {edge} references missing node {node}")]
    DanglingEndpoint { edge: EdgeId, node: NodeId },
    #[error("edge {0} is a self-loop")]
    SelfLoop(EdgeId),
    #[error("edge {edge}: length {length} < {distance} Euclidean")]
    TooShort { edge: EdgeId, length: f64, distance: f64 },
    #[error("edge {edge}: {reason}")]
    BadAttribute { edge: EdgeId, reason: &'static str },
    #[error("dead end {node} would have degree {degree} (max 2)")]
    DeadEndDegree { node: NodeId, degree: usize },
    #[error("node {0} is not a traffic light")]
    NotTrafficLight(NodeId),
    #[error("traffic light {0} already has a program")]
    DuplicateProgram(NodeId),
    #[error("program for node {node}: {reason}")]
    BadProgram { node: NodeId, reason: String },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge id {0}")]
    UnknownEdge(EdgeId),
}

/// One broken rule, named by the offending id.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingEndpoint { edge: EdgeId, node: NodeId },
    SelfLoop { edge: EdgeId },
    TooShort { edge: EdgeId, length: f64, distance: f64 },
    BadAttribute { edge: EdgeId, reason: &'static str },
    DeadEndDegree { node: NodeId, degree: usize },
    MissingProgram { node: NodeId },
    ProgramOnNonLight { node: NodeId },
    EmptyCycle { node: NodeId },
    BadPhaseDuration { node: NodeId, phase: usize },
    NegativeOffset { node: NodeId },
    ForeignGreenEdge { node: NodeId, edge: EdgeId },
    UncoveredApproach { node: NodeId, edge: EdgeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEndpoint { edge, node } => {
                write!(f, "dangling-endpoint(edge {edge}, node {node})")
            }
            Violation::SelfLoop { edge } => write!(f, "self-loop(edge {edge})"),
            Violation::TooShort { edge, length, distance } => {
                write!(f, "too-short(edge {edge}, length {length} < {distance})")
            }
            Violation::BadAttribute { edge, reason } => {
                write!(f, "bad-attribute(edge {edge}, {reason})")
            }
            Violation::DeadEndDegree { node, degree } => {
                write!(f, "dead-end-degree(node {node}, degree {degree})")
            }
            Violation::MissingProgram { node } => write!(f, "missing-program(node {node})"),
            Violation::ProgramOnNonLight { node } => {
                write!(f, "program-on-non-light(node {node})")
            }
            Violation::EmptyCycle { node } => write!(f, "empty-cycle(node {node})"),
            Violation::BadPhaseDuration { node, phase } => {
                write!(f, "bad-phase-duration(node {node}, phase {phase})")
            }
            Violation::NegativeOffset { node } => write!(f, "negative-offset(node {node})"),
            Violation::ForeignGreenEdge { node, edge } => {
                write!(f, "foreign-green-edge(node {node}, edge {edge})")
            }
            Violation::UncoveredApproach { node, edge } => {
                write!(f, "uncovered-approach(node {node}, edge {edge})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoadNetwork {
    nodes: BTreeMap<NodeId, RoadNode>,
    edges: BTreeMap<EdgeId, RoadEdge>,
    programs: BTreeMap<NodeId, TrafficLightProgram>,
    out_edges: BTreeMap<NodeId, Vec<EdgeId>>,
    in_edges: BTreeMap<NodeId, Vec<EdgeId>>,
}

impl RoadNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assembles a network without checking anything. Use [`validate`] to
    /// find out what is wrong with it.
    ///
    /// Later duplicates silently replace earlier ones.
    ///
    /// [`validate`]: RoadNetwork::validate
    pub fn from_parts(
        nodes: impl IntoIterator<Item = RoadNode>,
        edges: impl IntoIterator<Item = RoadEdge>,
        programs: impl IntoIterator<Item = TrafficLightProgram>,
    ) -> Self {
        let mut net = Self::new();
        for n in nodes {
            net.nodes.insert(n.id, n);
        }
        for e in edges {
            net.edges.insert(e.id, e);
        }
        for p in programs {
            net.programs.insert(p.node, p);
        }
        net.rebuild_adjacency();
        net
    }

    fn rebuild_adjacency(&mut self) {
        self.out_edges.clear();
        self.in_edges.clear();
        for e in self.edges.values() {
            self.out_edges.entry(e.from).or_default().push(e.id);
            self.in_edges.entry(e.to).or_default().push(e.id);
        }
    }

    pub fn add_node(&mut self, node: RoadNode) -> Result<(), RoadNetError> {
        if self.nodes.contains_key(&node.id) {
            return Err(RoadNetError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id, node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: RoadEdge) -> Result<(), RoadNetError> {
        if self.edges.contains_key(&edge.id) {
            return Err(RoadNetError::DuplicateEdge(edge.id));
        }
        if edge.from == edge.to {
            return Err(RoadNetError::SelfLoop(edge.id));
        }
        if let Some(reason) = attribute_problem(&edge) {
            return Err(RoadNetError::BadAttribute { edge: edge.id, reason });
        }
        let from = self
            .nodes
            .get(&edge.from)
            .ok_or(RoadNetError::DanglingEndpoint { edge: edge.id, node: edge.from })?;
        let to = self
            .nodes
            .get(&edge.to)
            .ok_or(RoadNetError::DanglingEndpoint { edge: edge.id, node: edge.to })?;
        let distance = from.pos.distance(to.pos);
        if is_too_short(edge.length, distance) {
            return Err(RoadNetError::TooShort { edge: edge.id, length: edge.length, distance });
        }
        for node in [from, to] {
            if node.kind == NodeKind::DeadEnd {
                let degree = self.degree(node.id) + 1;
                if degree > 2 {
                    return Err(RoadNetError::DeadEndDegree { node: node.id, degree });
                }
            }
        }
        self.out_edges.entry(edge.from).or_default().push(edge.id);
        self.in_edges.entry(edge.to).or_default().push(edge.id);
        self.edges.insert(edge.id, edge);
        Ok(())
    }

    /// Attaches a signal plan. Coverage of every approach is left to
    /// [`validate`](RoadNetwork::validate) because approaches may still be
    /// added afterwards.
    pub fn add_program(&mut self, program: TrafficLightProgram) -> Result<(), RoadNetError> {
        let node = self
            .nodes
            .get(&program.node)
            .ok_or(RoadNetError::UnknownNode(program.node))?;
        if node.kind != NodeKind::TrafficLight {
            return Err(RoadNetError::NotTrafficLight(program.node));
        }
        if self.programs.contains_key(&program.node) {
            return Err(RoadNetError::DuplicateProgram(program.node));
        }
        if let Some(v) = self.program_problems(&program, false).into_iter().next() {
            return Err(RoadNetError::BadProgram { node: program.node, reason: v.to_string() });
        }
        self.programs.insert(program.node, program);
        Ok(())
    }

    /// Swaps a node's kind in place; used when promoting junctions to lights.
    pub(crate) fn set_kind(&mut self, node: NodeId, kind: NodeKind) {
        if let Some(n) = self.nodes.get_mut(&node) {
            n.kind = kind;
        }
    }

    pub fn node(&self, id: NodeId) -> Option<&RoadNode> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&RoadEdge> {
        self.edges.get(&id)
    }

    pub fn program(&self, node: NodeId) -> Option<&TrafficLightProgram> {
        self.programs.get(&node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &RoadNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &RoadEdge> {
        self.edges.values()
    }

    pub fn programs(&self) -> impl Iterator<Item = &TrafficLightProgram> {
        self.programs.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edge ids of `node`, ascending.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        self.out_edges.get(&node).map_or(&[], Vec::as_slice)
    }

    /// Incoming edge ids of `node`, ascending.
    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        self.in_edges.get(&node).map_or(&[], Vec::as_slice)
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, node: NodeId) -> usize {
        self.out_edges(node).len() + self.in_edges(node).len()
    }

    /// Number of distinct nodes adjacent in either direction.
    pub fn neighbor_count(&self, node: NodeId) -> usize {
        let mut set = BTreeSet::new();
        for &e in self.out_edges(node) {
            set.insert(self.edges[&e].to);
        }
        for &e in self.in_edges(node) {
            set.insert(self.edges[&e].from);
        }
        set.len()
    }

    /// Axis-aligned bounding box of all node positions as (min, max).
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let mut it = self.nodes.values().map(|n| n.pos);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (Point::new(lo.x.min(p.x), lo.y.min(p.y)), Point::new(hi.x.max(p.x), hi.y.max(p.y)))
        }))
    }

    /// Position at `offset` meters along `edge`, interpolated on the chord.
    pub fn position_on_edge(&self, edge: &RoadEdge, offset: f64) -> Point {
        let a = self.nodes[&edge.from].pos;
        let b = self.nodes[&edge.to].pos;
        let f = if edge.length > 0.0 { (offset / edge.length).clamp(0.0, 1.0) } else { 0.0 };
        a.lerp(b, f)
    }

    /// Every broken invariant, in a stable order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for e in self.edges.values() {
            if e.from == e.to {
                out.push(Violation::SelfLoop { edge: e.id });
            }
            if let Some(reason) = attribute_problem(e) {
                out.push(Violation::BadAttribute { edge: e.id, reason });
            }
            let mut endpoints_ok = true;
            for node in [e.from, e.to] {
                if !self.nodes.contains_key(&node) {
                    out.push(Violation::DanglingEndpoint { edge: e.id, node });
                    endpoints_ok = false;
                }
                if e.from == e.to {
                    break;
                }
            }
            if endpoints_ok {
                let distance = self.nodes[&e.from].pos.distance(self.nodes[&e.to].pos);
                if is_too_short(e.length, distance) {
                    out.push(Violation::TooShort { edge: e.id, length: e.length, distance });
                }
            }
        }
        for n in self.nodes.values() {
            if n.kind == NodeKind::DeadEnd {
                let degree = self.degree(n.id);
                if degree > 2 {
                    out.push(Violation::DeadEndDegree { node: n.id, degree });
                }
            }
            if n.kind == NodeKind::TrafficLight && !self.programs.contains_key(&n.id) {
                out.push(Violation::MissingProgram { node: n.id });
            }
        }
        for p in self.programs.values() {
            let is_light =
                self.nodes.get(&p.node).is_some_and(|n| n.kind == NodeKind::TrafficLight);
            if !is_light {
                out.push(Violation::ProgramOnNonLight { node: p.node });
                continue;
            }
            out.extend(self.program_problems(p, true));
        }
        out
    }

    fn program_problems(&self, p: &TrafficLightProgram, check_coverage: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(p.offset >= 0.0 && p.offset.is_finite()) {
            out.push(Violation::NegativeOffset { node: p.node });
        }
        if p.phases.is_empty() || !(p.cycle() > 0.0) {
            out.push(Violation::EmptyCycle { node: p.node });
        }
        for (i, ph) in p.phases.iter().enumerate() {
            if !(ph.duration > 0.0 && ph.duration.is_finite()) {
                out.push(Violation::BadPhaseDuration { node: p.node, phase: i });
            }
        }
        let incoming: BTreeSet<EdgeId> = self.in_edges(p.node).iter().copied().collect();
        let mut seen = BTreeSet::new();
        for ph in &p.phases {
            for &e in &ph.green {
                if !incoming.contains(&e) {
                    out.push(Violation::ForeignGreenEdge { node: p.node, edge: e });
                }
                seen.insert(e);
            }
        }
        if check_coverage {
            for e in incoming.difference(&seen) {
                out.push(Violation::UncoveredApproach { node: p.node, edge: *e });
            }
        }
        out
    }

    /// Minimum free-flow travel-time route from `origin` to `dest`.
    ///
    /// Among equal-cost routes the lexicographically smallest edge-id
    /// sequence wins. `Ok(None)` means `dest` is unreachable.
    pub fn shortest_route(
        &self,
        origin: NodeId,
        dest: NodeId,
    ) -> Result<Option<Route>, RoadNetError> {
        route::shortest_route(self, origin, dest)
    }

    /// Whether `edges` is a non-empty connected sequence of existing edges.
    pub fn is_connected_route(&self, edges: &[EdgeId]) -> bool {
        if edges.is_empty() {
            return false;
        }
        let Some(mut prev) = self.edges.get(&edges[0]) else {
            return false;
        };
        for id in &edges[1..] {
            match self.edges.get(id) {
                Some(e) if e.from == prev.to => prev = e,
                _ => return false,
            }
        }
        true
    }
}

fn attribute_problem(e: &RoadEdge) -> Option<&'static str> {
    if !(e.length > 0.0 && e.length.is_finite()) {
        Some("length must be > 0")
    } else if !(e.speed_limit > 0.0 && e.speed_limit.is_finite()) {
        Some("speed limit must be > 0")
    } else if e.lanes < 1 {
        Some("lanes must be >= 1")
    } else {
        None
    }
}

fn is_too_short(length: f64, distance: f64) -> bool {
    length + LENGTH_EPS * distance.max(1.0) < distance
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: NodeId, x: f64, y: f64) -> RoadNode {
        RoadNode { id, pos: Point::new(x, y), kind: NodeKind::Junction }
    }

    fn edge(id: EdgeId, from: NodeId, to: NodeId, length: f64) -> RoadEdge {
        RoadEdge { id, from, to, length, speed_limit: 10.0, lanes: 1, priority: 0 }
    }

    fn two_nodes() -> RoadNetwork {
        let mut net = RoadNetwork::new();
        net.add_node(node(0, 0.0, 0.0)).unwrap();
        net.add_node(node(1, 100.0, 0.0)).unwrap();
        net
    }

    #[test]
    fn straight_road_is_accepted() {
        let mut net = two_nodes();
        net.add_edge(edge(0, 0, 1, 100.0)).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert!(net.validate().is_empty());
    }

    #[test]
    fn shortcut_edge_is_rejected() {
        let mut net = two_nodes();
        let err = net.add_edge(edge(0, 0, 1, 90.0)).unwrap_err();
        assert_eq!(err, RoadNetError::TooShort { edge: 0, length: 90.0, distance: 100.0 });
    }

    #[test]
    fn self_loop_is_rejected() {
        let mut net = two_nodes();
        assert_eq!(net.add_edge(edge(0, 1, 1, 5.0)), Err(RoadNetError::SelfLoop(0)));
    }

    #[test]
    fn duplicates_and_dangling_are_rejected() {
        let mut net = two_nodes();
        assert_eq!(net.add_node(node(1, 3.0, 3.0)), Err(RoadNetError::DuplicateNode(1)));
        net.add_edge(edge(4, 0, 1, 100.0)).unwrap();
        assert_eq!(net.add_edge(edge(4, 1, 0, 100.0)), Err(RoadNetError::DuplicateEdge(4)));
        assert_eq!(
            net.add_edge(edge(5, 0, 9, 100.0)),
            Err(RoadNetError::DanglingEndpoint { edge: 5, node: 9 })
        );
    }

    #[test]
    fn dead_end_degree_is_capped() {
        let mut net = RoadNetwork::new();
        net.add_node(RoadNode { id: 0, pos: Point::new(0.0, 0.0), kind: NodeKind::DeadEnd })
            .unwrap();
        net.add_node(node(1, 10.0, 0.0)).unwrap();
        net.add_node(node(2, 0.0, 10.0)).unwrap();
        net.add_edge(edge(0, 0, 1, 10.0)).unwrap();
        net.add_edge(edge(1, 1, 0, 10.0)).unwrap();
        let err = net.add_edge(edge(2, 0, 2, 10.0)).unwrap_err();
        assert_eq!(err, RoadNetError::DeadEndDegree { node: 0, degree: 3 });
    }

    #[test]
    fn empty_network_is_valid() {
        assert!(RoadNetwork::new().validate().is_empty());
    }

    #[test]
    fn validate_reports_dangling_endpoint() {
        let net = RoadNetwork::from_parts([node(1, 0.0, 0.0)], [edge(3, 1, 7, 10.0)], []);
        assert_eq!(net.validate(), vec![Violation::DanglingEndpoint { edge: 3, node: 7 }]);
    }

    #[test]
    fn validate_reports_missing_program() {
        let tl = RoadNode { id: 2, pos: Point::new(0.0, 0.0), kind: NodeKind::TrafficLight };
        let net = RoadNetwork::from_parts([tl], [], []);
        assert_eq!(net.validate(), vec![Violation::MissingProgram { node: 2 }]);
    }

    #[test]
    fn program_must_cover_every_approach() {
        let mut net = RoadNetwork::new();
        net.add_node(node(0, 0.0, 0.0)).unwrap();
        net.add_node(node(1, 100.0, 0.0)).unwrap();
        net.add_node(RoadNode { id: 2, pos: Point::new(50.0, 50.0), kind: NodeKind::TrafficLight })
            .unwrap();
        net.add_edge(edge(0, 0, 2, 80.0)).unwrap();
        net.add_edge(edge(1, 1, 2, 80.0)).unwrap();
        let program = TrafficLightProgram {
            node: 2,
            offset: 0.0,
            phases: vec![Phase { duration: 30.0, green: [0].into() }],
        };
        net.add_program(program).unwrap();
        assert_eq!(net.validate(), vec![Violation::UncoveredApproach { node: 2, edge: 1 }]);
    }

    #[test]
    fn program_on_plain_junction_is_rejected() {
        let mut net = two_nodes();
        let p = TrafficLightProgram { node: 0, offset: 0.0, phases: vec![] };
        assert_eq!(net.add_program(p), Err(RoadNetError::NotTrafficLight(0)));
    }

    #[test]
    fn signal_cycles_through_phases() {
        let p = TrafficLightProgram {
            node: 0,
            offset: 5.0,
            phases: vec![
                Phase { duration: 10.0, green: [1].into() },
                Phase { duration: 20.0, green: [2].into() },
            ],
        };
        assert!(p.is_green(2, 0.0));
        assert!(p.is_green(1, 5.0));
        assert!(p.is_green(1, 14.9));
        assert!(p.is_green(2, 15.0));
        assert!(p.is_green(1, 35.0));
        assert!(!p.is_green(3, 1.0));
    }
}
