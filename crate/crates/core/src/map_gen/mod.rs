//! Automatic road maps and KML place-mark import.
//!
//! All generators are pure functions of their spec (and seed); they return
//! networks that pass [`RoadNetwork::validate`].

mod kml;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::road_net::{
    EdgeDefaults, EdgeId, NodeId, NodeKind, Phase, Point, RoadEdge, RoadNetError, RoadNetwork,
    RoadNode, TrafficLightProgram,
};

pub use kml::{parse_kml, parse_links, project_kml, KmlDocument, Link, Placemark, EARTH_RADIUS_M};

#[derive(Debug, Error)]
pub enum MapGenError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("placemark {index}: {reason}")]
    Coordinates { index: usize, reason: String },
    #[error("placemark {0} has no Point coordinates")]
    MissingCoordinates(usize),
    #[error("link references placemark {index} but only {count} exist")]
    DanglingLink { index: usize, count: usize },
    #[error(transparent)]
    Parse(#[from] crate::ParseError),
    #[error(transparent)]
    Network(#[from] RoadNetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Junctions per side.
    pub k: u32,
    pub block_len: f64,
    #[serde(default)]
    pub defaults: EdgeDefaults,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderSpec {
    pub arms: u32,
    pub circles: u32,
    pub radius_step: f64,
    #[serde(default)]
    pub defaults: EdgeDefaults,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomMapSpec {
    pub n_nodes: u32,
    pub width: f64,
    pub height: f64,
    pub target_degree: u32,
    pub seed: u64,
    #[serde(default)]
    pub defaults: EdgeDefaults,
}

fn check_defaults(d: &EdgeDefaults) -> Result<(), MapGenError> {
    if !(d.speed_limit > 0.0 && d.speed_limit.is_finite()) || d.lanes < 1 {
        return Err(MapGenError::InvalidSpec("speed limit must be > 0 and lanes >= 1".into()));
    }
    Ok(())
}

/// Incrementally numbered two-way roads.
struct Builder {
    net: RoadNetwork,
    next_edge: EdgeId,
    defaults: EdgeDefaults,
}

impl Builder {
    fn new(defaults: EdgeDefaults) -> Self {
        Self { net: RoadNetwork::new(), next_edge: 0, defaults }
    }

    fn node(&mut self, id: NodeId, pos: Point) -> Result<(), MapGenError> {
        self.net.add_node(RoadNode { id, pos, kind: NodeKind::Junction })?;
        Ok(())
    }

    fn one_way(&mut self, from: NodeId, to: NodeId, length: f64) -> Result<(), MapGenError> {
        let d = self.defaults;
        self.net.add_edge(RoadEdge {
            id: self.next_edge,
            from,
            to,
            length,
            speed_limit: d.speed_limit,
            lanes: d.lanes,
            priority: d.priority,
        })?;
        self.next_edge += 1;
        Ok(())
    }

    fn two_way(&mut self, a: NodeId, b: NodeId, length: f64) -> Result<(), MapGenError> {
        self.one_way(a, b, length)?;
        self.one_way(b, a, length)
    }

    fn finish(mut self) -> RoadNetwork {
        mark_dead_ends(&mut self.net);
        self.net
    }
}

/// Nodes with a single neighbour become dead ends.
fn mark_dead_ends(net: &mut RoadNetwork) {
    let ends: Vec<NodeId> = net
        .nodes()
        .filter(|n| n.kind == NodeKind::Junction && net.neighbor_count(n.id) == 1)
        .map(|n| n.id)
        .collect();
    for id in ends {
        net.set_kind(id, NodeKind::DeadEnd);
    }
}

/// `k × k` lattice, row-major ids, two directed edges per adjacent pair.
pub fn generate_grid(spec: &GridSpec) -> Result<RoadNetwork, MapGenError> {
    if spec.k < 1 {
        return Err(MapGenError::InvalidSpec("grid needs k >= 1".into()));
    }
    if !(spec.block_len > 0.0 && spec.block_len.is_finite()) {
        return Err(MapGenError::InvalidSpec("grid block length must be > 0".into()));
    }
    check_defaults(&spec.defaults)?;
    let k = spec.k;
    let mut b = Builder::new(spec.defaults);
    let id = |r: u32, c: u32| r * k + c;
    for r in 0..k {
        for c in 0..k {
            b.node(id(r, c), Point::new(f64::from(c) * spec.block_len, f64::from(r) * spec.block_len))?;
        }
    }
    for r in 0..k {
        for c in 0..k {
            if c + 1 < k {
                b.two_way(id(r, c), id(r, c + 1), spec.block_len)?;
            }
            if r + 1 < k {
                b.two_way(id(r, c), id(r + 1, c), spec.block_len)?;
            }
        }
    }
    Ok(b.finish())
}

/// Concentric rings crossed by radial arms.
///
/// Node 0 is the centre, placed at `(R, R)` with `R = circles · radius_step`
/// so every coordinate is non-negative. Ring `c` (1-based), arm `a` gets id
/// `1 + (c − 1)·arms + a`. Ring segments are straight chords whose length is
/// the true arc length.
pub fn generate_spider(spec: &SpiderSpec) -> Result<RoadNetwork, MapGenError> {
    if spec.arms < 3 || spec.circles < 1 {
        return Err(MapGenError::InvalidSpec("spider needs arms >= 3 and circles >= 1".into()));
    }
    if !(spec.radius_step > 0.0 && spec.radius_step.is_finite()) {
        return Err(MapGenError::InvalidSpec("spider radius step must be > 0".into()));
    }
    check_defaults(&spec.defaults)?;
    let (arms, circles) = (spec.arms, spec.circles);
    let extent = f64::from(circles) * spec.radius_step;
    let center = Point::new(extent, extent);
    let id = |c: u32, a: u32| 1 + (c - 1) * arms + a;
    let angle = |a: u32| 2.0 * PI * f64::from(a) / f64::from(arms);

    let mut b = Builder::new(spec.defaults);
    b.node(0, center)?;
    for c in 1..=circles {
        let r = f64::from(c) * spec.radius_step;
        for a in 0..arms {
            let t = angle(a);
            b.node(id(c, a), Point::new(center.x + r * t.cos(), center.y + r * t.sin()))?;
        }
    }
    let pos = |net: &RoadNetwork, n: NodeId| net.node(n).map(|n| n.pos).unwrap_or(center);
    for a in 0..arms {
        for c in 1..=circles {
            let inner = if c == 1 { 0 } else { id(c - 1, a) };
            let outer = id(c, a);
            let len = pos(&b.net, inner).distance(pos(&b.net, outer));
            b.two_way(inner, outer, len)?;
        }
    }
    for c in 1..=circles {
        let arc = f64::from(c) * spec.radius_step * 2.0 * PI / f64::from(arms);
        for a in 0..arms {
            let (p, q) = (id(c, a), id(c, (a + 1) % arms));
            let chord = pos(&b.net, p).distance(pos(&b.net, q));
            b.two_way(p, q, arc.max(chord))?;
        }
    }
    Ok(b.finish())
}

/// Uniform random junctions wired to their nearest neighbours, then joined
/// into one component by repeatedly adding the shortest link between two
/// components. All links are two-way, so connected implies strongly
/// connected.
pub fn generate_random(spec: &RandomMapSpec) -> Result<RoadNetwork, MapGenError> {
    if spec.n_nodes < 2 || spec.target_degree < 2 {
        return Err(MapGenError::InvalidSpec("random map needs n_nodes >= 2 and target_degree >= 2".into()));
    }
    if !(spec.width > 0.0 && spec.height > 0.0 && spec.width.is_finite() && spec.height.is_finite()) {
        return Err(MapGenError::InvalidSpec("random map area must be positive".into()));
    }
    check_defaults(&spec.defaults)?;
    let mut rng = rng::stream(spec.seed, "map");
    let n = spec.n_nodes as usize;
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.random_range(0.0..spec.width), rng.random_range(0.0..spec.height)))
        .collect();

    let mut links: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let by_distance = |i: usize| {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| pts[i].distance(pts[a]).total_cmp(&pts[i].distance(pts[b])).then(a.cmp(&b)));
        others
    };
    for i in 0..n {
        for j in by_distance(i) {
            if neighbors[i].len() >= spec.target_degree as usize {
                break;
            }
            if neighbors[i].insert(j) {
                neighbors[j].insert(i);
                links.insert((i.min(j), i.max(j)));
            }
        }
    }

    // union-find over the undirected links
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    for &(a, b) in &links {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            candidates.push((pts[i].distance(pts[j]), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, i, j) in candidates {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            links.insert((i, j));
        }
    }

    let mut b = Builder::new(spec.defaults);
    for (i, p) in pts.iter().enumerate() {
        b.node(i as NodeId, *p)?;
    }
    for (i, j) in links {
        b.two_way(i as NodeId, j as NodeId, pts[i].distance(pts[j]))?;
    }
    Ok(b.finish())
}

/// Turns every junction with at least three neighbours into a traffic light
/// running two equal phases. Incoming approaches within 45° of the axis of
/// the lowest-numbered approach share the first phase; the rest get the
/// second.
pub fn promote_traffic_lights(net: &mut RoadNetwork, phase_duration: f64) -> Result<(), MapGenError> {
    if !(phase_duration > 0.0) {
        return Err(MapGenError::InvalidSpec("phase duration must be > 0".into()));
    }
    let targets: Vec<NodeId> = net
        .nodes()
        .filter(|n| n.kind == NodeKind::Junction && net.neighbor_count(n.id) >= 3)
        .map(|n| n.id)
        .collect();
    for id in targets {
        let here = net.node(id).map(|n| n.pos).unwrap_or(Point::new(0.0, 0.0));
        let approaches: BTreeMap<EdgeId, f64> = net
            .in_edges(id)
            .iter()
            .map(|&e| {
                let from = net.edge(e).and_then(|e| net.node(e.from)).map_or(here, |n| n.pos);
                (e, (from.y - here.y).atan2(from.x - here.x))
            })
            .collect();
        let Some((_, &axis)) = approaches.iter().next() else {
            continue;
        };
        let (mut a, mut b) = (BTreeSet::new(), BTreeSet::new());
        for (&e, &theta) in &approaches {
            if (theta - axis).cos().abs() >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12 {
                a.insert(e);
            } else {
                b.insert(e);
            }
        }
        net.set_kind(id, NodeKind::TrafficLight);
        net.add_program(TrafficLightProgram {
            node: id,
            offset: 0.0,
            phases: vec![
                Phase { duration: phase_duration, green: a },
                Phase { duration: phase_duration, green: b },
            ],
        })?;
    }
    Ok(())
}
