use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::{EdgeId, NodeId, RoadNetError, RoadNetwork};

/// Ordered edge ids from origin to destination, with the free-flow travel
/// time needed to drive them.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub edges: Vec<EdgeId>,
    pub cost: f64,
}

/// Sum of `length / speed_limit` along `edges`, accumulated front to back.
pub fn route_cost(net: &RoadNetwork, edges: &[EdgeId]) -> Option<f64> {
    edges.iter().try_fold(0.0, |acc, id| net.edge(*id).map(|e| acc + e.travel_time()))
}

#[derive(PartialEq)]
struct Label {
    cost: f64,
    node: NodeId,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on node id for a stable pop order
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting search backwards from `dest` for the cost-to-go of every
/// node, then a forward greedy walk that always takes the smallest edge id
/// lying on some optimal route. The walk yields the lexicographically
/// smallest optimal edge sequence.
pub(super) fn shortest_route(
    net: &RoadNetwork,
    origin: NodeId,
    dest: NodeId,
) -> Result<Option<Route>, RoadNetError> {
    for id in [origin, dest] {
        if net.node(id).is_none() {
            return Err(RoadNetError::UnknownNode(id));
        }
    }
    if origin == dest {
        return Ok(Some(Route { edges: Vec::new(), cost: 0.0 }));
    }

    let mut to_go: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    to_go.insert(dest, 0.0);
    heap.push(Label { cost: 0.0, node: dest });
    while let Some(Label { cost, node }) = heap.pop() {
        if cost > to_go[&node] {
            continue;
        }
        if node == origin {
            break;
        }
        for &eid in net.in_edges(node) {
            let e = &net.edges[&eid];
            let cand = e.travel_time() + cost;
            let better = to_go.get(&e.from).is_none_or(|&old| cand < old);
            if better {
                to_go.insert(e.from, cand);
                heap.push(Label { cost: cand, node: e.from });
            }
        }
    }

    let Some(&total) = to_go.get(&origin) else {
        return Ok(None);
    };

    let mut edges = Vec::new();
    let mut at = origin;
    while at != dest {
        let here = to_go[&at];
        let next = net.out_edges(at).iter().copied().filter(|eid| {
            let e = &net.edges[eid];
            // Tight edges reproduce the settled value bit for bit, because
            // the settled value was computed with this very expression.
            to_go.get(&e.to).is_some_and(|&rest| e.travel_time() + rest == here)
        })
        .min();
        let Some(eid) = next else {
            // Only reachable if the search stopped before settling a node on
            // the walk; the early exit at `origin` guarantees otherwise.
            unreachable!("no tight edge out of node {at}");
        };
        edges.push(eid);
        at = net.edges[&eid].to;
    }
    Ok(Some(Route { edges, cost: total }))
}
