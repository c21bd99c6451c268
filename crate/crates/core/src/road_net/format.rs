//! Line-oriented network files:
//!
//! ```text
//! # comment
//! node <id> <x> <y> <kind>
//! edge <id> <from> <to> <length> <speed> <lanes> <priority>
//! tls <node> <offset> <duration>:<edge,edge,...> ...
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::ParseError;

use super::{Phase, Point, RoadEdge, RoadNetwork, RoadNode, TrafficLightProgram};

/// Serialises `net` in id order. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_network(net: &RoadNetwork) -> String {
    let mut out = String::new();
    for n in net.nodes() {
        let _ = writeln!(out, "node {} {} {} {}", n.id, n.pos.x, n.pos.y, n.kind.as_str());
    }
    for e in net.edges() {
        let _ = writeln!(
            out,
            "edge {} {} {} {} {} {} {}",
            e.id, e.from, e.to, e.length, e.speed_limit, e.lanes, e.priority
        );
    }
    for p in net.programs() {
        let _ = write!(out, "tls {} {}", p.node, p.offset);
        for ph in &p.phases {
            let green: Vec<String> = ph.green.iter().map(u32::to_string).collect();
            let _ = write!(out, " {}:{}", ph.duration, green.join(","));
        }
        out.push('\n');
    }
    out
}

/// Parses without enforcing network invariants; call
/// [`RoadNetwork::validate`] on the result.
pub fn parse_network(text: &str) -> Result<RoadNetwork, ParseError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut programs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: String| ParseError::new(line, msg);
        match fields[0] {
            "node" => {
                if fields.len() != 5 {
                    return Err(err(format!("node expects 4 fields, got {}", fields.len() - 1)));
                }
                nodes.push(RoadNode {
                    id: num(fields[1], line)?,
                    pos: Point::new(num(fields[2], line)?, num(fields[3], line)?),
                    kind: fields[4].parse().map_err(err)?,
                });
            }
            "edge" => {
                if fields.len() != 8 {
                    return Err(err(format!("edge expects 7 fields, got {}", fields.len() - 1)));
                }
                edges.push(RoadEdge {
                    id: num(fields[1], line)?,
                    from: num(fields[2], line)?,
                    to: num(fields[3], line)?,
                    length: num(fields[4], line)?,
                    speed_limit: num(fields[5], line)?,
                    lanes: num(fields[6], line)?,
                    priority: num(fields[7], line)?,
                });
            }
            "tls" => {
                if fields.len() < 3 {
                    return Err(err("tls expects a node, an offset and phases".into()));
                }
                let mut phases = Vec::new();
                for spec in &fields[3..] {
                    let (dur, green) = spec
                        .split_once(':')
                        .ok_or_else(|| err(format!("phase `{spec}` lacks `:`")))?;
                    let green = green
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| num(s, line))
                        .collect::<Result<BTreeSet<_>, _>>()?;
                    phases.push(Phase { duration: num(dur, line)?, green });
                }
                programs.push(TrafficLightProgram {
                    node: num(fields[1], line)?,
                    offset: num(fields[2], line)?,
                    phases,
                });
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    Ok(RoadNetwork::from_parts(nodes, edges, programs))
}

pub(crate) fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, ParseError> {
    s.parse().map_err(|_| ParseError::new(line, format!("bad number `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road_net::{NodeKind, Violation};

    const SAMPLE: &str = "\
# two junctions and a light
node 0 0 0 junction
node 1 100 0 traffic_light
node 2 100.5 80 dead_end
edge 0 0 1 100 13.9 2 1
edge 1 2 1 80.5 10 1 0   # trailing comment
tls 1 3.5 30:0 30:1
";

    #[test]
    fn parses_sample() {
        let net = parse_network(SAMPLE).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.node(1).unwrap().kind, NodeKind::TrafficLight);
        let e = net.edge(0).unwrap();
        assert_eq!((e.lanes, e.priority, e.speed_limit), (2, 1, 13.9));
        let p = net.program(1).unwrap();
        assert_eq!(p.offset, 3.5);
        assert_eq!(p.phases.len(), 2);
        assert!(net.validate().is_empty());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let net = parse_network(SAMPLE).unwrap();
        let text = write_network(&net);
        assert_eq!(parse_network(&text).unwrap(), net);
        assert_eq!(write_network(&parse_network(&text).unwrap()), text);
    }

    #[test]
    fn lenient_parse_then_validate() {
        let net = parse_network("node 1 0 0 junction\nedge 3 1 7 10 10 1 0\n").unwrap();
        assert_eq!(net.validate(), vec![Violation::DanglingEndpoint { edge: 3, node: 7 }]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_network("node 0 0 0 junction\nnode 1 x 0 junction\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_network("\n\nroad 1 2\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = parse_network("node 0 0 0 roundabout\n").unwrap_err();
        assert!(err.message.contains("roundabout"));
    }

    #[test]
    fn empty_green_set_is_an_all_red_phase() {
        let net = parse_network("node 1 0 0 traffic_light\ntls 1 0 10:\n").unwrap();
        assert!(net.program(1).unwrap().phases[0].green.is_empty());
    }
}
