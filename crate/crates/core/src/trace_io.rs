//! NS-2 movement traces, CSV export and the node-to-vehicle sidecar.
//!
//! The NS-2 dialect is
//!
//! ```text
//! $node_(0) set X_ 100.00
//! $node_(0) set Y_ 200.00
//! $node_(0) set Z_ 0.00
//! $ns_ at 1.00 "$node_(0) setdest 150.00 200.00 10.00"
//! ```
//!
//! The initial block lists every node in index order. Each movement command
//! corresponds to one waypoint after the first: at time `t` the node is at
//! `(x, y)`, having travelled the preceding segment at `speed`. Commands are
//! sorted by time, then node index. All numbers are printed with exactly two
//! decimals, so writing quantizes the trace (see
//! [`MobilityTrace::quantized`]).

use std::fmt::Write as _;

use crate::mobility::{MobilityTrace, NodeTrack, Waypoint};
use crate::road_net::Point;
use crate::ParseError;

/// Renders `trace` in the NS-2 dialect. Output depends only on the trace and
/// uses `\n` line endings.
pub fn write_ns2(trace: &MobilityTrace) -> String {
    let q = trace.quantized();
    let mut out = String::new();
    for (i, n) in q.nodes.iter().enumerate() {
        let _ = writeln!(out, "$node_({i}) set X_ {:.2}", n.initial.x);
        let _ = writeln!(out, "$node_({i}) set Y_ {:.2}", n.initial.y);
        let _ = writeln!(out, "$node_({i}) set Z_ 0.00");
    }
    let mut moves: Vec<(f64, usize, &Waypoint)> = q
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(i, n)| n.waypoints.iter().skip(1).map(move |w| (w.t, i, w)))
        .collect();
    moves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, i, w) in moves {
        let _ = writeln!(out, "$ns_ at {t:.2} \"$node_({i}) setdest {:.2} {:.2} {:.2}\"", w.x, w.y, w.speed);
    }
    out
}

#[derive(Default)]
struct Initial {
    x: Option<f64>,
    y: Option<f64>,
}

/// Parses the NS-2 dialect written by [`write_ns2`].
///
/// Waypoint 0 of every node is rebuilt from its initial position. The
/// resulting duration is the last command time and the area is the largest
/// coordinate seen; vehicle ids default to the node indices.
pub fn parse_ns2(text: &str) -> Result<MobilityTrace, ParseError> {
    let mut initial: Vec<Initial> = Vec::new();
    let mut tracks: Vec<Option<NodeTrack>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("$node_(") {
            let (node, rest) = node_index(rest, line)?;
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.len() != 3 || f[0] != "set" {
                return Err(ParseError::new(line, "expected `$node_(i) set X_|Y_|Z_ <value>`"));
            }
            let value = number(f[2], line)?;
            if tracks.get(node).is_some_and(Option::is_some) {
                return Err(ParseError::new(line, format!("initial position of node {node} set after it moved")));
            }
            if initial.len() <= node {
                initial.resize_with(node + 1, Initial::default);
            }
            let slot = &mut initial[node];
            match f[1] {
                "X_" => slot.x = Some(value),
                "Y_" => slot.y = Some(value),
                "Z_" => {}
                other => return Err(ParseError::new(line, format!("unknown coordinate `{other}`"))),
            }
        } else if let Some(rest) = content.strip_prefix("$ns_ at ") {
            let (t_str, rest) = rest
                .split_once(char::is_whitespace)
                .ok_or_else(|| ParseError::new(line, "expected a time after `$ns_ at`"))?;
            let t = number(t_str, line)?;
            if t < 0.0 {
                return Err(ParseError::new(line, format!("negative time {t}")));
            }
            let cmd = rest
                .trim()
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .ok_or_else(|| ParseError::new(line, "command must be double-quoted"))?;
            let cmd = cmd
                .strip_prefix("$node_(")
                .ok_or_else(|| ParseError::new(line, "expected `$node_(i) setdest x y speed`"))?;
            let (node, rest) = node_index(cmd, line)?;
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.len() != 4 || f[0] != "setdest" {
                return Err(ParseError::new(line, "expected `$node_(i) setdest x y speed`"));
            }
            let (x, y, speed) = (number(f[1], line)?, number(f[2], line)?, number(f[3], line)?);
            if speed < 0.0 {
                return Err(ParseError::new(line, format!("negative speed {speed}")));
            }
            let start = match initial.get(node) {
                Some(Initial { x: Some(x), y: Some(y) }) => Point::new(*x, *y),
                _ => return Err(ParseError::new(line, format!("setdest for node {node}, which has no initial position"))),
            };
            if tracks.len() <= node {
                tracks.resize(node + 1, None);
            }
            let track = tracks[node].get_or_insert_with(|| NodeTrack::parked(start));
            let last = track.waypoints.last().map_or(0.0, |w| w.t);
            if t <= last {
                return Err(ParseError::new(line, format!("time {t} for node {node} does not follow {last}")));
            }
            track.waypoints.push(Waypoint { t, x, y, speed });
        } else {
            return Err(ParseError::new(line, format!("unrecognised line `{content}`")));
        }
    }

    let mut nodes = Vec::with_capacity(initial.len());
    for (i, init) in initial.into_iter().enumerate() {
        let (Some(x), Some(y)) = (init.x, init.y) else {
            return Err(ParseError::new(0, format!("node {i} has no complete initial position")));
        };
        let track = tracks.get_mut(i).and_then(Option::take).unwrap_or_else(|| NodeTrack::parked(Point::new(x, y)));
        nodes.push(track);
    }
    let waypoints = || nodes.iter().flat_map(|n| n.waypoints.iter());
    let duration = waypoints().map(|w| w.t).fold(0.0, f64::max);
    let width = waypoints().map(|w| w.x).fold(0.0, f64::max);
    let height = waypoints().map(|w| w.y).fold(0.0, f64::max);
    let count = nodes.len() as u32;
    Ok(MobilityTrace { nodes, vehicle_ids: (0..count).collect(), duration, width, height })
}

fn node_index(rest: &str, line: usize) -> Result<(usize, &str), ParseError> {
    let (digits, rest) = rest.split_once(')').ok_or_else(|| ParseError::new(line, "unterminated `$node_(`"))?;
    let node = digits.parse().map_err(|_| ParseError::new(line, format!("bad node index `{digits}`")))?;
    Ok((node, rest))
}

fn number(s: &str, line: usize) -> Result<f64, ParseError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::new(line, format!("bad number `{s}`"))),
    }
}

/// `node,time,x,y,speed`, one row per waypoint at full precision, nodes in
/// index order.
pub fn write_csv(trace: &MobilityTrace) -> String {
    let mut out = String::from("node,time,x,y,speed\n");
    for (i, n) in trace.nodes.iter().enumerate() {
        for w in &n.waypoints {
            let _ = writeln!(out, "{i},{},{},{},{}", w.t, w.x, w.y, w.speed);
        }
    }
    out
}

/// Sidecar lines `<index> <vehicle_id>`.
pub fn write_mapping(trace: &MobilityTrace) -> String {
    let mut out = String::new();
    for (i, v) in trace.vehicle_ids.iter().enumerate() {
        let _ = writeln!(out, "{i} {v}");
    }
    out
}

/// Reads a sidecar file back into the vehicle id of each index. Indices
/// must be dense and in order.
pub fn parse_mapping(text: &str) -> Result<Vec<u32>, ParseError> {
    let mut ids = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 2 {
            return Err(ParseError::new(line, "expected `<index> <vehicle_id>`"));
        }
        let index: usize = crate::road_net::format_num(f[0], line)?;
        if index != ids.len() {
            return Err(ParseError::new(line, format!("expected index {}, got {index}", ids.len())));
        }
        ids.push(crate::road_net::format_num(f[1], line)?);
    }
    Ok(ids)
}
