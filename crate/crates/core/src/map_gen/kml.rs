//! Offline KML place marks plus a companion link list.
//!
//! Only `Placemark/Point/coordinates` is read. Road connectivity comes from a
//! separate text file:
//!
//! ```text
//! link <i> <j>     # two-way road between placemark indices i and j
//! oneway <i> <j>   # single directed edge i -> j
//! ```

use std::f64::consts::PI;

use crate::road_net::{EdgeDefaults, NodeId, Point, RoadEdge, RoadNetwork, RoadNode, NodeKind};
use crate::ParseError;

use super::{mark_dead_ends, MapGenError};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Placemark {
    pub name: String,
    pub lon: f64,
    pub lat: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KmlDocument {
    pub placemarks: Vec<Placemark>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub two_way: bool,
}

/// Place marks in document order; altitude is dropped. Element matching
/// ignores namespaces.
pub fn parse_kml(text: &str) -> Result<KmlDocument, MapGenError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| MapGenError::Xml(e.to_string()))?;
    let mut placemarks = Vec::new();
    for (index, pm) in doc.descendants().filter(|n| n.has_tag_name_local("Placemark")).enumerate() {
        let name = pm
            .children()
            .find(|c| c.has_tag_name_local("name"))
            .and_then(|c| c.text())
            .map(|s| s.trim().to_string())
            .unwrap_or_default();
        let coords = pm
            .descendants()
            .find(|c| c.has_tag_name_local("Point"))
            .and_then(|p| p.descendants().find(|c| c.has_tag_name_local("coordinates")))
            .ok_or(MapGenError::MissingCoordinates(index))?;
        let raw = coords.text().unwrap_or("").trim();
        let bad = |reason: String| MapGenError::Coordinates { index, reason };
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad(format!("expected `lon,lat[,alt]`, got `{raw}`")));
        }
        let value = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        let lon = value(parts[0])?;
        let lat = value(parts[1])?;
        if parts.len() == 3 {
            value(parts[2])?;
        }
        if !(lon.abs() <= 180.0) {
            return Err(bad(format!("longitude out of range: {lon}")));
        }
        if !(lat.abs() <= 90.0) {
            return Err(bad(format!("latitude out of range: {lat}")));
        }
        placemarks.push(Placemark { name, lon, lat });
    }
    Ok(KmlDocument { placemarks })
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for roxmltree::Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}

pub fn parse_links(text: &str) -> Result<Vec<Link>, ParseError> {
    let mut links = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        let two_way = match f[0] {
            "link" => true,
            "oneway" => false,
            other => return Err(ParseError::new(line, format!("unknown record `{other}`"))),
        };
        if f.len() != 3 {
            return Err(ParseError::new(line, format!("{} expects 2 indices", f[0])));
        }
        let from = crate::road_net::format_num(f[1], line)?;
        let to = crate::road_net::format_num(f[2], line)?;
        links.push(Link { from, to, two_way });
    }
    Ok(links)
}

/// Equirectangular projection about the place-mark centroid. Node ids are
/// place-mark indices; edge lengths are the projected distances.
pub fn project_kml(
    doc: &KmlDocument,
    links: &[Link],
    defaults: EdgeDefaults,
) -> Result<RoadNetwork, MapGenError> {
    let count = doc.placemarks.len();
    if count == 0 {
        return Err(MapGenError::InvalidSpec("KML document has no placemarks".into()));
    }
    let lat0 = doc.placemarks.iter().map(|p| p.lat).sum::<f64>() / count as f64;
    let lon0 = doc.placemarks.iter().map(|p| p.lon).sum::<f64>() / count as f64;
    let project = |p: &Placemark| {
        let k = EARTH_RADIUS_M * PI / 180.0;
        Point::new(k * (p.lon - lon0) * (lat0 * PI / 180.0).cos(), k * (p.lat - lat0))
    };

    let mut net = RoadNetwork::new();
    for (i, p) in doc.placemarks.iter().enumerate() {
        net.add_node(RoadNode { id: i as NodeId, pos: project(p), kind: NodeKind::Junction })?;
    }
    let mut next = 0;
    for link in links {
        for index in [link.from, link.to] {
            if index >= count {
                return Err(MapGenError::DanglingLink { index, count });
            }
        }
        let length = project(&doc.placemarks[link.from]).distance(project(&doc.placemarks[link.to]));
        let pairs: &[(usize, usize)] =
            if link.two_way { &[(link.from, link.to), (link.to, link.from)] } else { &[(link.from, link.to)] };
        for &(a, b) in pairs {
            net.add_edge(RoadEdge {
                id: next,
                from: a as NodeId,
                to: b as NodeId,
                length,
                speed_limit: defaults.speed_limit,
                lanes: defaults.lanes,
                priority: defaults.priority,
            })?;
            next += 1;
        }
    }
    mark_dead_ends(&mut net);
    Ok(net)
}
