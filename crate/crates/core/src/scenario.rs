//! One JSON document describing a whole experiment: map, demand, vehicle
//! and radio parameters, mobility models, traffic and seeds.
//!
//! ```json
//! {
//!   "map": { "source": "grid", "k": 6, "block_len": 200.0 },
//!   "traffic_lights": 30.0,
//!   "demand": { "source": "random_walks", "n": 50, "window": [0.0, 10.0], "max_edges": 1000 },
//!   "kinds": ["move", "rwp"],
//!   "flows": { "n_sources": [5, 10, 15, 20] },
//!   "duration": 300.0,
//!   "seeds": [1, 2, 3, 4, 5, 6]
//! }
//! ```
//!
//! Every field except `map` and `demand` has a default; see
//! [`ScenarioConfig::desk`] and [`ScenarioConfig::paper`] for the two
//! built-in presets.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{self, Demand, DemandError, TurnTable, Trip};
use crate::map_gen::{self, GridSpec, MapGenError, RandomMapSpec, SpiderSpec};
use crate::mobility::{self, MobilityError, MobilityTrace, RwpSpec, VehicleParams};
use crate::net_sim::{AodvConfig, CbrFlow, NetSimError, RadioParams};
use crate::rng;
use crate::road_net::{self, RoadNetwork};
use crate::ParseError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] MapGenError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    NetSim(#[from] NetSimError),
}

impl ScenarioError {
    /// Whether the error comes from bad input rather than a failed run.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ScenarioError::Mobility(_) | ScenarioError::NetSim(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MapSource {
    Grid(GridSpec),
    Spider(SpiderSpec),
    Random(RandomMapSpec),
    /// A network file; see [`road_net::parse_network`].
    File { path: PathBuf },
    Kml { kml: PathBuf, links: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DemandSource {
    /// A demand file; see [`Demand::parse`].
    File { path: PathBuf },
    /// Shortest-route trips between random junction pairs.
    RandomTrips { n: u32, window: (f64, f64) },
    /// Random walks that follow the turning probabilities of `turns`, if
    /// given, and uniform choices elsewhere.
    RandomWalks {
        n: u32,
        window: (f64, f64),
        max_edges: usize,
        #[serde(default)]
        turns: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityKind {
    /// Road-constrained car-following simulation.
    Move,
    /// Random waypoint.
    Rwp,
}

impl MobilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MobilityKind::Move => "move",
            MobilityKind::Rwp => "rwp",
        }
    }
}

impl fmt::Display for MobilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MobilityKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "move" => Ok(MobilityKind::Move),
            "rwp" => Ok(MobilityKind::Rwp),
            other => Err(format!("unknown mobility kind `{other}` (expected move or rwp)")),
        }
    }
}

/// Random waypoint settings; the duration and seed come from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RwpSettings {
    pub n_nodes: usize,
    pub width: f64,
    pub height: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub pause: f64,
}

impl Default for RwpSettings {
    fn default() -> Self {
        Self { n_nodes: 50, width: 1000.0, height: 1000.0, v_min: 1.0, v_max: 13.9, pause: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowsSpec {
    /// Source counts to sweep; each source sends to its own destination.
    pub n_sources: Vec<usize>,
    /// Bytes.
    pub payload: u32,
    /// Packets per second.
    pub rate: f64,
    /// Flows start uniformly in `[0, start_window)`, s, and run to the end.
    pub start_window: f64,
}

impl Default for FlowsSpec {
    fn default() -> Self {
        Self { n_sources: vec![5, 10, 15, 20], payload: 64, rate: 4.0, start_window: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub map: MapSource,
    /// Phase length, s, of the traffic lights installed at every junction
    /// with three or more neighbours; no lights when absent.
    #[serde(default)]
    pub traffic_lights: Option<f64>,
    pub demand: DemandSource,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub rwp: RwpSettings,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<MobilityKind>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub aodv: AodvConfig,
    #[serde(default)]
    pub flows: FlowsSpec,
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Car-following step, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_kinds() -> Vec<MobilityKind> {
    vec![MobilityKind::Move, MobilityKind::Rwp]
}
fn default_duration() -> f64 {
    300.0
}
fn default_dt() -> f64 {
    1.0
}
fn default_seeds() -> Vec<u64> {
    (1..=6).collect()
}

impl ScenarioConfig {
    /// Scaled-down matrix: 50 nodes on 1000 m × 1000 m for 300 s, 5 to 20
    /// sources, 6 seeds.
    pub fn desk() -> Self {
        Self::preset(6, 50, 1000.0, 300.0, vec![5, 10, 15, 20])
    }

    /// Full matrix: 150 nodes on 2000 m × 2000 m for 900 s, 10 to 50
    /// sources, 6 seeds.
    pub fn paper() -> Self {
        Self::preset(11, 150, 2000.0, 900.0, vec![10, 20, 30, 40, 50])
    }

    fn preset(k: u32, nodes: u32, side: f64, duration: f64, n_sources: Vec<usize>) -> Self {
        Self {
            map: MapSource::Grid(GridSpec { k, block_len: side / f64::from(k - 1), defaults: Default::default() }),
            traffic_lights: Some(30.0),
            demand: DemandSource::RandomWalks { n: nodes, window: (0.0, 10.0), max_edges: 1000, turns: None },
            vehicle: VehicleParams::default(),
            rwp: RwpSettings { n_nodes: nodes as usize, width: side, height: side, ..Default::default() },
            kinds: default_kinds(),
            radio: RadioParams::default(),
            aodv: AodvConfig::default(),
            flows: FlowsSpec { n_sources, ..Default::default() },
            duration,
            dt: 1.0,
            seeds: default_seeds(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&read(path)?)
    }

    /// Checks everything that can be checked without touching files.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.validate_mobility()?;
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.flows.n_sources.is_empty() || self.flows.n_sources.contains(&0) {
            return bad("source counts must be a non-empty list of positive numbers".into());
        }
        if !(self.flows.rate > 0.0 && self.flows.rate.is_finite()) || self.flows.payload == 0 {
            return bad("flow rate and payload must be > 0".into());
        }
        if !(self.flows.start_window >= 0.0 && self.flows.start_window < self.duration) {
            return bad("flow start window must lie in [0, duration)".into());
        }
        self.radio.check()?;
        let max_sources = self.flows.n_sources.iter().max().copied().unwrap_or(0);
        for kind in &self.kinds {
            let nodes = match kind {
                MobilityKind::Rwp => self.rwp.n_nodes,
                MobilityKind::Move => match &self.demand {
                    DemandSource::RandomTrips { n, .. } | DemandSource::RandomWalks { n, .. } => *n as usize,
                    DemandSource::File { .. } => usize::MAX,
                },
            };
            if 2 * max_sources > nodes {
                return bad(format!("{max_sources} sources need {} distinct nodes, {kind} has {nodes}", 2 * max_sources));
            }
        }
        Ok(())
    }

    /// The subset of [`ScenarioConfig::validate`] needed to produce mobility
    /// traces: seeds, kinds, timing, traffic lights and vehicle parameters.
    pub fn validate_mobility(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.kinds.is_empty() {
            return bad("at least one mobility kind is required".into());
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return bad(format!("dt must lie in (0, 1], got {}", self.dt));
        }
        if let Some(p) = self.traffic_lights {
            if !(p > 0.0 && p.is_finite()) {
                return bad(format!("traffic light phase must be > 0, got {p}"));
            }
        }
        self.vehicle.check()?;
        Ok(())
    }

    /// The road network, with traffic lights installed if requested.
    pub fn network(&self) -> Result<RoadNetwork, ScenarioError> {
        let mut net = build_map(&self.map)?;
        if let Some(phase) = self.traffic_lights {
            map_gen::promote_traffic_lights(&mut net, phase)?;
        }
        Ok(net)
    }

    /// Trips for one seed.
    pub fn trips(&self, net: &RoadNetwork, seed: u64) -> Result<Vec<Trip>, ScenarioError> {
        Ok(match &self.demand {
            DemandSource::File { path } => {
                let text = read(path)?;
                let d = Demand::parse(&text).map_err(|source| ScenarioError::Parse { path: path.clone(), source })?;
                d.expand(net, seed)?
            }
            DemandSource::RandomTrips { n, window } => demand::random_trips(net, *n, *window, seed, 0)?,
            DemandSource::RandomWalks { n, window, max_edges, turns } => {
                let table = match turns {
                    Some(path) => {
                        let text = read(path)?;
                        let d = Demand::parse(&text).map_err(|source| ScenarioError::Parse { path: path.clone(), source })?;
                        d.turn_table(net)?
                    }
                    None => TurnTable::new(),
                };
                demand::random_walks(net, &table, *n, *window, *max_edges, seed, 0)?
            }
        })
    }

    /// Random waypoint parameters for one seed.
    pub fn rwp_spec(&self, seed: u64) -> RwpSpec {
        let r = &self.rwp;
        RwpSpec {
            n_nodes: r.n_nodes,
            width: r.width,
            height: r.height,
            v_min: r.v_min,
            v_max: r.v_max,
            pause: r.pause,
            duration: self.duration,
            seed,
        }
    }

    /// Mobility trace of one kind and seed; `net` is needed for
    /// [`MobilityKind::Move`].
    pub fn mobility(&self, kind: MobilityKind, net: Option<&RoadNetwork>, seed: u64) -> Result<MobilityTrace, ScenarioError> {
        match kind {
            MobilityKind::Rwp => Ok(mobility::random_waypoint(&self.rwp_spec(seed))?),
            MobilityKind::Move => {
                let owned;
                let net = match net {
                    Some(n) => n,
                    None => {
                        owned = self.network()?;
                        &owned
                    }
                };
                let trips = self.trips(net, seed)?;
                Ok(mobility::simulate(net, &trips, &self.vehicle, self.dt, self.duration, seed)?)
            }
        }
    }

    /// `count` flows over `n_nodes` nodes for one seed. Endpoints are
    /// distinct across flows, and the flows for a smaller count are a prefix
    /// of those for a larger one.
    pub fn flows(&self, n_nodes: usize, count: usize, seed: u64) -> Result<Vec<CbrFlow>, ScenarioError> {
        choose_flows(n_nodes, count, &self.flows, self.duration, seed)
    }
}

/// See [`ScenarioConfig::flows`].
pub fn choose_flows(n_nodes: usize, count: usize, spec: &FlowsSpec, stop: f64, seed: u64) -> Result<Vec<CbrFlow>, ScenarioError> {
    if 2 * count > n_nodes {
        return Err(ScenarioError::Invalid(format!("{count} flows need {} distinct nodes, trace has {n_nodes}", 2 * count)));
    }
    let mut r = rng::stream(seed, "flows");
    let mut perm: Vec<usize> = (0..n_nodes).collect();
    perm.shuffle(&mut r);
    Ok((0..count)
        .map(|i| {
            let start = if spec.start_window > 0.0 { r.random_range(0.0..spec.start_window) } else { 0.0 };
            CbrFlow { src: perm[2 * i], dst: perm[2 * i + 1], payload: spec.payload, rate: spec.rate, start, stop }
        })
        .collect())
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })
}

/// Builds or loads the network described by `map`.
pub fn build_map(map: &MapSource) -> Result<RoadNetwork, ScenarioError> {
    Ok(match map {
        MapSource::Grid(s) => map_gen::generate_grid(s)?,
        MapSource::Spider(s) => map_gen::generate_spider(s)?,
        MapSource::Random(s) => map_gen::generate_random(s)?,
        MapSource::File { path } => {
            let text = read(path)?;
            road_net::parse_network(&text).map_err(|source| ScenarioError::Parse { path: path.clone(), source })?
        }
        MapSource::Kml { kml, links } => {
            let doc = map_gen::parse_kml(&read(kml)?)?;
            let links_text = read(links)?;
            let links = map_gen::parse_links(&links_text).map_err(|source| ScenarioError::Parse { path: links.clone(), source })?;
            map_gen::project_kml(&doc, &links, Default::default())?
        }
    })
}
