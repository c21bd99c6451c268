use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vanet_core::demand::DemandError;
use vanet_core::map_gen::{self, GridSpec, MapGenError, RandomMapSpec, SpiderSpec};
use vanet_core::metrics::{self, MetricsError};
use vanet_core::mobility::{self, MobilityError, MobilityTrace, RwpSpec};
use vanet_core::net_sim::{self, CbrFlow, NetSimError, RadioParams};
use vanet_core::road_net::{self, EdgeDefaults, RoadNetwork};
use vanet_core::scenario::{self, DemandSource, FlowsSpec, MapSource, MobilityKind, ScenarioConfig, ScenarioError};
use vanet_core::trace_io;

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_SIMULATION: u8 = 4;

/// Vehicular ad-hoc network toolkit: road maps, vehicle mobility, NS-2
/// traces and AODV packet delivery experiments.
#[derive(Parser)]
#[command(name = "vanet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or import a road network and write it in network format.
    Genmap(GenmapArgs),
    /// Produce a mobility trace (car-following on a road map, or random waypoint).
    Mobility(MobilityArgs),
    /// Run the wireless network simulation over a trace.
    Netsim(NetsimArgs),
    /// Run the full mobility-model × source-count × seed matrix.
    Experiment(ExperimentArgs),
    /// Check a network, trace or scenario file for broken invariants.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenmapArgs {
    /// Manhattan grid: junctions per side and block length (m).
    #[arg(long, value_name = "K,BLOCK", group = "generator")]
    grid: Option<String>,
    /// Spider web: arms, rings and ring spacing (m).
    #[arg(long, value_name = "ARMS,CIRCLES,STEP", group = "generator")]
    spider: Option<String>,
    /// Random map: nodes, width (m), height (m), target degree, seed.
    #[arg(long, value_name = "N,W,H,DEG,SEED", group = "generator")]
    random: Option<String>,
    /// KML place marks to project; needs --links.
    #[arg(long, value_name = "FILE", group = "generator", requires = "links")]
    kml: Option<PathBuf>,
    /// Edge list joining KML place marks by index: `link I J` (two-way) or
    /// `oneway I J` per line.
    #[arg(long, value_name = "FILE", requires = "kml")]
    links: Option<PathBuf>,
    /// Install two-phase traffic lights at every junction with three or more
    /// neighbours, with this phase length (s).
    #[arg(long, value_name = "PHASE", num_args = 0..=1, default_missing_value = "30")]
    lights: Option<f64>,
    /// Speed limit of generated edges (m/s).
    #[arg(long, default_value_t = 13.9)]
    speed_limit: f64,
    /// Lanes of generated edges.
    #[arg(long, default_value_t = 1)]
    lanes: u32,
    /// Priority of generated edges.
    #[arg(long, default_value_t = 0)]
    priority: u32,
    /// Output network file; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE", group = "preset")]
    config: Option<PathBuf>,
    /// Built-in scaled scenario: 50 nodes on 1000 m × 1000 m for 300 s.
    #[arg(long, group = "preset")]
    desk: bool,
    /// Built-in full scenario: 150 nodes on 2000 m × 2000 m for 900 s.
    #[arg(long, group = "preset")]
    paper: bool,
    /// Road network file replacing the scenario map.
    #[arg(long, value_name = "FILE")]
    map: Option<PathBuf>,
    /// Demand file replacing the scenario demand.
    #[arg(long, value_name = "FILE", group = "demand_src")]
    demand: Option<PathBuf>,
    /// N shortest-route trips between random junctions, departing in [0, 10) s.
    #[arg(long, value_name = "N", group = "demand_src")]
    random_trips: Option<u32>,
    /// N random walks of up to 1000 edges, departing in [0, 10) s.
    #[arg(long, value_name = "N", group = "demand_src")]
    random_walks: Option<u32>,
    /// Traffic light phase length (s) installed on the scenario map.
    #[arg(long, value_name = "PHASE")]
    lights: Option<f64>,
    /// Simulated time (s) [default: from the scenario, 300 without one].
    #[arg(long)]
    duration: Option<f64>,
    /// Car-following step (s) [default: from the scenario, 1].
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct MobilityArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Random waypoint without a scenario, e.g.
    /// `n=150,w=2000,h=2000,vmin=1,vmax=13.9,pause=0,dur=900`.
    #[arg(long, value_name = "SPEC", conflicts_with_all = ["preset", "map", "demand_src"])]
    rwp: Option<String>,
    /// Mobility model [default: rwp with --rwp, else the first kind of the scenario].
    #[arg(long)]
    kind: Option<MobilityKind>,
    /// Run seed [default: first scenario seed, 1 without one].
    #[arg(long, env = "VF_SEED")]
    seed: Option<u64>,
    /// NS-2 trace output; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Full-precision CSV of every waypoint.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Trace node to vehicle id sidecar.
    #[arg(long, value_name = "FILE")]
    mapping: Option<PathBuf>,
}

#[derive(Args)]
struct NetsimArgs {
    /// NS-2 trace file.
    trace: PathBuf,
    /// CBR flow from SRC to DST, sending from START (default 0) until STOP
    /// (default the end of the run); repeatable.
    #[arg(long, value_name = "SRC,DST[,START[,STOP]]", conflicts_with = "sources")]
    flow: Vec<String>,
    /// Number of random flows with distinct endpoints, chosen by --seed.
    #[arg(long, value_name = "N")]
    sources: Option<usize>,
    /// Random flows start uniformly in [0, WINDOW) s.
    #[arg(long, value_name = "WINDOW", default_value_t = 10.0)]
    start_window: f64,
    /// Payload per packet (bytes).
    #[arg(long, default_value_t = 64)]
    payload: u32,
    /// Packets per second per flow.
    #[arg(long, default_value_t = 4.0)]
    rate: f64,
    /// Radio parameters as JSON; the flags below override single fields.
    #[arg(long, value_name = "FILE")]
    radio: Option<PathBuf>,
    /// Path loss exponent [default: 2.56].
    #[arg(long)]
    exponent: Option<f64>,
    /// Shadowing standard deviation (dB) [default: 4.0].
    #[arg(long)]
    sigma: Option<f64>,
    /// Transmit power (dBm) [default: 24].
    #[arg(long)]
    tx_power: Option<f64>,
    /// Receive threshold (dBm) [default: -64].
    #[arg(long, allow_negative_numbers = true)]
    rx_threshold: Option<f64>,
    /// Carrier-sense threshold (dBm) [default: -74].
    #[arg(long, allow_negative_numbers = true)]
    cs_threshold: Option<f64>,
    /// Simulated time (s) [default: the last trace time].
    #[arg(long)]
    duration: Option<f64>,
    /// Run seed for radio, MAC and flow choice.
    #[arg(long, env = "VF_SEED", default_value_t = 1)]
    seed: u64,
    /// Per-packet CSV log.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE", group = "preset")]
    config: Option<PathBuf>,
    /// Built-in scaled matrix: 50 nodes, 1000 m × 1000 m, 300 s, 5 to 20 sources, 6 seeds.
    #[arg(long, group = "preset")]
    desk: bool,
    /// Built-in full matrix: 150 nodes, 2000 m × 2000 m, 900 s, 10 to 50 sources, 6 seeds.
    #[arg(long, group = "preset")]
    paper: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// First seed; the scenario's seed count is kept and numbered from here.
    #[arg(long, env = "VF_SEED")]
    seed: Option<u64>,
    /// Directory for results.csv, aggregate.csv and fig12.csv.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct ValidateArgs {
    /// Road network file.
    #[arg(long, value_name = "FILE")]
    network: Option<PathBuf>,
    /// NS-2 trace file.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Scenario JSON file; also builds its road network.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

/// An error message plus the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }

    fn parse(message: impl Into<String>) -> Self {
        Self { code: EXIT_PARSE, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn map_gen_code(e: &MapGenError) -> u8 {
    match e {
        MapGenError::Xml(_) | MapGenError::Coordinates { .. } | MapGenError::MissingCoordinates(_) | MapGenError::Parse(_) => {
            EXIT_PARSE
        }
        _ => EXIT_INVALID,
    }
}

fn mobility_code(e: &MobilityError) -> u8 {
    match e {
        MobilityError::InvalidParams(_) => EXIT_INVALID,
        _ => EXIT_SIMULATION,
    }
}

fn net_sim_code(e: &NetSimError) -> u8 {
    match e {
        NetSimError::BadDistance(_) => EXIT_SIMULATION,
        _ => EXIT_INVALID,
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match &e {
            ScenarioError::Parse { .. } => EXIT_PARSE,
            ScenarioError::Json(j) if j.is_syntax() || j.is_eof() => EXIT_PARSE,
            ScenarioError::Map(m) => map_gen_code(m),
            ScenarioError::Demand(DemandError::Parse(_)) => EXIT_PARSE,
            ScenarioError::Mobility(m) => mobility_code(m),
            ScenarioError::NetSim(n) => net_sim_code(n),
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<MapGenError> for Failure {
    fn from(e: MapGenError) -> Self {
        Self { code: map_gen_code(&e), message: e.to_string() }
    }
}

impl From<MobilityError> for Failure {
    fn from(e: MobilityError) -> Self {
        Self { code: mobility_code(&e), message: e.to_string() }
    }
}

impl From<NetSimError> for Failure {
    fn from(e: NetSimError) -> Self {
        Self { code: net_sim_code(&e), message: e.to_string() }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Scenario(s) => s.into(),
            other => Self { code: EXIT_SIMULATION, message: other.to_string() },
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn write_or_stdout(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::invalid(format!("standard output: {e}"))),
    }
}

/// Splits `a,b,c` into exactly `n` numbers.
fn numbers<T: std::str::FromStr>(flag: &str, text: &str, n: usize) -> CliResult<Vec<T>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(Failure::invalid(format!("--{flag} expects {n} comma-separated values, got `{text}`")));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| Failure::invalid(format!("--{flag}: `{p}` is not a valid number"))))
        .collect()
}

fn genmap(args: GenmapArgs) -> CliResult {
    let defaults = EdgeDefaults { speed_limit: args.speed_limit, lanes: args.lanes, priority: args.priority };
    let mut net = if let Some(g) = &args.grid {
        let v: Vec<f64> = numbers("grid", g, 2)?;
        let k = whole("grid", v[0])?;
        map_gen::generate_grid(&GridSpec { k, block_len: v[1], defaults })?
    } else if let Some(s) = &args.spider {
        let v: Vec<f64> = numbers("spider", s, 3)?;
        let spec = SpiderSpec { arms: whole("spider", v[0])?, circles: whole("spider", v[1])?, radius_step: v[2], defaults };
        map_gen::generate_spider(&spec)?
    } else if let Some(r) = &args.random {
        let v: Vec<f64> = numbers("random", r, 5)?;
        let seed = whole("random", v[4])?;
        let spec = RandomMapSpec {
            n_nodes: whole("random", v[0])?,
            width: v[1],
            height: v[2],
            target_degree: whole("random", v[3])?,
            seed: u64::from(seed),
            defaults,
        };
        map_gen::generate_random(&spec)?
    } else if let (Some(kml), Some(links)) = (&args.kml, &args.links) {
        let doc = map_gen::parse_kml(&read(kml)?)?;
        let links = map_gen::parse_links(&read(links)?)
            .map_err(|e| Failure::parse(format!("{}: {e}", links.display())))?;
        map_gen::project_kml(&doc, &links, defaults)?
    } else {
        return Err(Failure::invalid("one of --grid, --spider, --random or --kml/--links is required"));
    };
    if let Some(phase) = args.lights {
        map_gen::promote_traffic_lights(&mut net, phase)?;
    }
    write_or_stdout(args.out.as_deref(), &road_net::write_network(&net))?;
    let summary = format!("nodes {} edges {}", net.node_count(), net.edge_count());
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn whole(flag: &str, v: f64) -> CliResult<u32> {
    if v.fract() == 0.0 && (0.0..=f64::from(u32::MAX)).contains(&v) {
        Ok(v as u32)
    } else {
        Err(Failure::invalid(format!("--{flag}: {v} is not a non-negative whole number")))
    }
}

/// The scenario named by the preset flags with the single-field overrides
/// applied.
fn scenario(args: &ScenarioArgs) -> CliResult<ScenarioConfig> {
    let base = if let Some(path) = &args.config {
        Some(ScenarioConfig::load(path)?)
    } else if args.paper {
        Some(ScenarioConfig::paper())
    } else if args.desk {
        Some(ScenarioConfig::desk())
    } else {
        None
    };
    let demand = if let Some(path) = &args.demand {
        Some(DemandSource::File { path: path.clone() })
    } else if let Some(n) = args.random_trips {
        Some(DemandSource::RandomTrips { n, window: (0.0, 10.0) })
    } else {
        args.random_walks.map(|n| DemandSource::RandomWalks { n, window: (0.0, 10.0), max_edges: 1000, turns: None })
    };
    let mut cfg = match base {
        Some(cfg) => cfg,
        None => {
            let Some(path) = &args.map else {
                return Err(Failure::invalid("a scenario (--config, --desk or --paper), --map or --rwp is required"));
            };
            let Some(demand) = demand.clone() else {
                return Err(Failure::invalid("missing demand: give --demand, --random-trips or --random-walks"));
            };
            let mut cfg = ScenarioConfig::desk();
            cfg.map = MapSource::File { path: path.clone() };
            cfg.traffic_lights = None;
            cfg.demand = demand;
            cfg.kinds = vec![MobilityKind::Move];
            cfg
        }
    };
    if let Some(path) = &args.map {
        cfg.map = MapSource::File { path: path.clone() };
        cfg.traffic_lights = None;
    }
    if let Some(d) = demand {
        cfg.demand = d;
    }
    if let Some(p) = args.lights {
        cfg.traffic_lights = Some(p);
    }
    if let Some(d) = args.duration {
        cfg.duration = d;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    Ok(cfg)
}

/// Parses `n=150,w=2000,h=2000,vmin=1,vmax=13.9,pause=0,dur=900[,seed=S]`.
fn rwp_spec(text: &str, seed: Option<u64>) -> CliResult<RwpSpec> {
    let mut spec = RwpSpec { n_nodes: 0, width: 0.0, height: 0.0, v_min: 1.0, v_max: 13.9, pause: 0.0, duration: 0.0, seed: 1 };
    let mut seen = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Failure::invalid(format!("--rwp: expected key=value, got `{part}`")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| Failure::invalid(format!("--rwp: `{v}` is not a number")));
        let count = |v: &str| v.parse::<u64>().map_err(|_| Failure::invalid(format!("--rwp: `{v}` is not a whole number")));
        match key {
            "n" => spec.n_nodes = count(value)? as usize,
            "w" => spec.width = num(value)?,
            "h" => spec.height = num(value)?,
            "vmin" => spec.v_min = num(value)?,
            "vmax" => spec.v_max = num(value)?,
            "pause" => spec.pause = num(value)?,
            "dur" => spec.duration = num(value)?,
            "seed" => spec.seed = count(value)?,
            other => return Err(Failure::invalid(format!("--rwp: unknown key `{other}`"))),
        }
        seen.push(key);
    }
    for required in ["n", "w", "h", "dur"] {
        if !seen.contains(&required) {
            return Err(Failure::invalid(format!("--rwp: `{required}` is required")));
        }
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn checked_network(cfg: &ScenarioConfig) -> CliResult<RoadNetwork> {
    let net = cfg.network()?;
    let violations = net.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Failure::invalid(format!("road network is invalid: {}", list.join("; "))));
    }
    Ok(net)
}

fn mobility_cmd(args: MobilityArgs) -> CliResult {
    let trace: MobilityTrace = if let Some(text) = &args.rwp {
        if args.kind == Some(MobilityKind::Move) {
            return Err(Failure::invalid("--rwp produces random waypoint mobility; drop --kind move"));
        }
        mobility::random_waypoint(&rwp_spec(text, args.seed)?)?
    } else {
        let cfg = scenario(&args.scenario)?;
        cfg.validate_mobility()?;
        let kind = args.kind.unwrap_or(cfg.kinds[0]);
        let seed = args.seed.unwrap_or(cfg.seeds[0]);
        let net = match kind {
            MobilityKind::Move => Some(checked_network(&cfg)?),
            MobilityKind::Rwp => None,
        };
        cfg.mobility(kind, net.as_ref(), seed)?
    };
    let trace = trace.quantized();
    write_or_stdout(args.out.as_deref(), &trace_io::write_ns2(&trace))?;
    if let Some(p) = &args.csv {
        write(p, &trace_io::write_csv(&trace))?;
    }
    if let Some(p) = &args.mapping {
        write(p, &trace_io::write_mapping(&trace))?;
    }
    let summary = format!(
        "nodes {} waypoints {} duration {} area {:.2} x {:.2}",
        trace.node_count(),
        trace.waypoint_count(),
        trace.duration,
        trace.width,
        trace.height
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn parse_flow(text: &str, index: usize, duration: f64, payload: u32, rate: f64) -> CliResult<CbrFlow> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if !(2..=4).contains(&parts.len()) {
        return Err(Failure::invalid(format!("--flow {index}: expected SRC,DST[,START[,STOP]], got `{text}`")));
    }
    let node = |p: &str| p.parse::<usize>().map_err(|_| Failure::invalid(format!("--flow {index}: bad node `{p}`")));
    let time = |p: &str| p.parse::<f64>().map_err(|_| Failure::invalid(format!("--flow {index}: bad time `{p}`")));
    let start = parts.get(2).map(|p| time(p)).transpose()?.unwrap_or(0.0);
    let stop = parts.get(3).map(|p| time(p)).transpose()?.unwrap_or(duration);
    Ok(CbrFlow { src: node(parts[0])?, dst: node(parts[1])?, payload, rate, start, stop })
}

fn netsim(args: NetsimArgs) -> CliResult {
    let text = read(&args.trace)?;
    let trace = trace_io::parse_ns2(&text).map_err(|e| Failure::parse(format!("{}: {e}", args.trace.display())))?;
    let mut radio = match &args.radio {
        Some(p) => serde_json::from_str::<RadioParams>(&read(p)?)
            .map_err(|e| Failure::parse(format!("{}: {e}", p.display())))?,
        None => RadioParams::default(),
    };
    let overrides = [
        (args.exponent, &mut radio.pl_exponent),
        (args.sigma, &mut radio.shadow_sigma),
        (args.tx_power, &mut radio.tx_power),
        (args.rx_threshold, &mut radio.rx_threshold),
        (args.cs_threshold, &mut radio.cs_threshold),
    ];
    for (value, field) in overrides {
        if let Some(v) = value {
            *field = v;
        }
    }
    radio.check()?;
    let duration = args.duration.unwrap_or(trace.duration);
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Failure::invalid(format!(
            "simulation duration must be > 0 (trace ends at {}); pass --duration",
            trace.duration
        )));
    }
    let flows: Vec<CbrFlow> = match args.sources {
        Some(n) => {
            let spec = FlowsSpec { n_sources: vec![n], payload: args.payload, rate: args.rate, start_window: args.start_window };
            scenario::choose_flows(trace.node_count(), n, &spec, duration, args.seed)?
        }
        None => args
            .flow
            .iter()
            .enumerate()
            .map(|(i, f)| parse_flow(f, i, duration, args.payload, args.rate))
            .collect::<CliResult<_>>()?,
    };
    let log = net_sim::run_simulation(&trace, &flows, &radio, &Default::default(), duration, args.seed)?;
    if let Some(p) = &args.log {
        write(p, &log.to_csv())?;
    }
    println!(
        "# nodes {} flows {} duration {} s seed {} | n={} σ={:.1} dB d0={} m PL0={} dB tx={} dBm rx={} dBm cs={} dBm rate={} b/s",
        trace.node_count(),
        flows.len(),
        duration,
        args.seed,
        radio.pl_exponent,
        radio.shadow_sigma,
        radio.ref_dist,
        radio.ref_loss,
        radio.tx_power,
        radio.rx_threshold,
        radio.cs_threshold,
        radio.bitrate
    );
    print!("sent {} received {}", log.sent(), log.received());
    match metrics::pdr(&log) {
        Ok(p) => println!(" PDR {p:.2}"),
        Err(_) => println!(" PDR undefined (nothing sent)"),
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> CliResult {
    let mut cfg = if let Some(path) = &args.config {
        ScenarioConfig::load(path)?
    } else if args.paper {
        ScenarioConfig::paper()
    } else if args.desk {
        ScenarioConfig::desk()
    } else {
        return Err(Failure::invalid("one of --config, --desk or --paper is required"));
    };
    if let Some(first) = args.seed {
        cfg.seeds = (0..cfg.seeds.len() as u64).map(|i| first.wrapping_add(i)).collect();
    }
    let out = metrics::experiment(&cfg, args.jobs)?;
    fs::create_dir_all(&args.out).map_err(|e| Failure::invalid(format!("{}: {e}", args.out.display())))?;
    write(&args.out.join("results.csv"), &metrics::results_csv(&out.results))?;
    let aggregate = metrics::aggregate_csv(&out.rows);
    write(&args.out.join("aggregate.csv"), &aggregate)?;
    write(&args.out.join("fig12.csv"), &metrics::fig12_csv(&out.rows))?;
    print!("{aggregate}");
    for v in out.verdicts() {
        println!("{}", v.line());
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> CliResult<bool> {
    let mut problems: Vec<String> = Vec::new();
    if let Some(path) = &args.network {
        let net = road_net::parse_network(&read(path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        let found = net.validate();
        println!("{}: {} nodes, {} edges, {} violations", path.display(), net.node_count(), net.edge_count(), found.len());
        problems.extend(found.iter().map(|v| format!("{}: {v}", path.display())));
    }
    if let Some(path) = &args.trace {
        let trace = trace_io::parse_ns2(&read(path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        let found = trace.problems();
        println!("{}: {} nodes, {} waypoints, {} violations", path.display(), trace.node_count(), trace.waypoint_count(), found.len());
        problems.extend(found.iter().map(|v| format!("{}: {v}", path.display())));
    }
    if let Some(path) = &args.config {
        let cfg = ScenarioConfig::load(path)?;
        match cfg.validate() {
            Ok(()) => {
                let net = cfg.network()?;
                let found = net.validate();
                println!("{}: scenario ok, map has {} nodes, {} edges, {} violations", path.display(), net.node_count(), net.edge_count(), found.len());
                problems.extend(found.iter().map(|v| format!("{}: map: {v}", path.display())));
            }
            Err(e) => {
                println!("{}: scenario has 1 violation", path.display());
                problems.push(format!("{}: {e}", path.display()));
            }
        }
    }
    for p in &problems {
        println!("  {p}");
    }
    Ok(problems.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Genmap(a) => genmap(a).map(|()| true),
        Command::Mobility(a) => mobility_cmd(a).map(|()| true),
        Command::Netsim(a) => netsim(a).map(|()| true),
        Command::Experiment(a) => experiment(a).map(|()| true),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATIONS),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
