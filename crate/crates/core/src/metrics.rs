//! Packet delivery ratios, multi-seed aggregates and the mobility-model
//! comparison matrix.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::mobility::MobilityTrace;
use crate::net_sim::{self, PacketLog};
use crate::scenario::{MobilityKind, ScenarioConfig, ScenarioError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("delivery ratio is undefined when no packet was sent")]
    NothingSent,
    #[error("no results to aggregate")]
    Empty,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("could not start the worker pool: {0}")]
    Pool(String),
}

/// Delivered over sent.
pub fn pdr(log: &PacketLog) -> Result<f64, MetricsError> {
    ratio(log.sent(), log.received())
}

fn ratio(sent: usize, received: usize) -> Result<f64, MetricsError> {
    if sent == 0 {
        return Err(MetricsError::NothingSent);
    }
    Ok(received as f64 / sent as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub kind: MobilityKind,
    pub n_sources: usize,
    pub seed: u64,
    pub sent: usize,
    pub received: usize,
    pub pdr: f64,
}

impl RunResult {
    pub fn new(kind: MobilityKind, n_sources: usize, seed: u64, log: &PacketLog) -> Result<Self, MetricsError> {
        Ok(Self { kind, n_sources, seed, sent: log.sent(), received: log.received(), pdr: pdr(log)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub kind: MobilityKind,
    pub n_sources: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n_runs: usize,
}

impl AggregateRow {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// One row per (kind, source count), sorted by that pair. The mean is
/// summed in seed order so the result does not depend on the order of
/// `results`.
pub fn aggregate(results: &[RunResult]) -> Result<Vec<AggregateRow>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: BTreeMap<(MobilityKind, usize), Vec<(u64, f64)>> = BTreeMap::new();
    for r in results {
        groups.entry((r.kind, r.n_sources)).or_default().push((r.seed, r.pdr));
    }
    Ok(groups
        .into_iter()
        .map(|((kind, n_sources), mut runs)| {
            runs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            AggregateRow { kind, n_sources, mean: mean.clamp(min, max), min, max, n_runs: values.len() }
        })
        .collect())
}

pub fn results_csv(results: &[RunResult]) -> String {
    let mut sorted: Vec<&RunResult> = results.iter().collect();
    sorted.sort_by_key(|r| (r.kind, r.n_sources, r.seed));
    let mut out = String::from("kind,n_sources,seed,sent,received,pdr\n");
    for r in sorted {
        let _ = writeln!(out, "{},{},{},{},{},{:.6}", r.kind, r.n_sources, r.seed, r.sent, r.received, r.pdr);
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("kind,n_sources,mean,min,max,n_runs\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.6},{:.6},{:.6},{}", r.kind, r.n_sources, r.mean, r.min, r.max, r.n_runs);
    }
    out
}

/// One line per source count with mean and range of both models, ready
/// for a plot with error bars. Missing cells stay empty.
pub fn fig12_csv(rows: &[AggregateRow]) -> String {
    let mut by_n: BTreeMap<usize, BTreeMap<MobilityKind, &AggregateRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n_sources).or_default().insert(r.kind, r);
    }
    let mut out = String::from("n_sources,move_mean,move_min,move_max,rwp_mean,rwp_min,rwp_max\n");
    for (n, kinds) in by_n {
        let _ = write!(out, "{n}");
        for kind in [MobilityKind::Move, MobilityKind::Rwp] {
            match kinds.get(&kind) {
                Some(r) => {
                    let _ = write!(out, ",{:.6},{:.6},{:.6}", r.mean, r.min, r.max);
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn rows_of(rows: &[AggregateRow], kind: MobilityKind) -> Vec<&AggregateRow> {
    let mut v: Vec<&AggregateRow> = rows.iter().filter(|r| r.kind == kind).collect();
    v.sort_by_key(|r| r.n_sources);
    v
}

/// Mean delivery ratio should not drop as sources are added: no decrease
/// at all for random waypoint, at most one decrease for the road model.
pub fn trend_verdict(rows: &[AggregateRow]) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (kind, allowed) in [(MobilityKind::Rwp, 0), (MobilityKind::Move, 1)] {
        let series = rows_of(rows, kind);
        if series.len() < 2 {
            pass = false;
            parts.push(format!("{kind}: fewer than two source counts"));
            continue;
        }
        let steps = series.len() - 1;
        let drops = series.windows(2).filter(|w| w[1].mean < w[0].mean).count();
        pass &= drops <= allowed;
        let means: Vec<String> = series.iter().map(|r| format!("{}:{:.3}", r.n_sources, r.mean)).collect();
        parts.push(format!("{kind} {}/{steps} non-decreasing steps [{}]", steps - drops, means.join(" ")));
    }
    Verdict { name: "pdr-rises-with-sources".into(), pass, detail: parts.join("; ") }
}

/// The road model should deliver less than random waypoint at every source
/// count, and with a range at least as wide for all but one count.
pub fn gap_verdict(rows: &[AggregateRow]) -> Verdict {
    let moves = rows_of(rows, MobilityKind::Move);
    let rwps = rows_of(rows, MobilityKind::Rwp);
    let pairs: Vec<(&AggregateRow, &AggregateRow)> = moves
        .iter()
        .filter_map(|m| rwps.iter().find(|r| r.n_sources == m.n_sources).map(|r| (*m, *r)))
        .collect();
    if pairs.is_empty() {
        return Verdict { name: "move-below-rwp".into(), pass: false, detail: "no source count has both models".into() };
    }
    let lower = pairs.iter().filter(|(m, r)| m.mean < r.mean).count();
    let wider = pairs.iter().filter(|(m, r)| m.range() >= r.range()).count();
    let needed_wider = pairs.len().saturating_sub(1).max(1).min(pairs.len());
    let pass = lower == pairs.len() && wider >= needed_wider;
    let cells: Vec<String> = pairs
        .iter()
        .map(|(m, r)| format!("{}: {:.3}±{:.3} vs {:.3}±{:.3}", m.n_sources, m.mean, m.range() / 2.0, r.mean, r.range() / 2.0))
        .collect();
    Verdict {
        name: "move-below-rwp".into(),
        pass,
        detail: format!("lower mean {lower}/{n}, wider range {wider}/{n} [{}]", cells.join("; "), n = pairs.len()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub results: Vec<RunResult>,
    pub rows: Vec<AggregateRow>,
}

impl ExperimentOutput {
    pub fn verdicts(&self) -> Vec<Verdict> {
        vec![trend_verdict(&self.rows), gap_verdict(&self.rows)]
    }
}

/// Runs every (kind, source count, seed) combination of `config` on up to
/// `jobs` threads. Each (kind, seed) pair gets one mobility trace, rounded as
/// it would be in a written trace file, shared by all its source counts.
pub fn experiment(config: &ScenarioConfig, jobs: usize) -> Result<ExperimentOutput, MetricsError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| MetricsError::Pool(e.to_string()))?;
    pool.install(|| run_matrix(config))
}

fn run_matrix(config: &ScenarioConfig) -> Result<ExperimentOutput, MetricsError> {
    let net = if config.kinds.contains(&MobilityKind::Move) { Some(config.network()?) } else { None };
    let cells: Vec<(MobilityKind, u64)> =
        config.kinds.iter().flat_map(|&k| config.seeds.iter().map(move |&s| (k, s))).collect();
    let traces: Vec<MobilityTrace> = cells
        .par_iter()
        .map(|&(kind, seed)| config.mobility(kind, net.as_ref(), seed).map(|t| t.quantized()))
        .collect::<Result<_, _>>()?;

    let runs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| config.flows.n_sources.iter().map(move |&n| (c, n))).collect();
    let results: Vec<RunResult> = runs
        .par_iter()
        .map(|&(c, n_sources)| {
            let (kind, seed) = cells[c];
            let trace = &traces[c];
            let flows = config.flows(trace.node_count(), n_sources, seed)?;
            let log = net_sim::run_simulation(trace, &flows, &config.radio, &config.aodv, config.duration, seed)
                .map_err(ScenarioError::from)?;
            RunResult::new(kind, n_sources, seed, &log)
        })
        .collect::<Result<_, _>>()?;
    let rows = aggregate(&results)?;
    Ok(ExperimentOutput { results, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_sim::{DropReason, PacketRecord};

    fn log(sent: usize, received: usize) -> PacketLog {
        let records = (0..sent)
            .map(|i| PacketRecord {
                flow: 0,
                seq: i as u32,
                send_time: i as f64,
                recv_time: (i < received).then_some(i as f64 + 0.1),
                drop_reason: if i < received { DropReason::None } else { DropReason::NoRoute },
            })
            .collect();
        PacketLog { records }
    }

    fn result(kind: MobilityKind, n: usize, seed: u64, pdr: f64) -> RunResult {
        RunResult { kind, n_sources: n, seed, sent: 100, received: (pdr * 100.0) as usize, pdr }
    }

    #[test]
    fn pdr_arithmetic() {
        assert_eq!(pdr(&log(100, 87)).unwrap(), 0.87);
        assert_eq!(pdr(&log(5, 5)).unwrap(), 1.0);
        assert!(matches!(pdr(&log(0, 0)), Err(MetricsError::NothingSent)));
    }

    #[test]
    fn aggregate_mean_min_max() {
        let rows = aggregate(&[
            result(MobilityKind::Rwp, 10, 1, 0.2),
            result(MobilityKind::Rwp, 10, 2, 0.4),
            result(MobilityKind::Rwp, 10, 3, 0.6),
        ])
        .unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert!((r.mean - 0.4).abs() < 1e-12);
        assert_eq!((r.min, r.max, r.n_runs), (0.2, 0.6, 3));
    }

    #[test]
    fn single_run_row() {
        let rows = aggregate(&[result(MobilityKind::Move, 5, 1, 0.3)]).unwrap();
        assert_eq!((rows[0].mean, rows[0].min, rows[0].max), (0.3, 0.3, 0.3));
        assert!(matches!(aggregate(&[]), Err(MetricsError::Empty)));
    }

    #[test]
    fn sixty_runs_make_ten_rows_in_order() {
        let mut results = Vec::new();
        for kind in [MobilityKind::Rwp, MobilityKind::Move] {
            for n in [50, 10, 30, 20, 40] {
                for seed in 1..=6 {
                    results.push(result(kind, n, seed, 0.1 * seed as f64));
                }
            }
        }
        let rows = aggregate(&results).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.n_runs == 6 && r.min <= r.mean && r.mean <= r.max));
        let keys: Vec<(MobilityKind, usize)> = rows.iter().map(|r| (r.kind, r.n_sources)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys[0], (MobilityKind::Move, 10));
        results.reverse();
        assert_eq!(aggregate(&results).unwrap(), rows);
    }

    #[test]
    fn csv_layouts() {
        let results = [result(MobilityKind::Rwp, 10, 1, 0.5), result(MobilityKind::Move, 10, 1, 0.25)];
        assert_eq!(
            results_csv(&results),
            "kind,n_sources,seed,sent,received,pdr\nmove,10,1,100,25,0.250000\nrwp,10,1,100,50,0.500000\n"
        );
        let rows = aggregate(&results).unwrap();
        assert_eq!(
            aggregate_csv(&rows),
            "kind,n_sources,mean,min,max,n_runs\nmove,10,0.250000,0.250000,0.250000,1\nrwp,10,0.500000,0.500000,0.500000,1\n"
        );
        assert_eq!(
            fig12_csv(&rows),
            "n_sources,move_mean,move_min,move_max,rwp_mean,rwp_min,rwp_max\n10,0.250000,0.250000,0.250000,0.500000,0.500000,0.500000\n"
        );
    }

    fn row(kind: MobilityKind, n: usize, mean: f64, half: f64) -> AggregateRow {
        AggregateRow { kind, n_sources: n, mean, min: mean - half, max: mean + half, n_runs: 6 }
    }

    #[test]
    fn verdicts() {
        let mut rows = Vec::new();
        for (i, n) in [5, 10, 15, 20].into_iter().enumerate() {
            rows.push(row(MobilityKind::Rwp, n, 0.5 + 0.05 * i as f64, 0.05));
            rows.push(row(MobilityKind::Move, n, 0.3 + 0.05 * i as f64, 0.1));
        }
        assert!(trend_verdict(&rows).pass);
        assert!(gap_verdict(&rows).pass);
        rows[0].mean = 0.9; // rwp at 5 sources now beats later counts
        assert!(!trend_verdict(&rows).pass);
        rows[1].mean = 0.95; // move above rwp at 5 sources
        assert!(!gap_verdict(&rows).pass);
    }
}
