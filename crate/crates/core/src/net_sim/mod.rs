//! Discrete-event wireless network simulation over a mobility trace.
//!
//! Nodes move as described by a [`MobilityTrace`]. Radio links follow
//! log-distance path loss with per-frame log-normal shadowing; medium
//! access is a simplified 802.11 DCF; routing is AODV; traffic is constant
//! bit rate UDP. The outcome of every application packet is collected in a
//! [`PacketLog`].

pub mod aodv;
pub mod channel;
mod engine;
pub mod event;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::MobilityTrace;

pub use aodv::{AodvConfig, AodvEntry, AodvNode, NodeIdx};
pub use channel::{mean_path_loss_db, nominal_range, path_loss_db, range_for_threshold, rx_power_dbm};
pub use engine::{airtime, SimStats, Simulator, ACK_BYTES, DIFS, IFQ_CAPACITY, MAC_OVERHEAD, MAX_RETRIES, SIFS, SLOT};
pub use event::{EventQueue, SimTime};

#[derive(Debug, Error, PartialEq)]
pub enum NetSimError {
    #[error("flow {flow} uses node {node}, which is not in the trace ({nodes} nodes)")]
    EndpointNotInTrace { flow: usize, node: usize, nodes: usize },
    #[error("invalid flow {flow}: {reason}")]
    InvalidFlow { flow: usize, reason: String },
    #[error("invalid radio parameters: {0}")]
    InvalidRadio(String),
    #[error("path loss needs a positive distance, got {0}")]
    BadDistance(f64),
    #[error("invalid duration {0}")]
    BadDuration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    /// Path loss exponent n.
    pub pl_exponent: f64,
    /// Shadowing standard deviation σ, dB.
    pub shadow_sigma: f64,
    /// Reference distance d0, m.
    pub ref_dist: f64,
    /// Path loss at d0, dB.
    pub ref_loss: f64,
    /// dBm.
    pub tx_power: f64,
    /// Weakest decodable frame, dBm.
    pub rx_threshold: f64,
    /// Weakest signal that makes the medium busy, dBm.
    pub cs_threshold: f64,
    /// bit/s.
    pub bitrate: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            pl_exponent: 2.56,
            shadow_sigma: 4.0,
            ref_dist: 1.0,
            ref_loss: 40.0,
            tx_power: 24.0,
            rx_threshold: -64.0,
            cs_threshold: -74.0,
            bitrate: 2_000_000.0,
        }
    }
}

impl RadioParams {
    pub fn check(&self) -> Result<(), NetSimError> {
        let bad = |m: &str| Err(NetSimError::InvalidRadio(m.into()));
        let all = [
            self.pl_exponent,
            self.shadow_sigma,
            self.ref_dist,
            self.ref_loss,
            self.tx_power,
            self.rx_threshold,
            self.cs_threshold,
            self.bitrate,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all values must be finite");
        }
        if self.pl_exponent <= 0.0 {
            return bad("path loss exponent must be > 0");
        }
        if self.shadow_sigma < 0.0 {
            return bad("shadowing sigma must be >= 0");
        }
        if self.ref_dist <= 0.0 {
            return bad("reference distance must be > 0");
        }
        if self.cs_threshold > self.rx_threshold {
            return bad("carrier-sense threshold must not exceed the receive threshold");
        }
        if self.bitrate <= 0.0 {
            return bad("bitrate must be > 0");
        }
        Ok(())
    }
}

/// Constant bit rate UDP traffic from `src` to `dst`. Packets leave at
/// `start`, `start + 1/rate`, … while the send time is before `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbrFlow {
    pub src: usize,
    pub dst: usize,
    /// Application payload, bytes.
    pub payload: u32,
    /// Packets per second.
    pub rate: f64,
    pub start: f64,
    pub stop: f64,
}

impl CbrFlow {
    pub fn new(src: usize, dst: usize, start: f64, stop: f64) -> Self {
        Self { src, dst, payload: 64, rate: 4.0, start, stop }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    None,
    NoRoute,
    MacRetryLimit,
    QueueOverflow,
    TtlExpired,
    EndOfRun,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::None => "none",
            DropReason::NoRoute => "no_route",
            DropReason::MacRetryLimit => "mac_retry_limit",
            DropReason::QueueOverflow => "queue_overflow",
            DropReason::TtlExpired => "ttl_expired",
            DropReason::EndOfRun => "end_of_run",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub flow: usize,
    pub seq: u32,
    pub send_time: f64,
    /// Set once the packet reaches its destination.
    pub recv_time: Option<f64>,
    /// `DropReason::None` for delivered packets.
    pub drop_reason: DropReason,
}

impl PacketRecord {
    pub fn delivered(&self) -> bool {
        self.recv_time.is_some()
    }
}

/// Final state of every application packet, in injection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PacketLog {
    pub records: Vec<PacketRecord>,
}

impl PacketLog {
    pub fn sent(&self) -> usize {
        self.records.len()
    }

    pub fn received(&self) -> usize {
        self.records.iter().filter(|r| r.delivered()).count()
    }

    pub fn dropped(&self, reason: DropReason) -> usize {
        self.records.iter().filter(|r| !r.delivered() && r.drop_reason == reason).count()
    }

    /// `(sent, received)` of one flow.
    pub fn flow_counts(&self, flow: usize) -> (usize, usize) {
        let mine = self.records.iter().filter(|r| r.flow == flow);
        let received = mine.clone().filter(|r| r.delivered()).count();
        (mine.count(), received)
    }

    /// `flow,seq,send_time,recv_time,delivered,drop_reason`; times with 6
    /// decimals, `recv_time` empty for lost packets, `delivered` as 0/1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("flow,seq,send_time,recv_time,delivered,drop_reason\n");
        for r in &self.records {
            let recv = r.recv_time.map(|t| format!("{t:.6}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{},{}",
                r.flow,
                r.seq,
                r.send_time,
                recv,
                u8::from(r.delivered()),
                r.drop_reason.as_str()
            );
        }
        out
    }
}

/// Runs one simulation from time 0 to `duration`.
///
/// Radio shadowing draws come from the `radio` stream of `seed`, MAC
/// backoff and broadcast jitter from the `mac` stream.
pub fn run_simulation(
    trace: &MobilityTrace,
    flows: &[CbrFlow],
    radio: &RadioParams,
    aodv: &AodvConfig,
    duration: f64,
    seed: u64,
) -> Result<PacketLog, NetSimError> {
    let mut sim = Simulator::new(trace, flows, *radio, *aodv, seed)?;
    sim.run_until(duration)?;
    Ok(sim.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_radio_is_valid() {
        assert!(RadioParams::default().check().is_ok());
        let bad = RadioParams { cs_threshold: -50.0, ..Default::default() };
        assert!(bad.check().is_err());
    }

    #[test]
    fn log_counts_and_csv() {
        let log = PacketLog {
            records: vec![
                PacketRecord { flow: 0, seq: 0, send_time: 0.0, recv_time: Some(0.0125), drop_reason: DropReason::None },
                PacketRecord { flow: 0, seq: 1, send_time: 0.25, recv_time: None, drop_reason: DropReason::NoRoute },
            ],
        };
        assert_eq!((log.sent(), log.received()), (2, 1));
        assert_eq!(log.dropped(DropReason::NoRoute), 1);
        assert_eq!(log.flow_counts(0), (2, 1));
        assert_eq!(
            log.to_csv(),
            "flow,seq,send_time,recv_time,delivered,drop_reason\n0,0,0.000000,0.012500,1,none\n0,1,0.250000,,0,no_route\n"
        );
    }
}
