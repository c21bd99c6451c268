//! AODV routing as a pure per-node state machine.
//!
//! [`AodvNode::handle`] consumes one input (an application packet, a
//! received message, a link failure reported by the MAC, or a timer) and
//! returns the actions the surrounding simulator must carry out. The node
//! never looks at the clock or the radio on its own, which keeps it easy to
//! drive from scripted tests.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::DropReason;

pub type NodeIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AodvConfig {
    /// Lifetime of an active route, refreshed whenever it is used, s.
    pub active_route_timeout: f64,
    /// RREQ rounds per discovery before buffered packets are dropped.
    pub rreq_rounds: u32,
    /// Wait per RREQ round, s.
    pub rreq_timeout: f64,
    pub rreq_ttl: u32,
    /// IP time-to-live of data packets.
    pub data_ttl: u32,
    /// Data packets held per node while routes are being discovered.
    pub buffer_capacity: usize,
    /// Let intermediate nodes with a fresh enough route answer RREQs.
    pub intermediate_reply: bool,
}

impl Default for AodvConfig {
    fn default() -> Self {
        Self {
            active_route_timeout: 3.0,
            rreq_rounds: 3,
            rreq_timeout: 1.0,
            rreq_ttl: 30,
            data_ttl: 32,
            buffer_capacity: 64,
            intermediate_reply: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AodvEntry {
    pub dest: NodeIdx,
    pub next_hop: NodeIdx,
    pub hop_count: u32,
    pub dest_seq: u32,
    /// Whether `dest_seq` is known.
    pub seq_valid: bool,
    pub valid_until: f64,
    pub valid: bool,
    pub precursors: BTreeSet<NodeIdx>,
}

impl AodvEntry {
    pub fn is_active(&self, now: f64) -> bool {
        self.valid && self.valid_until > now
    }
}

/// An application packet in transit. `id` indexes the packet log.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub id: usize,
    pub src: NodeIdx,
    pub dst: NodeIdx,
    pub ttl: u32,
    pub payload: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rreq {
    pub originator: NodeIdx,
    pub rreq_id: u32,
    pub orig_seq: u32,
    pub dest: NodeIdx,
    /// Last known sequence number of `dest`, if any.
    pub dest_seq: Option<u32>,
    pub hop_count: u32,
    pub ttl: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rrep {
    /// Node that asked for the route; the RREP travels towards it.
    pub originator: NodeIdx,
    pub dest: NodeIdx,
    pub dest_seq: u32,
    pub hop_count: u32,
    pub lifetime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rerr {
    /// Destinations that became unreachable, with their new sequence number.
    pub unreachable: Vec<(NodeIdx, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Data(DataPacket),
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr(Rerr),
}

/// UDP/IP header bytes added to every message.
pub const IP_UDP_HEADER: u32 = 28;

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Data(_) => "DATA",
            Message::Rreq(_) => "RREQ",
            Message::Rrep(_) => "RREP",
            Message::Rerr(_) => "RERR",
        }
    }

    /// Network-layer size including the UDP/IP header.
    pub fn bytes(&self) -> u32 {
        IP_UDP_HEADER
            + match self {
                Message::Data(d) => d.payload,
                Message::Rreq(_) => 24,
                Message::Rrep(_) => 20,
                Message::Rerr(e) => 4 + 8 * e.unreachable.len().max(1) as u32,
            }
    }

    pub fn is_control(&self) -> bool {
        !matches!(self, Message::Data(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timer {
    /// Reply deadline for the RREQ `rreq_id` looking for `dest`.
    Discovery { dest: NodeIdx, rreq_id: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    /// A packet handed down by the local application.
    Send(DataPacket),
    Receive { from: NodeIdx, msg: Message },
    /// The MAC gave up delivering `failed` to `next_hop`; `queued` holds the
    /// other messages it had waiting for the same neighbour.
    LinkFailure { next_hop: NodeIdx, failed: Message, queued: Vec<Message> },
    Timer(Timer),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Unicast { next_hop: NodeIdx, msg: Message },
    /// `jitter` asks the simulator to delay the broadcast by a small random
    /// amount, as done for forwarded floods.
    Broadcast { msg: Message, jitter: bool },
    Deliver(DataPacket),
    Drop(DataPacket, DropReason),
    SetTimer { at: f64, timer: Timer },
}

#[derive(Debug, Clone)]
pub struct AodvNode {
    pub id: NodeIdx,
    pub config: AodvConfig,
    seq: u32,
    rreq_id: u32,
    table: BTreeMap<NodeIdx, AodvEntry>,
    seen: BTreeSet<(NodeIdx, u32)>,
    buffer: BTreeMap<NodeIdx, VecDeque<DataPacket>>,
    buffered: usize,
    /// Running discoveries: round number and id of the latest RREQ.
    discovery: BTreeMap<NodeIdx, (u32, u32)>,
}

impl AodvNode {
    pub fn new(id: NodeIdx, config: AodvConfig) -> Self {
        Self {
            id,
            config,
            seq: 0,
            rreq_id: 0,
            table: BTreeMap::new(),
            seen: BTreeSet::new(),
            buffer: BTreeMap::new(),
            buffered: 0,
            discovery: BTreeMap::new(),
        }
    }

    /// Own destination sequence number.
    pub fn seq(&self) -> u32 {
        self.seq
    }

    pub fn route(&self, dest: NodeIdx) -> Option<&AodvEntry> {
        self.table.get(&dest)
    }

    pub fn routes(&self) -> impl Iterator<Item = &AodvEntry> {
        self.table.values()
    }

    /// Routes usable at `now`.
    pub fn active_routes(&self, now: f64) -> impl Iterator<Item = &AodvEntry> {
        self.table.values().filter(move |e| e.is_active(now))
    }

    /// Packets waiting for a route discovery.
    pub fn buffered_packets(&self) -> impl Iterator<Item = &DataPacket> {
        self.buffer.values().flatten()
    }

    pub fn handle(&mut self, input: Input, now: f64) -> Vec<Action> {
        let mut out = Vec::new();
        match input {
            Input::Send(pkt) => self.send(pkt, now, &mut out),
            Input::Receive { from, msg } => match msg {
                Message::Data(pkt) => self.on_data(from, pkt, now, &mut out),
                Message::Rreq(r) => self.on_rreq(from, r, now, &mut out),
                Message::Rrep(r) => self.on_rrep(from, r, now, &mut out),
                Message::Rerr(r) => self.on_rerr(from, r, now, &mut out),
            },
            Input::LinkFailure { next_hop, failed, queued } => self.on_link_failure(next_hop, failed, queued, now, &mut out),
            Input::Timer(Timer::Discovery { dest, rreq_id }) => self.on_discovery_timeout(dest, rreq_id, now, &mut out),
        }
        out
    }

    fn active(&self, dest: NodeIdx, now: f64) -> Option<&AodvEntry> {
        self.table.get(&dest).filter(|e| e.is_active(now))
    }

    fn refresh(&mut self, dest: NodeIdx, now: f64) {
        let lifetime = now + self.config.active_route_timeout;
        if let Some(e) = self.table.get_mut(&dest) {
            if e.is_active(now) {
                e.valid_until = e.valid_until.max(lifetime);
            }
        }
    }

    /// Sends along an active route, refreshing it and its next hop.
    fn forward(&mut self, pkt: DataPacket, now: f64, out: &mut Vec<Action>) -> Result<(), DataPacket> {
        let Some(next_hop) = self.active(pkt.dst, now).map(|e| e.next_hop) else {
            return Err(pkt);
        };
        self.refresh(pkt.dst, now);
        self.refresh(next_hop, now);
        out.push(Action::Unicast { next_hop, msg: Message::Data(pkt) });
        Ok(())
    }

    fn send(&mut self, pkt: DataPacket, now: f64, out: &mut Vec<Action>) {
        if let Err(pkt) = self.forward(pkt, now, out) {
            self.buffer_and_discover(pkt, now, out);
        }
    }

    fn buffer_and_discover(&mut self, pkt: DataPacket, now: f64, out: &mut Vec<Action>) {
        let dest = pkt.dst;
        if self.buffered >= self.config.buffer_capacity {
            out.push(Action::Drop(pkt, DropReason::QueueOverflow));
        } else {
            self.buffer.entry(dest).or_default().push_back(pkt);
            self.buffered += 1;
        }
        if !self.discovery.contains_key(&dest) {
            self.originate_rreq(dest, 0, now, out);
        }
    }

    fn originate_rreq(&mut self, dest: NodeIdx, round: u32, now: f64, out: &mut Vec<Action>) {
        self.seq += 1;
        self.rreq_id += 1;
        self.seen.insert((self.id, self.rreq_id));
        self.discovery.insert(dest, (round, self.rreq_id));
        let dest_seq = self.table.get(&dest).filter(|e| e.seq_valid).map(|e| e.dest_seq);
        out.push(Action::Broadcast {
            msg: Message::Rreq(Rreq {
                originator: self.id,
                rreq_id: self.rreq_id,
                orig_seq: self.seq,
                dest,
                dest_seq,
                hop_count: 0,
                ttl: self.config.rreq_ttl,
            }),
            jitter: false,
        });
        out.push(Action::SetTimer { at: now + self.config.rreq_timeout, timer: Timer::Discovery { dest, rreq_id: self.rreq_id } });
    }

    fn on_discovery_timeout(&mut self, dest: NodeIdx, rreq_id: u32, now: f64, out: &mut Vec<Action>) {
        let Some(&(round, latest)) = self.discovery.get(&dest) else {
            return;
        };
        if latest != rreq_id {
            return;
        }
        if round + 1 < self.config.rreq_rounds {
            self.originate_rreq(dest, round + 1, now, out);
        } else {
            self.discovery.remove(&dest);
            for pkt in self.buffer.remove(&dest).unwrap_or_default() {
                self.buffered -= 1;
                out.push(Action::Drop(pkt, DropReason::NoRoute));
            }
        }
    }

    /// Installs or refreshes the one-hop route to a neighbour we just heard.
    fn touch_neighbour(&mut self, nb: NodeIdx, now: f64) {
        let until = now + self.config.active_route_timeout;
        let e = self.table.entry(nb).or_insert_with(|| AodvEntry {
            dest: nb,
            next_hop: nb,
            hop_count: 1,
            dest_seq: 0,
            seq_valid: false,
            valid_until: until,
            valid: true,
            precursors: BTreeSet::new(),
        });
        let was_active = e.is_active(now);
        e.next_hop = nb;
        e.hop_count = 1;
        e.valid = true;
        e.valid_until = if was_active { e.valid_until.max(until) } else { until };
    }

    /// Offers a route to `dest` via `next_hop`; it replaces the current one
    /// if it is fresher, or equally fresh and shorter, or the current one is
    /// unusable.
    fn offer_route(&mut self, dest: NodeIdx, next_hop: NodeIdx, hop_count: u32, seq: u32, until: f64, now: f64) -> bool {
        match self.table.get_mut(&dest) {
            None => {
                self.table.insert(
                    dest,
                    AodvEntry {
                        dest,
                        next_hop,
                        hop_count,
                        dest_seq: seq,
                        seq_valid: true,
                        valid_until: until,
                        valid: true,
                        precursors: BTreeSet::new(),
                    },
                );
                true
            }
            Some(e) => {
                let newer = seq.wrapping_sub(e.dest_seq) as i32 > 0;
                let better = !e.seq_valid
                    || newer
                    || (seq == e.dest_seq && (!e.is_active(now) || hop_count < e.hop_count));
                if better {
                    e.next_hop = next_hop;
                    e.hop_count = hop_count;
                    e.dest_seq = seq;
                    e.seq_valid = true;
                    e.valid = true;
                    e.valid_until = until;
                } else if e.is_active(now) && e.next_hop == next_hop && e.hop_count == hop_count {
                    e.valid_until = e.valid_until.max(until);
                }
                better
            }
        }
    }

    fn on_rreq(&mut self, from: NodeIdx, r: Rreq, now: f64, out: &mut Vec<Action>) {
        if !self.seen.insert((r.originator, r.rreq_id)) {
            return;
        }
        self.touch_neighbour(from, now);
        let hops = r.hop_count + 1;
        let until = now + self.config.active_route_timeout;
        self.offer_route(r.originator, from, hops, r.orig_seq, until, now);

        if r.dest == self.id {
            if let Some(s) = r.dest_seq {
                self.seq = self.seq.max(s);
            }
            let rrep = Rrep {
                originator: r.originator,
                dest: self.id,
                dest_seq: self.seq,
                hop_count: 0,
                lifetime: self.config.active_route_timeout,
            };
            out.push(Action::Unicast { next_hop: from, msg: Message::Rrep(rrep) });
            return;
        }

        if self.config.intermediate_reply {
            let fresh = self.active(r.dest, now).filter(|e| e.seq_valid && r.dest_seq.is_none_or(|s| e.dest_seq >= s)).cloned();
            if let Some(e) = fresh {
                if let Some(fwd) = self.table.get_mut(&r.dest) {
                    fwd.precursors.insert(from);
                }
                if let Some(rev) = self.table.get_mut(&r.originator) {
                    rev.precursors.insert(e.next_hop);
                }
                let rrep = Rrep {
                    originator: r.originator,
                    dest: r.dest,
                    dest_seq: e.dest_seq,
                    hop_count: e.hop_count,
                    lifetime: e.valid_until - now,
                };
                out.push(Action::Unicast { next_hop: from, msg: Message::Rrep(rrep) });
                return;
            }
        }

        if r.ttl > 1 {
            let known = self.table.get(&r.dest).filter(|e| e.seq_valid).map(|e| e.dest_seq);
            let dest_seq = match (r.dest_seq, known) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            out.push(Action::Broadcast {
                msg: Message::Rreq(Rreq { hop_count: hops, ttl: r.ttl - 1, dest_seq, ..r }),
                jitter: true,
            });
        }
    }

    fn on_rrep(&mut self, from: NodeIdx, r: Rrep, now: f64, out: &mut Vec<Action>) {
        self.touch_neighbour(from, now);
        let hops = r.hop_count + 1;
        self.offer_route(r.dest, from, hops, r.dest_seq, now + r.lifetime, now);

        if r.originator == self.id {
            self.discovery.remove(&r.dest);
            let waiting = self.buffer.remove(&r.dest).unwrap_or_default();
            self.buffered -= waiting.len();
            for pkt in waiting {
                if let Err(pkt) = self.forward(pkt, now, out) {
                    out.push(Action::Drop(pkt, DropReason::NoRoute));
                }
            }
            return;
        }

        let Some(back) = self.active(r.originator, now).map(|e| e.next_hop) else {
            return;
        };
        if let Some(fwd) = self.table.get_mut(&r.dest) {
            fwd.precursors.insert(back);
        }
        if let Some(rev) = self.table.get_mut(&r.originator) {
            rev.precursors.insert(from);
        }
        self.refresh(r.originator, now);
        out.push(Action::Unicast { next_hop: back, msg: Message::Rrep(Rrep { hop_count: hops, ..r }) });
    }

    fn on_data(&mut self, from: NodeIdx, mut pkt: DataPacket, now: f64, out: &mut Vec<Action>) {
        self.touch_neighbour(from, now);
        self.refresh(pkt.src, now);
        if pkt.dst == self.id {
            out.push(Action::Deliver(pkt));
            return;
        }
        pkt.ttl = pkt.ttl.saturating_sub(1);
        if pkt.ttl == 0 {
            out.push(Action::Drop(pkt, DropReason::TtlExpired));
            return;
        }
        if let Err(pkt) = self.forward(pkt, now, out) {
            let seq = self.table.get(&pkt.dst).map_or(0, |e| e.dest_seq);
            out.push(Action::Broadcast { msg: Message::Rerr(Rerr { unreachable: vec![(pkt.dst, seq)] }), jitter: false });
            out.push(Action::Drop(pkt, DropReason::NoRoute));
        }
    }

    /// Invalidates the routes selected by `hit`, returning the affected
    /// destinations and whether any of them had precursors.
    fn invalidate(&mut self, now: f64, mut hit: impl FnMut(&AodvEntry) -> Option<u32>) -> (Vec<(NodeIdx, u32)>, bool) {
        let mut lost = Vec::new();
        let mut notify = false;
        for e in self.table.values_mut() {
            if let Some(seq) = hit(e) {
                e.valid = false;
                e.dest_seq = seq;
                e.seq_valid = true;
                e.valid_until = now;
                notify |= !e.precursors.is_empty();
                lost.push((e.dest, e.dest_seq));
            }
        }
        (lost, notify)
    }

    fn on_link_failure(&mut self, next_hop: NodeIdx, failed: Message, queued: Vec<Message>, now: f64, out: &mut Vec<Action>) {
        let (lost, notify) =
            self.invalidate(now, |e| (e.valid && e.next_hop == next_hop).then(|| e.dest_seq.wrapping_add(1)));
        if notify {
            out.push(Action::Broadcast { msg: Message::Rerr(Rerr { unreachable: lost }), jitter: false });
        }
        let tagged = std::iter::once((failed, DropReason::MacRetryLimit)).chain(queued.into_iter().map(|m| (m, DropReason::NoRoute)));
        for (msg, reason) in tagged {
            if let Message::Data(pkt) = msg {
                if pkt.src == self.id {
                    self.buffer_and_discover(pkt, now, out);
                } else {
                    out.push(Action::Drop(pkt, reason));
                }
            }
        }
    }

    fn on_rerr(&mut self, from: NodeIdx, r: Rerr, now: f64, out: &mut Vec<Action>) {
        let reported: BTreeMap<NodeIdx, u32> = r.unreachable.into_iter().collect();
        let (lost, notify) = self.invalidate(now, |e| {
            let seq = *reported.get(&e.dest)?;
            (e.valid && e.next_hop == from).then(|| if e.seq_valid { e.dest_seq.max(seq) } else { seq })
        });
        if notify {
            out.push(Action::Broadcast { msg: Message::Rerr(Rerr { unreachable: lost }), jitter: false });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: NodeIdx) -> AodvNode {
        AodvNode::new(id, AodvConfig::default())
    }

    fn pkt(id: usize, src: NodeIdx, dst: NodeIdx) -> DataPacket {
        DataPacket { id, src, dst, ttl: 32, payload: 64 }
    }

    fn broadcasts(actions: &[Action]) -> Vec<Message> {
        actions
            .iter()
            .filter_map(|a| match a {
                Action::Broadcast { msg, .. } => Some(msg.clone()),
                _ => None,
            })
            .collect()
    }

    fn unicasts(actions: &[Action]) -> Vec<(NodeIdx, Message)> {
        actions
            .iter()
            .filter_map(|a| match a {
                Action::Unicast { next_hop, msg } => Some((*next_hop, msg.clone())),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn send_without_route_floods_rreq_and_buffers() {
        let mut a = node(0);
        let acts = a.handle(Input::Send(pkt(0, 0, 1)), 0.0);
        let rreqs = broadcasts(&acts);
        assert!(matches!(&rreqs[..], [Message::Rreq(Rreq { originator: 0, dest: 1, ttl: 30, hop_count: 0, .. })]));
        assert_eq!(a.buffered_packets().count(), 1);
        assert_eq!(a.seq(), 1);
        // a second packet joins the running discovery
        let acts = a.handle(Input::Send(pkt(1, 0, 1)), 0.1);
        assert!(broadcasts(&acts).is_empty());
        assert_eq!(a.buffered_packets().count(), 2);
    }

    #[test]
    fn duplicate_rreq_is_ignored_without_state_change() {
        let mut b = node(1);
        let rreq = Rreq { originator: 0, rreq_id: 1, orig_seq: 1, dest: 2, dest_seq: None, hop_count: 0, ttl: 30 };
        let first = b.handle(Input::Receive { from: 0, msg: Message::Rreq(rreq.clone()) }, 0.0);
        assert_eq!(broadcasts(&first).len(), 1);
        let routes: Vec<AodvEntry> = b.routes().cloned().collect();
        let again = b.handle(Input::Receive { from: 3, msg: Message::Rreq(rreq) }, 0.5);
        assert!(again.is_empty());
        assert_eq!(b.routes().cloned().collect::<Vec<_>>(), routes);
    }

    #[test]
    fn two_node_exchange() {
        let (mut a, mut b) = (node(0), node(1));
        let acts = a.handle(Input::Send(pkt(0, 0, 1)), 0.0);
        let rreq = broadcasts(&acts).remove(0);
        let acts = b.handle(Input::Receive { from: 0, msg: rreq }, 0.001);
        let (to, rrep) = unicasts(&acts).remove(0);
        assert_eq!(to, 0);
        let acts = a.handle(Input::Receive { from: 1, msg: rrep }, 0.002);
        let r = a.route(1).unwrap();
        assert_eq!((r.next_hop, r.hop_count, r.valid), (1, 1, true));
        assert_eq!(unicasts(&acts), vec![(1, Message::Data(pkt(0, 0, 1)))]);
        let acts = b.handle(Input::Receive { from: 0, msg: Message::Data(pkt(0, 0, 1)) }, 0.003);
        assert_eq!(acts, vec![Action::Deliver(pkt(0, 0, 1))]);
    }

    #[test]
    fn bounded_discovery_drops_no_route() {
        let mut a = node(0);
        a.handle(Input::Send(pkt(0, 0, 5)), 0.0);
        let acts = a.handle(Input::Timer(Timer::Discovery { dest: 5, rreq_id: 1 }), 1.0);
        assert_eq!(broadcasts(&acts).len(), 1);
        let acts = a.handle(Input::Timer(Timer::Discovery { dest: 5, rreq_id: 2 }), 2.0);
        assert_eq!(broadcasts(&acts).len(), 1);
        let acts = a.handle(Input::Timer(Timer::Discovery { dest: 5, rreq_id: 3 }), 3.0);
        assert_eq!(acts, vec![Action::Drop(pkt(0, 0, 5), DropReason::NoRoute)]);
        assert_eq!(a.seq(), 3);
    }

    #[test]
    fn routes_expire_unless_used() {
        let mut a = node(0);
        a.handle(Input::Receive { from: 1, msg: Message::Rerr(Rerr { unreachable: vec![] }) }, 0.0);
        assert!(a.route(1).is_none(), "RERR must not create routes");
        a.touch_neighbour(1, 0.0);
        assert!(a.active(1, 2.9).is_some());
        assert!(a.active(1, 3.0).is_none());
    }

    #[test]
    fn link_failure_invalidates_and_notifies_precursors() {
        let mut b = node(1);
        b.offer_route(2, 2, 1, 4, 3.0, 0.0);
        b.table.get_mut(&2).unwrap().precursors.insert(0);
        let failed = Message::Data(pkt(3, 0, 2));
        let acts = b.handle(Input::LinkFailure { next_hop: 2, failed, queued: vec![Message::Data(pkt(4, 0, 2))] }, 1.0);
        let r = b.route(2).unwrap();
        assert!(!r.valid);
        assert_eq!(r.dest_seq, 5);
        assert_eq!(broadcasts(&acts), vec![Message::Rerr(Rerr { unreachable: vec![(2, 5)] })]);
        assert!(acts.contains(&Action::Drop(pkt(3, 0, 2), DropReason::MacRetryLimit)));
        assert!(acts.contains(&Action::Drop(pkt(4, 0, 2), DropReason::NoRoute)));
    }

    #[test]
    fn rerr_only_affects_routes_through_sender() {
        let mut a = node(0);
        a.offer_route(2, 1, 2, 4, 3.0, 0.0);
        a.offer_route(3, 4, 2, 4, 3.0, 0.0);
        let acts = a.handle(Input::Receive { from: 1, msg: Message::Rerr(Rerr { unreachable: vec![(2, 5), (3, 5)] }) }, 1.0);
        assert!(!a.route(2).unwrap().valid);
        assert!(a.route(3).unwrap().valid);
        assert!(broadcasts(&acts).is_empty(), "no precursors, nothing to propagate");
    }

    #[test]
    fn source_rebuffers_after_link_failure() {
        let mut a = node(0);
        a.offer_route(2, 1, 2, 4, 3.0, 0.0);
        let acts = a.handle(Input::LinkFailure { next_hop: 1, failed: Message::Data(pkt(0, 0, 2)), queued: vec![] }, 1.0);
        assert_eq!(a.buffered_packets().count(), 1);
        let rreq = broadcasts(&acts);
        assert!(matches!(&rreq[..], [Message::Rreq(Rreq { dest: 2, dest_seq: Some(5), .. })]));
    }

    #[test]
    fn ttl_expiry() {
        let mut b = node(1);
        let acts = b.handle(Input::Receive { from: 0, msg: Message::Data(DataPacket { ttl: 1, ..pkt(0, 0, 2) }) }, 0.0);
        assert_eq!(acts, vec![Action::Drop(DataPacket { ttl: 0, ..pkt(0, 0, 2) }, DropReason::TtlExpired)]);
    }

    #[test]
    fn message_sizes() {
        assert_eq!(Message::Data(pkt(0, 0, 1)).bytes(), 92);
        let rreq = Rreq { originator: 0, rreq_id: 1, orig_seq: 1, dest: 2, dest_seq: None, hop_count: 0, ttl: 30 };
        assert_eq!(Message::Rreq(rreq).bytes(), 52);
        assert_eq!(Message::Rerr(Rerr { unreachable: vec![(1, 1)] }).bytes(), 40);
    }
}
