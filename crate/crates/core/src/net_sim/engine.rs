//! Physical layer, MAC and the event loop tying them to AODV and CBR
//! traffic.
//!
//! Medium access is a reduced 802.11 DCF: a station with a frame waits for
//! the medium to be idle, waits DIFS plus a random number of slots (frozen
//! whenever the medium turns busy), and transmits. Unicast frames are
//! acknowledged after SIFS; a missing ACK doubles the contention window and
//! retries, up to [`MAX_RETRIES`] retransmissions, after which the routing
//! layer is told the link broke. Broadcasts are sent once.
//!
//! Any signal at or above the carrier-sense threshold makes the medium busy.
//! A frame is decodable at a receiver when its power reaches the receive
//! threshold, the receiver is not transmitting, and no other frame above the
//! receive threshold overlaps it. There is no capture and no accumulation of
//! weaker signals: overlapping decodable frames are all lost, and signals
//! below the receive threshold only defer transmissions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::mobility::{MobilityTrace, NodeTrack};
use crate::rng::{self, SimRng};
use crate::road_net::Point;

use super::aodv::{Action, AodvConfig, AodvEntry, AodvNode, DataPacket, Input, Message, Timer};
use super::channel::{mean_path_loss_db, range_for_threshold};
use super::event::{EventQueue, SimTime};
use super::{CbrFlow, DropReason, NetSimError, PacketLog, PacketRecord, RadioParams};

pub const SLOT: SimTime = SimTime(20_000);
pub const SIFS: SimTime = SimTime(10_000);
pub const DIFS: SimTime = SimTime(50_000);
pub const CW_MIN: u32 = 31;
pub const CW_MAX: u32 = 1023;
/// Retransmissions after the first attempt of a unicast frame.
pub const MAX_RETRIES: u32 = 7;
/// MAC header and PHY preamble bytes added to every data frame.
pub const MAC_OVERHEAD: u32 = 34;
pub const ACK_BYTES: u32 = 38;
pub const IFQ_CAPACITY: usize = 50;
/// Largest network-layer message a frame can carry, bytes.
pub const MTU: u32 = 2304;
/// Upper bound of the random delay before a forwarded broadcast.
const MAX_JITTER: SimTime = SimTime(10_000_000);
/// Shadowing draws beyond this many standard deviations are treated as
/// impossible when pruning far receivers.
const SHADOW_SPAN: f64 = 6.0;

/// Air time of a data frame carrying `bytes` of network-layer payload.
pub fn airtime(bytes: u32, bitrate: f64) -> SimTime {
    bits_time(u64::from(bytes + MAC_OVERHEAD) * 8, bitrate)
}

fn bits_time(bits: u64, bitrate: f64) -> SimTime {
    SimTime((bits as f64 * 1e9 / bitrate).round() as u64)
}

/// Counters over one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimStats {
    /// Every frame put on the air, ACKs included.
    pub transmissions: u64,
    /// Unicast data or control frame attempts, retries included.
    pub unicast_attempts: u64,
    pub broadcasts: u64,
    pub acks: u64,
    pub link_failures: u64,
    /// Receptions destroyed by an overlapping signal.
    pub collisions: u64,
    pub rreq_sent: u64,
    pub rrep_sent: u64,
    pub rerr_sent: u64,
    pub data_sent: u64,
}

#[derive(Debug, Clone)]
enum Body {
    Ack,
    Net(Message),
}

#[derive(Debug, Clone)]
struct Frame {
    src: usize,
    /// `None` for broadcast.
    dst: Option<usize>,
    mac_seq: u32,
    body: Body,
}

impl Frame {
    fn air(&self, bitrate: f64) -> SimTime {
        match &self.body {
            Body::Ack => bits_time(u64::from(ACK_BYTES) * 8, bitrate),
            Body::Net(m) => airtime(m.bytes(), bitrate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MacState {
    Idle,
    /// Medium busy; `slots` backoff slots still to count down.
    Deferring { slots: u32 },
    /// Counting down since `wait_start`; transmits at `fire`.
    Contending { wait_start: SimTime, slots: u32, fire: SimTime },
    Transmitting,
    WaitAck,
}

struct Reception {
    slot: usize,
    index: usize,
    end: SimTime,
}

struct Node {
    aodv: AodvNode,
    ifq: VecDeque<Frame>,
    head: Option<Frame>,
    state: MacState,
    cw: u32,
    retries: u32,
    gen: u64,
    next_seq: u32,
    last_seq: BTreeMap<usize, u32>,
    tx_until: SimTime,
    busy_until: SimTime,
    /// End of the latest frame heard above the receive threshold.
    strong_until: SimTime,
    rx: Option<Reception>,
    cursor: usize,
}

struct Tx {
    frame: Frame,
    /// Candidate receivers and whether their copy is still intact.
    receivers: Vec<(usize, bool)>,
}

enum Ev {
    App { flow: usize, seq: u32 },
    MacResume { node: usize, gen: u64 },
    MacFire { node: usize, gen: u64 },
    AckTimeout { node: usize, gen: u64 },
    TxEnd { slot: usize },
    SendAck { node: usize, to: usize },
    Enqueue { node: usize, msg: Message },
    Timer { node: usize, timer: Timer },
}

/// A running network simulation. [`run_simulation`](super::run_simulation)
/// wraps the usual new / run / finish sequence; tests drive the pieces
/// directly to inspect routing tables mid-run.
pub struct Simulator<'a> {
    trace: &'a MobilityTrace,
    flows: Vec<CbrFlow>,
    radio: RadioParams,
    now: SimTime,
    queue: EventQueue<Ev>,
    nodes: Vec<Node>,
    txs: Vec<Option<Tx>>,
    free_slots: Vec<usize>,
    radio_rng: SimRng,
    mac_rng: SimRng,
    shadow: Option<Normal<f64>>,
    cs_cutoff: f64,
    positions: Vec<Point>,
    positions_time: Option<SimTime>,
    log: Vec<PacketRecord>,
    stats: SimStats,
    recording: Option<Vec<String>>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        trace: &'a MobilityTrace,
        flows: &[CbrFlow],
        radio: RadioParams,
        aodv: AodvConfig,
        seed: u64,
    ) -> Result<Self, NetSimError> {
        radio.check()?;
        let n = trace.node_count();
        for (i, f) in flows.iter().enumerate() {
            for node in [f.src, f.dst] {
                if node >= n {
                    return Err(NetSimError::EndpointNotInTrace { flow: i, node, nodes: n });
                }
            }
            let bad = |reason: &str| Err(NetSimError::InvalidFlow { flow: i, reason: reason.into() });
            if f.src == f.dst {
                return bad("source and destination must differ");
            }
            if f.payload == 0 || f.payload + super::aodv::IP_UDP_HEADER > MTU {
                return bad("payload must be positive and fit the MTU");
            }
            if !(f.rate > 0.0 && f.rate.is_finite()) {
                return bad("rate must be > 0");
            }
            if !(f.start >= 0.0 && f.stop >= f.start && f.stop.is_finite()) {
                return bad("need 0 <= start <= stop");
            }
        }
        let shadow = if radio.shadow_sigma > 0.0 {
            Some(Normal::new(0.0, radio.shadow_sigma).map_err(|e| NetSimError::InvalidRadio(e.to_string()))?)
        } else {
            None
        };
        let cs_cutoff = range_for_threshold(&radio, radio.cs_threshold - SHADOW_SPAN * radio.shadow_sigma);
        let nodes = (0..n)
            .map(|i| Node {
                aodv: AodvNode::new(i, aodv),
                ifq: VecDeque::new(),
                head: None,
                state: MacState::Idle,
                cw: CW_MIN,
                retries: 0,
                gen: 0,
                next_seq: 0,
                last_seq: BTreeMap::new(),
                tx_until: SimTime::ZERO,
                busy_until: SimTime::ZERO,
                strong_until: SimTime::ZERO,
                rx: None,
                cursor: 0,
            })
            .collect();
        let mut queue = EventQueue::new();
        for (i, f) in flows.iter().enumerate() {
            if f.start < f.stop {
                queue.push(SimTime::from_secs(f.start), Ev::App { flow: i, seq: 0 });
            }
        }
        Ok(Self {
            trace,
            flows: flows.to_vec(),
            radio,
            now: SimTime::ZERO,
            queue,
            nodes,
            txs: Vec::new(),
            free_slots: Vec::new(),
            radio_rng: rng::stream(seed, "radio"),
            mac_rng: rng::stream(seed, "mac"),
            shadow,
            cs_cutoff,
            positions: vec![Point::new(0.0, 0.0); n],
            positions_time: None,
            log: Vec::new(),
            stats: SimStats::default(),
            recording: None,
        })
    }

    /// Keeps a human-readable line for every transmission, reception and
    /// link failure; see [`Simulator::events`].
    pub fn record_events(&mut self) {
        self.recording.get_or_insert_with(Vec::new);
    }

    /// Recorded lines, `<time> <node> <what>`.
    pub fn events(&self) -> &[String] {
        self.recording.as_deref().unwrap_or(&[])
    }

    pub fn now(&self) -> f64 {
        self.now.secs()
    }

    pub fn stats(&self) -> &SimStats {
        &self.stats
    }

    pub fn aodv(&self, node: usize) -> &AodvNode {
        &self.nodes[node].aodv
    }

    /// Routing table entry of `node` for `dest`, whether valid or not.
    pub fn route(&self, node: usize, dest: usize) -> Option<AodvEntry> {
        self.nodes[node].aodv.route(dest).cloned()
    }

    /// Processes every event scheduled at or before `t` seconds.
    pub fn run_until(&mut self, t: f64) -> Result<(), NetSimError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(NetSimError::BadDuration(t));
        }
        let end = SimTime::from_secs(t);
        while self.queue.peek_time().is_some_and(|at| at <= end) {
            let (at, _, ev) = self.queue.pop().expect("peeked");
            self.now = at;
            self.dispatch(ev);
        }
        self.now = self.now.max(end);
        Ok(())
    }

    /// Closes the log: packets still waiting for a route discovery count as
    /// `no_route`, anything else still in flight as `end_of_run`.
    pub fn finish(mut self) -> PacketLog {
        let waiting: BTreeSet<usize> =
            self.nodes.iter().flat_map(|n| n.aodv.buffered_packets().map(|p| p.id)).collect();
        for (id, r) in self.log.iter_mut().enumerate() {
            if !r.delivered() && r.drop_reason == DropReason::None {
                r.drop_reason = if waiting.contains(&id) { DropReason::NoRoute } else { DropReason::EndOfRun };
            }
        }
        PacketLog { records: std::mem::take(&mut self.log) }
    }

    fn note(&mut self, node: usize, what: impl FnOnce() -> String) {
        if let Some(rec) = self.recording.as_mut() {
            rec.push(format!("{:.6} {node} {}", self.now.secs(), what()));
        }
    }

    fn dispatch(&mut self, ev: Ev) {
        match ev {
            Ev::App { flow, seq } => self.app_send(flow, seq),
            Ev::MacResume { node, gen } => {
                if self.nodes[node].gen == gen {
                    if let MacState::Deferring { slots } = self.nodes[node].state {
                        self.start_wait(node, slots);
                    }
                }
            }
            Ev::MacFire { node, gen } => {
                let n = &mut self.nodes[node];
                if n.gen == gen && matches!(n.state, MacState::Contending { .. }) {
                    n.state = MacState::Transmitting;
                    let frame = n.head.clone().expect("contending without a frame");
                    self.transmit(node, frame);
                }
            }
            Ev::AckTimeout { node, gen } => {
                if self.nodes[node].gen == gen && self.nodes[node].state == MacState::WaitAck {
                    self.ack_timeout(node);
                }
            }
            Ev::TxEnd { slot } => self.tx_end(slot),
            Ev::SendAck { node, to } => {
                if self.nodes[node].tx_until <= self.now {
                    let frame = Frame { src: node, dst: Some(to), mac_seq: 0, body: Body::Ack };
                    self.transmit(node, frame);
                }
            }
            Ev::Enqueue { node, msg } => self.enqueue(node, None, msg),
            Ev::Timer { node, timer } => {
                let now = self.now.secs();
                let actions = self.nodes[node].aodv.handle(Input::Timer(timer), now);
                self.apply(node, actions);
            }
        }
    }

    fn app_send(&mut self, flow: usize, seq: u32) {
        let f = self.flows[flow];
        let id = self.log.len();
        let send_time = self.now.secs();
        self.log.push(PacketRecord { flow, seq, send_time, recv_time: None, drop_reason: DropReason::None });
        let next = f.start + f64::from(seq + 1) / f.rate;
        if next < f.stop {
            self.queue.push(SimTime::from_secs(next), Ev::App { flow, seq: seq + 1 });
        }
        let ttl = self.nodes[f.src].aodv.config.data_ttl;
        let pkt = DataPacket { id, src: f.src, dst: f.dst, ttl, payload: f.payload };
        let actions = self.nodes[f.src].aodv.handle(Input::Send(pkt), send_time);
        self.apply(f.src, actions);
    }

    fn apply(&mut self, node: usize, actions: Vec<Action>) {
        for a in actions {
            match a {
                Action::Unicast { next_hop, msg } => self.enqueue(node, Some(next_hop), msg),
                Action::Broadcast { msg, jitter } => {
                    if jitter {
                        let delay = SimTime(self.mac_rng.random_range(0..=MAX_JITTER.0));
                        self.queue.push(self.now + delay, Ev::Enqueue { node, msg });
                    } else {
                        self.enqueue(node, None, msg);
                    }
                }
                Action::Deliver(pkt) => {
                    let now = self.now.secs();
                    let r = &mut self.log[pkt.id];
                    if r.recv_time.is_none() {
                        r.recv_time = Some(now);
                        r.drop_reason = DropReason::None;
                    }
                    self.note(node, || format!("deliver {}", pkt.id));
                }
                Action::Drop(pkt, reason) => self.drop_packet(node, pkt.id, reason),
                Action::SetTimer { at, timer } => {
                    self.queue.push(SimTime::from_secs(at).max(self.now), Ev::Timer { node, timer });
                }
            }
        }
    }

    fn drop_packet(&mut self, node: usize, id: usize, reason: DropReason) {
        let r = &mut self.log[id];
        if r.recv_time.is_none() {
            r.drop_reason = reason;
        }
        self.note(node, || format!("drop {id} {}", reason.as_str()));
    }

    fn enqueue(&mut self, node: usize, dst: Option<usize>, msg: Message) {
        let n = &mut self.nodes[node];
        if n.ifq.len() >= IFQ_CAPACITY {
            if let Message::Data(pkt) = msg {
                self.drop_packet(node, pkt.id, DropReason::QueueOverflow);
            }
            return;
        }
        let control = msg.is_control();
        let frame = Frame { src: node, dst, mac_seq: n.next_seq, body: Body::Net(msg) };
        n.next_seq = n.next_seq.wrapping_add(1);
        if control {
            let at = n.ifq.iter().position(|f| matches!(&f.body, Body::Net(m) if !m.is_control())).unwrap_or(n.ifq.len());
            n.ifq.insert(at, frame);
        } else {
            n.ifq.push_back(frame);
        }
        self.kick(node);
    }

    fn kick(&mut self, node: usize) {
        let n = &mut self.nodes[node];
        if n.state != MacState::Idle || n.head.is_some() {
            return;
        }
        if let Some(f) = n.ifq.pop_front() {
            n.head = Some(f);
            self.begin_contention(node);
        }
    }

    fn begin_contention(&mut self, node: usize) {
        let cw = self.nodes[node].cw;
        let slots = self.mac_rng.random_range(0..=cw);
        self.start_wait(node, slots);
    }

    fn busy_end(&self, node: usize) -> SimTime {
        let n = &self.nodes[node];
        n.busy_until.max(n.tx_until)
    }

    fn start_wait(&mut self, node: usize, slots: u32) {
        let now = self.now;
        let busy_end = self.busy_end(node);
        let n = &mut self.nodes[node];
        n.gen += 1;
        let gen = n.gen;
        if busy_end > now {
            n.state = MacState::Deferring { slots };
            self.queue.push(busy_end, Ev::MacResume { node, gen });
        } else {
            let fire = now + DIFS + SimTime(SLOT.0 * u64::from(slots));
            n.state = MacState::Contending { wait_start: now, slots, fire };
            self.queue.push(fire, Ev::MacFire { node, gen });
        }
    }

    /// The medium at `node` just turned busy: stop the countdown and keep
    /// the slots not yet elapsed.
    fn freeze(&mut self, node: usize) {
        let now = self.now;
        let MacState::Contending { wait_start, slots, fire } = self.nodes[node].state else {
            return;
        };
        if now >= fire {
            return;
        }
        let counted = now - wait_start;
        let elapsed = if counted > DIFS { ((counted - DIFS).0 / SLOT.0) as u32 } else { 0 };
        let remaining = slots - elapsed.min(slots);
        let busy_end = self.busy_end(node);
        let n = &mut self.nodes[node];
        n.gen += 1;
        n.state = MacState::Deferring { slots: remaining };
        let gen = n.gen;
        self.queue.push(busy_end, Ev::MacResume { node, gen });
    }

    fn refresh_positions(&mut self) {
        if self.positions_time == Some(self.now) {
            return;
        }
        let t = self.now.secs();
        for (i, n) in self.nodes.iter_mut().enumerate() {
            self.positions[i] = advance(&self.trace.nodes[i], &mut n.cursor, t);
        }
        self.positions_time = Some(self.now);
    }

    fn transmit(&mut self, sender: usize, frame: Frame) {
        let now = self.now;
        let end = now + frame.air(self.radio.bitrate);
        self.stats.transmissions += 1;
        match (&frame.body, frame.dst) {
            (Body::Ack, _) => self.stats.acks += 1,
            (Body::Net(_), Some(_)) => self.stats.unicast_attempts += 1,
            (Body::Net(_), None) => self.stats.broadcasts += 1,
        }
        if let Body::Net(m) = &frame.body {
            match m {
                Message::Data(_) => self.stats.data_sent += 1,
                Message::Rreq(_) => self.stats.rreq_sent += 1,
                Message::Rrep(_) => self.stats.rrep_sent += 1,
                Message::Rerr(_) => self.stats.rerr_sent += 1,
            }
        }
        if self.recording.is_some() {
            let kind = match &frame.body {
                Body::Ack => "ACK",
                Body::Net(m) => m.kind(),
            };
            let to = frame.dst.map_or_else(|| "*".to_string(), |d| d.to_string());
            self.note(sender, || format!("tx {kind} {to}"));
        }

        let slot = self.free_slots.pop().unwrap_or_else(|| {
            self.txs.push(None);
            self.txs.len() - 1
        });
        if let Some(rx) = self.nodes[sender].rx.take() {
            self.corrupt(&rx);
        }
        self.nodes[sender].tx_until = end;
        self.freeze(sender);

        self.refresh_positions();
        let origin = self.positions[sender];
        let mut receivers = Vec::new();
        for r in 0..self.nodes.len() {
            if r == sender {
                continue;
            }
            let d = origin.distance(self.positions[r]).max(self.radio.ref_dist);
            if d > self.cs_cutoff {
                continue;
            }
            let mut power = self.radio.tx_power - mean_path_loss_db(d, &self.radio);
            if let Some(normal) = &self.shadow {
                power -= normal.sample(&mut self.radio_rng);
            }
            if power < self.radio.cs_threshold {
                continue;
            }
            let n = &mut self.nodes[r];
            n.busy_until = n.busy_until.max(end);
            if power >= self.radio.rx_threshold {
                let overlapped = n.strong_until > now;
                n.strong_until = n.strong_until.max(end);
                if n.tx_until > now {
                    // half duplex: a transmitting radio hears nothing
                } else if overlapped {
                    if let Some(rx) = n.rx.as_ref().filter(|rx| rx.end > now) {
                        let (s, i) = (rx.slot, rx.index);
                        self.mark_lost(s, i);
                    }
                } else {
                    n.rx = Some(Reception { slot, index: receivers.len(), end });
                    receivers.push((r, true));
                }
            }
            self.freeze(r);
        }
        self.txs[slot] = Some(Tx { frame, receivers });
        self.queue.push(end, Ev::TxEnd { slot });
    }

    fn corrupt(&mut self, rx: &Reception) {
        if rx.end > self.now {
            self.mark_lost(rx.slot, rx.index);
        }
    }

    fn mark_lost(&mut self, slot: usize, index: usize) {
        if let Some(tx) = self.txs[slot].as_mut() {
            if tx.receivers[index].1 {
                tx.receivers[index].1 = false;
                self.stats.collisions += 1;
            }
        }
    }

    fn tx_end(&mut self, slot: usize) {
        let tx = self.txs[slot].take().expect("transmission slot in use");
        self.free_slots.push(slot);
        for &(r, intact) in &tx.receivers {
            if self.nodes[r].rx.as_ref().is_some_and(|rx| rx.slot == slot) {
                self.nodes[r].rx = None;
            }
            if intact {
                self.mac_receive(r, &tx.frame);
            }
        }
        let sender = tx.frame.src;
        match (&tx.frame.body, tx.frame.dst) {
            (Body::Ack, _) => {}
            (Body::Net(_), None) => self.complete_head(sender),
            (Body::Net(_), Some(_)) => {
                let ack = bits_time(u64::from(ACK_BYTES) * 8, self.radio.bitrate);
                let n = &mut self.nodes[sender];
                n.state = MacState::WaitAck;
                n.gen += 1;
                let gen = n.gen;
                self.queue.push(self.now + SIFS + ack + SLOT, Ev::AckTimeout { node: sender, gen });
            }
        }
    }

    fn complete_head(&mut self, node: usize) {
        let n = &mut self.nodes[node];
        n.head = None;
        n.state = MacState::Idle;
        n.cw = CW_MIN;
        n.retries = 0;
        n.gen += 1;
        self.kick(node);
    }

    fn mac_receive(&mut self, r: usize, frame: &Frame) {
        match &frame.body {
            Body::Ack => {
                let n = &self.nodes[r];
                let expected = n.state == MacState::WaitAck && n.head.as_ref().and_then(|h| h.dst) == Some(frame.src);
                if frame.dst == Some(r) && expected {
                    self.complete_head(r);
                }
            }
            Body::Net(msg) => {
                match frame.dst {
                    Some(d) if d != r => return,
                    Some(_) => {
                        self.queue.push(self.now + SIFS, Ev::SendAck { node: r, to: frame.src });
                        let n = &mut self.nodes[r];
                        if n.last_seq.get(&frame.src) == Some(&frame.mac_seq) {
                            return;
                        }
                        n.last_seq.insert(frame.src, frame.mac_seq);
                    }
                    None => {}
                }
                let kind = msg.kind();
                self.note(r, || format!("rx {kind} {}", frame.src));
                let now = self.now.secs();
                let actions = self.nodes[r].aodv.handle(Input::Receive { from: frame.src, msg: msg.clone() }, now);
                self.apply(r, actions);
            }
        }
    }

    fn ack_timeout(&mut self, node: usize) {
        let n = &mut self.nodes[node];
        n.retries += 1;
        if n.retries <= MAX_RETRIES {
            n.cw = (2 * n.cw + 1).min(CW_MAX);
            self.begin_contention(node);
            return;
        }
        let frame = n.head.take().expect("waiting for an ACK without a frame");
        n.state = MacState::Idle;
        n.cw = CW_MIN;
        n.retries = 0;
        n.gen += 1;
        let next_hop = frame.dst.expect("only unicast frames wait for ACKs");
        let mut queued = Vec::new();
        let mut keep = VecDeque::with_capacity(n.ifq.len());
        for f in n.ifq.drain(..) {
            match f.body {
                Body::Net(m) if f.dst == Some(next_hop) => queued.push(m),
                _ => keep.push_back(f),
            }
        }
        n.ifq = keep;
        self.stats.link_failures += 1;
        self.note(node, || format!("link-failure {next_hop}"));
        let Body::Net(failed) = frame.body else {
            unreachable!("ACK frames are never queued");
        };
        let now = self.now.secs();
        let actions = self.nodes[node].aodv.handle(Input::LinkFailure { next_hop, failed, queued }, now);
        self.apply(node, actions);
        self.kick(node);
    }
}

/// Position of `track` at `t`, moving `cursor` forward; calls must come with
/// non-decreasing `t`. Agrees with [`NodeTrack::position_at`].
fn advance(track: &NodeTrack, cursor: &mut usize, t: f64) -> Point {
    let wps = &track.waypoints;
    if wps.first().is_none_or(|w| w.t > t) {
        return track.initial;
    }
    while *cursor + 1 < wps.len() && wps[*cursor + 1].t <= t {
        *cursor += 1;
    }
    let a = &wps[*cursor];
    match wps.get(*cursor + 1) {
        None => a.pos(),
        Some(b) => a.pos().lerp(b.pos(), (t - a.t) / (b.t - a.t)),
    }
}
