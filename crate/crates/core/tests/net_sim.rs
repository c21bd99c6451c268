use vanet_core::mobility::{MobilityTrace, NodeTrack, Waypoint};
use vanet_core::net_sim::{
    nominal_range, run_simulation, AodvConfig, CbrFlow, DropReason, RadioParams, Simulator, MAX_RETRIES,
};
use vanet_core::road_net::Point;

fn static_trace(points: &[(f64, f64)]) -> MobilityTrace {
    let nodes = points.iter().map(|&(x, y)| NodeTrack::parked(Point::new(x, y))).collect();
    MobilityTrace { nodes, vehicle_ids: (0..points.len() as u32).collect(), duration: 0.0, width: 0.0, height: 0.0 }
}

fn flat() -> RadioParams {
    RadioParams { shadow_sigma: 0.0, ..Default::default() }
}

#[test]
fn zero_flows_empty_log() {
    let trace = static_trace(&[(0.0, 0.0), (10.0, 0.0)]);
    let log = run_simulation(&trace, &[], &flat(), &AodvConfig::default(), 10.0, 1).unwrap();
    assert_eq!(log.sent(), 0);
}

#[test]
fn two_static_nodes_in_range_deliver_everything() {
    let trace = static_trace(&[(0.0, 0.0), (10.0, 0.0)]);
    let flows = [CbrFlow::new(0, 1, 0.0, 10.0)];
    let log = run_simulation(&trace, &flows, &flat(), &AodvConfig::default(), 10.0, 1).unwrap();
    assert_eq!(log.sent(), 40);
    assert_eq!(log.received(), 40);
    for r in &log.records {
        assert!(r.recv_time.unwrap() >= r.send_time);
    }
}

#[test]
fn nodes_10_km_apart_drop_everything_as_no_route() {
    let trace = static_trace(&[(0.0, 0.0), (10_000.0, 0.0)]);
    let flows = [CbrFlow::new(0, 1, 0.0, 10.0)];
    let log = run_simulation(&trace, &flows, &RadioParams::default(), &AodvConfig::default(), 10.0, 1).unwrap();
    assert_eq!(log.sent(), 40);
    assert_eq!(log.received(), 0);
    assert_eq!(log.dropped(DropReason::NoRoute), 40);
}

#[test]
fn two_node_routing_table() {
    let trace = static_trace(&[(0.0, 0.0), (10.0, 0.0)]);
    let flows = [CbrFlow::new(0, 1, 0.0, 0.1)];
    let mut sim = Simulator::new(&trace, &flows, flat(), AodvConfig::default(), 3).unwrap();
    sim.run_until(1.0).unwrap();
    let r = sim.route(0, 1).unwrap();
    assert_eq!((r.dest, r.next_hop, r.hop_count, r.valid), (1, 1, 1, true));
    let back = sim.route(1, 0).unwrap();
    assert_eq!((back.next_hop, back.hop_count), (0, 1));
    assert_eq!(sim.finish().received(), 1);
}

#[test]
fn three_node_line_routes_over_two_hops() {
    let hop = 0.8 * nominal_range(&flat());
    let trace = static_trace(&[(0.0, 0.0), (hop, 0.0), (2.0 * hop, 0.0)]);
    let flows = [CbrFlow::new(0, 2, 0.0, 0.1)];
    let mut sim = Simulator::new(&trace, &flows, flat(), AodvConfig::default(), 3).unwrap();
    sim.run_until(1.0).unwrap();
    let a = sim.route(0, 2).unwrap();
    assert_eq!((a.next_hop, a.hop_count, a.valid), (1, 2, true));
    let b = sim.route(1, 2).unwrap();
    assert_eq!((b.next_hop, b.hop_count), (2, 1));
    assert!(b.precursors.contains(&0));
    let c = sim.route(2, 0).unwrap();
    assert_eq!((c.next_hop, c.hop_count), (1, 2));
    assert_eq!(sim.finish().received(), 1);
}

#[test]
fn duplicate_rreq_is_not_rebroadcast() {
    // a diamond: 0 reaches 1 and 2, which both reach 3
    let h = 0.6 * nominal_range(&flat());
    let trace = static_trace(&[(0.0, 0.0), (h, h * 0.6), (h, -h * 0.6), (2.0 * h, 0.0)]);
    let flows = [CbrFlow::new(0, 4 - 1, 0.0, 0.1)];
    let mut sim = Simulator::new(&trace, &flows, flat(), AodvConfig::default(), 5).unwrap();
    sim.record_events();
    sim.run_until(0.5).unwrap();
    // every node but the destination broadcasts the single RREQ exactly once
    let rreq_tx: Vec<&String> = sim.events().iter().filter(|e| e.contains("tx RREQ")).collect();
    assert_eq!(rreq_tx.len(), 3, "{rreq_tx:?}");
    let rreq_rx_at_3 = sim.events().iter().filter(|e| e.split(' ').nth(1) == Some("3") && e.contains("rx RREQ")).count();
    assert!(rreq_rx_at_3 >= 1);
    assert_eq!(sim.aodv(3).seq(), 0);
}

/// Node 1 (the destination) jumps out of range at t = 5.
fn vanishing_neighbour() -> MobilityTrace {
    let mut far = NodeTrack::parked(Point::new(10.0, 0.0));
    far.waypoints.push(Waypoint { t: 5.0, x: 10.0, y: 0.0, speed: 0.0 });
    far.waypoints.push(Waypoint { t: 5.001, x: 10_000.0, y: 0.0, speed: 1e7 });
    MobilityTrace {
        nodes: vec![NodeTrack::parked(Point::new(0.0, 0.0)), far],
        vehicle_ids: vec![0, 1],
        duration: 10.0,
        width: 10_000.0,
        height: 0.0,
    }
}

#[test]
fn unreachable_unicast_is_tried_eight_times() {
    let trace = vanishing_neighbour();
    let flows = [CbrFlow::new(0, 1, 0.1, 5.2)];
    let mut sim = Simulator::new(&trace, &flows, flat(), AodvConfig::default(), 2).unwrap();
    sim.record_events();
    sim.run_until(5.9).unwrap();
    let after: Vec<&String> = sim
        .events()
        .iter()
        .filter(|e| e.split(' ').next().unwrap().parse::<f64>().unwrap() > 5.001)
        .collect();
    let data_tx = after.iter().take_while(|e| !e.contains("link-failure")).filter(|e| e.contains("tx DATA 1")).count();
    assert_eq!(data_tx as u32, MAX_RETRIES + 1, "{after:#?}");
    assert!(after.iter().any(|e| e.contains("0 link-failure 1")));
    assert!(!sim.route(0, 1).unwrap().valid);
}

#[test]
fn rerr_travels_back_to_the_source() {
    // 0 - 1 - 2 line; 2 leaves at t = 5
    let hop = 0.8 * nominal_range(&flat());
    let mut gone = NodeTrack::parked(Point::new(2.0 * hop, 0.0));
    gone.waypoints.push(Waypoint { t: 5.0, x: 2.0 * hop, y: 0.0, speed: 0.0 });
    gone.waypoints.push(Waypoint { t: 5.001, x: 2.0 * hop, y: 10_000.0, speed: 1e7 });
    let trace = MobilityTrace {
        nodes: vec![NodeTrack::parked(Point::new(0.0, 0.0)), NodeTrack::parked(Point::new(hop, 0.0)), gone],
        vehicle_ids: vec![0, 1, 2],
        duration: 10.0,
        width: 2.0 * hop,
        height: 10_000.0,
    };
    let flows = [CbrFlow::new(0, 2, 0.0, 5.3)];
    let mut sim = Simulator::new(&trace, &flows, flat(), AodvConfig::default(), 4).unwrap();
    sim.record_events();
    sim.run_until(4.9).unwrap();
    assert!(sim.route(0, 2).unwrap().valid);
    sim.run_until(5.6).unwrap();
    let ev = sim.events();
    let fail = ev.iter().position(|e| e.contains("1 link-failure 2")).expect("node 1 loses node 2");
    let rerr_tx = ev.iter().skip(fail).position(|e| e.contains(" 1 tx RERR *")).expect("node 1 reports");
    assert!(ev.iter().skip(fail + rerr_tx).any(|e| e.contains(" 0 rx RERR 1")), "source hears the RERR");
    let a = sim.route(0, 2).unwrap();
    assert!(!a.valid);
    assert!(a.dest_seq > 0);
    let log = sim.finish();
    assert_eq!(log.sent(), log.records.iter().filter(|r| r.delivered() || r.drop_reason != DropReason::None).count());
}

#[test]
fn same_seed_same_log() {
    let trace = static_trace(&[(0.0, 0.0), (50.0, 0.0), (100.0, 10.0), (30.0, 60.0)]);
    let flows = [CbrFlow::new(0, 2, 0.5, 20.0), CbrFlow::new(3, 1, 1.0, 20.0)];
    let run = |seed| run_simulation(&trace, &flows, &RadioParams::default(), &AodvConfig::default(), 20.0, seed).unwrap();
    assert_eq!(run(9).to_csv(), run(9).to_csv());
}

#[test]
fn endpoint_outside_trace_is_an_error() {
    let trace = static_trace(&[(0.0, 0.0)]);
    assert!(run_simulation(&trace, &[CbrFlow::new(0, 3, 0.0, 1.0)], &flat(), &AodvConfig::default(), 1.0, 0).is_err());
}
