//! Vehicular ad-hoc network experimentation toolkit.
//!
//! The pipeline runs left to right:
//!
//! * [`map_gen`] builds a [`road_net::RoadNetwork`] (grid, spider, random or
//!   KML place marks),
//! * [`demand`] turns flows, bus lines and turning tables into routed trips,
//! * [`mobility`] drives those trips through a car-following simulation, or
//!   generates a random waypoint baseline, producing a
//!   [`mobility::MobilityTrace`],
//! * [`trace_io`] writes the trace in the NS-2 movement dialect,
//! * [`net_sim`] replays the trace under a shadowing channel, a simplified
//!   802.11 MAC and AODV with CBR traffic,
//! * [`metrics`] reduces packet logs to delivery ratios and runs the
//!   mobility-model comparison matrix.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demand;
pub mod error;
pub mod map_gen;
pub mod metrics;
pub mod mobility;
pub mod net_sim;
pub mod rng;
pub mod road_net;
pub mod scenario;
pub mod trace_io;

pub use error::ParseError;
