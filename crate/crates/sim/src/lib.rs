//! Deterministic slotted simulator for RPL, BRPL, backpressure and
//! drift-plus-penalty routing.
//!
//! A run is a pure function of its [`SimConfig`] (including the seed). Each
//! slot executes mobility, link realization, traffic generation, DIO exchange,
//! adaptivity, routing decisions, transmission and metrics, in that order.

pub mod error;
pub mod link;
pub mod metrics;
pub mod mobility;
pub mod placement;
pub mod topology;
pub mod traffic;
pub mod world;

pub use error::SimError;
pub use link::LinkModel;
pub use metrics::{summarize, write_csv, MetricsSink, PacketRecord, SlotRecord, Summary};
pub use mobility::{MobileRoot, MobilityGraph, MobilityParams, PointKind};
pub use topology::{assign_engines, build_grid, build_placed, corner_roots, DagSpec, Point, Topology};
pub use traffic::{TrafficKind, TrafficProgram};
pub use world::{
    run, stream_rng, AdaptivityConfig, MobilityConfig, NeighborConfig, SimConfig, Stream, World,
};
