//! Protocol-side building blocks for backpressure-augmented RPL.
//!
//! Everything in this crate is a pure value type or a per-node state
//! machine; the slotted simulator in `brpl-sim` drives them.

pub mod adaptivity;
pub mod dio;
pub mod engine;
pub mod ids;
pub mod neighbor;
pub mod objective;
pub mod queue;
pub mod trickle;

pub use adaptivity::{ewma_update, quickbeta, quicktheta, BetaWindow, SmoothedQueueVector};
pub use dio::{parse_dio, serialize_dio, DioError, DioMessage, ParseOptions, QueueOption};
pub use engine::{
    backpressure_select, brpl_select, brpl_weight, dpp_select, rpl_select, Engine, NodeView,
    RoutingDecision, ViewNeighbor, WeightComponents,
};
pub use ids::{DagId, NodeId, SlotIndex};
pub use neighbor::{NeighborRecord, NeighborTable, SelfState};
pub use objective::{LinkStats, ObjectiveFunctionSpec, OfKind, Penalty, Rank};
pub use queue::{DataPacket, PacketQueue, QueueError};
pub use trickle::{classify_dio, Consistency, RoutingState, TrickleConfig, TrickleEvent, TrickleState};
