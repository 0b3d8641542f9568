//! Trickle timer for DIO emission, tracked in milliseconds.

use rand::Rng;

use crate::ids::NodeId;
use crate::objective::Rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrickleConfig {
    pub i_min_ms: u64,
    pub doublings: u32,
    /// Redundancy constant; emission is suppressed once this many consistent
    /// DIOs were heard in the current interval.
    pub redundancy_k: u32,
}

impl Default for TrickleConfig {
    fn default() -> Self {
        TrickleConfig {
            i_min_ms: 512,
            doublings: 1,
            redundancy_k: 10,
        }
    }
}

impl TrickleConfig {
    pub fn i_max_ms(&self) -> u64 {
        self.i_min_ms << self.doublings
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrickleEvent {
    ConsistentDio,
    InconsistentDio,
    IntervalExpired,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrickleState {
    config: TrickleConfig,
    current_interval_ms: u64,
    interval_start_ms: u64,
    next_fire_ms: u64,
    consistent_count: u32,
}

impl TrickleState {
    /// Starts a first interval of length `i_min` at `now_ms`.
    pub fn new<R: Rng + ?Sized>(config: TrickleConfig, now_ms: u64, rng: &mut R) -> Self {
        let mut s = TrickleState {
            config,
            current_interval_ms: config.i_min_ms,
            interval_start_ms: now_ms,
            next_fire_ms: now_ms,
            consistent_count: 0,
        };
        s.schedule(rng);
        s
    }

    pub fn config(&self) -> TrickleConfig {
        self.config
    }

    pub fn current_interval_ms(&self) -> u64 {
        self.current_interval_ms
    }

    pub fn next_fire_ms(&self) -> u64 {
        self.next_fire_ms
    }

    pub fn consistent_count(&self) -> u32 {
        self.consistent_count
    }

    fn schedule<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let i = self.current_interval_ms;
        let half = i / 2;
        let phase = if i > half { rng.random_range(half..i) } else { 0 };
        self.next_fire_ms = self.interval_start_ms + phase;
    }

    /// Applies `event` observed at `now_ms`. Returns true when a DIO should be
    /// emitted, which only happens on `IntervalExpired`.
    pub fn handle<R: Rng + ?Sized>(&mut self, event: TrickleEvent, now_ms: u64, rng: &mut R) -> bool {
        match event {
            TrickleEvent::ConsistentDio => {
                self.consistent_count = self.consistent_count.saturating_add(1);
                false
            }
            TrickleEvent::InconsistentDio => {
                if self.current_interval_ms > self.config.i_min_ms {
                    self.current_interval_ms = self.config.i_min_ms;
                    self.interval_start_ms = now_ms;
                    self.consistent_count = 0;
                    self.schedule(rng);
                }
                false
            }
            TrickleEvent::IntervalExpired => {
                let emit = self.consistent_count < self.config.redundancy_k;
                self.interval_start_ms += self.current_interval_ms;
                self.current_interval_ms = (self.current_interval_ms * 2).min(self.config.i_max_ms());
                self.consistent_count = 0;
                self.schedule(rng);
                emit
            }
        }
    }
}

/// Rank and parent of a node, compared before and after ingesting a DIO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingState {
    pub rank: Option<Rank>,
    pub parent: Option<NodeId>,
}

impl RoutingState {
    fn wire_rank(&self) -> Option<u16> {
        self.rank.map(Rank::to_wire)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent,
}

/// A DIO is consistent when it comes from a node of lower rank and leaves
/// the recipient's rank and preferred parent unchanged.
pub fn classify_dio(before: RoutingState, after: RoutingState, sender_rank: Rank) -> Consistency {
    let unchanged = before.wire_rank() == after.wire_rank() && before.parent == after.parent;
    let lower = match after.rank {
        Some(r) => sender_rank.to_wire() < r.to_wire(),
        None => false,
    };
    if unchanged && lower {
        Consistency::Consistent
    } else {
        Consistency::Inconsistent
    }
}
