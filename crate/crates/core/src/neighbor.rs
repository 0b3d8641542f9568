//! Neighbor tables: DIO ingestion, hybrid backlog estimation and staleness.

use std::collections::{BTreeMap, BTreeSet};

use crate::adaptivity::BetaWindow;
use crate::dio::DioMessage;
use crate::ids::{NodeId, SlotIndex};
use crate::objective::{LinkStats, Rank};

pub const DEFAULT_TABLE_CAPACITY: usize = 50;
pub const DEFAULT_REACHABLE_TIMEOUT: u64 = 5;

/// What a node knows about itself when it ingests a DIO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfState {
    pub rank: Rank,
    pub queue: usize,
    pub max_queue: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub id: NodeId,
    pub rank: Rank,
    /// Advertised backlog for BRPL neighbors, rank-scaled estimate otherwise.
    pub queue_backlog: f64,
    pub max_queue: usize,
    pub is_brpl: bool,
    pub last_seen: SlotIndex,
    pub link_stats: LinkStats,
    /// Root of the DODAG the neighbor advertised.
    pub dodag_root: Option<NodeId>,
}

/// Backlog estimate for a neighbor that does not advertise its queue.
pub fn rpl_backlog_estimate(neighbor_rank: Rank, self_rank: Rank, self_queue: usize) -> f64 {
    let q = self_queue as f64;
    if self_rank.0 <= 0.0 {
        q
    } else {
        neighbor_rank.0 / self_rank.0 * q
    }
}

/// Neighbor table of one node for one DAG.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    owner: NodeId,
    records: BTreeMap<NodeId, NeighborRecord>,
    capacity: usize,
    brpl_max_queue: usize,
    history: BetaWindow,
}

impl NeighborTable {
    /// `brpl_max_queue` is the network-wide MaxQ assumed for BRPL neighbors;
    /// `delta_t` sizes the snapshot history.
    pub fn new(owner: NodeId, capacity: usize, brpl_max_queue: usize, delta_t: usize) -> Self {
        NeighborTable {
            owner,
            records: BTreeMap::new(),
            capacity,
            brpl_max_queue,
            history: BetaWindow::new(delta_t),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: NodeId) -> Option<&NeighborRecord> {
        self.records.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &NeighborRecord> {
        self.records.values()
    }

    pub fn history(&self) -> &BetaWindow {
        &self.history
    }

    pub fn process_dio(&mut self, sender: NodeId, dio: &DioMessage, me: SelfState, now: SlotIndex) {
        if sender == self.owner {
            return;
        }
        if !self.records.contains_key(&sender) && self.records.len() >= self.capacity {
            if self.capacity == 0 {
                return;
            }
            let stalest = self
                .records
                .values()
                .min_by_key(|r| (r.last_seen, r.id))
                .map(|r| r.id);
            if let Some(id) = stalest {
                self.records.remove(&id);
            }
        }
        let rank = Rank::from_wire(dio.rank);
        let (is_brpl, backlog, max_queue) = match dio.queue_option {
            Some(opt) => (true, f64::from(opt.queue_len), self.brpl_max_queue),
            None => (false, rpl_backlog_estimate(rank, me.rank, me.queue), me.max_queue),
        };
        let record = self.records.entry(sender).or_insert_with(|| NeighborRecord {
            id: sender,
            rank,
            queue_backlog: 0.0,
            max_queue,
            is_brpl,
            last_seen: now,
            link_stats: LinkStats::new(),
            dodag_root: None,
        });
        record.rank = rank;
        record.queue_backlog = backlog;
        record.max_queue = max_queue.max(1);
        record.is_brpl = is_brpl;
        record.last_seen = now;
        record.dodag_root = dio.dodag_root();
    }

    /// Recomputes the rank-scaled estimates of non-BRPL neighbors.
    pub fn refresh_rpl_estimates(&mut self, self_rank: Rank, self_queue: usize) {
        for r in self.records.values_mut().filter(|r| !r.is_brpl) {
            r.queue_backlog = rpl_backlog_estimate(r.rank, self_rank, self_queue);
        }
    }

    /// Neighbors heard within `timeout` slots, in id order.
    pub fn reachable(&self, now: SlotIndex, timeout: u64) -> impl Iterator<Item = &NeighborRecord> {
        self.records
            .values()
            .filter(move |r| now.since(r.last_seen) <= timeout)
    }

    /// The current neighbor set; also recorded in the history.
    pub fn snapshot_neighbors(&mut self, now: SlotIndex, timeout: u64) -> BTreeSet<NodeId> {
        let set: BTreeSet<NodeId> = self.reachable(now, timeout).map(|r| r.id).collect();
        self.history.push(set.clone());
        set
    }

    /// Credits the outcome of one slot's transmissions toward `neighbor`.
    pub fn record_transmission(&mut self, neighbor: NodeId, attempts: u32, successes: u32, alpha: f64) {
        if let Some(r) = self.records.get_mut(&neighbor) {
            r.link_stats.record(attempts, successes, alpha);
        }
    }
}
