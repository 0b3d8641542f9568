//! The slotted simulation loop.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use brpl_core::adaptivity::{quickbeta, weighted_beta};
use brpl_core::dio::dodag_id_for;
use brpl_core::{
    classify_dio, parse_dio, serialize_dio, BetaWindow, Consistency, DagId, DataPacket, DioMessage,
    Engine, NeighborTable, NodeId, NodeView, ObjectiveFunctionSpec, PacketQueue, ParseOptions,
    QueueOption, Rank, RoutingDecision, RoutingState, SelfState, SlotIndex, SmoothedQueueVector,
    TrickleConfig, TrickleEvent, TrickleState, ViewNeighbor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;
use crate::link::LinkModel;
use crate::metrics::{MetricsSink, PacketRecord, SlotRecord};
use crate::mobility::{MobileRoot, MobilityGraph, MobilityParams};
use crate::topology::{Point, Topology};
use crate::traffic::{Accumulator, TrafficProgram};

const SLOT_MS: u64 = 1000;

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement = 0,
    Trickle = 1,
    Link = 2,
    Mobility = 3,
    Engines = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptivityConfig {
    pub alpha: f64,
    pub delta_t: usize,
    pub beta_exponent: f64,
}

impl Default for AdaptivityConfig {
    fn default() -> Self {
        AdaptivityConfig {
            alpha: brpl_core::adaptivity::DEFAULT_ALPHA,
            delta_t: brpl_core::adaptivity::DEFAULT_DELTA_T,
            beta_exponent: brpl_core::adaptivity::DEFAULT_BETA_EXPONENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborConfig {
    pub capacity: usize,
    pub reachable_timeout: u64,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        NeighborConfig {
            capacity: brpl_core::neighbor::DEFAULT_TABLE_CAPACITY,
            reachable_timeout: brpl_core::neighbor::DEFAULT_REACHABLE_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MobilityConfig {
    pub graph: MobilityGraph,
    pub params: MobilityParams,
    pub mobile_roots: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: Topology,
    pub link: LinkModel,
    pub of: ObjectiveFunctionSpec,
    pub traffic: TrafficProgram,
    pub max_queue: usize,
    pub packet_bytes: u16,
    pub adaptivity: AdaptivityConfig,
    pub trickle: TrickleConfig,
    pub neighbors: NeighborConfig,
    pub mobility: Option<MobilityConfig>,
    pub slots: u64,
    pub seed: u64,
    /// Keep one row per delivered or dropped packet.
    pub record_packets: bool,
}

impl SimConfig {
    pub fn new(topology: Topology) -> Self {
        SimConfig {
            topology,
            link: LinkModel::default(),
            of: ObjectiveFunctionSpec::etx(),
            traffic: TrafficProgram::constant(1.0),
            max_queue: 250,
            packet_bytes: brpl_core::queue::DEFAULT_PACKET_BYTES,
            adaptivity: AdaptivityConfig::default(),
            trickle: TrickleConfig::default(),
            neighbors: NeighborConfig::default(),
            mobility: None,
            slots: 1000,
            seed: 1,
            record_packets: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.topology.validate()?;
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.max_queue == 0 {
            return bad("max queue must be positive");
        }
        if !(self.link.range_m.is_finite() && self.link.range_m > 0.0) {
            return bad("range must be positive");
        }
        if !(0.0..=1.0).contains(&self.link.loss_p) {
            return bad("loss probability must be in [0, 1]");
        }
        if self.link.retry_limit == 0 {
            return bad("retry limit must be positive");
        }
        if !(self.of.max_rank > 0.0 && self.of.max_rank * brpl_core::objective::RANK_SCALE <= f64::from(u16::MAX)) {
            return bad("max rank must be positive and fit the 16-bit wire rank");
        }
        if !(0.0..=1.0).contains(&self.adaptivity.alpha) {
            return bad("alpha must be in [0, 1]");
        }
        if self.trickle.i_min_ms == 0 {
            return bad("Trickle i_min must be positive");
        }
        self.traffic.validate().map_err(SimError::Config)?;
        if let Some(m) = &self.mobility {
            for r in &m.mobile_roots {
                if !self.topology.is_root(*r) {
                    return Err(SimError::Config(format!("mobile node {r} is not a root")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct DagState {
    is_root: bool,
    queue: PacketQueue,
    table: NeighborTable,
    rank: Rank,
    parent: Option<NodeId>,
    dodag_root: Option<NodeId>,
    trickle: TrickleState,
    smoothed: SmoothedQueueVector,
    theta: f64,
}

impl DagState {
    fn routing_state(&self) -> RoutingState {
        RoutingState {
            rank: Some(self.rank),
            parent: self.parent,
        }
    }

    fn attached(&self) -> bool {
        self.is_root || self.parent.is_some()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FlowCounters {
    pub generated: u64,
    pub received: u64,
    pub forwarded: u64,
}

#[derive(Debug, Clone)]
struct Node {
    engine: Engine,
    is_root: bool,
    dags: Vec<Option<DagState>>,
    beta_window: BetaWindow,
    beta: f64,
    next_seq: u64,
    traffic: Vec<Accumulator>,
    flow: FlowCounters,
}

pub struct World {
    cfg: SimConfig,
    slot: SlotIndex,
    nodes: Vec<Node>,
    positions: Vec<Point>,
    movers: Vec<MobileRoot>,
    links_dirty: bool,
    in_range: Vec<Vec<u32>>,
    link_q: Vec<f64>,
    link_cap: Vec<u32>,
    rng_trickle: ChaCha8Rng,
    rng_link: ChaCha8Rng,
    rng_mobility: ChaCha8Rng,
    sink: MetricsSink,
    dag_generated: Vec<u64>,
    dag_delivered: Vec<u64>,
    dag_dropped: Vec<u64>,
}

impl World {
    pub fn new(cfg: SimConfig) -> Result<World, SimError> {
        cfg.validate()?;
        let topo = &cfg.topology;
        let n = topo.len();
        let mut rng_trickle = stream_rng(cfg.seed, Stream::Trickle);
        let mut rng_mobility = stream_rng(cfg.seed, Stream::Mobility);
        let mut positions = topo.positions.clone();
        let mut movers = Vec::new();
        if let Some(m) = &cfg.mobility {
            for &r in &m.mobile_roots {
                let mover = MobileRoot::new(r, &m.graph, &m.params, &mut rng_mobility);
                positions[r.index()] = mover.position();
                movers.push(mover);
            }
        }
        let dag_roots: Vec<BTreeSet<NodeId>> = topo
            .dags
            .iter()
            .map(|d| d.roots.iter().copied().collect())
            .collect();
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let id = NodeId(i as u32);
            let is_root = topo.is_root(id);
            let dags = topo
                .dags
                .iter()
                .zip(&dag_roots)
                .map(|(spec, roots)| {
                    let root_here = roots.contains(&id);
                    if is_root && !root_here {
                        return None;
                    }
                    Some(DagState {
                        is_root: root_here,
                        queue: if root_here {
                            PacketQueue::sink(spec.id, id)
                        } else {
                            PacketQueue::new(spec.id, id, cfg.max_queue)
                        },
                        table: NeighborTable::new(
                            id,
                            cfg.neighbors.capacity,
                            cfg.max_queue,
                            cfg.adaptivity.delta_t,
                        ),
                        rank: if root_here { Rank::ZERO } else { cfg.of.detached_rank() },
                        parent: None,
                        dodag_root: root_here.then_some(id),
                        trickle: TrickleState::new(cfg.trickle, 0, &mut rng_trickle),
                        smoothed: SmoothedQueueVector::new(cfg.adaptivity.alpha),
                        theta: 1.0,
                    })
                })
                .collect();
            nodes.push(Node {
                engine: topo.engines[i],
                is_root,
                dags,
                beta_window: BetaWindow::new(cfg.adaptivity.delta_t),
                beta: 1.0,
                next_seq: 0,
                traffic: vec![Accumulator::default(); topo.dags.len()],
                flow: FlowCounters::default(),
            });
        }
        let n_dags = topo.dags.len();
        Ok(World {
            slot: SlotIndex(0),
            nodes,
            positions,
            movers,
            links_dirty: true,
            in_range: vec![Vec::new(); n],
            link_q: vec![0.0; n * n],
            link_cap: vec![0; n * n],
            rng_trickle,
            rng_link: stream_rng(cfg.seed, Stream::Link),
            rng_mobility,
            sink: MetricsSink::default(),
            dag_generated: vec![0; n_dags],
            dag_delivered: vec![0; n_dags],
            dag_dropped: vec![0; n_dags],
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// The last completed slot; slots are numbered from 1.
    pub fn slot(&self) -> SlotIndex {
        self.slot
    }

    pub fn metrics(&self) -> &MetricsSink {
        &self.sink
    }

    pub fn position(&self, node: NodeId) -> Point {
        self.positions[node.index()]
    }

    pub fn engine(&self, node: NodeId) -> Engine {
        self.nodes[node.index()].engine
    }

    pub fn queue_len(&self, node: NodeId, dag: usize) -> usize {
        self.state(node, dag).map_or(0, |s| s.queue.len())
    }

    pub fn rank(&self, node: NodeId, dag: usize) -> Option<Rank> {
        self.state(node, dag).map(|s| s.rank)
    }

    pub fn parent(&self, node: NodeId, dag: usize) -> Option<NodeId> {
        self.state(node, dag).and_then(|s| s.parent)
    }

    pub fn theta(&self, node: NodeId, dag: usize) -> Option<f64> {
        self.state(node, dag).map(|s| s.theta)
    }

    pub fn beta(&self, node: NodeId) -> f64 {
        self.nodes[node.index()].beta
    }

    pub fn flow(&self, node: NodeId) -> &FlowCounters {
        &self.nodes[node.index()].flow
    }

    pub fn neighbor_table(&self, node: NodeId, dag: usize) -> Option<&NeighborTable> {
        self.state(node, dag).map(|s| &s.table)
    }

    fn state(&self, node: NodeId, dag: usize) -> Option<&DagState> {
        self.nodes.get(node.index())?.dags.get(dag)?.as_ref()
    }

    fn n(&self) -> usize {
        self.nodes.len()
    }

    fn capacity(&self, a: NodeId, b: NodeId) -> u32 {
        self.link_cap[a.index() * self.n() + b.index()]
    }

    fn delivery_prob(&self, a: NodeId, b: NodeId) -> f64 {
        self.link_q[a.index() * self.n() + b.index()]
    }

    pub fn run_to_end(&mut self) {
        while self.slot.0 < self.cfg.slots {
            self.step();
        }
        self.finish();
    }

    /// Closes the run: records what is still queued.
    pub fn finish(&mut self) {
        self.sink.queued_at_end = self
            .nodes
            .iter()
            .flat_map(|n| n.dags.iter().flatten())
            .map(|s| s.queue.len() as u64)
            .sum();
    }

    pub fn into_metrics(mut self) -> MetricsSink {
        self.finish();
        self.sink
    }

    /// Advances one slot.
    pub fn step(&mut self) {
        self.slot = self.slot.next();
        let mut row = SlotRecord {
            slot: self.slot.0,
            ..SlotRecord::default()
        };
        self.move_roots();
        self.realize_links();
        self.generate_traffic(&mut row);
        self.exchange_control(&mut row);
        self.adapt(&mut row);
        let decisions = self.decide();
        self.transmit(&decisions, &mut row);
        self.audit();
        self.sink.slots.push(row);
    }

    fn move_roots(&mut self) {
        let Some(m) = &self.cfg.mobility else { return };
        for mover in &mut self.movers {
            mover.update(&m.graph, &m.params, &mut self.rng_mobility);
            let p = mover.position();
            if self.positions[mover.node.index()] != p {
                self.positions[mover.node.index()] = p;
                self.links_dirty = true;
            }
        }
    }

    fn realize_links(&mut self) {
        if !self.links_dirty {
            return;
        }
        let n = self.n();
        for a in 0..n {
            self.in_range[a].clear();
            for b in 0..n {
                let (q, c) = if a == b {
                    (0.0, 0)
                } else {
                    self.cfg.link.between(self.positions[a], self.positions[b])
                };
                self.link_q[a * n + b] = q;
                self.link_cap[a * n + b] = c;
                if q > 0.0 {
                    self.in_range[a].push(b as u32);
                }
            }
        }
        self.links_dirty = false;
    }

    fn record_fate(&mut self, pkt: &DataPacket, dag: usize, delivered: bool) {
        if self.cfg.record_packets {
            self.sink.packets.push(PacketRecord {
                origin: pkt.origin.0,
                dag: dag as u32,
                seq: pkt.sequence,
                created: pkt.created_at.0,
                fate_slot: self.slot.0,
                delay: delivered.then(|| self.slot.since(pkt.created_at)),
            });
        }
    }

    fn drop_packet(&mut self, pkt: &DataPacket, dag: usize, row: &mut SlotRecord) {
        self.sink.dropped_queue_full += 1;
        self.dag_dropped[dag] += 1;
        row.dropped += 1;
        self.record_fate(pkt, dag, false);
    }

    fn generate_traffic(&mut self, row: &mut SlotRecord) {
        let now = self.slot;
        for i in 0..self.n() {
            if self.nodes[i].is_root {
                continue;
            }
            let id = NodeId(i as u32);
            let rate = self.cfg.traffic.rate(id, now);
            for d in 0..self.nodes[i].dags.len() {
                let Some(dag_id) = self.nodes[i].dags[d].as_ref().map(|s| s.queue.dag()) else {
                    continue;
                };
                let count = self.nodes[i].traffic[d].take(rate);
                for _ in 0..count {
                    let node = &mut self.nodes[i];
                    let mut pkt = DataPacket::new(dag_id, id, node.next_seq, now);
                    pkt.size_bytes = self.cfg.packet_bytes;
                    node.next_seq += 1;
                    node.flow.generated += 1;
                    self.sink.generated += 1;
                    self.dag_generated[d] += 1;
                    row.generated += 1;
                    let state = node.dags[d].as_mut().expect("state checked above");
                    let accepted = state.queue.enqueue(pkt).expect("packet built for this DAG");
                    if !accepted {
                        self.drop_packet(&pkt, d, row);
                    }
                }
            }
        }
    }

    /// Recomputes rank and preferred parent of `node` in DAG `dag` from its
    /// reachable neighbors.
    fn recompute(&mut self, node: usize, dag: usize) {
        let now = self.slot;
        let timeout = self.cfg.neighbors.reachable_timeout;
        let of = &self.cfg.of;
        let Some(state) = self.nodes[node].dags[dag].as_mut() else { return };
        if state.is_root {
            return;
        }
        let view: Vec<(NodeId, Rank, brpl_core::Penalty)> = state
            .table
            .reachable(now, timeout)
            .map(|r| (r.id, r.rank, of.link_penalty(&r.link_stats, r.dodag_root)))
            .collect();
        let parent = of.preferred_parent(&view);
        match parent {
            Some(p) => {
                state.rank = of
                    .compute_rank(false, Rank::ZERO, &view)
                    .unwrap_or_else(|| of.detached_rank());
                state.parent = Some(p);
                state.dodag_root = state.table.get(p).and_then(|r| r.dodag_root);
            }
            None => {
                state.rank = of.detached_rank();
                state.parent = None;
                state.dodag_root = None;
            }
        }
    }

    fn build_dio(&self, node: usize, dag: usize) -> Option<DioMessage> {
        let n = &self.nodes[node];
        let state = n.dags[dag].as_ref()?;
        if !state.attached() {
            return None;
        }
        let root = state.dodag_root?;
        let advertise = state.is_root || n.engine.advertises_queue();
        Some(DioMessage {
            rpl_instance_id: state.queue.dag().instance_id,
            version: 1,
            rank: state.rank.to_wire(),
            flags_byte: DioMessage::pack_flags(true, 0, 0),
            dtsn: 0,
            flags: 0,
            reserved: 0,
            dodag_id: dodag_id_for(root),
            queue_option: advertise.then(|| QueueOption::new(state.queue.len() as u32)),
        })
    }

    fn exchange_control(&mut self, row: &mut SlotRecord) {
        let start_ms = (self.slot.0 - 1) * SLOT_MS;
        let end_ms = self.slot.0 * SLOT_MS;
        let n = self.n();
        let n_dags = self.cfg.topology.dags.len();

        // neighbor staleness and link quality may have moved ranks since the last slot
        for i in 0..n {
            for d in 0..n_dags {
                let Some(before) = self.nodes[i].dags[d].as_ref().map(DagState::routing_state) else {
                    continue;
                };
                self.recompute(i, d);
                let state = self.nodes[i].dags[d].as_mut().expect("checked");
                if state.routing_state() != before {
                    state.trickle.handle(TrickleEvent::InconsistentDio, start_ms, &mut self.rng_trickle);
                }
            }
        }

        let mut heap = BinaryHeap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            for (d, s) in node.dags.iter().enumerate() {
                if let Some(s) = s {
                    if s.trickle.next_fire_ms() < end_ms {
                        heap.push(Reverse((s.trickle.next_fire_ms(), i, d)));
                    }
                }
            }
        }
        let timeout_now = self.slot;
        while let Some(Reverse((at, i, d))) = heap.pop() {
            let Some(state) = self.nodes[i].dags[d].as_mut() else { continue };
            if state.trickle.next_fire_ms() != at {
                continue;
            }
            let emit = state.trickle.handle(TrickleEvent::IntervalExpired, at, &mut self.rng_trickle);
            let next = state.trickle.next_fire_ms();
            if next < end_ms {
                heap.push(Reverse((next, i, d)));
            }
            if !emit {
                continue;
            }
            let Some(dio) = self.build_dio(i, d) else { continue };
            self.sink.ctrl_tx += 1;
            row.ctrl_tx += 1;
            let bytes = serialize_dio(&dio);
            let sender = NodeId(i as u32);
            let sender_rank = Rank::from_wire(dio.rank);
            for k in 0..self.in_range[i].len() {
                let j = self.in_range[i][k] as usize;
                let receiver = NodeId(j as u32);
                let Some(rs) = self.nodes[j].dags[d].as_ref() else { continue };
                if rs.is_root {
                    continue;
                }
                let q = self.delivery_prob(sender, receiver);
                if q < 1.0 && !self.rng_link.random_bool(q) {
                    continue;
                }
                let opts = if self.nodes[j].engine.advertises_queue() {
                    ParseOptions::BRPL
                } else {
                    ParseOptions::RPL
                };
                let msg = match parse_dio(&bytes, opts) {
                    Ok(m) => m,
                    Err(_) => {
                        self.sink.interop_errors += 1;
                        continue;
                    }
                };
                let rs = self.nodes[j].dags[d].as_mut().expect("checked");
                let before = rs.routing_state();
                let me = SelfState {
                    rank: rs.rank,
                    queue: rs.queue.len(),
                    max_queue: rs.queue.max_len(),
                };
                rs.table.process_dio(sender, &msg, me, timeout_now);
                self.recompute(j, d);
                let rs = self.nodes[j].dags[d].as_mut().expect("checked");
                let after = rs.routing_state();
                let event = match classify_dio(before, after, sender_rank) {
                    Consistency::Consistent => Some(TrickleEvent::ConsistentDio),
                    Consistency::Inconsistent if after != before => Some(TrickleEvent::InconsistentDio),
                    Consistency::Inconsistent => None,
                };
                if let Some(ev) = event {
                    let prev_fire = rs.trickle.next_fire_ms();
                    rs.trickle.handle(ev, at, &mut self.rng_trickle);
                    let fire = rs.trickle.next_fire_ms();
                    if fire != prev_fire && fire < end_ms {
                        heap.push(Reverse((fire, j, d)));
                    }
                }
            }
        }
    }

    fn adapt(&mut self, row: &mut SlotRecord) {
        let now = self.slot;
        let timeout = self.cfg.neighbors.reachable_timeout;
        let gamma = self.cfg.adaptivity.beta_exponent;
        let mut theta_sum = 0.0;
        let mut theta_n = 0usize;
        let mut beta_sum = 0.0;
        let mut beta_n = 0usize;
        for node in &mut self.nodes {
            if node.is_root {
                continue;
            }
            let mut union = BTreeSet::new();
            for state in node.dags.iter_mut().flatten() {
                state.table.refresh_rpl_estimates(state.rank, state.queue.len());
                union.extend(state.table.snapshot_neighbors(now, timeout));
            }
            node.beta_window.push(union);
            node.beta = weighted_beta(quickbeta(&node.beta_window), gamma);
            if node.engine != Engine::Brpl {
                continue;
            }
            beta_sum += node.beta;
            beta_n += 1;
            for state in node.dags.iter_mut().flatten() {
                let observed: Vec<(NodeId, f64, f64)> = state
                    .table
                    .reachable(now, timeout)
                    .map(|r| (r.id, r.queue_backlog, r.max_queue as f64))
                    .collect();
                state.smoothed.update(
                    now,
                    state.queue.len() as f64,
                    state.queue.max_len() as f64,
                    &observed,
                );
                state.theta = state.smoothed.theta(node.beta).unwrap_or(node.beta);
                theta_sum += state.theta;
                theta_n += 1;
            }
        }
        row.mean_theta = (theta_n > 0).then(|| theta_sum / theta_n as f64);
        row.mean_beta = (beta_n > 0).then(|| beta_sum / beta_n as f64);
    }

    fn decide(&self) -> Vec<Vec<RoutingDecision>> {
        let now = self.slot;
        let timeout = self.cfg.neighbors.reachable_timeout;
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let id = NodeId(i as u32);
                node.dags
                    .iter()
                    .map(|s| match s {
                        Some(s) if !s.is_root && !s.queue.is_empty() => {
                            let neighbors = s
                                .table
                                .reachable(now, timeout)
                                .map(|r| ViewNeighbor {
                                    id: r.id,
                                    rank: r.rank,
                                    queue_backlog: r.queue_backlog,
                                    max_queue: r.max_queue as f64,
                                    penalty: self.cfg.of.link_penalty(&r.link_stats, r.dodag_root),
                                    capacity: self.capacity(id, r.id),
                                })
                                .collect();
                            let view = NodeView {
                                node: id,
                                dag: s.queue.dag(),
                                rank: s.rank,
                                queue: s.queue.len(),
                                max_queue: s.queue.max_len(),
                                theta: s.theta,
                                neighbors,
                                c_max: self.cfg.link.c_max,
                                max_rank: self.cfg.of.max_rank,
                            };
                            node.engine.select(&view)
                        }
                        _ => RoutingDecision::NONE,
                    })
                    .collect()
            })
            .collect()
    }

    fn transmit(&mut self, decisions: &[Vec<RoutingDecision>], row: &mut SlotRecord) {
        let retry_limit = self.cfg.link.retry_limit;
        let alpha = self.cfg.of.etx_alpha();
        let mut used: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut inbox: Vec<(usize, usize, DataPacket)> = Vec::new();
        for (i, per_dag) in decisions.iter().enumerate() {
            let sender = NodeId(i as u32);
            let mut budget = self.cfg.link.node_tx_budget;
            let mut link_outcome: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
            for (d, decision) in per_dag.iter().enumerate() {
                let Some(target) = decision.target else { continue };
                if decision.budget == 0 {
                    continue;
                }
                let q = self.delivery_prob(sender, target);
                let cap = self.capacity(sender, target);
                let state = self.nodes[i].dags[d].as_mut().expect("decision implies state");
                let batch = state.queue.dequeue_batch(decision.budget as usize);
                let mut unsent = Vec::new();
                let remaining = used.entry((sender.0, target.0)).or_insert(0);
                let outcome = link_outcome.entry(target.0).or_insert((0, 0));
                for pkt in batch {
                    if budget == 0 || *remaining >= cap {
                        unsent.push(pkt);
                        continue;
                    }
                    let mut tries = 0;
                    let mut sent = false;
                    while tries < retry_limit && budget > 0 {
                        tries += 1;
                        budget -= 1;
                        outcome.0 += 1;
                        if q >= 1.0 || self.rng_link.random_bool(q) {
                            sent = true;
                            break;
                        }
                    }
                    self.sink.data_tx += u64::from(tries);
                    row.data_tx += u64::from(tries);
                    if sent {
                        *remaining += 1;
                        outcome.1 += 1;
                        inbox.push((target.index(), d, pkt));
                    } else {
                        if tries == retry_limit {
                            self.sink.retry_exhausted += 1;
                        }
                        unsent.push(pkt);
                    }
                }
                let rejected = state.queue.restore(unsent);
                for pkt in rejected {
                    self.drop_packet(&pkt, d, row);
                }
            }
            let node = &mut self.nodes[i];
            for (&target, &(attempts, successes)) in &link_outcome {
                node.flow.forwarded += u64::from(successes);
                for state in node.dags.iter_mut().flatten() {
                    state.table.record_transmission(NodeId(target), attempts, successes, alpha);
                }
            }
        }
        for (&(a, b), &n) in &used {
            if n > self.capacity(NodeId(a), NodeId(b)) {
                self.sink.capacity_violations += 1;
            }
        }
        for (j, d, pkt) in inbox {
            self.nodes[j].flow.received += 1;
            let Some(state) = self.nodes[j].dags[d].as_mut() else {
                self.drop_packet(&pkt, d, row);
                continue;
            };
            if state.is_root {
                state.queue.enqueue(pkt).expect("same DAG");
                self.sink.delivered += 1;
                self.dag_delivered[d] += 1;
                row.delivered += 1;
                *self.sink.root_delivered.entry(NodeId(j as u32)).or_insert(0) += 1;
                self.sink.delays.push(self.slot.since(pkt.created_at));
                self.record_fate(&pkt, d, true);
            } else if !state.queue.enqueue(pkt).expect("same DAG") {
                self.drop_packet(&pkt, d, row);
            }
        }
    }

    fn audit(&mut self) {
        for d in 0..self.dag_generated.len() {
            let queued: u64 = self
                .nodes
                .iter()
                .filter_map(|n| n.dags[d].as_ref())
                .map(|s| s.queue.len() as u64)
                .sum();
            if self.dag_generated[d] != self.dag_delivered[d] + self.dag_dropped[d] + queued {
                self.sink.conservation_violations += 1;
            }
        }
    }

    pub fn dag_id(&self, dag: usize) -> DagId {
        self.cfg.topology.dags[dag].id
    }

    /// Ids of roots, with their DAG-level delivery count.
    pub fn root_ids(&self) -> Vec<NodeId> {
        self.cfg.topology.roots.iter().copied().collect()
    }
}

/// Runs a configuration to completion.
pub fn run(cfg: SimConfig) -> Result<MetricsSink, SimError> {
    let mut world = World::new(cfg)?;
    world.run_to_end();
    Ok(world.into_metrics())
}
