//! Scenario files: TOML sections with defaults, validation and conversion to
//! a simulator configuration.

use std::path::{Path, PathBuf};

use brpl_core::{Engine, NodeId, ObjectiveFunctionSpec, OfKind, TrickleConfig};
use brpl_sim::placement::factory_topology;
use brpl_sim::{
    assign_engines, build_grid, build_placed, stream_rng, AdaptivityConfig, LinkModel, MobilityConfig,
    MobilityGraph, MobilityParams, NeighborConfig, Point, SimConfig, Stream, Topology, TrafficProgram,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
    #[error(transparent)]
    Sim(#[from] brpl_sim::SimError),
    #[error("mobility graph {path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: brpl_sim::mobility::GraphError,
    },
}

fn invalid(key: &str, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Grid,
    Placed,
    FixtureFactory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kind: TopologyKind,
    /// Grid: total node count (a perfect square). Placed: node count.
    /// Factory: sensor count; roots come from `mobility.n_mobile_roots`.
    pub n: Option<usize>,
    #[serde(default = "d_spacing")]
    pub spacing_m: f64,
    #[serde(default = "d_range")]
    pub range_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
    /// Lateral offset of factory sensors from the graph edges.
    #[serde(default = "d_jitter")]
    pub jitter_m: f64,
    /// Number of DAGs; every DAG spans all roots and sensors.
    #[serde(default = "d_one")]
    pub dags: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Rpl,
    Brpl,
    Bp,
    Dpp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnginesSection {
    #[serde(default = "d_engine")]
    pub default: EngineKind,
    /// When set, this fraction of the sensors runs BRPL and the rest run
    /// `default`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brpl_fraction: Option<f64>,
    #[serde(default = "d_dpp_v")]
    pub dpp_v: f64,
}

impl Default for EnginesSection {
    fn default() -> Self {
        EnginesSection {
            default: d_engine(),
            brpl_fraction: None,
            dpp_v: d_dpp_v(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficKindName {
    Constant,
    Burst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    #[serde(default = "d_traffic_kind")]
    pub kind: TrafficKindName,
    #[serde(default = "d_pps")]
    pub pps: f64,
    #[serde(default = "d_burst_pps")]
    pub burst_pps: f64,
    #[serde(default = "d_period")]
    pub period_slots: u64,
    #[serde(default = "d_burst_len")]
    pub burst_len_slots: u64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            kind: d_traffic_kind(),
            pps: d_pps(),
            burst_pps: d_burst_pps(),
            period_slots: d_period(),
            burst_len_slots: d_burst_len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduling {
    Lifo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueuesSection {
    #[serde(default = "d_max_q")]
    pub max_q: usize,
    #[serde(default = "d_scheduling")]
    pub scheduling: Scheduling,
    #[serde(default = "d_packet_bytes")]
    pub packet_bytes: u16,
}

impl Default for QueuesSection {
    fn default() -> Self {
        QueuesSection {
            max_q: d_max_q(),
            scheduling: d_scheduling(),
            packet_bytes: d_packet_bytes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OfName {
    Etx,
    HopCount,
    TwoRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfSection {
    #[serde(default = "d_of")]
    pub kind: OfName,
    #[serde(default = "d_max_rank")]
    pub max_rank: f64,
    #[serde(default = "d_alpha")]
    pub etx_alpha: f64,
    #[serde(default = "d_bias")]
    pub bias: f64,
    /// Root favored by the two-root objective; the first root by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_root: Option<u32>,
}

impl Default for OfSection {
    fn default() -> Self {
        OfSection {
            kind: d_of(),
            max_rank: d_max_rank(),
            etx_alpha: d_alpha(),
            bias: d_bias(),
            preferred_root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptivitySection {
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_delta_t")]
    pub delta_t: usize,
    #[serde(default = "d_one_f")]
    pub beta_exponent: f64,
}

impl Default for AdaptivitySection {
    fn default() -> Self {
        AdaptivitySection {
            alpha: d_alpha(),
            delta_t: d_delta_t(),
            beta_exponent: d_one_f(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrickleSection {
    #[serde(default = "d_i_min")]
    pub i_min_ms: u64,
    #[serde(default = "d_doublings")]
    pub doublings: u32,
    #[serde(default = "d_redundancy")]
    pub redundancy_k: u32,
}

impl Default for TrickleSection {
    fn default() -> Self {
        TrickleSection {
            i_min_ms: d_i_min(),
            doublings: d_doublings(),
            redundancy_k: d_redundancy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacSection {
    #[serde(default = "d_c_max")]
    pub c_max: u32,
    #[serde(default = "d_c_max")]
    pub node_tx_budget: u32,
    #[serde(default = "d_retry")]
    pub retry_limit: u32,
    #[serde(default)]
    pub loss_p: f64,
}

impl Default for MacSection {
    fn default() -> Self {
        MacSection {
            c_max: d_c_max(),
            node_tx_budget: d_c_max(),
            retry_limit: d_retry(),
            loss_p: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborsSection {
    #[serde(default = "d_table")]
    pub table_size: usize,
    #[serde(default = "d_timeout")]
    pub reachable_timeout: u64,
}

impl Default for NeighborsSection {
    fn default() -> Self {
        NeighborsSection {
            table_size: d_table(),
            reachable_timeout: d_timeout(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilitySection {
    /// Graph file; the bundled factory graph when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<String>,
    #[serde(default)]
    pub n_mobile_roots: usize,
    #[serde(default = "d_preferred_count")]
    pub preferred_count: usize,
    #[serde(default = "d_preferred_prob")]
    pub preferred_prob: f64,
    #[serde(default = "d_speed_mean")]
    pub speed_mean: f64,
    #[serde(default = "d_speed_var")]
    pub speed_var: f64,
}

impl Default for MobilitySection {
    fn default() -> Self {
        MobilitySection {
            graph_file: None,
            n_mobile_roots: 0,
            preferred_count: d_preferred_count(),
            preferred_prob: d_preferred_prob(),
            speed_mean: d_speed_mean(),
            speed_var: d_speed_var(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "d_slots")]
    pub slots: u64,
    #[serde(default = "d_one_u64")]
    pub seed: u64,
    #[serde(default = "d_true")]
    pub record_packets: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            slots: d_slots(),
            seed: 1,
            record_packets: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: TopologySection,
    #[serde(default)]
    pub engines: EnginesSection,
    #[serde(default)]
    pub traffic: TrafficSection,
    #[serde(default)]
    pub queues: QueuesSection,
    #[serde(default)]
    pub of: OfSection,
    #[serde(default)]
    pub adaptivity: AdaptivitySection,
    #[serde(default)]
    pub trickle: TrickleSection,
    #[serde(default)]
    pub mac: MacSection,
    #[serde(default)]
    pub neighbors: NeighborsSection,
    #[serde(default)]
    pub mobility: MobilitySection,
    #[serde(default)]
    pub run: RunSection,
}

fn d_spacing() -> f64 {
    30.0
}
fn d_range() -> f64 {
    50.0
}
fn d_jitter() -> f64 {
    2.0
}
fn d_one() -> usize {
    1
}
fn d_one_f() -> f64 {
    1.0
}
fn d_one_u64() -> u64 {
    1
}
fn d_true() -> bool {
    true
}
fn d_engine() -> EngineKind {
    EngineKind::Rpl
}
fn d_dpp_v() -> f64 {
    5.0
}
fn d_traffic_kind() -> TrafficKindName {
    TrafficKindName::Constant
}
fn d_pps() -> f64 {
    1.0
}
fn d_burst_pps() -> f64 {
    4.0
}
fn d_period() -> u64 {
    600
}
fn d_burst_len() -> u64 {
    180
}
fn d_max_q() -> usize {
    250
}
fn d_scheduling() -> Scheduling {
    Scheduling::Lifo
}
fn d_packet_bytes() -> u16 {
    brpl_core::queue::DEFAULT_PACKET_BYTES
}
fn d_of() -> OfName {
    OfName::Etx
}
fn d_max_rank() -> f64 {
    brpl_core::objective::DEFAULT_MAX_RANK
}
fn d_alpha() -> f64 {
    0.9
}
fn d_bias() -> f64 {
    brpl_core::objective::DEFAULT_TWO_ROOT_BIAS
}
fn d_delta_t() -> usize {
    10
}
fn d_i_min() -> u64 {
    512
}
fn d_doublings() -> u32 {
    1
}
fn d_redundancy() -> u32 {
    10
}
fn d_c_max() -> u32 {
    160
}
fn d_retry() -> u32 {
    5
}
fn d_table() -> usize {
    50
}
fn d_timeout() -> u64 {
    5
}
fn d_preferred_count() -> usize {
    9
}
fn d_preferred_prob() -> f64 {
    0.9
}
fn d_speed_mean() -> f64 {
    1.4
}
fn d_speed_var() -> f64 {
    0.2
}
fn d_slots() -> u64 {
    1000
}

fn check(ok: bool, key: &str, msg: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, msg))
    }
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut scenario = Scenario::from_toml(&text)?;
    if let Some(g) = &scenario.mobility.graph_file {
        let p = Path::new(g);
        if p.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            scenario.mobility.graph_file = Some(base.join(p).to_string_lossy().into_owned());
        }
    }
    Ok(scenario)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let t = &self.topology;
        check(positive(t.spacing_m), "topology.spacing_m", "must be positive")?;
        check(positive(t.range_m), "topology.range_m", "must be positive")?;
        check(t.jitter_m.is_finite() && t.jitter_m >= 0.0, "topology.jitter_m", "must be non-negative")?;
        check((1..=64).contains(&t.dags), "topology.dags", "must be between 1 and 64")?;
        match t.kind {
            TopologyKind::Grid => {
                let n = t.n.ok_or_else(|| invalid("topology.n", "required for grid topologies"))?;
                let side = (n as f64).sqrt().round() as usize;
                check(side * side == n && side >= 2, "topology.n", "grid size must be a square of a side of at least 2")?;
                check(t.nodes.is_none(), "topology.nodes", "only allowed for placed topologies")?;
            }
            TopologyKind::Placed => {
                let nodes = t
                    .nodes
                    .as_ref()
                    .ok_or_else(|| invalid("topology.nodes", "required for placed topologies"))?;
                if let Some(n) = t.n {
                    check(n == nodes.len(), "topology.n", "must match the number of nodes")?;
                }
                check(nodes.iter().flatten().all(|c| c.is_finite()), "topology.nodes", "coordinates must be finite")?;
            }
            TopologyKind::FixtureFactory => {
                let n = t.n.ok_or_else(|| invalid("topology.n", "required for factory topologies"))?;
                check(n >= 1, "topology.n", "must be positive")?;
                check(self.mobility.n_mobile_roots >= 1, "mobility.n_mobile_roots", "factory topologies need at least one mobile root")?;
                check(t.roots.is_none(), "topology.roots", "factory roots come from mobility.n_mobile_roots")?;
                check(t.nodes.is_none(), "topology.nodes", "only allowed for placed topologies")?;
            }
        }
        if let Some(roots) = &t.roots {
            check(!roots.is_empty(), "topology.roots", "must not be empty")?;
        }
        if let Some(f) = self.engines.brpl_fraction {
            check(unit(f), "engines.brpl_fraction", "must be in [0, 1]")?;
        }
        check(self.engines.dpp_v.is_finite() && self.engines.dpp_v >= 0.0, "engines.dpp_v", "must be non-negative")?;
        let tr = &self.traffic;
        check(tr.pps.is_finite() && tr.pps >= 0.0, "traffic.pps", "must be non-negative")?;
        check(tr.burst_pps.is_finite() && tr.burst_pps >= 0.0, "traffic.burst_pps", "must be non-negative")?;
        if tr.kind == TrafficKindName::Burst {
            check(tr.period_slots > 0, "traffic.period_slots", "must be positive")?;
            check(tr.burst_len_slots <= tr.period_slots, "traffic.burst_len_slots", "must not exceed the period")?;
        }
        check(self.queues.max_q > 0, "queues.max_q", "must be positive")?;
        check(self.queues.packet_bytes > 0, "queues.packet_bytes", "must be positive")?;
        check(positive(self.of.max_rank) && self.of.max_rank <= 255.0, "of.max_rank", "must be in (0, 255]")?;
        check(unit(self.of.etx_alpha), "of.etx_alpha", "must be in [0, 1]")?;
        check(self.of.bias.is_finite() && self.of.bias >= 0.0, "of.bias", "must be non-negative")?;
        check(unit(self.adaptivity.alpha), "adaptivity.alpha", "must be in [0, 1]")?;
        check(self.adaptivity.delta_t >= 1, "adaptivity.delta_t", "must be at least 1")?;
        check(positive(self.adaptivity.beta_exponent), "adaptivity.beta_exponent", "must be positive")?;
        check(self.trickle.i_min_ms > 0, "trickle.i_min_ms", "must be positive")?;
        check(self.trickle.doublings <= 16, "trickle.doublings", "must be at most 16")?;
        check(self.mac.c_max > 0, "mac.c_max", "must be positive")?;
        check(self.mac.node_tx_budget > 0, "mac.node_tx_budget", "must be positive")?;
        check(self.mac.retry_limit >= 1, "mac.retry_limit", "must be at least 1")?;
        check(unit(self.mac.loss_p), "mac.loss_p", "must be in [0, 1]")?;
        check(self.neighbors.table_size >= 1, "neighbors.table_size", "must be positive")?;
        let m = &self.mobility;
        check(unit(m.preferred_prob), "mobility.preferred_prob", "must be in [0, 1]")?;
        check(positive(m.speed_mean), "mobility.speed_mean", "must be positive")?;
        check(m.speed_var.is_finite() && m.speed_var >= 0.0, "mobility.speed_var", "must be non-negative")?;
        check(self.run.slots > 0, "run.slots", "must be positive")?;
        Ok(())
    }

    fn engine_of(&self, kind: EngineKind) -> Engine {
        match kind {
            EngineKind::Rpl => Engine::Rpl,
            EngineKind::Brpl => Engine::Brpl,
            EngineKind::Bp => Engine::Backpressure,
            EngineKind::Dpp => Engine::Dpp { v: self.engines.dpp_v },
        }
    }

    fn graph(&self) -> Result<MobilityGraph, ScenarioError> {
        match &self.mobility.graph_file {
            None => Ok(MobilityGraph::factory()),
            Some(p) => {
                let path = PathBuf::from(p);
                let text = std::fs::read_to_string(&path).map_err(|source| ScenarioError::Read {
                    path: path.clone(),
                    source,
                })?;
                MobilityGraph::parse(&text).map_err(|source| ScenarioError::Graph { path, source })
            }
        }
    }

    fn build_topology(&self, graph: Option<&MobilityGraph>) -> Result<Topology, ScenarioError> {
        let t = &self.topology;
        let roots = |default: Vec<NodeId>| -> Vec<NodeId> {
            t.roots
                .as_ref()
                .map(|r| r.iter().map(|&i| NodeId(i)).collect())
                .unwrap_or(default)
        };
        let mut topo = match t.kind {
            TopologyKind::Grid => {
                let n = t.n.unwrap_or(0);
                let side = (n as f64).sqrt().round() as usize;
                build_grid(side, t.spacing_m, &roots(vec![NodeId(0)]))?
            }
            TopologyKind::Placed => {
                let nodes: Vec<Point> = t
                    .nodes
                    .as_ref()
                    .map(|v| v.iter().map(|p| Point::new(p[0], p[1])).collect())
                    .unwrap_or_default();
                build_placed(nodes, &roots(vec![NodeId(0)]))?
            }
            TopologyKind::FixtureFactory => {
                let graph = graph.expect("factory topologies load a graph");
                let mut rng = stream_rng(self.run.seed, Stream::Placement);
                factory_topology(graph, t.n.unwrap_or(0), self.mobility.n_mobile_roots, t.jitter_m, &mut rng)?
            }
        };
        if t.dags > 1 {
            let roots: Vec<NodeId> = topo.roots.iter().copied().collect();
            topo.dags = (0..t.dags)
                .map(|i| brpl_sim::DagSpec {
                    id: brpl_core::DagId::new(brpl_sim::topology::DEFAULT_INSTANCE_ID.wrapping_add(i as u8), i as u32),
                    roots: roots.clone(),
                })
                .collect();
        }
        let default = self.engine_of(self.engines.default);
        topo.set_default_engine(default);
        if let Some(f) = self.engines.brpl_fraction {
            let mut rng = stream_rng(self.run.seed, Stream::Engines);
            assign_engines(&mut topo, f, Engine::Brpl, default, &mut rng);
        }
        Ok(topo)
    }

    pub fn preferred_root(&self, topo: &Topology) -> NodeId {
        self.of
            .preferred_root
            .map(NodeId)
            .or_else(|| topo.roots.iter().next().copied())
            .unwrap_or(NodeId(0))
    }

    /// Builds the simulator configuration, including seeded placement and
    /// engine assignment.
    pub fn to_sim_config(&self) -> Result<SimConfig, ScenarioError> {
        self.validate()?;
        let needs_graph =
            self.topology.kind == TopologyKind::FixtureFactory || self.mobility.n_mobile_roots > 0;
        let graph = if needs_graph { Some(self.graph()?) } else { None };
        let topology = self.build_topology(graph.as_ref())?;
        if let Some(r) = topology.roots.iter().find(|r| r.index() >= topology.len()) {
            return Err(invalid("topology.roots", format!("root {r} is not a node")));
        }
        if self.mobility.n_mobile_roots > topology.roots.len() {
            return Err(invalid("mobility.n_mobile_roots", "exceeds the number of roots"));
        }
        let of_kind = match self.of.kind {
            OfName::Etx => OfKind::Etx {
                alpha: self.of.etx_alpha,
            },
            OfName::HopCount => OfKind::HopCount,
            OfName::TwoRoot => {
                let preferred_root = self.preferred_root(&topology);
                if !topology.is_root(preferred_root) {
                    return Err(invalid("of.preferred_root", "must be one of the roots"));
                }
                OfKind::TwoRootCustom {
                    preferred_root,
                    bias: self.of.bias,
                }
            }
        };
        let traffic = match self.traffic.kind {
            TrafficKindName::Constant => TrafficProgram::constant(self.traffic.pps),
            TrafficKindName::Burst => TrafficProgram::burst(
                self.traffic.pps,
                self.traffic.burst_pps,
                self.traffic.period_slots,
                self.traffic.burst_len_slots,
            ),
        };
        let mobility = match graph {
            Some(graph) if self.mobility.n_mobile_roots > 0 => Some(MobilityConfig {
                graph,
                params: MobilityParams {
                    preferred_count: self.mobility.preferred_count,
                    preferred_prob: self.mobility.preferred_prob,
                    speed_mean: self.mobility.speed_mean,
                    speed_std: self.mobility.speed_var.sqrt(),
                },
                mobile_roots: topology.roots.iter().copied().take(self.mobility.n_mobile_roots).collect(),
            }),
            _ => None,
        };
        let mut cfg = SimConfig::new(topology);
        cfg.link = LinkModel {
            range_m: self.topology.range_m,
            c_max: self.mac.c_max,
            loss_p: self.mac.loss_p,
            node_tx_budget: self.mac.node_tx_budget,
            retry_limit: self.mac.retry_limit,
        };
        cfg.of = ObjectiveFunctionSpec {
            kind: of_kind,
            max_rank: self.of.max_rank,
        };
        cfg.traffic = traffic;
        cfg.max_queue = self.queues.max_q;
        cfg.packet_bytes = self.queues.packet_bytes;
        cfg.adaptivity = AdaptivityConfig {
            alpha: self.adaptivity.alpha,
            delta_t: self.adaptivity.delta_t,
            beta_exponent: self.adaptivity.beta_exponent,
        };
        cfg.trickle = TrickleConfig {
            i_min_ms: self.trickle.i_min_ms,
            doublings: self.trickle.doublings,
            redundancy_k: self.trickle.redundancy_k,
        };
        cfg.neighbors = NeighborConfig {
            capacity: self.neighbors.table_size,
            reachable_timeout: self.neighbors.reachable_timeout,
        };
        cfg.mobility = mobility;
        cfg.slots = self.run.slots;
        cfg.seed = self.run.seed;
        cfg.record_packets = self.run.record_packets;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets `key` (either `section.key` or a key name unique across
    /// sections) to `value`, parsed as a TOML value when possible.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Scenario, ScenarioError> {
        let mut doc: toml::Table = toml::from_str(&self.to_toml())?;
        let (section, field) = match key.split_once('.') {
            Some((s, f)) => (s.to_string(), f.to_string()),
            None => {
                let owners: Vec<String> = SECTION_KEYS
                    .iter()
                    .filter(|(_, keys)| keys.contains(&key))
                    .map(|(s, _)| s.to_string())
                    .collect();
                match owners.as_slice() {
                    [one] => (one.clone(), key.to_string()),
                    [] => return Err(invalid(key, "unknown key")),
                    _ => return Err(invalid(key, "ambiguous key; qualify it as section.key")),
                }
            }
        };
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let table = doc
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match table {
            toml::Value::Table(t) => {
                t.insert(field, parsed);
            }
            _ => return Err(invalid(&section, "not a section")),
        }
        Scenario::from_toml(&toml::to_string(&doc).expect("table serializes"))
    }
}

const SECTION_KEYS: &[(&str, &[&str])] = &[
    ("topology", &["kind", "n", "spacing_m", "range_m", "roots", "nodes", "jitter_m", "dags"]),
    ("engines", &["default", "brpl_fraction", "dpp_v"]),
    ("traffic", &["kind", "pps", "burst_pps", "period_slots", "burst_len_slots"]),
    ("queues", &["max_q", "scheduling", "packet_bytes"]),
    ("of", &["kind", "max_rank", "etx_alpha", "bias", "preferred_root"]),
    ("adaptivity", &["alpha", "delta_t", "beta_exponent"]),
    ("trickle", &["i_min_ms", "doublings", "redundancy_k"]),
    ("mac", &["c_max", "node_tx_budget", "retry_limit", "loss_p"]),
    ("neighbors", &["table_size", "reachable_timeout"]),
    (
        "mobility",
        &["graph_file", "n_mobile_roots", "preferred_count", "preferred_prob", "speed_mean", "speed_var"],
    ),
    ("run", &["slots", "seed", "record_packets"]),
];
