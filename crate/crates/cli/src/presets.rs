//! Built-in experiment presets.

use crate::scenario::*;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Scenario,
}

impl Preset {
    pub fn scenario(&self) -> Scenario {
        (self.build)()
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "burst-adaptivity",
        description: "20-node bottleneck, 1 pps base load with periodic 4 pps bursts",
        build: burst_adaptivity,
    },
    Preset {
        name: "fixed-load",
        description: "9x9 lossy grid with a central root at a constant load",
        build: fixed_load,
    },
    Preset {
        name: "hybrid-fraction",
        description: "fixed-load grid at 4 pps with a configurable share of BRPL nodes",
        build: hybrid_fraction,
    },
    Preset {
        name: "factory-mobility",
        description: "130-node factory hall, 30 m range, mobile roots on the aisle graph",
        build: factory_mobility,
    },
    Preset {
        name: "grid-two-root",
        description: "10x10 grid, roots in opposite corners, custom objective preferring root 0",
        build: grid_two_root,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

fn base(topology: TopologySection) -> Scenario {
    Scenario {
        topology,
        engines: EnginesSection::default(),
        traffic: TrafficSection::default(),
        queues: QueuesSection::default(),
        of: OfSection::default(),
        adaptivity: AdaptivitySection::default(),
        trickle: TrickleSection::default(),
        mac: MacSection::default(),
        neighbors: NeighborsSection::default(),
        mobility: MobilitySection::default(),
        run: RunSection::default(),
    }
}

fn topology(kind: TopologyKind) -> TopologySection {
    TopologySection {
        kind,
        n: None,
        spacing_m: 30.0,
        range_m: 50.0,
        roots: None,
        nodes: None,
        jitter_m: 2.0,
        dags: 1,
    }
}

/// Root at the origin, three relays and a 4x4 block of leaves that only
/// reach the root through the relays.
pub fn bottleneck_nodes() -> Vec<[f64; 2]> {
    let mut nodes = vec![[0.0, 0.0], [20.0, -8.0], [20.0, 0.0], [20.0, 8.0]];
    for x in [38.0, 40.0, 42.0, 44.0] {
        for y in [-6.0, -2.0, 2.0, 6.0] {
            nodes.push([x, y]);
        }
    }
    nodes
}

fn burst_adaptivity() -> Scenario {
    let mut t = topology(TopologyKind::Placed);
    t.nodes = Some(bottleneck_nodes());
    t.n = Some(20);
    t.roots = Some(vec![0]);
    t.range_m = 30.0;
    let mut s = base(t);
    s.engines.default = EngineKind::Brpl;
    s.traffic = TrafficSection {
        kind: TrafficKindName::Burst,
        pps: 1.0,
        burst_pps: 4.0,
        period_slots: 600,
        burst_len_slots: 180,
    };
    s.mac.node_tx_budget = 18;
    s.run.slots = 2000;
    s
}

fn fixed_load() -> Scenario {
    let mut t = topology(TopologyKind::Grid);
    t.n = Some(81);
    t.spacing_m = 20.0;
    t.range_m = 30.0;
    t.roots = Some(vec![40]);
    let mut s = base(t);
    s.engines.default = EngineKind::Brpl;
    s.traffic.pps = 4.0;
    s.mac.loss_p = 0.3;
    s.mac.node_tx_budget = 40;
    s.run.slots = 1500;
    s
}

fn hybrid_fraction() -> Scenario {
    let mut s = fixed_load();
    s.engines.default = EngineKind::Rpl;
    s.engines.brpl_fraction = Some(0.5);
    s
}

fn factory_mobility() -> Scenario {
    let mut t = topology(TopologyKind::FixtureFactory);
    t.n = Some(126);
    t.range_m = 30.0;
    let mut s = base(t);
    s.engines.default = EngineKind::Brpl;
    s.mobility.n_mobile_roots = 4;
    s.traffic.pps = 4.0;
    s.mac.loss_p = 0.3;
    s.mac.node_tx_budget = 10;
    s.run.slots = 3000;
    s
}

fn grid_two_root() -> Scenario {
    let mut t = topology(TopologyKind::Grid);
    t.n = Some(100);
    t.spacing_m = 30.0;
    t.range_m = 50.0;
    t.roots = Some(vec![0, 99]);
    let mut s = base(t);
    s.engines.default = EngineKind::Brpl;
    s.of.kind = OfName::TwoRoot;
    s.of.preferred_root = Some(0);
    s.mac.node_tx_budget = 25;
    s.run.slots = 1500;
    s
}
