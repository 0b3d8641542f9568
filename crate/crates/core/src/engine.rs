//! Per-slot forwarding strategies. Each engine maps a [`NodeView`] to one
//! [`RoutingDecision`] per DAG.

use std::cmp::Ordering;

use crate::ids::{DagId, NodeId};
use crate::objective::{Penalty, Rank};

pub const DEFAULT_C_MAX: u32 = 160;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Rpl,
    Brpl,
    Backpressure,
    Dpp { v: f64 },
}

impl Engine {
    pub fn select(&self, view: &NodeView) -> RoutingDecision {
        match *self {
            Engine::Rpl => rpl_select(view),
            Engine::Brpl => brpl_select(view),
            Engine::Backpressure => backpressure_select(view),
            Engine::Dpp { v } => dpp_select(view, v),
        }
    }

    /// Whether nodes running this engine advertise their backlog in DIOs.
    pub fn advertises_queue(&self) -> bool {
        !matches!(self, Engine::Rpl)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Rpl => "rpl",
            Engine::Brpl => "brpl",
            Engine::Backpressure => "bp",
            Engine::Dpp { .. } => "dpp",
        }
    }
}

/// A neighbor as seen by a routing engine in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewNeighbor {
    pub id: NodeId,
    pub rank: Rank,
    pub queue_backlog: f64,
    pub max_queue: f64,
    pub penalty: Penalty,
    /// Packets the link can carry this slot.
    pub capacity: u32,
}

impl ViewNeighbor {
    fn path_cost(&self) -> f64 {
        self.penalty.0 + self.rank.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeView {
    pub node: NodeId,
    pub dag: DagId,
    pub rank: Rank,
    pub queue: usize,
    pub max_queue: usize,
    pub theta: f64,
    pub neighbors: Vec<ViewNeighbor>,
    pub c_max: u32,
    pub max_rank: f64,
}

impl NodeView {
    /// Neighbors offering a path cheaper than `max_rank`. Every engine picks
    /// its target from this set.
    fn candidates(&self) -> impl Iterator<Item = &ViewNeighbor> {
        self.neighbors
            .iter()
            .filter(move |n| n.path_cost() < self.max_rank)
    }

    fn own_load(&self) -> f64 {
        if self.max_queue == 0 {
            0.0
        } else {
            (self.queue as f64 / self.max_queue as f64).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoutingDecision {
    pub target: Option<NodeId>,
    pub budget: u32,
}

impl RoutingDecision {
    pub const NONE: RoutingDecision = RoutingDecision {
        target: None,
        budget: 0,
    };

    fn toward(view: &NodeView, n: &ViewNeighbor) -> RoutingDecision {
        if n.capacity == 0 {
            return RoutingDecision::NONE;
        }
        let budget = n.capacity.min(u32::try_from(view.queue).unwrap_or(u32::MAX));
        RoutingDecision {
            target: Some(n.id),
            budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightComponents {
    /// Penalty plus neighbor rank, over MaxRank.
    pub p_tilde: f64,
    /// Own normalized backlog minus the neighbor's.
    pub delta_q: f64,
    pub weight: f64,
}

fn normalized_terms(view: &NodeView, n: &ViewNeighbor) -> (f64, f64, f64) {
    let p_tilde = if view.max_rank > 0.0 {
        (n.path_cost() / view.max_rank).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let theirs = if n.max_queue > 0.0 {
        (n.queue_backlog / n.max_queue).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let delta_q = view.own_load() - theirs;
    let c_ratio = if view.c_max == 0 {
        0.0
    } else {
        (f64::from(n.capacity) / f64::from(view.c_max)).clamp(0.0, 1.0)
    };
    (p_tilde, delta_q, c_ratio)
}

/// w = θ·p̃ − (1−θ)·ΔQ·c/c_max.
pub fn brpl_weight(view: &NodeView, n: &ViewNeighbor) -> WeightComponents {
    let (p_tilde, delta_q, c_ratio) = normalized_terms(view, n);
    let theta = view.theta.clamp(0.0, 1.0);
    WeightComponents {
        p_tilde,
        delta_q,
        weight: theta * p_tilde - (1.0 - theta) * delta_q * c_ratio,
    }
}

/// Weight on raw rank and packet counts, without normalization.
pub fn brpl_weight_unnormalized(view: &NodeView, n: &ViewNeighbor) -> f64 {
    let theta = view.theta;
    theta * n.path_cost() - (1.0 - theta) * (view.queue as f64 - n.queue_backlog) * f64::from(n.capacity)
}

fn dpp_weight(view: &NodeView, n: &ViewNeighbor, v: f64) -> WeightComponents {
    let (p_tilde, delta_q, c_ratio) = normalized_terms(view, n);
    WeightComponents {
        p_tilde,
        delta_q,
        weight: v * p_tilde - delta_q * c_ratio,
    }
}

fn by_score_then_id(a: (f64, NodeId), b: (f64, NodeId)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn gated_argmin(view: &NodeView, weigh: impl Fn(&ViewNeighbor) -> WeightComponents) -> RoutingDecision {
    let best = view
        .candidates()
        .map(|n| (n, weigh(n)))
        .min_by(|a, b| by_score_then_id((a.1.weight, a.0.id), (b.1.weight, b.0.id)));
    match best {
        Some((n, w)) if w.weight > 0.0 || w.delta_q > 0.0 => RoutingDecision::toward(view, n),
        _ => RoutingDecision::NONE,
    }
}

/// Minimum-weight neighbor, forwarded to when its weight or its backlog
/// differential is positive.
pub fn brpl_select(view: &NodeView) -> RoutingDecision {
    gated_argmin(view, |n| brpl_weight(view, n))
}

/// Preferred parent, forwarded to unconditionally.
pub fn rpl_select(view: &NodeView) -> RoutingDecision {
    view.candidates()
        .min_by(|a, b| by_score_then_id((a.path_cost(), a.id), (b.path_cost(), b.id)))
        .map(|n| RoutingDecision::toward(view, n))
        .unwrap_or(RoutingDecision::NONE)
}

/// Neighbor maximizing ΔQ·c (normalized), only when its ΔQ is positive.
pub fn backpressure_select(view: &NodeView) -> RoutingDecision {
    let best = view
        .candidates()
        .map(|n| {
            let (_, dq, c) = normalized_terms(view, n);
            (n, dq, dq * c)
        })
        .min_by(|a, b| by_score_then_id((-a.2, a.0.id), (-b.2, b.0.id)));
    match best {
        Some((n, dq, _)) if dq > 0.0 => RoutingDecision::toward(view, n),
        _ => RoutingDecision::NONE,
    }
}

/// Drift-plus-penalty with penalty weight `v`: w = V·p̃ − ΔQ·c/c_max, gated
/// like BRPL.
pub fn dpp_select(view: &NodeView, v: f64) -> RoutingDecision {
    gated_argmin(view, |n| dpp_weight(view, n, v))
}
