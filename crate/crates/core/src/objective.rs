//! Objective functions: link penalties, Rank and preferred-parent selection.

use std::cmp::Ordering;

use crate::ids::NodeId;

/// Wire units per unit of Rank (RPL's default MinHopRankIncrease).
pub const RANK_SCALE: f64 = 256.0;
/// Penalty of a link that has never carried an acknowledged packet.
pub const DEFAULT_ETX: f64 = 3.0;
pub const DEFAULT_ETX_ALPHA: f64 = 0.9;
pub const DEFAULT_MAX_RANK: f64 = 64.0;
pub const DEFAULT_TWO_ROOT_BIAS: f64 = 16.0;
/// Consecutive failed attempts after which a link is sampled as if the next
/// attempt would succeed, so dead links stop looking healthy.
const ETX_FAILURE_SAMPLE: u64 = 10;

/// Cost of using one link. Positive for every usable link.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Penalty(pub f64);

impl Penalty {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Logical distance to the DODAG root, in objective-function units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Rank(pub f64);

impl Rank {
    pub const ZERO: Rank = Rank(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_wire(self) -> u16 {
        let scaled = (self.0 * RANK_SCALE).round();
        if scaled <= 0.0 {
            0
        } else if scaled >= f64::from(u16::MAX) {
            u16::MAX
        } else {
            scaled as u16
        }
    }

    pub fn from_wire(wire: u16) -> Rank {
        Rank(f64::from(wire) / RANK_SCALE)
    }
}

/// Per-link delivery history and its ETX estimate.
///
/// Attempts made without any success carry over until a slot with at least
/// one success, so every sample is attempts-per-acknowledged-packet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkStats {
    etx: Option<f64>,
    pending_attempts: u64,
    pub attempts: u64,
    pub successes: u64,
}

impl LinkStats {
    pub fn new() -> Self {
        LinkStats::default()
    }

    pub fn etx(&self) -> f64 {
        self.etx.unwrap_or(DEFAULT_ETX)
    }

    pub fn has_history(&self) -> bool {
        self.etx.is_some()
    }

    /// Folds one slot's transmissions on this link into the estimate.
    pub fn record(&mut self, attempts: u32, successes: u32, alpha: f64) {
        self.attempts += u64::from(attempts);
        self.successes += u64::from(successes);
        self.pending_attempts += u64::from(attempts);
        let sample = if successes > 0 {
            self.pending_attempts as f64 / f64::from(successes)
        } else if self.pending_attempts >= ETX_FAILURE_SAMPLE {
            self.pending_attempts as f64
        } else {
            return;
        };
        self.pending_attempts = 0;
        let sample = sample.max(1.0);
        let next = match self.etx {
            None => sample,
            Some(prev) => alpha * prev + (1.0 - alpha) * sample,
        };
        self.etx = Some(next.max(1.0));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OfKind {
    /// Expected transmission count, smoothed with factor `alpha`.
    Etx { alpha: f64 },
    HopCount,
    /// Hop count, plus `bias` on links whose next hop belongs to a DODAG other
    /// than `preferred_root`'s.
    TwoRootCustom { preferred_root: NodeId, bias: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveFunctionSpec {
    pub kind: OfKind,
    /// Largest meaningful Rank. Used as the detached sentinel and as the
    /// normalizer of penalty-plus-rank in the routing weights.
    pub max_rank: f64,
}

impl Default for ObjectiveFunctionSpec {
    fn default() -> Self {
        ObjectiveFunctionSpec::etx()
    }
}

impl ObjectiveFunctionSpec {
    pub fn etx() -> Self {
        ObjectiveFunctionSpec {
            kind: OfKind::Etx {
                alpha: DEFAULT_ETX_ALPHA,
            },
            max_rank: DEFAULT_MAX_RANK,
        }
    }

    pub fn hop_count() -> Self {
        ObjectiveFunctionSpec {
            kind: OfKind::HopCount,
            max_rank: DEFAULT_MAX_RANK,
        }
    }

    pub fn two_root(preferred_root: NodeId) -> Self {
        ObjectiveFunctionSpec {
            kind: OfKind::TwoRootCustom {
                preferred_root,
                bias: DEFAULT_TWO_ROOT_BIAS,
            },
            max_rank: DEFAULT_MAX_RANK,
        }
    }

    pub fn with_max_rank(mut self, max_rank: f64) -> Self {
        self.max_rank = max_rank;
        self
    }

    pub fn detached_rank(&self) -> Rank {
        Rank(self.max_rank)
    }

    /// Smoothing factor for link statistics.
    pub fn etx_alpha(&self) -> f64 {
        match self.kind {
            OfKind::Etx { alpha } => alpha,
            _ => DEFAULT_ETX_ALPHA,
        }
    }

    /// `toward_root` is the DODAG root the neighbor at the far end of the link
    /// is attached to, if known.
    pub fn link_penalty(&self, stats: &LinkStats, toward_root: Option<NodeId>) -> Penalty {
        match self.kind {
            OfKind::HopCount => Penalty(1.0),
            OfKind::Etx { .. } => Penalty(stats.etx()),
            OfKind::TwoRootCustom {
                preferred_root,
                bias,
            } => match toward_root {
                Some(root) if root != preferred_root => Penalty(1.0 + bias),
                _ => Penalty(1.0),
            },
        }
    }

    /// Rank of a node from its neighbor view. `None` when a non-root node has
    /// no neighbors at all; otherwise the minimum of penalty plus neighbor
    /// rank, clamped to `max_rank`.
    pub fn compute_rank(
        &self,
        is_root: bool,
        root_rank: Rank,
        view: &[(NodeId, Rank, Penalty)],
    ) -> Option<Rank> {
        if is_root {
            return Some(root_rank);
        }
        view.iter()
            .map(|&(_, rank, pen)| pen.0 + rank.0)
            .min_by(f64::total_cmp)
            .map(|best| Rank(best.min(self.max_rank)))
    }

    /// Neighbor minimizing penalty plus rank, lowest id on ties. Neighbors
    /// whose path cost reaches `max_rank` are never chosen.
    pub fn preferred_parent(&self, view: &[(NodeId, Rank, Penalty)]) -> Option<NodeId> {
        view.iter()
            .map(|&(id, rank, pen)| (id, pen.0 + rank.0))
            .filter(|&(_, cost)| cost < self.max_rank)
            .min_by(|a, b| cmp_cost_then_id(*a, *b))
            .map(|(id, _)| id)
    }
}

fn cmp_cost_then_id(a: (NodeId, f64), b: (NodeId, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(id: u32, rank: f64, pen: f64) -> (NodeId, Rank, Penalty) {
        (NodeId(id), Rank(rank), Penalty(pen))
    }

    #[test]
    fn hop_count_is_one() {
        let of = ObjectiveFunctionSpec::hop_count();
        let mut stats = LinkStats::new();
        stats.record(9, 1, 0.9);
        assert_eq!(of.link_penalty(&stats, None), Penalty(1.0));
        assert_eq!(of.link_penalty(&LinkStats::new(), Some(NodeId(4))), Penalty(1.0));
    }

    #[test]
    fn etx_defaults_without_history() {
        let of = ObjectiveFunctionSpec::etx();
        assert_eq!(of.link_penalty(&LinkStats::new(), None), Penalty(3.0));
    }

    #[test]
    fn lossless_link_converges_to_one() {
        let mut stats = LinkStats::new();
        for _ in 0..50 {
            stats.record(10, 10, 0.9);
        }
        assert!((stats.etx() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_link_converges_to_two() {
        // oracle: closed form 1/PDR = 2 for a 50% link
        let mut stats = LinkStats::new();
        stats.record(1, 1, 0.9); // start from a lossless first sample
        let mut trace = Vec::new();
        for i in 0..400 {
            let ok = i % 2 == 0;
            stats.record(1, u32::from(ok), 0.9);
            trace.push(stats.etx());
        }
        for etx in &trace[300..] {
            assert!((etx - 2.0).abs() <= 0.1, "etx {etx}");
        }
    }

    #[test]
    fn dead_link_is_penalized() {
        let mut stats = LinkStats::new();
        stats.record(5, 5, 0.9);
        for _ in 0..10 {
            stats.record(5, 0, 0.9);
        }
        assert!(stats.etx() > 2.0);
    }

    #[test]
    fn two_root_bias() {
        let of = ObjectiveFunctionSpec::two_root(NodeId(0));
        let s = LinkStats::new();
        assert_eq!(of.link_penalty(&s, Some(NodeId(0))), Penalty(1.0));
        assert_eq!(of.link_penalty(&s, Some(NodeId(99))), Penalty(17.0));
        assert_eq!(of.link_penalty(&s, None), Penalty(1.0));
    }

    #[test]
    fn root_rank_is_root_rank() {
        let of = ObjectiveFunctionSpec::hop_count();
        assert_eq!(of.compute_rank(true, Rank(0.0), &[]), Some(Rank(0.0)));
    }

    #[test]
    fn rank_is_min_over_neighbors() {
        let of = ObjectiveFunctionSpec::hop_count();
        let view = [n(1, 1.0, 1.0), n(2, 3.0, 1.0)];
        assert_eq!(of.compute_rank(false, Rank::ZERO, &view), Some(Rank(2.0)));
        assert_eq!(of.preferred_parent(&view), Some(NodeId(1)));
    }

    #[test]
    fn empty_view_is_undefined() {
        let of = ObjectiveFunctionSpec::hop_count();
        assert_eq!(of.compute_rank(false, Rank::ZERO, &[]), None);
        assert_eq!(of.preferred_parent(&[]), None);
    }

    #[test]
    fn rank_clamps_to_max() {
        let of = ObjectiveFunctionSpec::hop_count().with_max_rank(8.0);
        let view = [n(1, 8.0, 1.0)];
        assert_eq!(of.compute_rank(false, Rank::ZERO, &view), Some(Rank(8.0)));
        assert_eq!(of.preferred_parent(&view), None);
    }

    #[test]
    fn hop_count_dodag_two_hops() {
        // R3 (rank 0) - a (rank 1) - node
        let of = ObjectiveFunctionSpec::hop_count();
        let a = of.compute_rank(false, Rank::ZERO, &[n(3, 0.0, 1.0)]).unwrap();
        let node = of.compute_rank(false, Rank::ZERO, &[n(10, a.0, 1.0)]).unwrap();
        assert_eq!(node, Rank(2.0));
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let of = ObjectiveFunctionSpec::hop_count();
        // A=1 (rank 2, pen 1), B=2 (rank 1, pen 2): both cost 3
        assert_eq!(of.preferred_parent(&[n(2, 1.0, 2.0), n(1, 2.0, 1.0)]), Some(NodeId(1)));
        // exhaustive swap check over small integer costs
        for ra in 0..5 {
            for pa in 1..5 {
                for rb in 0..5 {
                    for pb in 1..5 {
                        let view = [n(1, ra as f64, pa as f64), n(2, rb as f64, pb as f64)];
                        let rev = [view[1], view[0]];
                        let ca = ra + pa;
                        let cb = rb + pb;
                        let expected = if ca <= cb { NodeId(1) } else { NodeId(2) };
                        assert_eq!(of.preferred_parent(&view), Some(expected));
                        assert_eq!(of.preferred_parent(&rev), Some(expected));
                    }
                }
            }
        }
    }

    #[test]
    fn etx_avoids_noisy_path() {
        // A picks between B (clean) and D (noisy), both one hop from a
        // grounded relay of equal rank.
        let of = ObjectiveFunctionSpec::etx();
        let mut clean = LinkStats::new();
        let mut noisy = LinkStats::new();
        for i in 0..100 {
            clean.record(4, 4, 0.9);
            noisy.record(4, if i % 2 == 0 { 1 } else { 2 }, 0.9);
        }
        let b = (NodeId(2), Rank(2.0), of.link_penalty(&clean, None));
        let d = (NodeId(1), Rank(2.0), of.link_penalty(&noisy, None));
        assert_eq!(of.preferred_parent(&[d, b]), Some(NodeId(2)));
    }

    #[test]
    fn wire_round_trip_precision() {
        for v in [0.0, 1.0, 2.5, 17.25, 63.99] {
            let r = Rank(v);
            assert!((Rank::from_wire(r.to_wire()).0 - v).abs() <= 0.5 / RANK_SCALE);
        }
        assert_eq!(Rank(1e9).to_wire(), u16::MAX);
        assert_eq!(Rank(-1.0).to_wire(), 0);
    }

    fn arb_view() -> impl Strategy<Value = Vec<(NodeId, Rank, Penalty)>> {
        proptest::collection::btree_map(0u32..200, (0.0f64..80.0, 1.0f64..10.0), 1..50).prop_map(|m| {
            m.into_iter()
                .map(|(id, (r, p))| (NodeId(id), Rank(r), Penalty(p)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn rank_matches_brute_force(view in arb_view()) {
            let of = ObjectiveFunctionSpec::etx();
            let mut best = f64::INFINITY;
            for &(_, r, p) in &view {
                if p.0 + r.0 < best {
                    best = p.0 + r.0;
                }
            }
            let got = of.compute_rank(false, Rank::ZERO, &view).unwrap();
            prop_assert_eq!(got.0, best.min(of.max_rank));
        }

        #[test]
        fn parent_is_deterministic_and_minimal(view in arb_view()) {
            let of = ObjectiveFunctionSpec::etx();
            let a = of.preferred_parent(&view);
            let mut shuffled = view.clone();
            shuffled.reverse();
            prop_assert_eq!(a, of.preferred_parent(&shuffled));
            if let Some(p) = a {
                let cost = |id: NodeId| view.iter().find(|v| v.0 == id).map(|v| v.1.0 + v.2.0).unwrap();
                for &(id, r, pen) in &view {
                    prop_assert!(cost(p) <= r.0 + pen.0);
                    if r.0 + pen.0 == cost(p) {
                        prop_assert!(p <= id);
                    }
                }
                prop_assert!(of.compute_rank(false, Rank::ZERO, &view).unwrap().0 > view.iter().find(|v| v.0 == p).unwrap().1.0);
            }
        }
    }
}
