//! QuickTheta and QuickBeta: per-node controllers for the BRPL tradeoff.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ids::{NodeId, SlotIndex};

pub const DEFAULT_ALPHA: f64 = 0.9;
pub const DEFAULT_DELTA_T: usize = 10;
pub const DEFAULT_BETA_EXPONENT: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum AdaptivityError {
    #[error("max queue of entry {index} is zero")]
    ZeroMaxQueue { index: usize },
    #[error("{values} smoothed values but {max_queues} max queues")]
    LengthMismatch { values: usize, max_queues: usize },
}

/// One EWMA step. The first slot of a run always yields zero.
pub fn ewma_update(prev: f64, current_q: f64, alpha: f64, t: SlotIndex) -> f64 {
    if t.0 <= 1 {
        0.0
    } else {
        alpha * prev + (1.0 - alpha) * current_q
    }
}

/// θ = β·(1 − mean(Q̄/MaxQ)), clamped to [0, 1].
pub fn quicktheta(beta: f64, smoothed: &[f64], max_queues: &[f64]) -> Result<f64, AdaptivityError> {
    if smoothed.len() != max_queues.len() {
        return Err(AdaptivityError::LengthMismatch {
            values: smoothed.len(),
            max_queues: max_queues.len(),
        });
    }
    if let Some(index) = max_queues.iter().position(|&m| m <= 0.0) {
        return Err(AdaptivityError::ZeroMaxQueue { index });
    }
    if smoothed.is_empty() {
        return Ok(beta.clamp(0.0, 1.0));
    }
    let sum: f64 = smoothed
        .iter()
        .zip(max_queues)
        .map(|(&q, &m)| (q / m).clamp(0.0, 1.0))
        .sum();
    let mean = sum / smoothed.len() as f64;
    Ok((beta * (1.0 - mean)).clamp(0.0, 1.0))
}

/// Smoothed backlogs of a node and its current neighbors for one DAG.
#[derive(Debug, Clone)]
pub struct SmoothedQueueVector {
    alpha: f64,
    own: (f64, f64),
    neighbors: BTreeMap<NodeId, (f64, f64)>,
}

impl SmoothedQueueVector {
    pub fn new(alpha: f64) -> Self {
        SmoothedQueueVector {
            alpha,
            own: (0.0, 1.0),
            neighbors: BTreeMap::new(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Folds in one slot of observations. `neighbors` lists the current
    /// neighbor set as (id, backlog, max queue); entries for neighbors not in
    /// the list are dropped, new ones start from zero.
    pub fn update(
        &mut self,
        t: SlotIndex,
        own_queue: f64,
        own_max: f64,
        neighbors: &[(NodeId, f64, f64)],
    ) {
        let alpha = self.alpha;
        let step = |prev: f64, q: f64, max: f64, t: SlotIndex| {
            ewma_update(prev, q.clamp(0.0, max.max(0.0)), alpha, t).clamp(0.0, max.max(0.0))
        };
        self.own = (step(self.own.0, own_queue, own_max, t), own_max);
        let mut next = BTreeMap::new();
        for &(id, q, max) in neighbors {
            let value = match self.neighbors.get(&id) {
                Some(&(prev, _)) => step(prev, q, max, t),
                None => 0.0,
            };
            next.insert(id, (value, max));
        }
        self.neighbors = next;
    }

    pub fn len(&self) -> usize {
        self.neighbors.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn own(&self) -> f64 {
        self.own.0
    }

    pub fn neighbor(&self, id: NodeId) -> Option<f64> {
        self.neighbors.get(&id).map(|e| e.0)
    }

    /// Own entry first, then neighbors in id order.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(self.own.0)
            .chain(self.neighbors.values().map(|e| e.0))
            .collect()
    }

    pub fn max_queues(&self) -> Vec<f64> {
        std::iter::once(self.own.1)
            .chain(self.neighbors.values().map(|e| e.1))
            .collect()
    }

    pub fn theta(&self, beta: f64) -> Result<f64, AdaptivityError> {
        quicktheta(beta, &self.values(), &self.max_queues())
    }
}

/// The last `delta_t + 1` neighbor sets of a node.
#[derive(Debug, Clone)]
pub struct BetaWindow {
    delta_t: usize,
    snapshots: VecDeque<BTreeSet<NodeId>>,
}

impl BetaWindow {
    pub fn new(delta_t: usize) -> Self {
        BetaWindow {
            delta_t,
            snapshots: VecDeque::with_capacity(delta_t + 1),
        }
    }

    pub fn delta_t(&self) -> usize {
        self.delta_t
    }

    pub fn push(&mut self, set: BTreeSet<NodeId>) {
        if self.snapshots.len() == self.delta_t + 1 {
            self.snapshots.pop_front();
        }
        self.snapshots.push_back(set);
    }

    pub fn is_full(&self) -> bool {
        self.delta_t > 0 && self.snapshots.len() == self.delta_t + 1
    }

    /// Snapshot taken `k` pushes ago (0 is the latest).
    pub fn back(&self, k: usize) -> Option<&BTreeSet<NodeId>> {
        let len = self.snapshots.len();
        if k < len {
            self.snapshots.get(len - 1 - k)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BTreeSet<NodeId>> {
        self.snapshots.iter()
    }
}

/// Jaccard similarity of consecutive neighbor sets; two empty sets score 0.
pub fn churn_term(a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    inter as f64 / union.max(1) as f64
}

/// β over a full window; 1 while the window is still filling.
pub fn quickbeta(window: &BetaWindow) -> f64 {
    if !window.is_full() {
        return 1.0;
    }
    let sets: Vec<_> = window.iter().collect();
    let sum: f64 = sets.windows(2).map(|w| churn_term(w[0], w[1])).sum();
    (sum / window.delta_t as f64).clamp(0.0, 1.0)
}

pub fn weighted_beta(beta: f64, exponent: f64) -> f64 {
    beta.clamp(0.0, 1.0).powf(exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[u32]) -> BTreeSet<NodeId> {
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn ewma_first_slot_is_zero() {
        assert_eq!(ewma_update(55.0, 200.0, 0.9, SlotIndex(1)), 0.0);
    }

    #[test]
    fn ewma_without_smoothing() {
        assert_eq!(ewma_update(55.0, 17.0, 0.0, SlotIndex(5)), 17.0);
    }

    #[test]
    fn ewma_decay() {
        assert!((ewma_update(100.0, 0.0, 0.9, SlotIndex(2)) - 90.0).abs() < 1e-12);
    }

    #[test]
    fn theta_extremes() {
        assert_eq!(quicktheta(1.0, &[0.0, 0.0], &[250.0, 250.0]), Ok(1.0));
        assert_eq!(quicktheta(1.0, &[250.0, 250.0], &[250.0, 250.0]), Ok(0.0));
    }

    #[test]
    fn theta_mixed() {
        let t = quicktheta(1.0, &[125.0, 250.0, 0.0], &[250.0; 3]).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn theta_rejects_zero_max() {
        assert_eq!(
            quicktheta(1.0, &[1.0, 1.0], &[250.0, 0.0]),
            Err(AdaptivityError::ZeroMaxQueue { index: 1 })
        );
    }

    #[test]
    fn beta_worked_example() {
        assert_eq!(churn_term(&set(&[1, 2, 3]), &set(&[1, 4])), 0.25);
        let mut w = BetaWindow::new(1);
        w.push(set(&[1, 2, 3]));
        assert_eq!(quickbeta(&w), 1.0);
        w.push(set(&[1, 4]));
        assert_eq!(quickbeta(&w), 0.25);
    }

    #[test]
    fn beta_static_is_one() {
        let mut w = BetaWindow::new(10);
        for _ in 0..20 {
            w.push(set(&[1, 2, 3]));
        }
        assert_eq!(quickbeta(&w), 1.0);
    }

    #[test]
    fn beta_empty_step_is_zero() {
        assert_eq!(churn_term(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn window_keeps_delta_t_plus_one() {
        let mut w = BetaWindow::new(3);
        for i in 0..10 {
            w.push(set(&[i]));
        }
        assert_eq!(w.len(), 4);
        assert_eq!(w.back(0), Some(&set(&[9])));
        assert_eq!(w.back(3), Some(&set(&[6])));
        assert_eq!(w.back(4), None);
    }

    #[test]
    fn smoothed_vector_tracks_neighbors() {
        let mut v = SmoothedQueueVector::new(0.5);
        v.update(SlotIndex(1), 100.0, 250.0, &[(NodeId(1), 50.0, 250.0)]);
        assert_eq!(v.values(), vec![0.0, 0.0]);
        v.update(SlotIndex(2), 100.0, 250.0, &[(NodeId(1), 50.0, 250.0), (NodeId(2), 9.0, 250.0)]);
        assert_eq!(v.values(), vec![50.0, 25.0, 0.0]);
        v.update(SlotIndex(3), 100.0, 250.0, &[(NodeId(2), 9.0, 250.0)]);
        assert_eq!(v.len(), 2);
        assert_eq!(v.neighbor(NodeId(1)), None);
        // estimates above the neighbor's MaxQ are clamped
        v.update(SlotIndex(4), 1000.0, 250.0, &[(NodeId(2), 1000.0, 250.0)]);
        assert!(v.values().iter().all(|&x| x <= 250.0));
    }

    fn brute_beta(sets: &[BTreeSet<NodeId>], delta_t: usize) -> f64 {
        let tail = &sets[sets.len() - (delta_t + 1)..];
        let mut sum = 0.0;
        for i in 0..delta_t {
            let a = &tail[i];
            let b = &tail[i + 1];
            let inter = a.iter().filter(|x| b.contains(x)).count();
            let mut u = a.clone();
            u.extend(b.iter().copied());
            sum += inter as f64 / std::cmp::max(u.len(), 1) as f64;
        }
        sum / delta_t as f64
    }

    proptest! {
        #[test]
        fn beta_matches_set_arithmetic(
            trace in proptest::collection::vec(proptest::collection::btree_set(0u32..12, 0..8), 100),
            delta_t in 1usize..20,
        ) {
            let sets: Vec<BTreeSet<NodeId>> = trace.iter().map(|s| s.iter().map(|&i| NodeId(i)).collect()).collect();
            let mut w = BetaWindow::new(delta_t);
            for (i, s) in sets.iter().enumerate() {
                w.push(s.clone());
                let b = quickbeta(&w);
                prop_assert!((0.0..=1.0).contains(&b));
                if i >= delta_t {
                    prop_assert_eq!(b, brute_beta(&sets[..=i], delta_t));
                } else {
                    prop_assert_eq!(b, 1.0);
                }
            }
        }

        #[test]
        fn theta_bounded_and_monotone(
            entries in proptest::collection::vec((0.0f64..300.0, 1.0f64..300.0), 1..20),
            beta in 0.0f64..=1.0,
            bump_idx in 0usize..20,
            bump in 0.0f64..100.0,
        ) {
            let q: Vec<f64> = entries.iter().map(|e| e.0).collect();
            let m: Vec<f64> = entries.iter().map(|e| e.1).collect();
            let t0 = quicktheta(beta, &q, &m).unwrap();
            prop_assert!((0.0..=1.0).contains(&t0));
            let mut q2 = q.clone();
            let i = bump_idx % q2.len();
            q2[i] += bump;
            let t1 = quicktheta(beta, &q2, &m).unwrap();
            prop_assert!(t1 <= t0);
            let t_low = quicktheta(beta * 0.5, &q, &m).unwrap();
            prop_assert!(t_low <= t0);
        }
    }
}
