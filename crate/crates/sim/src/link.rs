//! Unit-disk links with distance-dependent Bernoulli loss.

use crate::topology::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub range_m: f64,
    /// Acknowledged packets a perfect link carries per slot.
    pub c_max: u32,
    /// Loss probability at the edge of the range. Zero gives a lossless
    /// unit disk.
    pub loss_p: f64,
    /// Transmission attempts a node may make per slot, over all links and DAGs.
    pub node_tx_budget: u32,
    /// Attempts per packet before it is put back in the queue.
    pub retry_limit: u32,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            range_m: 50.0,
            c_max: 160,
            loss_p: 0.0,
            node_tx_budget: 160,
            retry_limit: 5,
        }
    }
}

impl LinkModel {
    /// Per-attempt delivery probability over distance `d`; zero out of range.
    pub fn delivery_prob(&self, d: f64) -> f64 {
        if d > self.range_m {
            return 0.0;
        }
        let ratio = if self.range_m > 0.0 { d / self.range_m } else { 0.0 };
        (1.0 - self.loss_p * ratio * ratio).clamp(0.0, 1.0)
    }

    pub fn capacity(&self, d: f64) -> u32 {
        (f64::from(self.c_max) * self.delivery_prob(d)).floor() as u32
    }

    pub fn between(&self, a: Point, b: Point) -> (f64, u32) {
        let d = a.distance(b);
        (self.delivery_prob(d), self.capacity(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_range_is_dead() {
        let m = LinkModel::default();
        assert_eq!(m.capacity(50.0001), 0);
        assert_eq!(m.delivery_prob(60.0), 0.0);
        assert_eq!(m.capacity(50.0), 160);
    }

    #[test]
    fn loss_grows_with_distance() {
        let m = LinkModel {
            loss_p: 0.5,
            ..LinkModel::default()
        };
        assert_eq!(m.delivery_prob(0.0), 1.0);
        assert_eq!(m.delivery_prob(50.0), 0.5);
        assert_eq!(m.capacity(50.0), 80);
        assert!(m.capacity(25.0) <= m.c_max);
    }
}
