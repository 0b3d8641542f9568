//! Node placement, roles, DAG membership and engine assignment.

use std::collections::BTreeSet;

use brpl_core::{DagId, Engine, NodeId};
use rand::Rng;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point `frac` of the way from `self` to `other`.
    pub fn lerp(self, other: Point, frac: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DagSpec {
    pub id: DagId,
    pub roots: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// Initial position of every node, indexed by id.
    pub positions: Vec<Point>,
    pub roots: BTreeSet<NodeId>,
    pub dags: Vec<DagSpec>,
    /// Engine of every node; ignored for roots.
    pub engines: Vec<Engine>,
}

/// RPLInstanceID used for the first DAG of generated topologies.
pub const DEFAULT_INSTANCE_ID: u8 = 30;

impl Topology {
    /// A single DAG containing every root.
    pub fn single_dag(positions: Vec<Point>, roots: &[NodeId]) -> Topology {
        let engines = vec![Engine::Rpl; positions.len()];
        Topology {
            positions,
            roots: roots.iter().copied().collect(),
            dags: vec![DagSpec {
                id: DagId::new(DEFAULT_INSTANCE_ID, 0),
                roots: roots.to_vec(),
            }],
            engines,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        self.roots.contains(&id)
    }

    pub fn sensors(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len() as u32)
            .map(NodeId)
            .filter(move |id| !self.is_root(*id))
    }

    pub fn sensor_count(&self) -> usize {
        self.len() - self.roots.len()
    }

    pub fn set_default_engine(&mut self, engine: Engine) {
        self.engines = vec![engine; self.len()];
    }

    /// Ids within `range_m` of `id` at the initial placement.
    pub fn neighbors_in_range(&self, id: NodeId, range_m: f64) -> Vec<NodeId> {
        let p = self.positions[id.index()];
        (0..self.len() as u32)
            .map(NodeId)
            .filter(|&o| o != id && self.positions[o.index()].distance(p) <= range_m)
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.len();
        if n == 0 {
            return Err(SimError::Topology("no nodes".into()));
        }
        if self.engines.len() != n {
            return Err(SimError::Topology(format!(
                "{} engines for {} nodes",
                self.engines.len(),
                n
            )));
        }
        if self.roots.is_empty() {
            return Err(SimError::Topology("no roots".into()));
        }
        if let Some(r) = self.roots.iter().find(|r| r.index() >= n) {
            return Err(SimError::Topology(format!("root {r} out of range")));
        }
        if self.dags.is_empty() {
            return Err(SimError::Topology("no DAGs".into()));
        }
        let mut union = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for dag in &self.dags {
            if !seen.insert(dag.id) {
                return Err(SimError::Topology(format!("duplicate DAG {}", dag.id)));
            }
            if dag.roots.is_empty() {
                return Err(SimError::Topology(format!("DAG {} has no roots", dag.id)));
            }
            union.extend(dag.roots.iter().copied());
        }
        if union != self.roots {
            return Err(SimError::Topology(
                "the root set must equal the union of the DAG root sets".into(),
            ));
        }
        Ok(())
    }
}

/// Node ids of the top-left and bottom-right cells of an `n_side` grid.
pub fn corner_roots(n_side: usize) -> Vec<NodeId> {
    vec![NodeId(0), NodeId((n_side * n_side - 1) as u32)]
}

/// `n_side`² nodes on a square lattice, row-major ids.
pub fn build_grid(n_side: usize, spacing_m: f64, roots: &[NodeId]) -> Result<Topology, SimError> {
    if n_side < 2 {
        return Err(SimError::Topology("grid side must be at least 2".into()));
    }
    let positions = (0..n_side * n_side)
        .map(|i| Point::new((i % n_side) as f64 * spacing_m, (i / n_side) as f64 * spacing_m))
        .collect();
    let topo = Topology::single_dag(positions, roots);
    topo.validate()?;
    Ok(topo)
}

pub fn build_placed(positions: Vec<Point>, roots: &[NodeId]) -> Result<Topology, SimError> {
    let topo = Topology::single_dag(positions, roots);
    topo.validate()?;
    Ok(topo)
}

/// Runs `brpl` on round(fraction · sensors) sensors chosen uniformly, and
/// `other` on the rest.
pub fn assign_engines<R: Rng + ?Sized>(
    topology: &mut Topology,
    fraction: f64,
    brpl: Engine,
    other: Engine,
    rng: &mut R,
) {
    let sensors: Vec<NodeId> = topology.sensors().collect();
    let k = ((fraction.clamp(0.0, 1.0) * sensors.len() as f64).round() as usize).min(sensors.len());
    for e in topology.engines.iter_mut() {
        *e = other;
    }
    for i in rand::seq::index::sample(rng, sensors.len(), k) {
        topology.engines[sensors[i].index()] = brpl;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_grid_node_has_eight_neighbors() {
        let t = build_grid(10, 30.0, &corner_roots(10)).unwrap();
        assert_eq!(t.neighbors_in_range(NodeId(55), 50.0).len(), 8);
        assert_eq!(t.neighbors_in_range(NodeId(0), 50.0).len(), 3);
    }

    #[test]
    fn small_grid_is_a_full_mesh() {
        let t = build_grid(2, 30.0, &[NodeId(0)]).unwrap();
        for i in 0..4 {
            assert_eq!(t.neighbors_in_range(NodeId(i), 50.0).len(), 3);
        }
    }

    #[test]
    fn range_equal_to_spacing_is_axis_only() {
        let t = build_grid(3, 30.0, &[NodeId(0)]).unwrap();
        let n: Vec<u32> = t.neighbors_in_range(NodeId(4), 30.0).iter().map(|i| i.0).collect();
        assert_eq!(n, vec![1, 3, 5, 7]);
    }

    #[test]
    fn grid_roots_at_corners() {
        let t = build_grid(10, 30.0, &corner_roots(10)).unwrap();
        assert!(t.is_root(NodeId(0)) && t.is_root(NodeId(99)));
        assert_eq!(t.positions[99], Point::new(270.0, 270.0));
        assert_eq!(t.sensor_count(), 98);
    }

    #[test]
    fn engine_fractions() {
        let positions = (0..97).map(|i| Point::new(f64::from(i), 0.0)).collect();
        let mut t = build_placed(positions, &[NodeId(0), NodeId(1)]).unwrap();
        assert_eq!(t.sensor_count(), 95);
        let count = |t: &Topology| t.sensors().filter(|s| t.engines[s.index()] == Engine::Brpl).count();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assign_engines(&mut t, 0.0, Engine::Brpl, Engine::Rpl, &mut rng);
        assert_eq!(count(&t), 0);
        assign_engines(&mut t, 1.0, Engine::Brpl, Engine::Rpl, &mut rng);
        assert_eq!(count(&t), 95);
        assign_engines(&mut t, 0.2, Engine::Brpl, Engine::Rpl, &mut rng);
        assert_eq!(count(&t), 19);
        let pick = |seed| {
            let mut t2 = t.clone();
            assign_engines(&mut t2, 0.2, Engine::Brpl, Engine::Rpl, &mut ChaCha8Rng::seed_from_u64(seed));
            t2.engines
        };
        assert_eq!(pick(5), pick(5));
        assert_ne!(pick(5), pick(6));
    }

    #[test]
    fn validation_catches_dangling_roots() {
        let mut t = build_grid(3, 30.0, &[NodeId(0)]).unwrap();
        t.roots.insert(NodeId(4));
        assert!(t.validate().is_err());
        assert!(build_grid(1, 30.0, &[NodeId(0)]).is_err());
    }
}
