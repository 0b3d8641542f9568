//! Sensor placement along a mobility graph.

use brpl_core::NodeId;
use rand::Rng;

use crate::error::SimError;
use crate::mobility::MobilityGraph;
use crate::topology::{Point, Topology};

/// `sensors` nodes scattered along the graph's edges with up to `jitter_m`
/// of lateral offset, followed by `roots` roots parked at the first
/// destination. Roots take ids `sensors..sensors + roots`.
pub fn factory_topology<R: Rng + ?Sized>(
    graph: &MobilityGraph,
    sensors: usize,
    roots: usize,
    jitter_m: f64,
    rng: &mut R,
) -> Result<Topology, SimError> {
    if roots == 0 {
        return Err(SimError::Topology("factory topology needs at least one root".into()));
    }
    let mut positions: Vec<Point> = (0..sensors)
        .map(|_| {
            let p = graph.random_point_on_edges(rng);
            if jitter_m > 0.0 {
                Point::new(
                    p.x + rng.random_range(-jitter_m..=jitter_m),
                    p.y + rng.random_range(-jitter_m..=jitter_m),
                )
            } else {
                p
            }
        })
        .collect();
    let park = graph.point(graph.destinations()[0]).pos;
    positions.extend(std::iter::repeat_n(park, roots));
    let root_ids: Vec<NodeId> = (sensors..sensors + roots).map(|i| NodeId(i as u32)).collect();
    let topo = Topology::single_dag(positions, &root_ids);
    topo.validate()?;
    Ok(topo)
}

/// Whether every sensor can reach some other node at `range_m`, and the
/// sensors form a single connected component.
pub fn sensors_connected(topo: &Topology, range_m: f64) -> bool {
    let sensors: Vec<NodeId> = topo.sensors().collect();
    if sensors.is_empty() {
        return true;
    }
    let mut seen = vec![false; topo.len()];
    let mut stack = vec![sensors[0]];
    seen[sensors[0].index()] = true;
    while let Some(s) = stack.pop() {
        for o in topo.neighbors_in_range(s, range_m) {
            if !topo.is_root(o) && !seen[o.index()] {
                seen[o.index()] = true;
                stack.push(o);
            }
        }
    }
    sensors.iter().all(|s| seen[s.index()])
}
