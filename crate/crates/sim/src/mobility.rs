//! Indoor mobility graph and the movement rule of mobile roots.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use brpl_core::NodeId;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::topology::Point;

pub const FACTORY_GRAPH: &str = include_str!("../fixtures/factory_v1.graph");
const MIN_SPEED: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: point {id} defined twice")]
    DuplicatePoint { line: usize, id: u32 },
    #[error("line {line}: unknown point {id}")]
    UnknownPoint { line: usize, id: u32 },
    #[error("mobility graph is not connected")]
    Disconnected,
    #[error("mobility graph has no destinations")]
    NoDestinations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Path,
    Door,
    Dest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint {
    pub id: u32,
    pub pos: Point,
    pub kind: PointKind,
}

#[derive(Debug, Clone)]
pub struct MobilityGraph {
    points: Vec<GraphPoint>,
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize)>,
}

impl MobilityGraph {
    pub fn factory() -> MobilityGraph {
        MobilityGraph::parse(FACTORY_GRAPH).expect("bundled factory graph is valid")
    }

    /// Parses `point <id> <x> <y> <path|door|dest>` and `edge <id> <id>`
    /// lines. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<MobilityGraph, GraphError> {
        let mut points = Vec::new();
        let mut index: HashMap<u32, usize> = HashMap::new();
        let mut raw_edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let syntax = |msg: &str| GraphError::Syntax {
                line,
                msg: msg.to_string(),
            };
            match fields[0] {
                "point" => {
                    if fields.len() != 5 {
                        return Err(syntax("expected: point <id> <x> <y> <kind>"));
                    }
                    let id: u32 = fields[1].parse().map_err(|_| syntax("bad point id"))?;
                    let x: f64 = fields[2].parse().map_err(|_| syntax("bad x coordinate"))?;
                    let y: f64 = fields[3].parse().map_err(|_| syntax("bad y coordinate"))?;
                    if !x.is_finite() || !y.is_finite() {
                        return Err(syntax("coordinates must be finite"));
                    }
                    let kind = match fields[4] {
                        "path" => PointKind::Path,
                        "door" => PointKind::Door,
                        "dest" => PointKind::Dest,
                        _ => return Err(syntax("kind must be path, door or dest")),
                    };
                    if index.insert(id, points.len()).is_some() {
                        return Err(GraphError::DuplicatePoint { line, id });
                    }
                    points.push(GraphPoint {
                        id,
                        pos: Point::new(x, y),
                        kind,
                    });
                }
                "edge" => {
                    if fields.len() != 3 {
                        return Err(syntax("expected: edge <id> <id>"));
                    }
                    let a: u32 = fields[1].parse().map_err(|_| syntax("bad edge endpoint"))?;
                    let b: u32 = fields[2].parse().map_err(|_| syntax("bad edge endpoint"))?;
                    raw_edges.push((line, a, b));
                }
                other => return Err(syntax(&format!("unknown record `{other}`"))),
            }
        }
        let mut adjacency = vec![Vec::new(); points.len()];
        let mut edges = Vec::new();
        for (line, a, b) in raw_edges {
            let ia = *index.get(&a).ok_or(GraphError::UnknownPoint { line, id: a })?;
            let ib = *index.get(&b).ok_or(GraphError::UnknownPoint { line, id: b })?;
            let len = points[ia].pos.distance(points[ib].pos);
            adjacency[ia].push((ib, len));
            adjacency[ib].push((ia, len));
            edges.push((ia, ib));
        }
        let graph = MobilityGraph {
            points,
            adjacency,
            edges,
        };
        if graph.destinations().is_empty() {
            return Err(GraphError::NoDestinations);
        }
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    pub fn points(&self) -> &[GraphPoint] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> &GraphPoint {
        &self.points[idx]
    }

    /// Indices of every `dest` point.
    pub fn destinations(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == PointKind::Dest)
            .map(|(i, _)| i)
            .collect()
    }

    /// Edges as (from, to, length) with point indices.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (a, b, self.points[a].pos.distance(self.points[b].pos)))
    }

    pub fn is_connected(&self) -> bool {
        if self.points.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.points.len()];
        let mut todo = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = todo.pop_front() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    todo.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Shortest path between two point indices, both endpoints included.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
            }
        }
        let n = self.points.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Entry(0.0, from));
        while let Some(Entry(d, i)) = heap.pop() {
            if i == to {
                break;
            }
            if d > dist[i] {
                continue;
            }
            for &(j, w) in &self.adjacency[i] {
                let nd = d + w;
                if nd < dist[j] {
                    dist[j] = nd;
                    prev[j] = i;
                    heap.push(Entry(nd, j));
                }
            }
        }
        if !dist[to].is_finite() {
            return None;
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Uniform point on the graph's edges, weighted by edge length.
    pub fn random_point_on_edges<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let total: f64 = self.edges().map(|e| e.2).sum();
        let mut pick = rng.random_range(0.0..total.max(f64::MIN_POSITIVE));
        for (a, b, len) in self.edges() {
            if pick < len {
                return self.points[a].pos.lerp(self.points[b].pos, pick / len);
            }
            pick -= len;
        }
        self.points[0].pos
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub preferred_count: usize,
    pub preferred_prob: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            preferred_count: 9,
            preferred_prob: 0.9,
            speed_mean: 1.4,
            speed_std: 0.2f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
struct Leg {
    waypoints: Vec<Point>,
    next: usize,
    speed: f64,
    dest: usize,
}

/// A root walking between destinations of a mobility graph.
#[derive(Debug, Clone)]
pub struct MobileRoot {
    pub node: NodeId,
    pos: Point,
    at: usize,
    preferred: Vec<usize>,
    leg: Option<Leg>,
    wait: u32,
}

impl MobileRoot {
    /// Places the root on a random destination and picks its preferred set.
    pub fn new<R: Rng + ?Sized>(
        node: NodeId,
        graph: &MobilityGraph,
        params: &MobilityParams,
        rng: &mut R,
    ) -> MobileRoot {
        let dests = graph.destinations();
        let k = params.preferred_count.min(dests.len());
        let preferred = rand::seq::index::sample(rng, dests.len(), k)
            .into_iter()
            .map(|i| dests[i])
            .collect();
        let at = dests[rng.random_range(0..dests.len())];
        MobileRoot {
            node,
            pos: graph.point(at).pos,
            at,
            preferred,
            leg: None,
            wait: 0,
        }
    }

    pub fn position(&self) -> Point {
        self.pos
    }

    pub fn preferred(&self) -> &[usize] {
        &self.preferred
    }

    pub fn is_moving(&self) -> bool {
        self.leg.is_some()
    }

    pub fn destination(&self) -> Option<usize> {
        self.leg.as_ref().map(|l| l.dest)
    }

    /// A preferred destination with probability `preferred_prob`, otherwise
    /// any destination.
    pub fn choose_destination<R: Rng + ?Sized>(
        &self,
        graph: &MobilityGraph,
        params: &MobilityParams,
        rng: &mut R,
    ) -> usize {
        if !self.preferred.is_empty() && rng.random_bool(params.preferred_prob.clamp(0.0, 1.0)) {
            self.preferred[rng.random_range(0..self.preferred.len())]
        } else {
            let dests = graph.destinations();
            dests[rng.random_range(0..dests.len())]
        }
    }

    fn start_leg<R: Rng + ?Sized>(&mut self, graph: &MobilityGraph, params: &MobilityParams, rng: &mut R) {
        let dest = self.choose_destination(graph, params, rng);
        let path = graph
            .shortest_path(self.at, dest)
            .expect("mobility graph is connected");
        let speed = Normal::new(params.speed_mean, params.speed_std.max(0.0))
            .map(|d| d.sample(rng))
            .unwrap_or(params.speed_mean)
            .max(MIN_SPEED);
        self.leg = Some(Leg {
            waypoints: path.iter().skip(1).map(|&i| graph.point(i).pos).collect(),
            next: 0,
            speed,
            dest,
        });
    }

    /// Advances one slot. A root that arrives stays put for the next slot and
    /// picks a new destination at its end; movement resumes the slot after.
    pub fn update<R: Rng + ?Sized>(&mut self, graph: &MobilityGraph, params: &MobilityParams, rng: &mut R) {
        if let Some(leg) = self.leg.as_mut() {
            let mut budget = leg.speed;
            while budget > 0.0 && leg.next < leg.waypoints.len() {
                let target = leg.waypoints[leg.next];
                let d = self.pos.distance(target);
                if d <= budget + 1e-9 {
                    self.pos = target;
                    budget -= d;
                    leg.next += 1;
                } else {
                    self.pos = self.pos.lerp(target, budget / d);
                    budget = 0.0;
                }
            }
            if leg.next >= leg.waypoints.len() {
                self.at = leg.dest;
                self.pos = graph.point(leg.dest).pos;
                self.leg = None;
                self.wait = 1;
            }
            return;
        }
        if self.wait > 0 {
            self.wait -= 1;
        }
        if self.wait == 0 {
            self.start_leg(graph, params, rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LINE: &str = "point 1 0 0 dest\npoint 2 14 0 dest\nedge 1 2\n";

    #[test]
    fn factory_fixture_loads() {
        let g = MobilityGraph::factory();
        assert!(g.destinations().len() >= 9);
        assert!(g.is_connected());
        let d = g.destinations();
        for &a in &d {
            for &b in &d {
                assert!(g.shortest_path(a, b).is_some());
            }
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(MobilityGraph::parse("point 1 0 0 path\npoint 2 1 1 dest\n"), Err(GraphError::Disconnected)));
        assert!(matches!(MobilityGraph::parse("point 1 0 0 path\n"), Err(GraphError::NoDestinations)));
        assert!(matches!(
            MobilityGraph::parse("point 1 0 0 dest\nedge 1 9\n"),
            Err(GraphError::UnknownPoint { line: 2, id: 9 })
        ));
        assert!(matches!(MobilityGraph::parse("point 1 0 zero dest\n"), Err(GraphError::Syntax { line: 1, .. })));
        assert!(matches!(
            MobilityGraph::parse("point 1 0 0 dest\npoint 1 0 0 dest\n"),
            Err(GraphError::DuplicatePoint { line: 2, id: 1 })
        ));
    }

    #[test]
    fn shortest_path_prefers_short_detour() {
        let g = MobilityGraph::parse(
            "point 1 0 0 dest\npoint 2 10 0 path\npoint 3 0 10 path\npoint 4 10 10 dest\npoint 5 5 0 path\n\
             edge 1 5\nedge 5 2\nedge 2 4\nedge 1 3\nedge 3 4\nedge 5 4\n",
        )
        .unwrap();
        let p = g.shortest_path(0, 3).unwrap();
        let ids: Vec<u32> = p.iter().map(|&i| g.point(i).id).collect();
        assert_eq!(ids, vec![1, 5, 4]);
    }

    fn fixed_speed() -> MobilityParams {
        MobilityParams {
            preferred_count: 1,
            preferred_prob: 1.0,
            speed_mean: 1.4,
            speed_std: 0.0,
        }
    }

    #[test]
    fn fourteen_metres_take_ten_slots() {
        let g = MobilityGraph::parse(LINE).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // find a seed arrangement where the root starts at point 1 and prefers point 2
        let mut root = loop {
            let r = MobileRoot::new(NodeId(0), &g, &fixed_speed(), &mut rng);
            if r.at == 0 && r.preferred == vec![1] {
                break r;
            }
        };
        root.update(&g, &fixed_speed(), &mut rng);
        assert!(root.is_moving());
        let mut slots = 0;
        while root.is_moving() {
            root.update(&g, &fixed_speed(), &mut rng);
            slots += 1;
        }
        assert_eq!(slots, 10);
        assert_eq!(root.position(), Point::new(14.0, 0.0));
    }

    #[test]
    fn waits_one_slot_at_destination() {
        let g = MobilityGraph::parse(LINE).unwrap();
        let params = MobilityParams {
            preferred_prob: 0.0,
            ..fixed_speed()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut root = MobileRoot::new(NodeId(0), &g, &params, &mut rng);
        root.update(&g, &params, &mut rng);
        let mut checked = 0;
        for _ in 0..200 {
            while root.is_moving() {
                root.update(&g, &params, &mut rng);
            }
            let arrived = root.position();
            root.update(&g, &params, &mut rng);
            assert_eq!(root.position(), arrived);
            assert!(root.is_moving());
            let leaving = g.point(root.destination().unwrap()).pos != arrived;
            root.update(&g, &params, &mut rng);
            if leaving {
                assert_ne!(root.position(), arrived);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn preferred_fraction() {
        let g = MobilityGraph::factory();
        let params = MobilityParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let root = MobileRoot::new(NodeId(0), &g, &params, &mut rng);
        assert_eq!(root.preferred().len(), 9);
        let n = 10_000;
        let dests = g.destinations().len() as f64;
        let hits = (0..n)
            .filter(|_| {
                let d = root.choose_destination(&g, &params, &mut rng);
                root.preferred().contains(&d)
            })
            .count();
        // uniform fallbacks also land on a preferred destination 9/|dests| of the time
        let expected = 0.9 + 0.1 * 9.0 / dests;
        assert!((hits as f64 / n as f64 - expected).abs() <= 0.01);
    }

    #[test]
    fn points_on_edges_lie_on_segments() {
        let g = MobilityGraph::factory();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p = g.random_point_on_edges(&mut rng);
            let on = g.edges().any(|(a, b, len)| {
                let pa = g.point(a).pos;
                let pb = g.point(b).pos;
                (pa.distance(p) + p.distance(pb) - len).abs() < 1e-6
            });
            assert!(on);
        }
    }
}
