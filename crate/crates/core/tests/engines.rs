use brpl_core::{DagId, Engine, NodeId, NodeView, Penalty, Rank, ViewNeighbor};
use proptest::prelude::*;

fn arb_neighbor() -> impl Strategy<Value = ViewNeighbor> {
    (0u32..30, 0.0f64..70.0, 0.0f64..300.0, 1.0f64..300.0, 1.0f64..6.0, 0u32..=160).prop_map(
        |(id, rank, q, max, pen, cap)| ViewNeighbor {
            id: NodeId(id),
            rank: Rank(rank),
            queue_backlog: q,
            max_queue: max,
            penalty: Penalty(pen),
            capacity: cap,
        },
    )
}

fn arb_view() -> impl Strategy<Value = NodeView> {
    (
        1usize..=300,
        0.0f64..=1.0,
        proptest::collection::btree_map(0u32..30, arb_neighbor(), 0..8),
        0usize..=300,
    )
        .prop_map(|(max_queue, theta, nbs, queue)| NodeView {
            node: NodeId(99),
            dag: DagId::new(30, 0),
            rank: Rank(10.0),
            queue: queue.min(max_queue),
            max_queue,
            theta,
            neighbors: nbs
                .into_iter()
                .map(|(id, mut n)| {
                    n.id = NodeId(id);
                    n
                })
                .collect(),
            c_max: 160,
            max_rank: 64.0,
        })
}

fn engines() -> [Engine; 5] {
    [Engine::Rpl, Engine::Brpl, Engine::Backpressure, Engine::Dpp { v: 0.0 }, Engine::Dpp { v: 5.0 }]
}

proptest! {
    #[test]
    fn decisions_are_feasible(view in arb_view()) {
        for engine in engines() {
            let d = engine.select(&view);
            match d.target {
                None => prop_assert_eq!(d.budget, 0),
                Some(t) => {
                    let n = view.neighbors.iter().find(|n| n.id == t).expect("target is a neighbor");
                    prop_assert!(n.capacity > 0);
                    prop_assert!(n.penalty.0 + n.rank.0 < view.max_rank);
                    prop_assert!(d.budget <= n.capacity.min(view.queue as u32));
                    prop_assert_eq!(d.budget, n.capacity.min(view.queue as u32));
                }
            }
        }
    }

    #[test]
    fn theta_one_follows_the_gradient(mut view in arb_view()) {
        view.theta = 1.0;
        prop_assert_eq!(Engine::Brpl.select(&view).target, Engine::Rpl.select(&view).target);
    }

    #[test]
    fn backpressure_never_sends_uphill(view in arb_view()) {
        if let Some(t) = Engine::Backpressure.select(&view).target {
            let n = view.neighbors.iter().find(|n| n.id == t).unwrap();
            let own = view.queue as f64 / view.max_queue as f64;
            prop_assert!(own > (n.queue_backlog / n.max_queue).min(1.0));
        }
    }
}

#[test]
fn only_rpl_omits_the_queue_option() {
    assert!(!Engine::Rpl.advertises_queue());
    assert!(Engine::Brpl.advertises_queue());
    assert!(Engine::Backpressure.advertises_queue());
    assert!(Engine::Dpp { v: 1.0 }.advertises_queue());
}
