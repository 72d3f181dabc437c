use rte_core::neural::train;
use rte_core::optimize::{desensitization_te, omniscient, prediction_te, resolve_bound};
use rte_core::te::{max_sensitivity_per_sd, mlu};
use rte_core::topology::{build_incidence, build_path_sets};
use rte_core::traffic::{compute_stats, gravity_synthesize, inject_bursts};
use rte_core::{BoundKind, Bursts, Edge, Graph, SolveOptions, TrainOptions};

fn mesh() -> Graph {
    let mut edges: Vec<Edge> = (0..6).map(|i| Edge { src: i, dst: (i + 1) % 6, capacity: 10.0 }).collect();
    edges.push(Edge { src: 0, dst: 3, capacity: 5.0 });
    edges.push(Edge { src: 1, dst: 4, capacity: 5.0 });
    Graph::new(6, false, edges).unwrap()
}

#[test]
fn synthesize_train_and_decide() {
    let g = mesh();
    let ps = build_path_sets(&g, 3).unwrap();
    let inc = build_incidence(&g, &ps);
    let base = gravity_synthesize(&g, &[1.0; 6], 30.0, 80, 0.1, 7).unwrap();
    let bursts = Bursts { fraction: 0.2, alpha: 2.0, sigma_scale: 1.0, rate: 1.0 };
    let (trace, bursty) = inject_bursts(&base, &bursts, 8);
    assert_eq!(bursty.len(), 6);

    let opts = TrainOptions { h: 3, gamma: 1.0, epochs: 5, hidden: vec![16, 16], ..TrainOptions::default() };
    let (model, log) = train(&trace, &ps, &inc, &opts).unwrap();
    assert_eq!(log.epoch_loss.len(), 5);
    assert!(log.epoch_loss.iter().all(|l| l.is_finite()));

    let solver = SolveOptions::default();
    let stats = compute_stats(&trace, 0..60).unwrap();
    let bound = resolve_bound(BoundKind::Uniform { cap: 0.5 }, &stats, &ps).unwrap();
    for t in 60..80 {
        let window = &trace.snapshots()[t - 3..t];
        let dm = &trace.snapshots()[t];
        let best = omniscient(dm, &ps, &inc, &solver).unwrap().mlu;
        let neural = model.forward(window).unwrap();
        neural.validate(&ps).unwrap();
        let pred = prediction_te(window, &ps, &inc, &solver).unwrap().config;
        let hedge = desensitization_te(window, &bound, &ps, &inc, &solver).unwrap().config;
        for c in [&neural, &pred, &hedge] {
            assert!(mlu(c, dm, &inc).unwrap() >= best * (1.0 - 1e-2));
        }
        let cap = 0.5 / ps.min_edge_capacity();
        assert!(max_sensitivity_per_sd(&hedge, &ps).iter().all(|&s| s <= cap + 1e-9));
    }
}
