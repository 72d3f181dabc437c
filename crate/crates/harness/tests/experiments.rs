use rte::config::ExperimentConfig;
use rte::experiments::{self, Experiment, PerturbMode};
use rte_core::{DemandMatrix, Edge, Graph, TrafficTrace};

fn triangle() -> Graph {
    let e = |src, dst| Edge { src, dst, capacity: 2.0 };
    Graph::new(3, false, vec![e(0, 1), e(0, 2), e(1, 2)]).unwrap()
}

fn dm(ab: f64, ac: f64, bc: f64) -> DemandMatrix {
    DemandMatrix::new(3, vec![0.0, ab, ac, 0.0, 0.0, bc, 0.0, 0.0, 0.0]).unwrap()
}

fn config(extra: &str) -> ExperimentConfig {
    serde_json::from_str(&format!(
        r#"{{
          "topology": "triangle.json",
          "k": 3,
          "h": 1,
          "split": 0.5,
          "traffic": {{"gravity": {{"total": 6, "count": 8}}}},
          "schemes": [{{"kind": "omniscient"}}, {{"kind": "prediction"}},
                      {{"kind": "desensitization", "name": "hedge", "bound": {{"kind": "uniform", "cap": 0.5}}}}]
          {extra}
        }}"#
    ))
    .unwrap()
}

fn triangle_experiment(snapshots: Vec<DemandMatrix>) -> Experiment {
    let trace = TrafficTrace::new(3, snapshots).unwrap();
    Experiment::from_parts(config(""), triangle(), trace, Vec::new()).unwrap()
}

#[test]
fn prediction_misses_a_burst_by_the_golden_factor() {
    let mut snaps = vec![dm(1.0, 1.0, 1.0); 7];
    snaps.push(dm(1.0, 1.0, 4.0));
    let exp = triangle_experiment(snaps);
    let (schemes, _) = experiments::build_schemes(&exp).unwrap();
    let report = experiments::run_eval(&exp, &schemes, &exp.trace).unwrap();
    let pred = report.index_of("prediction").unwrap();
    let burst = report.rows.iter().find(|r| r.t == 7).unwrap();
    assert!((burst.omniscient_mlu - 1.25).abs() < 1e-3, "{}", burst.omniscient_mlu);
    assert!((burst.normalized[pred] - 1.6).abs() < 2e-3, "{}", burst.normalized[pred]);
    for row in report.rows.iter().filter(|r| r.t < 7) {
        assert!((row.normalized[pred] - 1.0).abs() < 2e-3);
    }
}

#[test]
fn steady_traffic_normalizes_to_one() {
    let exp = triangle_experiment(vec![dm(1.0, 2.0, 0.5); 10]);
    let (schemes, _) = experiments::build_schemes(&exp).unwrap();
    let report = experiments::run_eval(&exp, &schemes, &exp.trace).unwrap();
    assert_eq!(report.rows.len(), 5);
    let omni = report.index_of("omniscient").unwrap();
    let pred = report.index_of("prediction").unwrap();
    for row in &report.rows {
        assert_eq!(row.normalized[omni], 1.0);
        assert!((row.normalized[pred] - 1.0).abs() < 1e-6);
        assert!(row.normalized.iter().all(|&v| v >= 1.0 - 1e-6));
    }
}

#[test]
fn zero_demand_snapshots_are_skipped() {
    let mut snaps = vec![dm(1.0, 1.0, 1.0); 6];
    snaps.push(dm(0.0, 0.0, 0.0));
    snaps.push(dm(1.0, 1.0, 1.0));
    let exp = triangle_experiment(snaps);
    let (schemes, _) = experiments::build_schemes(&exp).unwrap();
    let report = experiments::run_eval(&exp, &schemes, &exp.trace).unwrap();
    assert_eq!(report.skipped, vec![6]);
    assert_eq!(report.rows.len(), 3);
}

#[test]
fn single_failures_reroute_and_double_failures_disconnect() {
    let exp = triangle_experiment(vec![dm(1.0, 1.0, 1.0); 10]);
    let (schemes, _) = experiments::build_schemes(&exp).unwrap();
    let one = experiments::run_failures(&exp, &schemes, 1, 20, 4).unwrap();
    assert_eq!(one.trials.len(), 20);
    assert_eq!(one.disconnected, 0);
    let pred = 1;
    for trial in &one.trials {
        assert_eq!(trial.failed.len(), 1);
        assert!(trial.normalized.iter().all(|&v| v >= 1.0 - 1e-6));
        // All-direct routing rerouted around one link loads the other two links to 1.
        assert!((trial.oracle_mlu - 1.0).abs() < 1e-3);
        assert!((trial.normalized[pred] - 1.0).abs() < 1e-3);
    }
    let two = experiments::run_failures(&exp, &schemes, 2, 10, 4).unwrap();
    assert_eq!(two.disconnected, 10);
    assert!(two.trials.is_empty());
    assert!(experiments::run_failures(&exp, &schemes, 3, 1, 4).is_err());
}

#[test]
fn failure_trials_are_seeded() {
    let exp = triangle_experiment((0..12).map(|i| dm(1.0 + i as f64 * 0.1, 1.0, 2.0)).collect());
    let (schemes, _) = experiments::build_schemes(&exp).unwrap();
    let a = experiments::run_failures(&exp, &schemes, 1, 8, 9).unwrap();
    let b = experiments::run_failures(&exp, &schemes, 1, 8, 9).unwrap();
    let key = |r: &experiments::FailureReport| r.trials.iter().map(|t| (t.t, t.failed.clone())).collect::<Vec<_>>();
    assert_eq!(key(&a), key(&b));
}

#[test]
fn zero_perturbation_changes_nothing() {
    let cfg = config(r#", "seeds": {"base": 2}"#);
    let g = triangle();
    let (trace, bursty) = experiments::load_traffic(&cfg, &g).unwrap();
    let exp = Experiment::from_parts(cfg, g, trace, bursty).unwrap();
    let (schemes, _) = experiments::build_schemes(&exp).unwrap();
    for mode in [PerturbMode::Aligned, PerturbMode::WorstCase] {
        let report = experiments::run_perturbation(&exp, &schemes, &[0.0, 1.0], mode, 5).unwrap();
        assert_eq!(report.rows.len(), 2 * schemes.len());
        for row in report.rows.iter().filter(|r| r.alpha == 0.0) {
            assert_eq!(row.mean_degradation, 0.0, "{}", row.scheme);
            assert_eq!(row.p90_degradation, 0.0, "{}", row.scheme);
        }
    }
    assert!(experiments::run_perturbation(&exp, &schemes, &[-1.0], PerturbMode::Aligned, 5).is_err());
}

#[test]
fn constant_trace_is_self_similar() {
    let trace = TrafficTrace::new(3, vec![dm(1.0, 2.0, 3.0); 30]).unwrap();
    let report = experiments::run_characterize(&trace, 12).unwrap();
    assert_eq!(report.cosine.len(), 18);
    assert!(report.cosine.iter().all(|&c| (c - 1.0).abs() < 1e-12));
    assert!(report.stats.std_devs().iter().all(|&s| s == 0.0));
    assert!(experiments::run_characterize(&trace, 0).is_err());
}

fn ring_quartiles(bursts: &str) -> [f64; 3] {
    let cfg: ExperimentConfig = serde_json::from_str(&format!(
        r#"{{"topology": "ring.json",
             "traffic": {{"gravity": {{"total": 100, "count": 400, "jitter": 0.05 {bursts}}}}},
             "schemes": [{{"kind": "omniscient"}}],
             "seeds": {{"base": 1}}}}"#
    ))
    .unwrap();
    let g = Graph::new(8, false, (0..8).map(|i| Edge { src: i, dst: (i + 1) % 8, capacity: 10.0 }).collect()).unwrap();
    let (trace, _) = experiments::load_traffic(&cfg, &g).unwrap();
    experiments::run_characterize(&trace, 12).unwrap().quartiles()
}

#[test]
fn bursts_lower_temporal_similarity() {
    let calm = ring_quartiles("");
    assert!(calm[0] > 0.99, "{calm:?}");
    let bursty = ring_quartiles(r#", "bursts": {"fraction": 0.2, "alpha": 2.0, "sigma_scale": 1.0}"#);
    for (b, c) in bursty.iter().zip(&calm) {
        assert!(b < c, "bursty {bursty:?} calm {calm:?}");
    }
}
