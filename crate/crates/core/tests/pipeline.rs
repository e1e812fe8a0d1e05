use mcds_core::graph::{gen_cycle_center, gen_random_connected, load_graph};
use mcds_core::oracle::{exact_mcds, is_cds};
use mcds_core::{run_mcds, RunConfig};

#[test]
fn loaded_path_connects_through_the_cheap_middle() {
    let g = load_graph(r#"{"n":3,"weights":[5,1,5],"edges":[[0,1],[1,2]]}"#).unwrap();
    let out = run_mcds(&g, &RunConfig::default()).unwrap();
    assert!(is_cds(&g, &out.cds));
    assert_eq!(out.cds, vec![1]);
    assert_eq!(out.metrics.output_cost, 1);
}

#[test]
fn cycle_center_stays_within_the_calibration_bound() {
    for k in 2..=8 {
        let g = gen_cycle_center(k).unwrap();
        let opt = exact_mcds(&g).unwrap().best_cost;
        for seed in 0..3 {
            let out = run_mcds(&g, &RunConfig::with_seed(seed)).unwrap();
            assert!(is_cds(&g, &out.cds));
            let bound = 8.0 * (g.node_count() as f64).ln() + 8.0;
            assert!((out.cost as f64) <= bound * opt as f64, "k={k} seed={seed}");
        }
    }
}

#[test]
fn serialized_graph_round_trips_and_runs_identically() {
    let g = gen_random_connected(60, 0.1, 1000, 5).unwrap();
    let h = load_graph(&g.to_json()).unwrap();
    assert_eq!(g, h);
    let a = run_mcds(&g, &RunConfig::with_seed(2)).unwrap();
    let b = run_mcds(&h, &RunConfig::with_seed(2)).unwrap();
    assert_eq!(a.cds, b.cds);
    assert_eq!(a.metrics, b.metrics);
}
