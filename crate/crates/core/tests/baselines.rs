mod common;

use common::case;
use dispatch_region::algorithms::{default_box, run_algorithm1, Algo1Config};
use dispatch_region::baselines::{lindistflow_matrices, tangent_plane_relaxation};
use dispatch_region::conic::{solve_primal, SolverSettings};
use dispatch_region::network::assemble_matrices;
use dispatch_region::oracle::sample_uniform;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tangent_slack_never_exceeds_cone_slack(w in prop::collection::vec(0.0f64..3.0, 2)) {
        let m = assemble_matrices(&case("toy6"));
        let t = tangent_plane_relaxation(&m, 64).unwrap();
        let s = SolverSettings::default();
        let cone = solve_primal(&m, &w, &s).unwrap().value;
        let lin = solve_primal(&t, &w, &s).unwrap().value;
        prop_assert!(lin <= cone + 1e-6 * m.limit_scale(), "{lin} > {cone}");
    }
}

#[test]
fn tangent_region_contains_relaxed_region() {
    let net = case("toy6");
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let cfg = Algo1Config::new(lo.clone(), hi.clone());
    let (relaxed, _) = run_algorithm1(&m, &cfg).unwrap();
    let (tangent, _) = run_algorithm1(&tangent_plane_relaxation(&m, 64).unwrap(), &cfg).unwrap();
    let pts = sample_uniform(&lo, &hi, 2000, 7, |w| relaxed.contains(w, 1e-8));
    assert!(pts.len() > 100);
    assert!(pts.iter().all(|w| tangent.contains(w, 1e-6)));
}

#[test]
fn lindistflow_region_is_computable() {
    let net = case("toy6");
    let (lo, hi) = default_box(&net);
    let (poly, trace) = run_algorithm1(&lindistflow_matrices(&net), &Algo1Config::new(lo, hi)).unwrap();
    assert!(!poly.is_empty().unwrap());
    assert!(trace.planes_added() > 0);
}
