mod common;

use common::{case, exact_residual, limit_margin, two_bus, State};
use dispatch_region::conic::{solve_primal, SolverSettings};
use dispatch_region::network::{assemble_matrices, NodeLimits, RadialNetwork};
use dispatch_region::oracle::{failure_rate, grid_feasibility, missing_rate, sweep_power_flow, OracleOptions, Verdict};
use proptest::prelude::*;

fn witness_state(st: &dispatch_region::oracle::DispatchState) -> Vec<f64> {
    [&st.p, &st.q, &st.v, &st.l, &st.p_line, &st.q_line].iter().flat_map(|b| b.iter().copied()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sweep_matches_two_bus_formula(p in -0.8f64..0.8, q in -0.5f64..0.5, w in 0.0f64..0.8, r in 0.01f64..0.2, x in 0.01f64..0.2) {
        let lim = NodeLimits { p_min: -1.0, p_max: 1.0, q_min: -1.0, q_max: 1.0, v_min: 0.5, v_max: 1.5 };
        let net = RadialNetwork::from_parts(1.0, &[(0, 1, r, x, 10.0)], &[lim], &[1]).unwrap();
        let st = sweep_power_flow(&net, &[p], &[q], &[w], 200, 1e-13).unwrap();
        let (l, pl, ql, v) = two_bus(r, x, 1.0, p + w, q);
        prop_assert!((st.l[0] - l).abs() <= 1e-8);
        prop_assert!((st.p_line[0] - pl).abs() <= 1e-8);
        prop_assert!((st.q_line[0] - ql).abs() <= 1e-8);
        prop_assert!((st.v[0] - v).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn verdicts_are_sound(w in prop::collection::vec(0.0f64..2.5, 2)) {
        let net = case("toy6");
        let m = assemble_matrices(&net);
        let opts = OracleOptions::default();
        let v = grid_feasibility(&net, &m, &w, &opts).unwrap();
        let fp = solve_primal(&m, &w, &SolverSettings::default()).unwrap().value;
        let tol = 1e-6 * m.limit_scale();
        match v.status {
            Verdict::Feasible => {
                prop_assert!(fp <= tol);
                let x = witness_state(v.witness.as_ref().unwrap());
                let s = State::split(&x, net.n());
                prop_assert!(exact_residual(&net, &s, &w) <= 1e-9);
                prop_assert!(limit_margin(&net, &s) >= -1e-6);
            }
            Verdict::Infeasible => prop_assert!(fp > tol),
            Verdict::Unknown => prop_assert!(fp <= tol && v.witness.is_none()),
        }
    }

    #[test]
    fn rates_are_fractions(pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..50), cut in 0.0f64..1.0) {
        let verdicts: Vec<Verdict> = pts.iter().map(|w| if w[1] < 0.5 { Verdict::Feasible } else { Verdict::Unknown }).collect();
        let member = |w: &[f64]| w[0] <= cut;
        if let Ok(fr) = failure_rate(member, &pts, &verdicts) {
            prop_assert!((0.0..=1.0).contains(&fr));
        }
        let feasible: Vec<Vec<f64>> = pts.iter().filter(|w| w[1] < 0.5).cloned().collect();
        if let Ok(mr) = missing_rate(member, &feasible) {
            prop_assert!((0.0..=1.0).contains(&mr));
        }
    }
}
