mod common;

use common::{case, distflow_lhs, State};
use dispatch_region::network::{assemble_matrices, slater_point};
use proptest::prelude::*;

#[test]
fn shapes_follow_node_count() {
    for name in ["single_line", "path3", "toy6", "ieee33"] {
        let net = case(name);
        let n = net.n();
        let m = assemble_matrices(&net);
        assert_eq!((m.a_f.nrows(), m.a_f.ncols()), (3 * n, 6 * n), "{name}");
        assert_eq!((m.a_s.nrows(), m.a_s.ncols()), (8 * n, 6 * n), "{name}");
        assert_eq!((m.c_q.nrows(), m.c_q.ncols()), (n, 6 * n), "{name}");
        assert_eq!((m.a_y.nrows(), m.a_y.ncols()), (3 * n, 6 * n), "{name}");
        assert_eq!(m.b_f.shape(), (3 * n, net.w_dim()), "{name}");
    }
}

#[test]
fn benchmark_has_expected_size() {
    let net = case("ieee33");
    assert_eq!(net.n(), 32);
    assert_eq!(net.w_dim(), 2);
    assert_eq!(net.labels[0], 1);
    let labels: Vec<u32> = net.renewables.iter().map(|&k| net.labels[k]).collect();
    assert_eq!(labels, vec![13, 29]);
}

fn equivalence(name: &str, x: &[f64], w: &[f64]) {
    let net = case(name);
    let m = assemble_matrices(&net);
    let n = net.n();
    let x = &x[..6 * n];
    let w = &w[..net.w_dim()];
    let lib = m.equality_residual(x, w);
    let direct = distflow_lhs(&net, &State::split(x, n), w);
    for (a, b) in lib.iter().zip(&direct) {
        assert!((a - b).abs() <= 1e-12, "{name}: {a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matrices_match_direct_evaluation_toy(x in prop::collection::vec(-2.0f64..2.0, 36), w in prop::collection::vec(0.0f64..3.0, 2)) {
        equivalence("toy6", &x, &w);
    }

    #[test]
    fn matrices_match_direct_evaluation_benchmark(x in prop::collection::vec(-2.0f64..2.0, 192), w in prop::collection::vec(0.0f64..8.0, 2)) {
        equivalence("ieee33", &x, &w);
    }

    #[test]
    fn interior_point_solves_equalities(w in prop::collection::vec(0.0f64..8.0, 2)) {
        for name in ["toy6", "ieee33"] {
            let net = case(name);
            let m = assemble_matrices(&net);
            let x = slater_point(&m, &net, &w);
            prop_assert!(m.equality_residual(x.as_slice(), &w).amax() <= 1e-10);
        }
    }
}
