//! Ground truth at single points: a power-flow sweep and the grid search.

use dispatch_region::conic::SolverSettings;
use dispatch_region::network::{assemble_matrices, parse_case};
use dispatch_region::oracle::{distflow_residual, grid_feasibility, limit_slack, sweep_power_flow, OracleOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let p: Vec<f64> = net.limits.iter().map(|l| l.p_min).collect();
    let q: Vec<f64> = net.limits.iter().map(|l| l.q_min).collect();
    let st = sweep_power_flow(&net, &p, &q, &[0.3, 0.2], 100, 1e-12)?;
    println!(
        "sweep: root flow ({:.4}, {:.4}), residual {:.1e}, limit slack {:.4}",
        st.p_line[0],
        st.q_line[0],
        distflow_residual(&net, &st, &[0.3, 0.2]),
        limit_slack(&net, &st)
    );
    let opts = OracleOptions { solver: SolverSettings::default(), ..OracleOptions::default() };
    for w in [[0.2, 0.2], [1.2, 1.2], [2.5, 0.1], [6.0, 6.0]] {
        let v = grid_feasibility(&net, &m, &w, &opts)?;
        println!("{w:?}: {} ({})", v.status.as_str(), v.certificate_note);
    }
    Ok(())
}
