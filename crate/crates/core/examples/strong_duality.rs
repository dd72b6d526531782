//! Relaxed slack fp'(w) against the dual optimum dp'(w), and the cutting
//! plane each dual certificate induces.

use dispatch_region::conic::{extract_cutting_plane, solve_dual, solve_primal, SolverSettings};
use dispatch_region::network::{assemble_matrices, parse_case};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let s = SolverSettings::default();
    let zero = vec![0.0; net.n()];
    for w in [[0.0, 0.0], [0.5, 0.5], [1.5, 0.2], [3.0, 3.0]] {
        let fp = solve_primal(&m, &w, &s)?.value;
        let dual = solve_dual(&m, &w, &zero, &s)?;
        print!("w = {w:?}: fp' = {fp:.6e}, dp' = {:.6e}", dual.value);
        match extract_cutting_plane(&dual.cert, &m, 0.0) {
            Ok(h) if dual.value > 1e-6 => println!(", cut {:.4} w1 + {:.4} w2 <= {:.4}", h.a[0], h.a[1], h.b),
            _ => println!(),
        }
    }
    Ok(())
}
