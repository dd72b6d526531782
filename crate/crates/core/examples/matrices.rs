//! Assemble the constant matrices and check them at an interior point.

use dispatch_region::network::{assemble_matrices, parse_case, slater_point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/path3.json"))?;
    let m = assemble_matrices(&net);
    println!("A_f {:?}, A_s {:?}, A_y {:?}, c_q {:?}", m.a_f.shape(), m.a_s.shape(), m.a_y.shape(), m.c_q.shape());
    println!("A_f = {}", m.a_f);
    println!("gamma_f = {}", m.gamma_f.transpose());
    println!("b_y = {}  gamma_q = {}", m.b_y.transpose(), m.gamma_q.transpose());

    let w = [0.3, 0.1];
    let x = slater_point(&m, &net, &w);
    println!("interior point at w = {w:?}: equality residual {:.1e}", m.equality_residual(x.as_slice(), &w).amax());
    Ok(())
}
