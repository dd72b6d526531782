//! Cutting-plane approximation of the relaxed region on the toy feeder.

use dispatch_region::algorithms::{default_box, run_algorithm1, Algo1Config};
use dispatch_region::geometry::{polygon_area, polygon_ring};
use dispatch_region::network::{assemble_matrices, parse_case};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json").into());
    let net = parse_case(&path)?;
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let (poly, trace) = run_algorithm1(&m, &Algo1Config::new(lo, hi))?;
    println!("{:?} after {} planes, {:.2} s", trace.termination, trace.planes_added(), trace.wall_time_s);
    for r in trace.records.iter().step_by(10) {
        println!("  iteration {:>3}: dp'_max {:.3e}, {} vertices, {} solves", r.iteration, r.dp_max, r.vertex_count, r.solves);
    }
    if poly.dim() == 2 {
        println!("area {:.4}", polygon_area(&poly)?);
        for v in polygon_ring(&poly)? {
            println!("  ({:.4}, {:.4})", v[0], v[1]);
        }
    }
    Ok(())
}
