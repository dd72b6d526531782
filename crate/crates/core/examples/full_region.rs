//! Relaxed region with the likely-inexact sub-regions removed.
//!
//! cargo run --release --example full_region -- [eta]

use dispatch_region::algorithms::{build_full_region, default_box, Algo1Config, Algo2Config};
use dispatch_region::geometry::polygon_area;
use dispatch_region::network::{assemble_matrices, parse_case};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.05);
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let template = Algo2Config { eta, eta_prime: 2.0 * eta, ..Algo2Config::default() };
    let (region, traces) = build_full_region(&m, &Algo1Config::new(lo, hi), &template)?;
    println!("outer area {:.4}, {} tightening vectors, {} holes", polygon_area(&region.outer)?, traces.len() - 1, region.holes.len());
    for (hole, t) in region.holes.iter().zip(traces.iter().skip(1)) {
        println!("  hole area {:.4} ({:?}, {} planes)", polygon_area(hole)?, t.termination, t.planes_added());
    }
    for w in [[0.2, 0.2], [1.0, 1.0], [2.0, 0.5]] {
        println!("{w:?} in region: {}", region.contains(&w));
    }
    Ok(())
}
