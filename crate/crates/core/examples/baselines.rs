//! Regions of the two linear comparison models next to the relaxed region.

use dispatch_region::algorithms::{default_box, run_algorithm1, Algo1Config};
use dispatch_region::baselines::BaselineKind;
use dispatch_region::geometry::polygon_area;
use dispatch_region::network::{assemble_matrices, parse_case};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let cfg = Algo1Config::new(lo, hi);
    let (relaxed, _) = run_algorithm1(&m, &cfg)?;
    println!("socp: area {:.4}", polygon_area(&relaxed)?);
    for kind in [BaselineKind::LinDistFlow, BaselineKind::SocpLinear(16), BaselineKind::SocpLinear(64)] {
        let (poly, trace) = run_algorithm1(&kind.build(&net, &m)?, &cfg)?;
        println!("{}: area {:.4}, {} planes", kind.label(), polygon_area(&poly)?, trace.planes_added());
    }
    Ok(())
}
