//! Ground-truth raster and an SVG overlay with the relaxed region.
//!
//! cargo run --release --example raster_plot -- out.svg

use dispatch_region::algorithms::{default_box, run_algorithm1, Algo1Config};
use dispatch_region::cli::svg::{render, Layer};
use dispatch_region::network::{assemble_matrices, parse_case};
use dispatch_region::oracle::{raster_classify, CellClass, OracleOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "toy6.svg".into());
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let (poly, _) = run_algorithm1(&m, &Algo1Config::new(lo, hi))?;
    let (blo, bhi) = poly.bounding_box()?.ok_or("empty region")?;
    let raster = raster_classify(&net, &m, &blo, &bhi, 30, &OracleOptions::default())?;
    let count = |c: CellClass| raster.cells.iter().filter(|x| x.class == c).count();
    println!("W {}, W' only {}, neither {}", count(CellClass::Dispatchable), count(CellClass::RelaxedOnly), count(CellClass::Neither));
    let layers = [Layer { label: "socp".into(), outer: &poly, holes: &[] }];
    std::fs::write(&out, render(&layers, &raster.cells, raster.resolution)?)?;
    println!("wrote {out}");
    Ok(())
}
