//! Write a region file, read it back and compare membership.

use dispatch_region::algorithms::{default_box, run_algorithm1, Algo1Config};
use dispatch_region::cli::io::{read_region, write_json, RegionFile};
use dispatch_region::geometry::Region;
use dispatch_region::network::{assemble_matrices, parse_case};
use dispatch_region::oracle::sample_uniform;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let (poly, _) = run_algorithm1(&m, &Algo1Config::new(lo.clone(), hi.clone()))?;
    let file = RegionFile::new(&net.name, "socp", Region::new(poly));
    let path = std::env::temp_dir().join("toy6-region.json");
    write_json(&path, &file)?;
    let back = read_region(&path)?;
    let pts = sample_uniform(&lo, &hi, 1000, 1, |_| true);
    let same = pts.iter().filter(|w| file.region.contains(w) == back.region.contains(w)).count();
    println!("{} halfspaces written to {}; {same} of {} memberships agree", back.region.outer.halfspaces().len(), path.display(), pts.len());
    Ok(())
}
