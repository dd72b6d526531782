//! Failure and missing rates of the relaxed region from uniform samples.

use dispatch_region::algorithms::{default_box, run_algorithm1, Algo1Config};
use dispatch_region::network::{assemble_matrices, parse_case};
use dispatch_region::oracle::{classify_samples, failure_rate, missing_rate, sample_uniform, OracleOptions, Verdict};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json"))?;
    let m = assemble_matrices(&net);
    let (lo, hi) = default_box(&net);
    let (poly, _) = run_algorithm1(&m, &Algo1Config::new(lo, hi))?;
    let (blo, bhi) = poly.bounding_box()?.ok_or("empty region")?;
    let pts = sample_uniform(&blo, &bhi, 300, 42, |_| true);
    let verdicts: Vec<Verdict> =
        classify_samples(&net, &m, &pts, &OracleOptions::default())?.into_iter().map(|v| v.status).collect();
    let inside = |w: &[f64]| poly.contains(w, 1e-8);
    let feasible: Vec<Vec<f64>> =
        pts.iter().zip(&verdicts).filter(|(_, v)| **v == Verdict::Feasible).map(|(w, _)| w.clone()).collect();
    println!("{} samples, {} feasible", pts.len(), feasible.len());
    println!("FR = {:.3}", failure_rate(inside, &pts, &verdicts)?);
    println!("MR = {:.3}", missing_rate(inside, &feasible)?);
    Ok(())
}
