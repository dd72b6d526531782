//! Load a case file and print the feeder structure.
//!
//! cargo run --example parse_case -- data/ieee33.json

use dispatch_region::network::parse_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy6.json").into());
    let net = parse_case(&path)?;
    println!("{}: N = {}, W = {}, v0 = {}", net.name, net.n(), net.w_dim(), net.v0);
    for line in &net.lines {
        println!(
            "  line {:>3} -> {:<3} r {:.4} x {:.4} l_max {}",
            net.labels[line.from], net.labels[line.to], line.r, line.x, line.l_max
        );
    }
    let ren: Vec<u32> = net.renewables.iter().map(|&k| net.labels[k]).collect();
    println!("renewables at {ren:?}");
    Ok(())
}
