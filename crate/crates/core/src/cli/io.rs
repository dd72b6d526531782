//! On-disk formats: region and trace JSON, sample and raster CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::RunTrace;
use crate::geometry::Region;
use crate::oracle::{CellClass, Raster, RasterCell, Verdict};
use crate::{Error, Result};

pub const REGION_SCHEMA: &str = "dispregion-region/1";
pub const TRACE_SCHEMA: &str = "dispregion-trace/1";
pub const METRICS_SCHEMA: &str = "dispregion-metrics/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionFile {
    pub schema: String,
    /// Case name the region was computed for.
    pub case: String,
    /// `socp`, `lindistflow` or `socp-linear-K`.
    pub model: String,
    pub region: Region,
}

impl RegionFile {
    pub fn new(case: &str, model: &str, region: Region) -> Self {
        Self { schema: REGION_SCHEMA.into(), case: case.into(), model: model.into(), region }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema: String,
    pub case: String,
    pub traces: Vec<RunTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema: String,
    pub case: String,
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub in_region: usize,
    pub feasible: usize,
    pub unknown: usize,
    pub infeasible: usize,
    /// `None` when no sample falls in the region.
    pub failure_rate: Option<f64>,
    pub missing_rate: Option<f64>,
}

fn io_err(context: String) -> impl FnOnce(std::io::Error) -> Error {
    move |source| Error::Io { context, source }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(format!("writing {}", path.display())))
}

pub fn read_region(path: &Path) -> Result<RegionFile> {
    let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    let file: RegionFile =
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    if file.schema != REGION_SCHEMA {
        return Err(Error::Input(format!("{}: schema {:?}, expected {REGION_SCHEMA:?}", path.display(), file.schema)));
    }
    let dim = file.region.outer.dim();
    let polys = std::iter::once(&file.region.outer).chain(&file.region.holes);
    for poly in polys {
        let ok = poly.dim() == dim
            && poly.halfspaces().len() >= 2 * dim
            && poly.halfspaces().iter().all(|h| h.a.len() == dim && h.b.is_finite() && h.a.iter().all(|x| x.is_finite()));
        if !ok {
            return Err(Error::Input(format!("{}: halfspaces do not match dimension {dim}", path.display())));
        }
    }
    Ok(file)
}

/// `w1,...,wW,verdict` with one row per sample.
pub fn samples_csv(samples: &[Vec<f64>], verdicts: &[Verdict]) -> String {
    let dim = samples.first().map_or(0, Vec::len);
    let mut out = String::new();
    for k in 1..=dim {
        let _ = write!(out, "w{k},");
    }
    out.push_str("verdict\n");
    for (w, v) in samples.iter().zip(verdicts) {
        for x in w {
            let _ = write!(out, "{x},");
        }
        out.push_str(v.as_str());
        out.push('\n');
    }
    out
}

pub fn parse_samples_csv(text: &str) -> Result<(Vec<Vec<f64>>, Vec<Verdict>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Input("empty sample file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.last() != Some(&"verdict") {
        return Err(Error::Input("sample header must end with `verdict`".into()));
    }
    let dim = cols.len() - 1;
    let mut samples = Vec::new();
    let mut verdicts = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Input(format!("sample row {}: expected {} fields", i + 2, dim + 1)));
        }
        let w = fields[..dim]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Input(format!("sample row {}: {e}", i + 2))))
            .collect::<Result<Vec<_>>>()?;
        let v = Verdict::parse(fields[dim])
            .ok_or_else(|| Error::Input(format!("sample row {}: unknown verdict {:?}", i + 2, fields[dim])))?;
        samples.push(w);
        verdicts.push(v);
    }
    Ok((samples, verdicts))
}

/// `w1,w2,relaxed_slack,class`, rows with `w2` outer and `w1` inner.
pub fn raster_csv(raster: &Raster) -> String {
    let mut out = String::from("w1,w2,relaxed_slack,class\n");
    for c in &raster.cells {
        let _ = writeln!(out, "{},{},{},{}", c.w[0], c.w[1], c.relaxed_slack, c.class.as_str());
    }
    out
}

pub fn parse_raster_csv(text: &str) -> Result<Vec<RasterCell>> {
    let mut cells = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Input(format!("raster row {}: expected 4 fields", i + 1)));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Input(format!("raster row {}: {e}", i + 1)));
        let class = match f[3] {
            "W" => CellClass::Dispatchable,
            "W'" => CellClass::RelaxedOnly,
            "neither" => CellClass::Neither,
            other => return Err(Error::Input(format!("raster row {}: unknown class {other:?}", i + 1))),
        };
        cells.push(RasterCell { w: vec![num(f[0])?, num(f[1])?], relaxed_slack: num(f[2])?, class });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_round_trip() {
        let s = vec![vec![0.1, 1.0 / 3.0], vec![2.5e-17, 7.0]];
        let v = vec![Verdict::Feasible, Verdict::Unknown];
        let text = samples_csv(&s, &v);
        assert!(text.starts_with("w1,w2,verdict\n"));
        let (s2, v2) = parse_samples_csv(&text).unwrap();
        assert_eq!(s, s2);
        assert_eq!(v, v2);
    }

    #[test]
    fn bad_verdict_rejected() {
        assert!(parse_samples_csv("w1,verdict\n0.5,maybe\n").is_err());
    }
}
