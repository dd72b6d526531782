//! Minimal SVG overlay of region polygons, holes and raster cells (W = 2).

use std::fmt::Write as _;

use crate::geometry::{polygon_ring, Polytope};
use crate::oracle::{CellClass, RasterCell};
use crate::Result;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 4] = ["#1f5fbf", "#c0392b", "#2e8b57", "#8e44ad"];

pub struct Layer<'a> {
    pub label: String,
    pub outer: &'a Polytope,
    pub holes: &'a [Polytope],
}

struct Frame {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Frame {
    fn map(&self, w: &[f64]) -> (f64, f64) {
        let sx = (w[0] - self.lo[0]) / (self.hi[0] - self.lo[0]);
        let sy = (w[1] - self.lo[1]) / (self.hi[1] - self.lo[1]);
        (MARGIN + sx * SIZE, MARGIN + (1.0 - sy) * SIZE)
    }

    fn points(&self, ring: &[Vec<f64>]) -> String {
        ring.iter()
            .map(|w| {
                let (x, y) = self.map(w);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn render(layers: &[Layer], raster: &[RasterCell], resolution: usize) -> Result<String> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |w: &[f64]| {
        for k in 0..2 {
            lo[k] = lo[k].min(w[k]);
            hi[k] = hi[k].max(w[k]);
        }
    };
    let mut rings = Vec::new();
    for layer in layers {
        let outer = polygon_ring(layer.outer)?;
        outer.iter().for_each(|w| grow(w));
        let holes = layer.holes.iter().map(polygon_ring).collect::<Result<Vec<_>, _>>()?;
        rings.push((outer, holes));
    }
    raster.iter().for_each(|c| grow(&c.w));
    if !lo[0].is_finite() {
        lo = [0.0, 0.0];
        hi = [1.0, 1.0];
    }
    for k in 0..2 {
        let pad = 0.05 * (hi[k] - lo[k]).max(1e-9);
        lo[k] -= pad;
        hi[k] += pad;
    }
    let frame = Frame { lo, hi };
    let full = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if !raster.is_empty() && resolution > 0 {
        let cw = SIZE * (raster_span(raster, 0) / (hi[0] - lo[0])) / resolution as f64;
        let ch = SIZE * (raster_span(raster, 1) / (hi[1] - lo[1])) / resolution as f64;
        for c in raster {
            let fill = match c.class {
                CellClass::Dispatchable => "#bdbdbd",
                CellClass::RelaxedOnly => "#f2c9a0",
                CellClass::Neither => continue,
            };
            let (x, y) = frame.map(&c.w);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="none"/>"#,
                x - cw / 2.0,
                y - ch / 2.0,
                cw,
                ch
            );
        }
    }

    for (i, ((outer, holes), layer)) in rings.iter().zip(layers).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !outer.is_empty() {
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="6 3"/>"#,
                frame.points(outer)
            );
        }
        for h in holes.iter().filter(|h| !h.is_empty()) {
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="white" fill-opacity="0.8" stroke="{color}" stroke-width="1"/>"#,
                frame.points(h)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, MARGIN, 20.0 + 14.0 * i as f64, escape(&layer.label));
    }

    let (x0, y0) = frame.map(&lo);
    let (x1, y1) = frame.map(&hi);
    let _ = writeln!(s, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">w1 [{:.3}, {:.3}]</text>"#, x0, y0 + 30.0, lo[0], hi[0]);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" transform="rotate(-90 {:.2} {:.2})">w2 [{:.3}, {:.3}]</text>"#,
        x0 - 20.0,
        y0,
        x0 - 20.0,
        y0,
        lo[1],
        hi[1]
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn raster_span(cells: &[RasterCell], k: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in cells {
        lo = lo.min(c.w[k]);
        hi = hi.max(c.w[k]);
    }
    // centers span (res - 1) cells; widen to the full extent
    let n = (cells.len() as f64).sqrt().round().max(2.0);
    (hi - lo) * n / (n - 1.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
