//! Test-side oracles, written against the physics rather than the library's matrices.
#![allow(dead_code)]

use dispatch_region::geometry::Halfspace;
use dispatch_region::network::{parse_case, RadialNetwork};

pub fn case(name: &str) -> RadialNetwork {
    parse_case(format!("{}/data/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// State blocks of x = (p, q, v, l, P, Q).
pub struct State<'a> {
    pub p: &'a [f64],
    pub q: &'a [f64],
    pub v: &'a [f64],
    pub l: &'a [f64],
    pub pl: &'a [f64],
    pub ql: &'a [f64],
}

impl<'a> State<'a> {
    pub fn split(x: &'a [f64], n: usize) -> Self {
        Self {
            p: &x[..n],
            q: &x[n..2 * n],
            v: &x[2 * n..3 * n],
            l: &x[3 * n..4 * n],
            pl: &x[4 * n..5 * n],
            ql: &x[5 * n..6 * n],
        }
    }
}

/// Left sides of the linear Dist-Flow equations: active balance, reactive
/// balance, voltage drop, one row per node in that block order.
pub fn distflow_lhs(net: &RadialNetwork, s: &State, w: &[f64]) -> Vec<f64> {
    let n = net.n();
    let mut inj = vec![0.0; n + 1];
    for (&node, &wi) in net.renewables.iter().zip(w) {
        inj[node] += wi;
    }
    let mut out = vec![0.0; 3 * n];
    for line in &net.lines {
        let j = line.to;
        let kids: Vec<usize> = net.lines.iter().filter(|c| c.from == j).map(|c| c.to).collect();
        let down_p: f64 = kids.iter().map(|&c| s.pl[c - 1]).sum();
        let down_q: f64 = kids.iter().map(|&c| s.ql[c - 1]).sum();
        let up_v = if line.from == 0 { net.v0 } else { s.v[line.from - 1] };
        out[j - 1] = s.p[j - 1] + inj[j] + s.pl[j - 1] - down_p - line.r * s.l[j - 1];
        out[n + j - 1] = s.q[j - 1] + s.ql[j - 1] - down_q - line.x * s.l[j - 1];
        out[2 * n + j - 1] = up_v - s.v[j - 1] - 2.0 * (line.r * s.pl[j - 1] + line.x * s.ql[j - 1])
            + (line.r * line.r + line.x * line.x) * s.l[j - 1];
    }
    out
}

/// Worst residual of the exact equations (balance, drop, current) at a full operating point.
pub fn exact_residual(net: &RadialNetwork, s: &State, w: &[f64]) -> f64 {
    let mut worst = distflow_lhs(net, s, w).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    for line in &net.lines {
        let k = line.to - 1;
        let up_v = if line.from == 0 { net.v0 } else { s.v[line.from - 1] };
        worst = worst.max((s.pl[k] * s.pl[k] + s.ql[k] * s.ql[k] - up_v * s.l[k]).abs());
    }
    worst
}

/// Worst limit slack (negative when violated).
pub fn limit_margin(net: &RadialNetwork, s: &State) -> f64 {
    let mut worst = f64::INFINITY;
    for (k, lim) in net.limits.iter().enumerate() {
        let l_max = net.lines[k].l_max;
        for m in [
            lim.p_max - s.p[k],
            s.p[k] - lim.p_min,
            lim.q_max - s.q[k],
            s.q[k] - lim.q_min,
            lim.v_max - s.v[k],
            s.v[k] - lim.v_min,
            l_max - s.l[k],
            s.l[k],
        ] {
            worst = worst.min(m);
        }
    }
    worst
}

/// Two-bus feeder with net injection (pn, qn) at the far node: the
/// low-current root of the quadratic in l, then the far-end voltage.
pub fn two_bus(r: f64, x: f64, v0: f64, pn: f64, qn: f64) -> (f64, f64, f64, f64) {
    // P = r l - pn, Q = x l - qn, P^2 + Q^2 = v0 l
    let a = r * r + x * x;
    let b = -2.0 * (r * pn + x * qn) - v0;
    let c = pn * pn + qn * qn;
    let disc = b * b - 4.0 * a * c;
    assert!(disc >= 0.0, "no power-flow solution");
    let l = 2.0 * c / (-b + disc.sqrt());
    let p = r * l - pn;
    let q = x * l - qn;
    let v = v0 - 2.0 * (r * p + x * q) + a * l;
    (l, p, q, v)
}

/// Vertices of a 2D halfspace system by intersecting every pair of lines.
pub fn brute_vertices(hs: &[Halfspace], tol: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let (a, b) = (&hs[i], &hs[j]);
            let det = a.a[0] * b.a[1] - a.a[1] * b.a[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (a.b * b.a[1] - a.a[1] * b.b) / det;
            let y = (a.a[0] * b.b - a.b * b.a[0]) / det;
            let feasible = hs.iter().all(|h| h.a[0] * x + h.a[1] * y <= h.b + tol);
            if feasible && !out.iter().any(|v| (v[0] - x).abs().max((v[1] - y).abs()) < 1e-7) {
                out.push([x, y]);
            }
        }
    }
    out
}

/// Every point of `a` has a partner in `b` within `tol` (infinity norm), and vice versa.
pub fn same_point_sets(a: &[Vec<f64>], b: &[[f64; 2]], tol: f64) -> bool {
    let near = |u: &[f64], v: &[f64; 2]| (u[0] - v[0]).abs().max((u[1] - v[1]).abs()) <= tol;
    a.len() == b.len() && a.iter().all(|u| b.iter().any(|v| near(u, v))) && b.iter().all(|v| a.iter().any(|u| near(u, v)))
}
