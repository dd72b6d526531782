//! Ground truth: backward/forward sweep power flow, grid search over the
//! controllable injections, and the failure / missing rate metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{build_primal, solve_checked, solve_primal, ConicError, SolveStatus, SolverSettings};
use crate::network::{FlowMatrices, RadialNetwork, VarKind};

pub const TOL_PF: f64 = 1e-10;
pub const TOL_LIMITS: f64 = 1e-6;
pub const SWEEP_MAX_ITER: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("sweep did not converge in {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("no samples to evaluate")]
    EmptySample,
    #[error("input dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
}

/// Full operating point. Vectors are indexed by node (or incoming line) minus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchState {
    pub v: Vec<f64>,
    pub l: Vec<f64>,
    pub p_line: Vec<f64>,
    pub q_line: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Solves Dist-Flow with exact `P^2 + Q^2 = v l` for fixed injections by
/// fixed-point iteration: line flows leaf-to-root, voltages root-to-leaf,
/// then `l = (P^2 + Q^2) / v_from`.
pub fn sweep_power_flow(
    net: &RadialNetwork,
    p: &[f64],
    q: &[f64],
    w: &[f64],
    max_iter: usize,
    tol_pf: f64,
) -> Result<DispatchState, OracleError> {
    let n = net.n();
    if p.len() != n || q.len() != n || w.len() != net.w_dim() {
        return Err(OracleError::Dimension("p, q need N entries and w needs W".into()));
    }
    let inj = net.renewable_injection(w);
    let mut l = vec![0.0; n + 1];
    let mut pl = vec![0.0; n + 1];
    let mut ql = vec![0.0; n + 1];
    let mut v = vec![net.v0; n + 1];
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        for &j in net.bfs_order().iter().rev() {
            let line = net.line_into(j);
            let down_p: f64 = net.children(j).iter().map(|&k| pl[k]).sum();
            let down_q: f64 = net.children(j).iter().map(|&k| ql[k]).sum();
            pl[j] = line.r * l[j] + down_p - p[j - 1] - inj[j - 1];
            ql[j] = line.x * l[j] + down_q - q[j - 1];
        }
        let mut step = 0.0f64;
        for &j in net.bfs_order() {
            let line = net.line_into(j);
            let z2 = line.r * line.r + line.x * line.x;
            let vj = v[line.from] - 2.0 * (line.r * pl[j] + line.x * ql[j]) + z2 * l[j];
            step = step.max((vj - v[j]).abs());
            v[j] = vj;
        }
        for &j in net.bfs_order() {
            let vi = v[net.line_into(j).from];
            if !(vi > 0.0) {
                return Err(OracleError::NoConvergence { iterations: max_iter, last_step: f64::NAN });
            }
            let lj = (pl[j] * pl[j] + ql[j] * ql[j]) / vi;
            step = step.max((lj - l[j]).abs());
            l[j] = lj;
        }
        if !step.is_finite() {
            break;
        }
        last_step = step;
        if step < tol_pf {
            // one more backward pass so P, Q are consistent with the final l
            for &j in net.bfs_order().iter().rev() {
                let line = net.line_into(j);
                let down_p: f64 = net.children(j).iter().map(|&k| pl[k]).sum();
                let down_q: f64 = net.children(j).iter().map(|&k| ql[k]).sum();
                pl[j] = line.r * l[j] + down_p - p[j - 1] - inj[j - 1];
                ql[j] = line.x * l[j] + down_q - q[j - 1];
            }
            for &j in net.bfs_order() {
                let line = net.line_into(j);
                let z2 = line.r * line.r + line.x * line.x;
                v[j] = v[line.from] - 2.0 * (line.r * pl[j] + line.x * ql[j]) + z2 * l[j];
            }
            return Ok(DispatchState {
                v: v[1..].to_vec(),
                l: l[1..].to_vec(),
                p_line: pl[1..].to_vec(),
                q_line: ql[1..].to_vec(),
                p: p.to_vec(),
                q: q.to_vec(),
            });
        }
    }
    Err(OracleError::NoConvergence { iterations: max_iter, last_step })
}

/// Largest residual of the exact Dist-Flow equations at `state`,
/// evaluated directly from the line list.
pub fn distflow_residual(net: &RadialNetwork, state: &DispatchState, w: &[f64]) -> f64 {
    let inj = net.renewable_injection(w);
    let volt = |i: usize| if i == 0 { net.v0 } else { state.v[i - 1] };
    let mut worst = 0.0f64;
    for j in 1..=net.n() {
        let line = net.line_into(j);
        let k = j - 1;
        let down_p: f64 = net.children(j).iter().map(|&c| state.p_line[c - 1]).sum();
        let down_q: f64 = net.children(j).iter().map(|&c| state.q_line[c - 1]).sum();
        let r1 = state.p_line[k] - line.r * state.l[k] - down_p + state.p[k] + inj[k];
        let r2 = state.q_line[k] - line.x * state.l[k] - down_q + state.q[k];
        let r3 = volt(line.from) - volt(j) - 2.0 * (line.r * state.p_line[k] + line.x * state.q_line[k])
            + (line.r * line.r + line.x * line.x) * state.l[k];
        let r4 = state.p_line[k].powi(2) + state.q_line[k].powi(2) - volt(line.from) * state.l[k];
        worst = worst.max(r1.abs()).max(r2.abs()).max(r3.abs()).max(r4.abs());
    }
    worst
}

/// Smallest slack of the capacity and safety limits (negative means violated).
pub fn limit_slack(net: &RadialNetwork, state: &DispatchState) -> f64 {
    let mut worst = f64::INFINITY;
    for j in 1..=net.n() {
        let k = j - 1;
        let lim = net.limits_of(j);
        let l_max = net.line_into(j).l_max;
        for s in [
            lim.p_max - state.p[k],
            state.p[k] - lim.p_min,
            lim.q_max - state.q[k],
            state.q[k] - lim.q_min,
            lim.v_max - state.v[k],
            state.v[k] - lim.v_min,
            l_max - state.l[k],
            state.l[k],
        ] {
            worst = worst.min(s);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    Infeasible,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "feasible" => Some(Verdict::Feasible),
            "infeasible" => Some(Verdict::Infeasible),
            "unknown" => Some(Verdict::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub status: Verdict,
    pub witness: Option<DispatchState>,
    pub certificate_note: String,
    /// Relaxed slack `fp'(w)`.
    pub relaxed_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub grid_points: usize,
    pub tol_zero: f64,
    pub tol_limits: f64,
    pub max_iter: usize,
    pub tol_pf: f64,
    pub solver: SolverSettings,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            grid_points: 7,
            tol_zero: 1e-6,
            tol_limits: TOL_LIMITS,
            max_iter: SWEEP_MAX_ITER,
            tol_pf: TOL_PF,
            solver: SolverSettings::default(),
        }
    }
}

/// Controllable injections of a relaxed optimum that also penalizes currents,
/// which steers the relaxation towards a tight (physical) solution.
fn relaxed_dispatch(mats: &FlowMatrices, w: &[f64], settings: &SolverSettings) -> Option<(Vec<f64>, Vec<f64>)> {
    let (mut prob, layout) = build_primal(mats, w).ok()?;
    let n = mats.n();
    if let Some(c) = mats.layout.col(VarKind::L, 1) {
        for k in 0..n {
            prob.objective.push((layout.x + c + k, 1e-3));
        }
    }
    let out = solve_checked(&prob, settings).ok()?;
    if out.status != SolveStatus::Optimal {
        return None;
    }
    let x = &out.x[layout.x..];
    let p0 = mats.layout.col(VarKind::P, 1)?;
    let q0 = mats.layout.col(VarKind::Q, 1)?;
    Some((x[p0..p0 + n].to_vec(), x[q0..q0 + n].to_vec()))
}

/// Classifies `w` as feasible (with a sweep witness), infeasible (the
/// relaxation needs slack), or unknown (no grid dispatch passed the limits).
pub fn grid_feasibility(
    net: &RadialNetwork,
    mats: &FlowMatrices,
    w: &[f64],
    opts: &OracleOptions,
) -> Result<FeasibilityVerdict, OracleError> {
    if opts.grid_points < 2 {
        return Err(OracleError::Dimension("grid needs at least 2 points per axis".into()));
    }
    let relaxed = solve_primal(mats, w, &opts.solver)?;
    let tol = opts.tol_zero * mats.limit_scale();
    if relaxed.value > tol {
        return Ok(FeasibilityVerdict {
            status: Verdict::Infeasible,
            witness: None,
            certificate_note: format!("relaxed slack {:.3e} > 0 certifies infeasibility", relaxed.value),
            relaxed_slack: relaxed.value,
        });
    }
    let n = net.n();
    let clip = |vals: &[f64], pick: fn(&crate::network::NodeLimits) -> (f64, f64)| -> Vec<f64> {
        (1..=n)
            .map(|j| {
                let (lo, hi) = pick(net.limits_of(j));
                vals[j - 1].clamp(lo, hi)
            })
            .collect()
    };
    let p_range = |l: &crate::network::NodeLimits| (l.p_min, l.p_max);
    let q_range = |l: &crate::network::NodeLimits| (l.q_min, l.q_max);

    let accept = |p: &[f64], q: &[f64]| -> Option<DispatchState> {
        let state = sweep_power_flow(net, p, q, w, opts.max_iter, opts.tol_pf).ok()?;
        (limit_slack(net, &state) >= -opts.tol_limits).then_some(state)
    };
    let found = |state: DispatchState, note: &str| FeasibilityVerdict {
        status: Verdict::Feasible,
        witness: Some(state),
        certificate_note: note.to_string(),
        relaxed_slack: relaxed.value,
    };

    let p_of = mats.layout.col(VarKind::P, 1).unwrap();
    let q_of = mats.layout.col(VarKind::Q, 1).unwrap();
    let mut seeds = vec![(relaxed.x[p_of..p_of + n].to_vec(), relaxed.x[q_of..q_of + n].to_vec())];
    if let Some(seed) = relaxed_dispatch(mats, w, &opts.solver) {
        seeds.push(seed);
    }
    for (p, q) in &seeds {
        if let Some(state) = accept(&clip(p, p_range), &clip(q, q_range)) {
            return Ok(found(state, "sweep from relaxed dispatch"));
        }
    }

    // Axes: (node index, is_q, lo, hi) for every adjustable injection.
    let mut axes = Vec::new();
    for j in 1..=n {
        let lim = net.limits_of(j);
        if lim.p_max > lim.p_min {
            axes.push((j - 1, false, lim.p_min, lim.p_max));
        }
        if lim.q_max > lim.q_min {
            axes.push((j - 1, true, lim.q_min, lim.q_max));
        }
    }
    let base_p: Vec<f64> = (1..=n).map(|j| net.limits_of(j).p_min).collect();
    let base_q: Vec<f64> = (1..=n).map(|j| net.limits_of(j).q_min).collect();
    let g = opts.grid_points;
    let total = g.checked_pow(axes.len() as u32).unwrap_or(usize::MAX);
    let mut idx = vec![0usize; axes.len()];
    let (mut p, mut q) = (base_p, base_q);
    for _ in 0..total {
        for (a, &(node, is_q, lo, hi)) in axes.iter().enumerate() {
            let val = lo + (hi - lo) * idx[a] as f64 / (g - 1) as f64;
            if is_q {
                q[node] = val;
            } else {
                p[node] = val;
            }
        }
        if let Some(state) = accept(&p, &q) {
            return Ok(found(state, "sweep on injection grid"));
        }
        for d in idx.iter_mut() {
            *d += 1;
            if *d < g {
                break;
            }
            *d = 0;
        }
    }
    Ok(FeasibilityVerdict {
        status: Verdict::Unknown,
        witness: None,
        certificate_note: format!("relaxation feasible but no grid dispatch met the limits ({total} tried)"),
        relaxed_slack: relaxed.value,
    })
}

/// Verdicts for many points, computed in parallel and returned in input order.
pub fn classify_samples(
    net: &RadialNetwork,
    mats: &FlowMatrices,
    samples: &[Vec<f64>],
    opts: &OracleOptions,
) -> Result<Vec<FeasibilityVerdict>, OracleError> {
    samples.par_iter().map(|w| grid_feasibility(net, mats, w, opts)).collect()
}

/// Share of in-region samples that are not feasible; unknown counts as not feasible.
pub fn failure_rate(
    membership: impl Fn(&[f64]) -> bool,
    samples: &[Vec<f64>],
    verdicts: &[Verdict],
) -> Result<f64, OracleError> {
    let mut inside = 0usize;
    let mut failed = 0usize;
    for (w, v) in samples.iter().zip(verdicts) {
        if membership(w) {
            inside += 1;
            if *v != Verdict::Feasible {
                failed += 1;
            }
        }
    }
    if inside == 0 {
        return Err(OracleError::EmptySample);
    }
    Ok(failed as f64 / inside as f64)
}

/// Share of feasible samples the region excludes.
pub fn missing_rate(membership: impl Fn(&[f64]) -> bool, feasible_samples: &[Vec<f64>]) -> Result<f64, OracleError> {
    if feasible_samples.is_empty() {
        return Err(OracleError::EmptySample);
    }
    let missed = feasible_samples.iter().filter(|w| !membership(w)).count();
    Ok(missed as f64 / feasible_samples.len() as f64)
}

/// `count` points uniform in `[lo, hi]` that pass `accept`.
///
/// Gives up after `1000 * count` draws, returning what it has.
pub fn sample_uniform(
    lo: &[f64],
    hi: &[f64],
    count: usize,
    seed: u64,
    accept: impl Fn(&[f64]) -> bool,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut draws = 0usize;
    while out.len() < count && draws < count.saturating_mul(1000).max(1000) {
        draws += 1;
        let w: Vec<f64> = lo.iter().zip(hi).map(|(&l, &h)| if h > l { rng.gen_range(l..h) } else { l }).collect();
        if accept(&w) {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellClass {
    /// Dispatchable (feasible verdict).
    Dispatchable,
    /// Relaxation-feasible only.
    RelaxedOnly,
    Neither,
}

impl CellClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellClass::Dispatchable => "W",
            CellClass::RelaxedOnly => "W'",
            CellClass::Neither => "neither",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterCell {
    pub w: Vec<f64>,
    pub relaxed_slack: f64,
    pub class: CellClass,
}

/// Cell-center classification on a `resolution x resolution` grid (W = 2 only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: usize,
    /// Row-major, `w2` outer and `w1` inner.
    pub cells: Vec<RasterCell>,
}

pub fn raster_centers(lo: &[f64], hi: &[f64], resolution: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(resolution * resolution);
    for r in 0..resolution {
        for c in 0..resolution {
            let w1 = lo[0] + (hi[0] - lo[0]) * (c as f64 + 0.5) / resolution as f64;
            let w2 = lo[1] + (hi[1] - lo[1]) * (r as f64 + 0.5) / resolution as f64;
            out.push(vec![w1, w2]);
        }
    }
    out
}

/// Relaxed slack at every cell center, without the grid search.
pub fn relaxed_raster(
    mats: &FlowMatrices,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    settings: &SolverSettings,
) -> Result<Vec<(Vec<f64>, f64)>, OracleError> {
    if mats.w_dim() != 2 || lo.len() != 2 || hi.len() != 2 {
        return Err(OracleError::Dimension("raster needs W = 2".into()));
    }
    raster_centers(lo, hi, resolution)
        .into_par_iter()
        .map(|w| {
            let fp = solve_primal(mats, &w, settings)?.value;
            Ok((w, fp))
        })
        .collect()
}

pub fn raster_classify(
    net: &RadialNetwork,
    mats: &FlowMatrices,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    opts: &OracleOptions,
) -> Result<Raster, OracleError> {
    if mats.w_dim() != 2 || lo.len() != 2 || hi.len() != 2 {
        return Err(OracleError::Dimension("raster needs W = 2".into()));
    }
    let cells = raster_centers(lo, hi, resolution)
        .into_par_iter()
        .map(|w| {
            let v = grid_feasibility(net, mats, &w, opts)?;
            let class = match v.status {
                Verdict::Feasible => CellClass::Dispatchable,
                Verdict::Unknown => CellClass::RelaxedOnly,
                Verdict::Infeasible => CellClass::Neither,
            };
            Ok(RasterCell { w, relaxed_slack: v.relaxed_slack, class })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    Ok(Raster { lo: lo.to_vec(), hi: hi.to_vec(), resolution, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{assemble_matrices, NodeLimits};

    fn two_bus(r: f64, x: f64, lim: NodeLimits) -> RadialNetwork {
        RadialNetwork::from_parts(1.0, &[(0, 1, r, x, 4.0)], &[lim], &[1]).unwrap()
    }

    fn wide() -> NodeLimits {
        NodeLimits { p_min: -1.0, p_max: 1.0, q_min: -1.0, q_max: 1.0, v_min: 0.81, v_max: 1.21 }
    }

    /// Smaller root of `z2 l^2 - (2 r p + 2 x q + v0) l + p^2 + q^2 = 0`.
    fn closed_form(r: f64, x: f64, p: f64, q: f64) -> Option<f64> {
        let a = r * r + x * x;
        let b = -(2.0 * r * p + 2.0 * x * q + 1.0);
        let c = p * p + q * q;
        let disc = b * b - 4.0 * a * c;
        (disc >= 0.0).then(|| (-b - disc.sqrt()) / (2.0 * a))
    }

    #[test]
    fn zero_injection_is_flat() {
        let net = two_bus(0.05, 0.05, wide());
        let s = sweep_power_flow(&net, &[0.0], &[0.0], &[0.0], 100, TOL_PF).unwrap();
        assert_eq!(s.v, vec![1.0]);
        assert_eq!(s.l, vec![0.0]);
        assert_eq!(s.p_line, vec![0.0]);
    }

    #[test]
    fn two_bus_matches_quadratic() {
        let net = two_bus(0.05, 0.05, wide());
        let s = sweep_power_flow(&net, &[-0.3], &[-0.1], &[0.0], 100, TOL_PF).unwrap();
        let l = closed_form(0.05, 0.05, -0.3, -0.1).unwrap();
        assert!((s.l[0] - l).abs() < 1e-8);
        assert!(distflow_residual(&net, &s, &[0.0]) < 1e-9);
    }

    #[test]
    fn extreme_load_diverges() {
        let net = two_bus(0.05, 0.05, wide());
        assert!(closed_form(0.05, 0.05, -50.0, 0.0).is_none());
        let r = sweep_power_flow(&net, &[-50.0], &[0.0], &[0.0], 100, TOL_PF);
        assert!(matches!(r, Err(OracleError::NoConvergence { .. })));
    }

    #[test]
    fn zero_renewable_is_feasible() {
        let lim = NodeLimits { p_min: 0.0, p_max: 0.0, q_min: 0.0, q_max: 0.0, v_min: 0.81, v_max: 1.21 };
        let net = two_bus(0.1, 0.1, lim);
        let mats = assemble_matrices(&net);
        let v = grid_feasibility(&net, &mats, &[0.0], &OracleOptions::default()).unwrap();
        assert_eq!(v.status, Verdict::Feasible);
        assert_eq!(v.witness.unwrap().v, vec![1.0]);
    }

    #[test]
    fn relaxation_certificate_skips_sweep() {
        let net = two_bus(0.1, 0.1, wide());
        let mats = assemble_matrices(&net);
        let v = grid_feasibility(&net, &mats, &[8.0], &OracleOptions::default()).unwrap();
        assert_eq!(v.status, Verdict::Infeasible);
        assert!(v.witness.is_none());
    }

    #[test]
    fn rates() {
        let samples = vec![vec![0.0], vec![1.0]];
        let all = |_: &[f64]| true;
        assert_eq!(failure_rate(all, &samples, &[Verdict::Feasible, Verdict::Feasible]).unwrap(), 0.0);
        assert_eq!(failure_rate(all, &samples, &[Verdict::Feasible, Verdict::Unknown]).unwrap(), 0.5);
        assert_eq!(missing_rate(all, &samples).unwrap(), 0.0);
        assert_eq!(missing_rate(|_: &[f64]| false, &samples).unwrap(), 1.0);
        assert_eq!(failure_rate(|_: &[f64]| false, &samples, &[Verdict::Feasible; 2]), Err(OracleError::EmptySample));
        assert_eq!(missing_rate(all, &[]), Err(OracleError::EmptySample));
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_uniform(&[0.0, 0.0], &[1.0, 1.0], 50, 42, |w| w[0] < 0.5);
        let b = sample_uniform(&[0.0, 0.0], &[1.0, 1.0], 50, 42, |w| w[0] < 0.5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|w| w[0] < 0.5));
    }
}
