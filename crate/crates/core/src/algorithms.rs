//! Cutting-plane approximation of the relaxed region and removal of
//! relaxation-inexact sub-regions.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{extract_cutting_plane, solve_dual, ConicError, DualSolve, SolverSettings};
use crate::geometry::{GeometryError, Halfspace, Polytope, Region};
use crate::network::{FlowMatrices, RadialNetwork};

/// Safe-set membership radius (infinity norm).
const SAFE_MATCH: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cutting planes removed every point of the box at iteration {iteration}; the box likely misses the region")]
    EmptyPolytope { iteration: usize },
    #[error("tightened dual is infeasible at vertex {vertex:?}; delta is too large")]
    InfeasibleTightening { vertex: Vec<f64> },
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algo1Config {
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub c_max: usize,
    pub tol_zero: f64,
    #[serde(skip)]
    pub solver: SolverSettings,
}

impl Algo1Config {
    pub fn new(box_lo: Vec<f64>, box_hi: Vec<f64>) -> Self {
        Self { box_lo, box_hi, c_max: 100, tol_zero: 1e-6, solver: SolverSettings::default() }
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        if self.box_lo.len() != self.box_hi.len() || self.box_lo.iter().zip(&self.box_hi).any(|(l, h)| !(l < h)) {
            return Err(AlgorithmError::InvalidConfig("box needs lo < hi on every axis".into()));
        }
        if self.c_max < 1 {
            return Err(AlgorithmError::InvalidConfig("c_max must be at least 1".into()));
        }
        if !(self.tol_zero > 0.0) {
            return Err(AlgorithmError::InvalidConfig("tol_zero must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algo2Config {
    pub delta: Vec<f64>,
    pub eta: f64,
    pub eta_prime: f64,
    pub c_max: usize,
    pub eps_delta: f64,
    pub tol_zero: f64,
    #[serde(skip)]
    pub solver: SolverSettings,
}

impl Default for Algo2Config {
    fn default() -> Self {
        Self {
            delta: Vec::new(),
            eta: 1e-4,
            eta_prime: 2e-4,
            c_max: 100,
            eps_delta: 1e-3,
            tol_zero: 1e-6,
            solver: SolverSettings::default(),
        }
    }
}

impl Algo2Config {
    pub fn validate(&self, n: usize) -> Result<(), AlgorithmError> {
        if self.delta.len() != n || self.delta.iter().any(|&d| !(d > 0.0)) {
            return Err(AlgorithmError::InvalidConfig(format!("delta must hold {n} positive entries")));
        }
        if !(self.eta > 0.0) || !(self.eta_prime >= self.eta) {
            return Err(AlgorithmError::InvalidConfig("need 0 < eta <= eta_prime".into()));
        }
        if self.c_max < 1 || !(self.eps_delta > 0.0) || !(self.tol_zero > 0.0) {
            return Err(AlgorithmError::InvalidConfig("c_max, eps_delta and tol_zero must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    CapReached,
    NumericalStall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Largest dual value over the unsafe vertices (`null` in JSON when unbounded).
    pub dp_max: f64,
    pub argmax: Option<Vec<f64>>,
    pub plane: Option<Halfspace>,
    pub vertex_count: usize,
    pub safe_count: usize,
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: String,
    pub delta: Option<Vec<f64>>,
    pub records: Vec<IterationRecord>,
    pub wall_time_s: f64,
    pub termination: Termination,
    /// Some initial box vertex already lies in the relaxed region.
    pub box_touches_region: bool,
}

impl RunTrace {
    pub fn planes_added(&self) -> usize {
        self.records.iter().filter(|r| r.plane.is_some()).count()
    }
}

/// Upper corner of the default initial box: twice what the feeder can absorb,
/// i.e. total load plus the apparent-power capacity of the lines leaving the root.
pub fn default_box(net: &RadialNetwork) -> (Vec<f64>, Vec<f64>) {
    let absorb: f64 = net.limits.iter().map(|l| (-l.p_min).max(0.0)).sum();
    let import: f64 = net.lines.iter().filter(|l| l.from == 0).map(|l| (net.v0 * l.l_max).sqrt()).sum();
    let hi = (2.0 * (absorb + import)).max(1.0);
    (vec![0.0; net.w_dim()], vec![hi; net.w_dim()])
}

struct Loop<'a> {
    mats: &'a FlowMatrices,
    delta: Vec<f64>,
    settings: SolverSettings,
    /// Vertices with a value above this are cut.
    threshold: f64,
    /// Vertices with a value at or below this join the safe set.
    safe_below: f64,
    eta_prime: f64,
    c_max: usize,
    tightened: bool,
}

impl Loop<'_> {
    fn run(
        &self,
        mut poly: Polytope,
        observer: &mut dyn FnMut(&Polytope, &IterationRecord),
    ) -> Result<(Polytope, Vec<IterationRecord>, Termination, bool), AlgorithmError> {
        let mut safe: Vec<Vec<f64>> = Vec::new();
        // unsafe vertices keep their dual solution until a cut removes them
        let mut known: Vec<(Vec<f64>, DualSolve)> = Vec::new();
        let mut records = Vec::new();
        let mut cuts = 0usize;
        let mut touches = false;
        loop {
            let iteration = records.len() + 1;
            let verts = poly.vertices()?.to_vec();
            if verts.is_empty() {
                if self.tightened {
                    return Ok((poly, records, Termination::Converged, touches));
                }
                return Err(AlgorithmError::EmptyPolytope { iteration });
            }
            known.retain(|(k, _)| verts.iter().any(|w| inf_dist(k, w) < SAFE_MATCH));
            let open: Vec<&Vec<f64>> = verts
                .iter()
                .filter(|w| !safe.iter().any(|s| inf_dist(s, w) < SAFE_MATCH))
                .collect();
            let fresh: Vec<&Vec<f64>> = open
                .iter()
                .copied()
                .filter(|w| !known.iter().any(|(k, _)| inf_dist(k, w) < SAFE_MATCH))
                .collect();
            let results: Vec<Result<DualSolve, ConicError>> = fresh
                .par_iter()
                .map(|w| solve_dual(self.mats, w, &self.delta, &self.settings))
                .collect();
            let mut max_value = f64::NEG_INFINITY;
            for (w, res) in fresh.iter().zip(results) {
                match res {
                    Ok(sol) => {
                        max_value = max_value.max(sol.value);
                        if sol.value <= self.safe_below {
                            safe.push((*w).clone());
                        } else {
                            known.push(((*w).clone(), sol));
                        }
                    }
                    Err(ConicError::Infeasible) if self.tightened => {
                        return Err(AlgorithmError::InfeasibleTightening { vertex: (*w).clone() })
                    }
                    Err(e) => return Err(e.into()),
                }
            }

            let mut best: Option<(&Vec<f64>, &DualSolve)> = None;
            for w in &open {
                let Some((_, sol)) = known.iter().find(|(k, _)| inf_dist(k, w) < SAFE_MATCH) else {
                    continue;
                };
                max_value = max_value.max(sol.value);
                let current = best.map_or(self.threshold, |(_, b)| b.value);
                if sol.value > current {
                    best = Some((w, sol));
                }
            }
            if iteration == 1 && !self.tightened {
                touches = !safe.is_empty();
            }

            let mut record = IterationRecord {
                iteration,
                dp_max: if open.is_empty() { self.threshold } else { max_value },
                argmax: best.map(|(w, _)| w.clone()),
                plane: None,
                vertex_count: verts.len(),
                safe_count: safe.len(),
                solves: fresh.len(),
            };
            let Some((_, sol)) = best else {
                observer(&poly, &record);
                records.push(record);
                return Ok((poly, records, Termination::Converged, touches));
            };
            if cuts == self.c_max {
                observer(&poly, &record);
                records.push(record);
                return Ok((poly, records, Termination::CapReached, touches));
            }
            let plane = match extract_cutting_plane(&sol.cert, self.mats, self.eta_prime) {
                Ok(h) => h,
                Err(ConicError::DegeneratePlane(_)) => {
                    observer(&poly, &record);
                    records.push(record);
                    return Ok((poly, records, Termination::NumericalStall, touches));
                }
                Err(e) => return Err(e.into()),
            };
            let before = poly.halfspaces().len();
            let snapshot = poly.halfspaces().to_vec();
            poly.add_halfspace(plane.clone())?;
            cuts += 1;
            record.plane = Some(plane);
            let unchanged = poly.halfspaces().len() == before && poly.halfspaces() == snapshot.as_slice();
            let stalled = unchanged || poly.vertices()?.iter().eq(verts.iter()) && !poly.vertices()?.is_empty();
            observer(&poly, &record);
            records.push(record);
            if stalled {
                log::warn!("cut at iteration {iteration} left the vertex set unchanged");
                return Ok((poly, records, Termination::NumericalStall, touches));
            }
        }
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Approximates the relaxed region `W'` by a polytope.
pub fn run_algorithm1(mats: &FlowMatrices, cfg: &Algo1Config) -> Result<(Polytope, RunTrace), AlgorithmError> {
    run_algorithm1_observed(mats, cfg, &mut |_, _| {})
}

/// [`run_algorithm1`] with a hook called once per iteration with the current polytope.
pub fn run_algorithm1_observed(
    mats: &FlowMatrices,
    cfg: &Algo1Config,
    observer: &mut dyn FnMut(&Polytope, &IterationRecord),
) -> Result<(Polytope, RunTrace), AlgorithmError> {
    cfg.validate()?;
    if cfg.box_lo.len() != mats.w_dim() {
        return Err(AlgorithmError::InvalidConfig(format!("box has {} axes, w has {}", cfg.box_lo.len(), mats.w_dim())));
    }
    let start = Instant::now();
    let tol = cfg.tol_zero * mats.limit_scale();
    let lp = Loop {
        mats,
        delta: vec![0.0; mats.cone_count()],
        settings: cfg.solver,
        threshold: tol,
        safe_below: tol,
        eta_prime: 0.0,
        c_max: cfg.c_max,
        tightened: false,
    };
    let poly = Polytope::new_box(&cfg.box_lo, &cfg.box_hi)?;
    let (poly, records, termination, touches) = lp.run(poly, observer)?;
    if touches {
        log::warn!("an initial box vertex lies in the relaxed region; the box may be too small");
    }
    let trace = RunTrace {
        algorithm: "relaxed-region".into(),
        delta: None,
        records,
        wall_time_s: start.elapsed().as_secs_f64(),
        termination,
        box_touches_region: touches,
    };
    log::info!("relaxed region: {:?} after {} planes", trace.termination, trace.planes_added());
    Ok((poly, trace))
}

/// Approximates the set where the tightened dual stays below `-eta`,
/// starting from `relaxed`. The result may be empty.
pub fn run_algorithm2(
    mats: &FlowMatrices,
    relaxed: &Polytope,
    cfg: &Algo2Config,
) -> Result<(Polytope, RunTrace), AlgorithmError> {
    cfg.validate(mats.cone_count())?;
    if relaxed.is_empty()? {
        return Err(AlgorithmError::InvalidConfig("relaxed polytope is empty".into()));
    }
    let start = Instant::now();
    let tol = cfg.tol_zero * mats.limit_scale();
    let lp = Loop {
        mats,
        delta: cfg.delta.clone(),
        settings: cfg.solver,
        threshold: -cfg.eta + tol,
        safe_below: -cfg.eta,
        eta_prime: cfg.eta_prime,
        c_max: cfg.c_max,
        tightened: true,
    };
    let (poly, records, termination, _) = lp.run(relaxed.clone(), &mut |_, _| {})?;
    let trace = RunTrace {
        algorithm: "inexact-region".into(),
        delta: Some(cfg.delta.clone()),
        records,
        wall_time_s: start.elapsed().as_secs_f64(),
        termination,
        box_touches_region: false,
    };
    Ok((poly, trace))
}

/// One tightening vector per vertex of `relaxed`: the optimal `lambda_q` of the
/// dual at that vertex with entries at or below `eps_delta` raised to `eps_delta`.
/// Vectors within `1e-6` of an earlier one are dropped.
pub fn select_deltas(
    mats: &FlowMatrices,
    relaxed: &Polytope,
    eps_delta: f64,
    settings: &SolverSettings,
) -> Result<Vec<Vec<f64>>, AlgorithmError> {
    let verts = relaxed.vertices()?;
    if verts.is_empty() {
        return Err(AlgorithmError::InvalidConfig("relaxed polytope has no vertices".into()));
    }
    let zero = vec![0.0; mats.cone_count()];
    let sols: Vec<Result<DualSolve, ConicError>> =
        verts.par_iter().map(|w| solve_dual(mats, w, &zero, settings)).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for sol in sols {
        let sol = sol?;
        let delta: Vec<f64> = sol
            .cert
            .lambda_q
            .iter()
            .map(|&l| if l > eps_delta { l.min(1.0) } else { eps_delta })
            .collect();
        if !out.iter().any(|d| inf_dist(d, &delta) < 1e-6) {
            out.push(delta);
        }
    }
    Ok(out)
}

/// Relaxed polytope minus every nonempty tightened-dual polytope.
pub fn build_full_region(
    mats: &FlowMatrices,
    cfg1: &Algo1Config,
    template: &Algo2Config,
) -> Result<(Region, Vec<RunTrace>), AlgorithmError> {
    let (outer, trace1) = run_algorithm1(mats, cfg1)?;
    let mut traces = vec![trace1];
    let deltas = select_deltas(mats, &outer, template.eps_delta, &template.solver)?;
    log::info!("{} distinct tightening vectors", deltas.len());
    let mut region = Region::new(outer);
    for delta in deltas {
        let cfg = Algo2Config { delta, ..template.clone() };
        let (hole, trace) = run_algorithm2(mats, &region.outer, &cfg)?;
        traces.push(trace);
        if !hole.is_empty()? {
            region.holes.push(hole);
        }
    }
    Ok((region, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::solve_primal;
    use crate::network::{assemble_matrices, parse_case_str};

    fn case(text: &str) -> RadialNetwork {
        parse_case_str(text).unwrap()
    }

    #[test]
    fn generous_box_needs_no_planes() {
        let net = case(include_str!("../data/generous.json"));
        let mats = assemble_matrices(&net);
        let cfg = Algo1Config::new(vec![0.0, 0.0], vec![0.05, 0.05]);
        let (poly, trace) = run_algorithm1(&mats, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.planes_added(), 0);
        assert_eq!(poly.cuts().len(), 0);
        assert!(trace.box_touches_region);
    }

    #[test]
    fn box_beyond_region_empties() {
        let net = case(include_str!("../data/generous.json"));
        let mats = assemble_matrices(&net);
        let cfg = Algo1Config::new(vec![500.0, 500.0], vec![501.0, 501.0]);
        assert!(matches!(run_algorithm1(&mats, &cfg), Err(AlgorithmError::EmptyPolytope { .. })));
    }

    #[test]
    fn single_line_boundary_matches_scan() {
        let net = case(include_str!("../data/single_line.json"));
        let mats = assemble_matrices(&net);
        let (lo, hi) = default_box(&net);
        let (poly, trace) = run_algorithm1(&mats, &Algo1Config::new(lo, hi)).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        let (a, b) = poly.bounding_box().unwrap().unwrap();
        let s = SolverSettings::default();
        let tol = 1e-6 * mats.limit_scale();
        let fp = |w: f64| solve_primal(&mats, &[w], &s).unwrap().value;
        assert!(fp(b[0]) <= tol);
        assert!(fp(b[0] + 1e-3) > tol);
        // the lower edge is the box itself or a cut at the import limit
        assert!(fp(a[0]) <= tol);
        assert!(a[0] == 0.0 || fp(a[0] - 1e-3) > tol);
    }

    #[test]
    fn cap_is_reported() {
        let net = case(include_str!("../data/toy6.json"));
        let mats = assemble_matrices(&net);
        let (lo, hi) = default_box(&net);
        let cfg = Algo1Config { c_max: 3, ..Algo1Config::new(lo, hi) };
        let (poly, trace) = run_algorithm1(&mats, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::CapReached);
        assert_eq!(poly.cuts().len(), 3);
    }

    #[test]
    fn safe_vertices_survive_every_cut() {
        let net = case(include_str!("../data/toy6.json"));
        let mats = assemble_matrices(&net);
        let (lo, hi) = default_box(&net);
        let mut safe: Vec<Vec<f64>> = Vec::new();
        let mut ok = true;
        run_algorithm1_observed(&mats, &Algo1Config::new(lo, hi), &mut |poly, _| {
            ok &= safe.iter().all(|w| poly.contains(w, 1e-7));
            // vertices of the current polytope that the relaxation accepts
            for w in poly.vertices().unwrap() {
                if solve_primal(&mats, w, &SolverSettings::default()).unwrap().value <= 1e-7 {
                    safe.push(w.clone());
                }
            }
        })
        .unwrap();
        assert!(ok);
        assert!(!safe.is_empty());
    }

    #[test]
    fn holes_stay_inside_outer() {
        let net = case(include_str!("../data/toy6.json"));
        let mats = assemble_matrices(&net);
        let (lo, hi) = default_box(&net);
        let (outer, _) = run_algorithm1(&mats, &Algo1Config::new(lo, hi)).unwrap();
        let deltas = select_deltas(&mats, &outer, 1e-3, &SolverSettings::default()).unwrap();
        assert!(!deltas.is_empty());
        for d in &deltas {
            assert!(d.iter().all(|&x| (1e-3..=1.0).contains(&x)));
        }
        let cfg = Algo2Config { delta: deltas[0].clone(), ..Algo2Config::default() };
        let (hole, trace) = run_algorithm2(&mats, &outer, &cfg).unwrap();
        assert_ne!(trace.termination, Termination::CapReached);
        for v in hole.vertices().unwrap() {
            assert!(outer.contains(v, 1e-7));
        }
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(Algo1Config::new(vec![1.0], vec![0.0]).validate().is_err());
        assert!(Algo2Config { delta: vec![0.0, 1.0], ..Algo2Config::default() }.validate(2).is_err());
        assert!(Algo2Config { delta: vec![0.5], eta_prime: 1e-5, ..Algo2Config::default() }.validate(1).is_err());
    }
}
