//! Second-order cone programs: a small sparse problem type, a Clarabel-backed
//! solver, and the feasibility primal / dual pair over [`FlowMatrices`].
//!
//! [`FlowMatrices`]: crate::network::FlowMatrices

mod dual;
mod primal;

pub use dual::{
    build_dual, evaluate_dual_objective, extract_cutting_plane, solve_dual, DualCertificate, DualLayout,
    DualSolve,
};
pub use primal::{build_primal, solve_primal, PrimalLayout, PrimalSolve};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver failure ({status}): primal residual {r_prim:.3e}, dual residual {r_dual:.3e}")]
    NumericalFailure { status: String, r_prim: f64, r_dual: f64 },
    #[error("problem is infeasible")]
    Infeasible,
    #[error("cutting plane has a vanishing normal (|a|_inf = {0:.3e})")]
    DegeneratePlane(f64),
}

/// Sparse affine function `coefs . x + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub coefs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { coefs: Vec::new(), constant: c }
    }

    pub fn var(j: usize) -> Self {
        Self { coefs: vec![(j, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, j: usize, c: f64) -> Self {
        if c != 0.0 {
            self.coefs.push((j, c));
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Named contiguous block of decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: &'static str,
    pub start: usize,
    pub len: usize,
}

/// `opt c.x + c0` subject to `eq(x) = 0`, `ineq(x) <= 0`, and
/// `|| (e_1(x), ..., e_k(x)) ||_2 <= e_0(x)` for every cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub sense: Sense,
    pub n_vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub eq: Vec<Affine>,
    pub ineq: Vec<Affine>,
    /// Each cone lists `[e_0, e_1, ..., e_k]`.
    pub cones: Vec<Vec<Affine>>,
    pub blocks: Vec<VarBlock>,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            n_vars: 0,
            objective: Vec::new(),
            objective_constant: 0.0,
            eq: Vec::new(),
            ineq: Vec::new(),
            cones: Vec::new(),
            blocks: Vec::new(),
        }
    }

    /// Appends a block of `len` variables and returns its first index.
    pub fn add_block(&mut self, name: &'static str, len: usize) -> usize {
        let start = self.n_vars;
        self.blocks.push(VarBlock { name, start, len });
        self.n_vars += len;
        start
    }

    pub fn block(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn cone_dims(&self) -> Vec<usize> {
        self.cones.iter().map(Vec::len).collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Largest violation of any constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for e in &self.eq {
            worst = worst.max(e.eval(x).abs());
        }
        for e in &self.ineq {
            worst = worst.max(e.eval(x));
        }
        for cone in &self.cones {
            let head = cone[0].eval(x);
            let norm = cone[1..].iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(norm - head);
        }
        worst
    }

    fn check(&self) -> Result<(), ConicError> {
        let bad = |e: &Affine| e.coefs.iter().any(|&(j, _)| j >= self.n_vars);
        if self.objective.iter().any(|&(j, _)| j >= self.n_vars)
            || self.eq.iter().any(bad)
            || self.ineq.iter().any(bad)
            || self.cones.iter().flatten().any(bad)
        {
            return Err(ConicError::Dimension("constraint references a variable out of range".into()));
        }
        if self.cones.iter().any(|c| c.len() < 2) {
            return Err(ConicError::Dimension("cone with fewer than two entries".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Objective improves without bound along `ray`.
    Unbounded { ray: Vec<f64> },
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: u32,
    pub r_prim: f64,
    pub r_dual: f64,
    pub gap_abs: f64,
    pub gap_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Objective in the problem's own sense (NaN unless optimal).
    pub value: f64,
    pub x: Vec<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_gap: 1e-8, tol_feas: 1e-7, max_iter: 200 }
    }
}

/// Solves `problem` with Clarabel.
///
/// `AlmostSolved` is promoted to `Optimal` when the reported residuals stay
/// within 100x the requested tolerances; anything else is a numerical failure.
pub fn solve_conic(problem: &ConicProblem, settings: &SolverSettings) -> Result<SolveOutcome, ConicError> {
    problem.check()?;
    let n = problem.n_vars;
    let flip = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut q = vec![0.0; n];
    for &(j, c) in &problem.objective {
        q[j] += flip * c;
    }

    // Clarabel form: A x + s = b, s in K. Each affine row e(x) = g.x + h becomes
    // one row of A and b, with s = b - A x equal to the cone entry.
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    let mut push = |e: &Affine, sign: f64, rows: &mut Vec<usize>, b: &mut Vec<f64>| {
        let r = b.len();
        for &(j, c) in &e.coefs {
            rows.push(r);
            cols.push(j);
            vals.push(-sign * c);
        }
        b.push(sign * e.constant);
    };
    // eq: e(x) = 0 -> s = -e(x) in {0}
    for e in &problem.eq {
        push(e, -1.0, &mut rows, &mut b);
    }
    // ineq: e(x) <= 0 -> s = -e(x) >= 0
    for e in &problem.ineq {
        push(e, -1.0, &mut rows, &mut b);
    }
    for cone in &problem.cones {
        for e in cone {
            push(e, 1.0, &mut rows, &mut b);
        }
    }
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let p = CscMatrix::zeros((n, n));

    let mut cones = Vec::new();
    if !problem.eq.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(problem.eq.len()));
    }
    if !problem.ineq.is_empty() {
        cones.push(SupportedConeT::NonnegativeConeT(problem.ineq.len()));
    }
    for c in &problem.cones {
        cones.push(SupportedConeT::SecondOrderConeT(c.len()));
    }

    let clarabel_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(settings.tol_gap)
        .tol_gap_rel(settings.tol_gap)
        .tol_feas(settings.tol_feas)
        .max_iter(settings.max_iter)
        .build()
        .expect("static solver settings are valid");

    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, clarabel_settings)
        .map_err(|e| ConicError::Dimension(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let info = &solver.info;
    let stats = SolveStats {
        iterations: sol.iterations,
        r_prim: sol.r_prim,
        r_dual: sol.r_dual,
        gap_abs: info.gap_abs,
        gap_rel: info.gap_rel,
    };
    let value = problem.objective_constant + flip * sol.obj_val;
    let outcome = |status, value| SolveOutcome { status, value, x: sol.x.clone(), stats };
    Ok(match sol.status {
        SolverStatus::Solved => outcome(SolveStatus::Optimal, value),
        SolverStatus::AlmostSolved
            if sol.r_prim <= 100.0 * settings.tol_feas && sol.r_dual <= 100.0 * settings.tol_feas =>
        {
            log::debug!("accepting almost-solved status, r_prim {:.2e} r_dual {:.2e}", sol.r_prim, sol.r_dual);
            outcome(SolveStatus::Optimal, value)
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            outcome(SolveStatus::Infeasible, f64::NAN)
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            let infinite = match problem.sense {
                Sense::Minimize => f64::NEG_INFINITY,
                Sense::Maximize => f64::INFINITY,
            };
            outcome(SolveStatus::Unbounded { ray: sol.x.clone() }, infinite)
        }
        _ => outcome(SolveStatus::NumericalFailure, f64::NAN),
    })
}

/// Like [`solve_conic`] but turns a numerical failure status into an error.
pub(crate) fn solve_checked(problem: &ConicProblem, settings: &SolverSettings) -> Result<SolveOutcome, ConicError> {
    let out = solve_conic(problem, settings)?;
    if out.status == SolveStatus::NumericalFailure {
        return Err(ConicError::NumericalFailure {
            status: "numerical failure".into(),
            r_prim: out.stats.r_prim,
            r_dual: out.stats.r_dual,
        });
    }
    Ok(out)
}
