use nalgebra::DMatrix;

use super::{solve_checked, Affine, ConicError, ConicProblem, Sense, SolveStats, SolveStatus, SolverSettings};
use crate::network::{ConeShape, FlowMatrices};

/// Variable offsets of the primal feasibility problem `(x, y, z_s, z_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimalLayout {
    pub x: usize,
    pub y: usize,
    pub z_s: usize,
    pub z_q: usize,
    pub n_vars: usize,
}

/// Appends `sign * (M[r, :] . v[offset..])` to `e`.
pub(crate) fn add_row(e: &mut Affine, m: &DMatrix<f64>, r: usize, offset: usize, sign: f64) {
    for c in 0..m.ncols() {
        let v = m[(r, c)];
        if v != 0.0 {
            e.coefs.push((offset + c, sign * v));
        }
    }
}

/// Appends `sign * (M[:, c] . v[offset..])` to `e`, i.e. a row of the transpose.
pub(crate) fn add_col(e: &mut Affine, m: &DMatrix<f64>, c: usize, offset: usize, sign: f64) {
    for r in 0..m.nrows() {
        let v = m[(r, c)];
        if v != 0.0 {
            e.coefs.push((offset + r, sign * v));
        }
    }
}

fn check_w(mats: &FlowMatrices, w: &[f64]) -> Result<(), ConicError> {
    if w.len() != mats.w_dim() {
        return Err(ConicError::Dimension(format!("w has {} entries, expected {}", w.len(), mats.w_dim())));
    }
    Ok(())
}

/// Relaxed feasibility problem: minimize `1'z` over
/// `A_f x + B_f w + gamma_f = 0`, `A_s x + gamma_s <= z_s`, `y = A_y x + b_y`,
/// `|| y_k || <= c_q,k x + gamma_q,k + z_q,k`, `z >= 0`.
pub fn build_primal(mats: &FlowMatrices, w: &[f64]) -> Result<(ConicProblem, PrimalLayout), ConicError> {
    check_w(mats, w)?;
    let nx = mats.state_dim();
    let nc = mats.cone_count();
    let ns = mats.ineq_count();
    let mut prob = ConicProblem::new(Sense::Minimize);
    let x = prob.add_block("x", nx);
    let y = prob.add_block("y", 3 * nc);
    let z_s = prob.add_block("z_s", ns);
    let z_q = prob.add_block("z_q", nc);
    let layout = PrimalLayout { x, y, z_s, z_q, n_vars: prob.n_vars };

    for j in z_s..z_s + ns + nc {
        prob.objective.push((j, 1.0));
        prob.ineq.push(Affine::constant(0.0).term(j, -1.0));
    }

    let bw = &mats.b_f * nalgebra::DVector::from_column_slice(w);
    for r in 0..mats.a_f.nrows() {
        let mut e = Affine::constant(bw[r] + mats.gamma_f[r]);
        add_row(&mut e, &mats.a_f, r, x, 1.0);
        prob.eq.push(e);
    }
    for r in 0..3 * nc {
        let mut e = Affine::constant(-mats.b_y[r]).term(y + r, 1.0);
        add_row(&mut e, &mats.a_y, r, x, -1.0);
        prob.eq.push(e);
    }
    for r in 0..ns {
        let mut e = Affine::constant(mats.gamma_s[r]).term(z_s + r, -1.0);
        add_row(&mut e, &mats.a_s, r, x, 1.0);
        prob.ineq.push(e);
    }
    for k in 0..nc {
        let mut head = Affine::constant(mats.gamma_q[k]).term(z_q + k, 1.0);
        add_row(&mut head, &mats.c_q, k, x, 1.0);
        match &mats.cone {
            ConeShape::SecondOrder => {
                let mut cone = vec![head];
                cone.extend((0..3).map(|i| Affine::var(y + 3 * k + i)));
                prob.cones.push(cone);
            }
            ConeShape::Polyhedral(dirs) => {
                for u in dirs {
                    let mut e = Affine {
                        coefs: head.coefs.iter().map(|&(j, c)| (j, -c)).collect(),
                        constant: -head.constant,
                    };
                    for (i, &ui) in u.iter().enumerate() {
                        e = e.term(y + 3 * k + i, ui);
                    }
                    prob.ineq.push(e);
                }
            }
        }
    }
    Ok((prob, layout))
}

/// Optimum of the primal feasibility problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolve {
    /// `fp'(w)`: total slack needed.
    pub value: f64,
    pub x: Vec<f64>,
    pub z_s: Vec<f64>,
    pub z_q: Vec<f64>,
    pub stats: SolveStats,
}

pub fn solve_primal(mats: &FlowMatrices, w: &[f64], settings: &SolverSettings) -> Result<PrimalSolve, ConicError> {
    let (prob, layout) = build_primal(mats, w)?;
    let out = solve_checked(&prob, settings)?;
    match out.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(ConicError::Infeasible),
        SolveStatus::Unbounded { .. } | SolveStatus::NumericalFailure => {
            return Err(ConicError::NumericalFailure {
                status: "primal solve did not reach an optimum".into(),
                r_prim: out.stats.r_prim,
                r_dual: out.stats.r_dual,
            })
        }
    }
    let nx = mats.state_dim();
    Ok(PrimalSolve {
        value: out.value,
        x: out.x[layout.x..layout.x + nx].to_vec(),
        z_s: out.x[layout.z_s..layout.z_s + mats.ineq_count()].to_vec(),
        z_q: out.x[layout.z_q..layout.z_q + mats.cone_count()].to_vec(),
        stats: out.stats,
    })
}
