use nalgebra::DVector;

use super::primal::add_col;
use super::{solve_checked, Affine, ConicError, ConicProblem, Sense, SolveStats, SolveStatus, SolverSettings};
use crate::geometry::Halfspace;
use crate::network::{ConeShape, FlowMatrices};

/// Variable offsets of the dual problem `(mu_f, mu_y, lambda_s, lambda_q, theta)`.
///
/// `theta` is only present for polyhedral cones, where `mu_y,k = -sum_d theta_kd u_d`
/// and `lambda_q,k = sum_d theta_kd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualLayout {
    pub mu_f: usize,
    pub mu_y: usize,
    pub lambda_s: usize,
    pub lambda_q: usize,
    pub theta: usize,
    pub n_vars: usize,
}

/// Dual multipliers `(mu_f, mu_y, lambda_s, lambda_q)` and the objective they attain.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub mu_f: DVector<f64>,
    pub mu_y: DVector<f64>,
    pub lambda_s: DVector<f64>,
    pub lambda_q: DVector<f64>,
    pub objective: f64,
}

impl DualCertificate {
    pub fn zero(mats: &FlowMatrices) -> Self {
        Self {
            mu_f: DVector::zeros(mats.a_f.nrows()),
            mu_y: DVector::zeros(mats.a_y.nrows()),
            lambda_s: DVector::zeros(mats.ineq_count()),
            lambda_q: DVector::zeros(mats.cone_count()),
            objective: 0.0,
        }
    }

    /// Largest violation of dual feasibility: box bounds on the lambdas, the
    /// stationarity equation, the cone constraints, and `lambda_q >= delta`.
    pub fn violation(&self, mats: &FlowMatrices, delta: Option<&[f64]>) -> f64 {
        let mut worst = 0.0f64;
        for &l in self.lambda_s.iter().chain(self.lambda_q.iter()) {
            worst = worst.max(-l).max(l - 1.0);
        }
        let stat = mats.a_f.tr_mul(&self.mu_f) + mats.a_s.tr_mul(&self.lambda_s)
            - mats.a_y.tr_mul(&self.mu_y)
            - mats.c_q.tr_mul(&self.lambda_q);
        worst = worst.max(stat.amax());
        for k in 0..self.lambda_q.len() {
            let norm = self.mu_y.rows(3 * k, 3).norm();
            worst = worst.max(norm - self.lambda_q[k]);
        }
        if let Some(d) = delta {
            for (l, d) in self.lambda_q.iter().zip(d) {
                worst = worst.max(d - l);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualStatus {
    Optimal,
    /// The dual objective grows without bound; the certificate is the improving ray.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolve {
    pub status: DualStatus,
    /// `dp'(w)` or `dp''(w, delta)`; `+inf` when unbounded.
    pub value: f64,
    pub cert: DualCertificate,
    pub stats: SolveStats,
}

/// `DP''(w, delta)`: maximize `D_w(mu, lambda)` over the dual feasible set with
/// `lambda_q >= delta`. `delta = 0` gives `DP'(w)`.
pub fn build_dual(mats: &FlowMatrices, w: &[f64], delta: &[f64]) -> Result<(ConicProblem, DualLayout), ConicError> {
    if w.len() != mats.w_dim() {
        return Err(ConicError::Dimension(format!("w has {} entries, expected {}", w.len(), mats.w_dim())));
    }
    let nc = mats.cone_count();
    if delta.len() != nc {
        return Err(ConicError::Dimension(format!("delta has {} entries, expected {nc}", delta.len())));
    }
    if delta.iter().any(|&d| !(d >= 0.0)) {
        return Err(ConicError::Dimension("delta must be nonnegative".into()));
    }
    let dirs: &[[f64; 3]] = match &mats.cone {
        ConeShape::SecondOrder => &[],
        ConeShape::Polyhedral(d) => d,
    };
    let nf = mats.a_f.nrows();
    let ns = mats.ineq_count();
    let mut prob = ConicProblem::new(Sense::Maximize);
    let mu_f = prob.add_block("mu_f", nf);
    let mu_y = prob.add_block("mu_y", 3 * nc);
    let lambda_s = prob.add_block("lambda_s", ns);
    let lambda_q = prob.add_block("lambda_q", nc);
    let theta = prob.add_block("theta", nc * dirs.len());
    let layout = DualLayout { mu_f, mu_y, lambda_s, lambda_q, theta, n_vars: prob.n_vars };

    let rhs_f = &mats.b_f * DVector::from_column_slice(w) + &mats.gamma_f;
    prob.objective.extend((0..nf).map(|r| (mu_f + r, rhs_f[r])).filter(|t| t.1 != 0.0));
    prob.objective.extend((0..ns).map(|r| (lambda_s + r, mats.gamma_s[r])).filter(|t| t.1 != 0.0));
    prob.objective.extend((0..3 * nc).map(|r| (mu_y + r, -mats.b_y[r])).filter(|t| t.1 != 0.0));
    prob.objective.extend((0..nc).map(|k| (lambda_q + k, -mats.gamma_q[k])).filter(|t| t.1 != 0.0));

    for c in 0..mats.state_dim() {
        let mut e = Affine::default();
        add_col(&mut e, &mats.a_f, c, mu_f, 1.0);
        add_col(&mut e, &mats.a_s, c, lambda_s, 1.0);
        add_col(&mut e, &mats.a_y, c, mu_y, -1.0);
        add_col(&mut e, &mats.c_q, c, lambda_q, -1.0);
        prob.eq.push(e);
    }
    for r in 0..ns {
        prob.ineq.push(Affine::constant(0.0).term(lambda_s + r, -1.0));
        prob.ineq.push(Affine::constant(-1.0).term(lambda_s + r, 1.0));
    }
    for k in 0..nc {
        // lambda_q >= delta; the zero-delta case still needs the sign bound for LP cones.
        prob.ineq.push(Affine::constant(delta[k]).term(lambda_q + k, -1.0));
        prob.ineq.push(Affine::constant(-1.0).term(lambda_q + k, 1.0));
        if dirs.is_empty() {
            let mut cone = vec![Affine::var(lambda_q + k)];
            cone.extend((0..3).map(|i| Affine::var(mu_y + 3 * k + i)));
            prob.cones.push(cone);
        } else {
            let base = theta + k * dirs.len();
            let mut sum = Affine::var(lambda_q + k);
            for d in 0..dirs.len() {
                prob.ineq.push(Affine::constant(0.0).term(base + d, -1.0));
                sum = sum.term(base + d, -1.0);
            }
            prob.eq.push(sum);
            for i in 0..3 {
                let mut e = Affine::var(mu_y + 3 * k + i);
                for (d, u) in dirs.iter().enumerate() {
                    e = e.term(base + d, u[i]);
                }
                prob.eq.push(e);
            }
        }
    }
    Ok((prob, layout))
}

/// Solves `DP''(w, delta)` and returns the optimal (or ray) certificate.
///
/// An infeasible tightened dual (some `delta_k > 1`) is reported as
/// [`ConicError::Infeasible`].
pub fn solve_dual(
    mats: &FlowMatrices,
    w: &[f64],
    delta: &[f64],
    settings: &SolverSettings,
) -> Result<DualSolve, ConicError> {
    let (prob, layout) = build_dual(mats, w, delta)?;
    let out = solve_checked(&prob, settings)?;
    let nf = mats.a_f.nrows();
    let nc = mats.cone_count();
    let slice = |x: &[f64], start: usize, len: usize| DVector::from_column_slice(&x[start..start + len]);
    let unpack = |x: &[f64]| {
        let mut cert = DualCertificate {
            mu_f: slice(x, layout.mu_f, nf),
            mu_y: slice(x, layout.mu_y, 3 * nc),
            lambda_s: slice(x, layout.lambda_s, mats.ineq_count()),
            lambda_q: slice(x, layout.lambda_q, nc),
            objective: 0.0,
        };
        cert.objective = evaluate_dual_objective(&cert, mats, w);
        cert
    };
    match out.status {
        SolveStatus::Optimal => {
            let cert = unpack(&out.x);
            Ok(DualSolve { status: DualStatus::Optimal, value: out.value, cert, stats: out.stats })
        }
        SolveStatus::Unbounded { ray } => {
            let cert = unpack(&ray);
            Ok(DualSolve { status: DualStatus::Unbounded, value: f64::INFINITY, cert, stats: out.stats })
        }
        SolveStatus::Infeasible => Err(ConicError::Infeasible),
        SolveStatus::NumericalFailure => unreachable!("filtered by solve_checked"),
    }
}

/// `D_w = mu_f'(B_f w + gamma_f) + lambda_s'gamma_s - mu_y'b_y - lambda_q'gamma_q`.
pub fn evaluate_dual_objective(cert: &DualCertificate, mats: &FlowMatrices, w: &[f64]) -> f64 {
    let bw = &mats.b_f * DVector::from_column_slice(w) + &mats.gamma_f;
    cert.mu_f.dot(&bw) + cert.lambda_s.dot(&mats.gamma_s) - cert.mu_y.dot(&mats.b_y) - cert.lambda_q.dot(&mats.gamma_q)
}

/// Halfspace `a.w <= b` with `a = B_f'mu_f` and
/// `b = mu_y'b_y + lambda_q'gamma_q - mu_f'gamma_f - lambda_s'gamma_s - eta_prime`,
/// so that `a.w - b = D_w(cert) + eta_prime` for every `w`.
pub fn extract_cutting_plane(
    cert: &DualCertificate,
    mats: &FlowMatrices,
    eta_prime: f64,
) -> Result<Halfspace, ConicError> {
    let a = mats.b_f.tr_mul(&cert.mu_f);
    let scale = a.amax();
    if scale < 1e-12 {
        return Err(ConicError::DegeneratePlane(scale));
    }
    let b = cert.mu_y.dot(&mats.b_y) + cert.lambda_q.dot(&mats.gamma_q)
        - cert.mu_f.dot(&mats.gamma_f)
        - cert.lambda_s.dot(&mats.gamma_s)
        - eta_prime;
    Ok(Halfspace::new(a.iter().copied().collect(), b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::solve_primal;
    use crate::network::{assemble_matrices, NodeLimits, RadialNetwork};

    fn line() -> FlowMatrices {
        let lim = NodeLimits { p_min: -1.0, p_max: 1.0, q_min: -1.0, q_max: 1.0, v_min: 0.81, v_max: 1.21 };
        let net = RadialNetwork::from_parts(1.0, &[(0, 1, 0.1, 0.1, 0.5)], &[lim], &[1]).unwrap();
        assemble_matrices(&net)
    }

    #[test]
    fn zero_certificate_is_feasible_and_degenerate() {
        let m = line();
        let c = DualCertificate::zero(&m);
        assert_eq!(c.violation(&m, None), 0.0);
        assert_eq!(evaluate_dual_objective(&c, &m, &[3.0]), 0.0);
        assert!(matches!(extract_cutting_plane(&c, &m, 0.0), Err(ConicError::DegeneratePlane(_))));
    }

    #[test]
    fn strong_duality_single_line() {
        let m = line();
        let s = SolverSettings::default();
        for &w in &[0.0, 0.5, 1.5, 3.0, 10.0] {
            let fp = solve_primal(&m, &[w], &s).unwrap().value;
            let dp = solve_dual(&m, &[w], &[0.0], &s).unwrap();
            assert!((fp - dp.value).abs() <= 1e-5 * fp.max(1.0), "w={w}: {fp} vs {}", dp.value);
            assert!(dp.cert.violation(&m, None) < 1e-7);
            assert!((dp.cert.objective - dp.value).abs() < 1e-9 * dp.value.abs().max(1.0));
        }
    }

    #[test]
    fn plane_identity() {
        let m = line();
        let dp = solve_dual(&m, &[10.0], &[0.0], &SolverSettings::default()).unwrap();
        let h = extract_cutting_plane(&dp.cert, &m, 0.25).unwrap();
        for &w in &[-2.0, 0.0, 1.0, 7.5] {
            let lhs = h.a[0] * w - h.b;
            let rhs = evaluate_dual_objective(&dp.cert, &m, &[w]) + 0.25;
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_above_one_is_infeasible() {
        let m = line();
        let r = solve_dual(&m, &[0.0], &[1.5], &SolverSettings::default());
        assert_eq!(r.unwrap_err(), ConicError::Infeasible);
    }

    #[test]
    fn tightening_lowers_the_optimum() {
        let m = line();
        let s = SolverSettings::default();
        let loose = solve_dual(&m, &[0.5], &[0.0], &s).unwrap().value;
        let tight = solve_dual(&m, &[0.5], &[0.3], &s).unwrap().value;
        assert!(tight <= loose + 1e-7);
    }
}
