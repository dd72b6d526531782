//! Standard-form data of the relaxed feasibility problem:
//!
//! ```text
//! A_f x + B_f w + gamma_f = 0        (linear Dist-Flow)
//! A_s x + gamma_s <= 0               (capacity and safety limits)
//! || A_y,k x + b_y,k || <= c_q,k x + gamma_q,k   for every line k
//! ```
//!
//! with `x = (p, q, v, l, P, Q)`, each block indexed by destination node.

use nalgebra::{DMatrix, DVector};

use super::RadialNetwork;

/// Which physical model a [`FlowMatrices`] instance encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Dist-Flow with the second-order cone relaxation of the current equation.
    SocpRelaxation,
    /// Linearized Dist-Flow: losses dropped, no current variables, no cones.
    LinDistFlow,
    /// SOCP relaxation with each cone outer-approximated by tangent planes.
    TangentPlane { directions: usize },
}

/// Shape of the per-line cone `|| y_k || <= t_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeShape {
    /// Euclidean norm.
    SecondOrder,
    /// `max_d u_d . y <= t` over the given unit directions.
    Polyhedral(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    P,
    Q,
    V,
    L,
    LineP,
    LineQ,
}

/// Column layout of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n: usize,
    /// False for models without squared-current variables.
    pub with_current: bool,
}

impl StateLayout {
    pub fn dim(&self) -> usize {
        if self.with_current {
            6 * self.n
        } else {
            5 * self.n
        }
    }

    /// Column of `kind` at node (or line) `node` in 1..=N.
    pub fn col(&self, kind: VarKind, node: usize) -> Option<usize> {
        debug_assert!(node >= 1 && node <= self.n);
        let n = self.n;
        let k = node - 1;
        let block = match (kind, self.with_current) {
            (VarKind::P, _) => 0,
            (VarKind::Q, _) => 1,
            (VarKind::V, _) => 2,
            (VarKind::L, true) => 3,
            (VarKind::L, false) => return None,
            (VarKind::LineP, true) => 4,
            (VarKind::LineQ, true) => 5,
            (VarKind::LineP, false) => 3,
            (VarKind::LineQ, false) => 4,
        };
        Some(block * n + k)
    }

    /// Slice of x holding one block.
    pub fn block<'a>(&self, x: &'a [f64], kind: VarKind) -> Option<&'a [f64]> {
        let start = self.col(kind, 1)?;
        Some(&x[start..start + self.n])
    }
}

/// The constant matrices of the feasibility problem, plus layout metadata.
#[derive(Debug, Clone)]
pub struct FlowMatrices {
    pub kind: ModelKind,
    pub layout: StateLayout,
    pub a_f: DMatrix<f64>,
    pub b_f: DMatrix<f64>,
    pub gamma_f: DVector<f64>,
    pub a_s: DMatrix<f64>,
    pub gamma_s: DVector<f64>,
    pub a_y: DMatrix<f64>,
    pub b_y: DVector<f64>,
    pub c_q: DMatrix<f64>,
    pub gamma_q: DVector<f64>,
    pub cone: ConeShape,
}

impl FlowMatrices {
    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn state_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn w_dim(&self) -> usize {
        self.b_f.ncols()
    }

    pub fn ineq_count(&self) -> usize {
        self.a_s.nrows()
    }

    pub fn cone_count(&self) -> usize {
        self.c_q.nrows()
    }

    /// Largest constant magnitude in the limit rows; used to scale tolerances.
    pub fn limit_scale(&self) -> f64 {
        self.gamma_s.amax().max(1.0)
    }

    /// `A_f x + B_f w + gamma_f`.
    pub fn equality_residual(&self, x: &[f64], w: &[f64]) -> DVector<f64> {
        &self.a_f * DVector::from_column_slice(x) + &self.b_f * DVector::from_column_slice(w) + &self.gamma_f
    }

    /// `A_s x + gamma_s`.
    pub fn limit_values(&self, x: &[f64]) -> DVector<f64> {
        &self.a_s * DVector::from_column_slice(x) + &self.gamma_s
    }
}

/// Assembles `A_f, B_f, gamma_f, A_s, gamma_s, A_y, b_y, c_q, gamma_q` for the SOCP relaxation.
///
/// Any number of lines may leave the root; each such line carries `v0` in its
/// voltage-drop row of `gamma_f` and in `b_y`, `gamma_q`.
pub fn assemble_matrices(net: &RadialNetwork) -> FlowMatrices {
    assemble(net, true)
}

/// Linearized variant: no current columns, no current limits, no cones.
pub fn matrices_without_current(net: &RadialNetwork) -> FlowMatrices {
    assemble(net, false)
}

fn assemble(net: &RadialNetwork, with_current: bool) -> FlowMatrices {
    use VarKind::*;
    let n = net.n();
    let layout = StateLayout { n, with_current };
    let nx = layout.dim();
    let col = |kind, node| layout.col(kind, node);

    let mut a_f = DMatrix::zeros(3 * n, nx);
    let mut gamma_f = DVector::zeros(3 * n);
    for j in 1..=n {
        let line = net.line_into(j);
        let row_p = j - 1;
        let row_q = n + j - 1;
        let row_v = 2 * n + j - 1;

        a_f[(row_p, col(P, j).unwrap())] = 1.0;
        a_f[(row_p, col(LineP, j).unwrap())] = 1.0;
        a_f[(row_q, col(Q, j).unwrap())] = 1.0;
        a_f[(row_q, col(LineQ, j).unwrap())] = 1.0;
        for &k in net.children(j) {
            a_f[(row_p, col(LineP, k).unwrap())] = -1.0;
            a_f[(row_q, col(LineQ, k).unwrap())] = -1.0;
        }
        if let Some(c) = col(L, j) {
            a_f[(row_p, c)] = -line.r;
            a_f[(row_q, c)] = -line.x;
            a_f[(row_v, c)] = line.r * line.r + line.x * line.x;
        }

        if line.from == 0 {
            gamma_f[row_v] = net.v0;
        } else {
            a_f[(row_v, col(V, line.from).unwrap())] = 1.0;
        }
        a_f[(row_v, col(V, j).unwrap())] = -1.0;
        a_f[(row_v, col(LineP, j).unwrap())] = -2.0 * line.r;
        a_f[(row_v, col(LineQ, j).unwrap())] = -2.0 * line.x;
    }

    let mut b_f = DMatrix::zeros(3 * n, net.w_dim());
    for (c, &node) in net.renewables.iter().enumerate() {
        b_f[(node - 1, c)] = 1.0;
    }

    // Limit rows in blocks of N: p<=pmax, -p<=-pmin, q.., v.., and (with currents) l<=lmax, -l<=0.
    let blocks = if with_current { 8 } else { 6 };
    let mut a_s = DMatrix::zeros(blocks * n, nx);
    let mut gamma_s = DVector::zeros(blocks * n);
    for j in 1..=n {
        let lim = net.limits_of(j);
        let k = j - 1;
        let rows = [
            (P, 1.0, -lim.p_max),
            (P, -1.0, lim.p_min),
            (Q, 1.0, -lim.q_max),
            (Q, -1.0, lim.q_min),
            (V, 1.0, -lim.v_max),
            (V, -1.0, lim.v_min),
            (L, 1.0, -net.line_into(j).l_max),
            (L, -1.0, 0.0),
        ];
        for (b, &(kind, sign, gamma)) in rows.iter().take(blocks).enumerate() {
            a_s[(b * n + k, col(kind, j).unwrap())] = sign;
            gamma_s[b * n + k] = gamma;
        }
    }

    let cones = if with_current { n } else { 0 };
    let mut a_y = DMatrix::zeros(3 * cones, nx);
    let mut b_y = DVector::zeros(3 * cones);
    let mut c_q = DMatrix::zeros(cones, nx);
    let mut gamma_q = DVector::zeros(cones);
    if with_current {
        for j in 1..=n {
            let k = j - 1;
            let from = net.line_into(j).from;
            a_y[(3 * k, col(LineP, j).unwrap())] = 2.0;
            a_y[(3 * k + 1, col(LineQ, j).unwrap())] = 2.0;
            a_y[(3 * k + 2, col(L, j).unwrap())] = -1.0;
            c_q[(k, col(L, j).unwrap())] = 1.0;
            if from == 0 {
                b_y[3 * k + 2] = net.v0;
                gamma_q[k] = net.v0;
            } else {
                a_y[(3 * k + 2, col(V, from).unwrap())] = 1.0;
                c_q[(k, col(V, from).unwrap())] = 1.0;
            }
        }
    }

    FlowMatrices {
        kind: if with_current {
            ModelKind::SocpRelaxation
        } else {
            ModelKind::LinDistFlow
        },
        layout,
        a_f,
        b_f,
        gamma_f,
        a_s,
        gamma_s,
        a_y,
        b_y,
        c_q,
        gamma_q,
        cone: ConeShape::SecondOrder,
    }
}

/// A state satisfying the linear Dist-Flow equations exactly, with `p = q = l = 0`.
///
/// Line flows are accumulated from the leaves towards the root, then voltages
/// are propagated from the root outwards.
pub fn slater_point(mats: &FlowMatrices, net: &RadialNetwork, w: &[f64]) -> DVector<f64> {
    use VarKind::*;
    let layout = mats.layout;
    let n = net.n();
    let injection = net.renewable_injection(w);
    let mut x = DVector::zeros(layout.dim());
    let mut flow_p = vec![0.0; n + 1];
    let mut flow_q = vec![0.0; n + 1];
    for &j in net.bfs_order().iter().rev() {
        let downstream_p: f64 = net.children(j).iter().map(|&k| flow_p[k]).sum();
        let downstream_q: f64 = net.children(j).iter().map(|&k| flow_q[k]).sum();
        flow_p[j] = downstream_p - injection[j - 1];
        flow_q[j] = downstream_q;
    }
    let mut volt = vec![net.v0; n + 1];
    for &j in net.bfs_order() {
        let line = net.line_into(j);
        volt[j] = volt[line.from] - 2.0 * (line.r * flow_p[j] + line.x * flow_q[j]);
    }
    for j in 1..=n {
        x[layout.col(V, j).unwrap()] = volt[j];
        x[layout.col(LineP, j).unwrap()] = flow_p[j];
        x[layout.col(LineQ, j).unwrap()] = flow_q[j];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeLimits;

    fn limits(n: usize) -> Vec<NodeLimits> {
        vec![
            NodeLimits {
                p_min: -1.0,
                p_max: 1.0,
                q_min: -1.0,
                q_max: 1.0,
                v_min: 0.81,
                v_max: 1.21,
            };
            n
        ]
    }

    fn single_line() -> RadialNetwork {
        RadialNetwork::from_parts(1.0, &[(0, 1, 0.1, 0.1, 2.0)], &limits(1), &[1]).unwrap()
    }

    #[test]
    fn single_line_constants() {
        let m = assemble_matrices(&single_line());
        assert_eq!(m.gamma_f.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(m.b_y.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(m.gamma_q.as_slice(), &[1.0]);
        assert_eq!(m.b_f.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_flow_is_a_fixed_point() {
        let m = assemble_matrices(&single_line());
        let x = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let res = m.equality_residual(&x, &[0.0]);
        assert_eq!(res.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn shapes() {
        let net = RadialNetwork::from_parts(
            1.0,
            &[(0, 1, 0.1, 0.2, 1.0), (1, 2, 0.1, 0.2, 1.0), (1, 3, 0.3, 0.1, 1.0)],
            &limits(3),
            &[2, 3],
        )
        .unwrap();
        let m = assemble_matrices(&net);
        assert_eq!((m.a_f.nrows(), m.a_f.ncols()), (9, 18));
        assert_eq!((m.b_f.nrows(), m.b_f.ncols()), (9, 2));
        assert_eq!((m.a_s.nrows(), m.a_s.ncols()), (24, 18));
        assert_eq!((m.a_y.nrows(), m.a_y.ncols()), (9, 18));
        assert_eq!((m.c_q.nrows(), m.c_q.ncols()), (3, 18));
        assert_eq!(m.gamma_s.len(), 24);
    }

    #[test]
    fn slater_single_line() {
        let net = single_line();
        let m = assemble_matrices(&net);
        let x = slater_point(&m, &net, &[0.0]);
        assert_eq!(x.as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let x = slater_point(&m, &net, &[0.5]);
        assert_eq!(x[4], -0.5);
        assert!((x[2] - (1.0 + 2.0 * 0.1 * 0.5)).abs() < 1e-15);
        assert!(m.equality_residual(x.as_slice(), &[0.5]).amax() < 1e-12);
    }

    #[test]
    fn layout_without_current() {
        let l = StateLayout { n: 4, with_current: false };
        assert_eq!(l.dim(), 20);
        assert_eq!(l.col(VarKind::L, 2), None);
        assert_eq!(l.col(VarKind::LineP, 1), Some(12));
        assert_eq!(l.col(VarKind::LineQ, 4), Some(19));
    }
}
