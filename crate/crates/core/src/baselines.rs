//! Linear comparison models: linearized Dist-Flow and a tangent-plane outer
//! approximation of the line cones. Both feed the same cutting-plane loop.

use serde::{Deserialize, Serialize};

use crate::network::{matrices_without_current, ConeShape, FlowMatrices, ModelKind, RadialNetwork};

pub const DEFAULT_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    LinDistFlow,
    SocpLinear(usize),
}

impl BaselineKind {
    pub fn build(&self, net: &RadialNetwork, mats: &FlowMatrices) -> crate::Result<FlowMatrices> {
        match *self {
            BaselineKind::LinDistFlow => Ok(lindistflow_matrices(net)),
            BaselineKind::SocpLinear(k) => tangent_plane_relaxation(mats, k),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BaselineKind::LinDistFlow => "lindistflow".into(),
            BaselineKind::SocpLinear(k) => format!("socp-linear-{k}"),
        }
    }
}

/// Dist-Flow with the current terms dropped: no `l` columns, no current limits,
/// no cones.
pub fn lindistflow_matrices(net: &RadialNetwork) -> FlowMatrices {
    matrices_without_current(net)
}

/// Replaces every line cone `||y|| <= t` by `u_d . y <= t` over `k` unit
/// directions on a Fibonacci spiral. The result contains the cone relaxation.
pub fn tangent_plane_relaxation(mats: &FlowMatrices, k: usize) -> crate::Result<FlowMatrices> {
    if k < 8 {
        return Err(crate::Error::Input(format!("need at least 8 tangent directions, got {k}")));
    }
    if mats.kind != ModelKind::SocpRelaxation {
        return Err(crate::Error::Input("tangent planes apply to the cone relaxation only".into()));
    }
    let mut out = mats.clone();
    out.cone = ConeShape::Polyhedral(fibonacci_sphere(k));
    out.kind = ModelKind::TangentPlane { directions: k };
    Ok(out)
}

/// `k` quasi-uniform unit vectors in R^3.
pub fn fibonacci_sphere(k: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}
