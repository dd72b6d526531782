//! Low-dimensional halfspace polytopes in renewable-generation space.

use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Feasibility slack when filtering candidate vertices (normalized units).
pub const TOL_GEOM: f64 = 1e-8;
/// Two vertices closer than this in the infinity norm are the same vertex.
pub const VERTEX_DEDUP: f64 = 1e-7;
const PARALLEL_ANGLE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("vertex enumeration supports at most 3 dimensions, got {0}")]
    UnsupportedDimension(usize),
    #[error("expected a {expected}-dimensional input, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

/// `a . w <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Halfspace {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }

    /// `a . w - b`; positive means violated.
    pub fn excess(&self, w: &[f64]) -> f64 {
        self.a.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() - self.b
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    fn normalized(&self) -> (Vec<f64>, f64) {
        let n = self.norm();
        (self.a.iter().map(|a| a / n).collect(), self.b / n)
    }
}

/// Intersection of halfspaces whose first `2W` entries are the bounding box.
#[derive(Debug, Serialize, Deserialize)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    #[serde(skip)]
    vertices: OnceLock<Vec<Vec<f64>>>,
}

impl Clone for Polytope {
    fn clone(&self) -> Self {
        let vertices = OnceLock::new();
        if let Some(v) = self.vertices.get() {
            let _ = vertices.set(v.clone());
        }
        Self { dim: self.dim, halfspaces: self.halfspaces.clone(), vertices }
    }
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.halfspaces == other.halfspaces
    }
}

impl Polytope {
    /// `lo <= w <= hi`, stored as `w_i <= hi_i` then `-w_i <= -lo_i` per axis.
    pub fn new_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(GeometryError::InvalidBox("bounds must be nonempty and of equal length".into()));
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(GeometryError::InvalidBox("need finite lo < hi on every axis".into()));
        }
        let dim = lo.len();
        let mut halfspaces = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            halfspaces.push(Halfspace::new(e.clone(), hi[i]));
            e[i] = -1.0;
            halfspaces.push(Halfspace::new(e, -lo[i]));
        }
        Ok(Self { dim, halfspaces, vertices: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Planes added after the initial box.
    pub fn cuts(&self) -> &[Halfspace] {
        &self.halfspaces[2 * self.dim..]
    }

    pub fn box_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let hi = (0..self.dim).map(|i| self.halfspaces[2 * i].b).collect();
        let lo = (0..self.dim).map(|i| -self.halfspaces[2 * i + 1].b).collect();
        (lo, hi)
    }

    /// Adds a plane. A plane nearly parallel to an existing one (same
    /// orientation) only keeps whichever offset is tighter.
    pub fn add_halfspace(&mut self, h: Halfspace) -> Result<(), GeometryError> {
        if h.a.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: h.a.len() });
        }
        let (na, nb) = h.normalized();
        for existing in self.halfspaces.iter_mut() {
            let (ea, eb) = existing.normalized();
            // chord length between unit normals equals the angle to first order
            let chord = na.iter().zip(&ea).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if chord < PARALLEL_ANGLE {
                if nb < eb {
                    *existing = h;
                    self.vertices = OnceLock::new();
                }
                return Ok(());
            }
        }
        self.halfspaces.push(h);
        self.vertices = OnceLock::new();
        Ok(())
    }

    /// `a . w <= b + tol` for every plane (raw, unnormalized coefficients).
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.excess(w) <= tol)
    }

    /// Vertex set, computed once per modification.
    pub fn vertices(&self) -> Result<&[Vec<f64>], GeometryError> {
        if self.dim > 3 {
            return Err(GeometryError::UnsupportedDimension(self.dim));
        }
        Ok(self.vertices.get_or_init(|| enumerate(self.dim, &self.halfspaces)))
    }

    pub fn is_empty(&self) -> Result<bool, GeometryError> {
        Ok(self.vertices()?.is_empty())
    }

    /// Axis-aligned bounds of the vertex set, `None` when empty.
    pub fn bounding_box(&self) -> Result<Option<(Vec<f64>, Vec<f64>)>, GeometryError> {
        let verts = self.vertices()?;
        if verts.is_empty() {
            return Ok(None);
        }
        let mut lo = verts[0].clone();
        let mut hi = verts[0].clone();
        for v in verts {
            for i in 0..self.dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        Ok(Some((lo, hi)))
    }
}

pub fn vertices_of(poly: &Polytope) -> Result<Vec<Vec<f64>>, GeometryError> {
    poly.vertices().map(<[_]>::to_vec)
}

fn enumerate(dim: usize, halfspaces: &[Halfspace]) -> Vec<Vec<f64>> {
    let normed: Vec<(Vec<f64>, f64)> = halfspaces.iter().map(Halfspace::normalized).collect();
    let feasible = |w: &[f64]| {
        normed
            .iter()
            .all(|(a, b)| a.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() - b <= TOL_GEOM)
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |w: Vec<f64>| {
        if w.iter().all(|x| x.is_finite())
            && feasible(&w)
            && !out.iter().any(|v| v.iter().zip(&w).all(|(a, b)| (a - b).abs() < VERTEX_DEDUP))
        {
            out.push(w);
        }
    };
    let m = normed.len();
    match dim {
        1 => {
            for (a, b) in &normed {
                push(vec![b / a[0]]);
            }
        }
        2 => {
            for i in 0..m {
                for j in i + 1..m {
                    let (ai, bi) = &normed[i];
                    let (aj, bj) = &normed[j];
                    let mat = Matrix2::new(ai[0], ai[1], aj[0], aj[1]);
                    if mat.determinant().abs() < 1e-12 {
                        continue;
                    }
                    if let Some(sol) = mat.lu().solve(&Vector2::new(*bi, *bj)) {
                        push(vec![sol[0], sol[1]]);
                    }
                }
            }
        }
        3 => {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        let (ai, bi) = &normed[i];
                        let (aj, bj) = &normed[j];
                        let (ak, bk) = &normed[k];
                        let mat = Matrix3::new(ai[0], ai[1], ai[2], aj[0], aj[1], aj[2], ak[0], ak[1], ak[2]);
                        if mat.determinant().abs() < 1e-12 {
                            continue;
                        }
                        if let Some(sol) = mat.lu().solve(&Vector3::new(*bi, *bj, *bk)) {
                            push(vec![sol[0], sol[1], sol[2]]);
                        }
                    }
                }
            }
        }
        _ => unreachable!("dimension checked by caller"),
    }
    out
}

/// Shoelace area of a 2D polytope; 0 when empty or degenerate.
pub fn polygon_area(poly: &Polytope) -> Result<f64, GeometryError> {
    if poly.dim() != 2 {
        return Err(GeometryError::UnsupportedDimension(poly.dim()));
    }
    let ring = polygon_ring(poly)?;
    if ring.len() < 3 {
        return Ok(0.0);
    }
    let mut twice = 0.0;
    for i in 0..ring.len() {
        let p = &ring[i];
        let q = &ring[(i + 1) % ring.len()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    Ok(0.5 * twice.abs())
}

/// Vertices of a 2D polytope in counter-clockwise order about their centroid.
pub fn polygon_ring(poly: &Polytope) -> Result<Vec<Vec<f64>>, GeometryError> {
    if poly.dim() != 2 {
        return Err(GeometryError::UnsupportedDimension(poly.dim()));
    }
    let mut verts = poly.vertices()?.to_vec();
    if verts.is_empty() {
        return Ok(verts);
    }
    let n = verts.len() as f64;
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / n;
    verts.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.total_cmp(&tb)
    });
    Ok(verts)
}

/// Outer polytope minus the union of holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub outer: Polytope,
    pub holes: Vec<Polytope>,
}

impl Region {
    pub fn new(outer: Polytope) -> Self {
        Self { outer, holes: Vec::new() }
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        region_contains(self, w)
    }
}

/// Membership in `outer` and in no hole, at the fixed tolerance [`TOL_GEOM`].
pub fn region_contains(region: &Region, w: &[f64]) -> bool {
    region.outer.contains(w, TOL_GEOM) && !region.holes.iter().any(|h| h.contains(w, TOL_GEOM))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Polytope {
        Polytope::new_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        v
    }

    #[test]
    fn unit_box_vertices() {
        let v = sorted(vertices_of(&unit()).unwrap());
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn cut_corner() {
        let mut p = unit();
        p.add_halfspace(Halfspace::new(vec![1.0, 1.0], 1.5)).unwrap();
        let v = sorted(vertices_of(&p).unwrap());
        let expect = [[0.0, 0.0], [0.0, 1.0], [0.5, 1.0], [1.0, 0.0], [1.0, 0.5]];
        assert_eq!(v.len(), 5);
        for (a, b) in v.iter().zip(expect) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        assert!((polygon_area(&p).unwrap() - 0.875).abs() < 1e-12);
    }

    #[test]
    fn infeasible_cut_empties() {
        let mut p = unit();
        p.add_halfspace(Halfspace::new(vec![1.0, 0.0], -1.0)).unwrap();
        assert!(p.is_empty().unwrap());
        assert_eq!(polygon_area(&p).unwrap(), 0.0);
    }

    #[test]
    fn box_area_and_membership() {
        let p = unit();
        assert_eq!(polygon_area(&p).unwrap(), 1.0);
        assert!(p.contains(&[0.5, 0.5], 0.0));
        assert!(!p.contains(&[1.0 + 2e-9, 0.5], 1e-9));
    }

    #[test]
    fn parallel_planes_keep_tighter() {
        let mut p = unit();
        p.add_halfspace(Halfspace::new(vec![1.0, 1.0], 1.5)).unwrap();
        p.add_halfspace(Halfspace::new(vec![2.0, 2.0], 2.6)).unwrap();
        assert_eq!(p.cuts().len(), 1);
        assert_eq!(p.cuts()[0].b, 2.6);
        p.add_halfspace(Halfspace::new(vec![1.0, 1.0], 1.9)).unwrap();
        assert_eq!(p.cuts()[0].b, 2.6);
    }

    #[test]
    fn cube_vertices() {
        let p = Polytope::new_box(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(vertices_of(&p).unwrap().len(), 8);
    }

    #[test]
    fn four_dims_unsupported() {
        let p = Polytope::new_box(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(vertices_of(&p).unwrap_err(), GeometryError::UnsupportedDimension(4));
    }

    #[test]
    fn region_with_holes() {
        let mut r = Region::new(unit());
        assert!(r.contains(&[0.5, 0.5]));
        r.holes.push(Polytope::new_box(&[0.5, 0.5], &[1.0, 1.0]).unwrap());
        assert!(r.contains(&[0.2, 0.2]));
        assert!(!r.contains(&[0.8, 0.9]));
        r.holes.push(unit());
        assert!(!r.contains(&[0.2, 0.2]));
    }

    #[test]
    fn serde_drops_cache() {
        let mut p = unit();
        p.add_halfspace(Halfspace::new(vec![1.0, 1.0], 1.5)).unwrap();
        p.vertices().unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: Polytope = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.vertices().unwrap().len(), 5);
    }
}
