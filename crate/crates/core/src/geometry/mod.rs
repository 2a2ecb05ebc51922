//! Embedded targets: nearest-point projection and its derivatives.
//!
//! Kernels work on raw slices (`q`, `x`, ... of length `ambient_dim`) so the
//! field-level operators can call them per grid point without allocating.
//! The free functions at the bottom are the checked, allocating surface.

mod chart;
mod sphere;
mod torus;

pub use chart::{christoffel_s2, ChartPoint, CHART_MARGIN};
pub use sphere::{cross as cross3, Sphere2};
pub use torus::FlatTorus;

use crate::error::{Error, Result};
use std::fmt;

/// Tolerance for "this point is on the manifold".
pub const ON_MANIFOLD_TOL: f64 = 1e-12;
/// Tolerance for "this vector is tangent", relative to max(1, |X|).
pub const TANGENT_TOL: f64 = 1e-10;

pub trait TargetManifold: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn ambient_dim(&self) -> usize;
    fn tubular_radius(&self) -> f64;
    /// |ρ(q)| = dist(q, N).
    fn distance(&self, q: &[f64]) -> f64;
    fn project_into(&self, q: &[f64], out: &mut [f64]);
    /// dΠ_q(x).
    fn d_pi_into(&self, q: &[f64], x: &[f64], out: &mut [f64]);
    /// Hessian of Π at q applied to (x, y).
    fn hess_pi_into(&self, q: &[f64], x: &[f64], y: &[f64], out: &mut [f64]);
    /// Third derivative of Π at q applied to (x, y, z).
    fn third_pi_into(&self, q: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]);
    /// Complex structure at an on-manifold q applied to a tangent x.
    fn j_into(&self, q: &[f64], x: &[f64], out: &mut [f64]);
    /// Riemann tensor R(x, y)z at an on-manifold q, tangent arguments.
    fn curvature_into(&self, q: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]);

    /// Whether Π is defined and smooth at q (e.g. q ≠ 0 for the sphere).
    /// Point-level operations only require this; field-level operators
    /// and the flow enforce the narrower tube `distance < tubular_radius`.
    fn in_domain(&self, q: &[f64]) -> bool;

    fn in_tube(&self, q: &[f64]) -> bool {
        self.distance(q) < self.tubular_radius()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint {
    pub coords: Vec<f64>,
}

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

impl From<&[f64]> for AmbientPoint {
    fn from(c: &[f64]) -> Self {
        Self::new(c.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: AmbientPoint,
    pub vec: Vec<f64>,
}

/// Dense p×p matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl LinearMap {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
    pub fn max_abs_diff(&self, other: &LinearMap) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dim(m: &dyn TargetManifold, v: &[f64]) -> Result<()> {
    if v.len() != m.ambient_dim() {
        return Err(Error::Shape(format!(
            "expected ambient dimension {}, got {}",
            m.ambient_dim(),
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn check_tube(m: &dyn TargetManifold, q: &[f64]) -> Result<()> {
    check_dim(m, q)?;
    let d = m.distance(q);
    if !m.in_domain(q) {
        return Err(Error::OutsideTubularNeighborhood {
            dist: d,
            radius: m.tubular_radius(),
        });
    }
    Ok(())
}

fn check_tangent(m: &dyn TargetManifold, q: &[f64], x: &[f64]) -> Result<()> {
    check_dim(m, x)?;
    let mut px = vec![0.0; x.len()];
    m.d_pi_into(q, x, &mut px);
    let off: f64 = x.iter().zip(&px).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if off > TANGENT_TOL * norm(x).max(1.0) {
        return Err(Error::NotTangent(off));
    }
    Ok(())
}

pub fn project(m: &dyn TargetManifold, q: &AmbientPoint) -> Result<AmbientPoint> {
    check_tube(m, &q.coords)?;
    let mut out = vec![0.0; m.ambient_dim()];
    m.project_into(&q.coords, &mut out);
    Ok(AmbientPoint::new(out))
}

/// ρ(Q) = Q − Π(Q).
pub fn rho(m: &dyn TargetManifold, q: &AmbientPoint) -> Result<Vec<f64>> {
    let p = project(m, q)?;
    Ok(q.coords.iter().zip(&p.coords).map(|(a, b)| a - b).collect())
}

pub fn d_pi(m: &dyn TargetManifold, q: &AmbientPoint) -> Result<LinearMap> {
    check_tube(m, &q.coords)?;
    let p = m.ambient_dim();
    let mut out = LinearMap::zeros(p);
    let mut e = vec![0.0; p];
    let mut col = vec![0.0; p];
    for j in 0..p {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        m.d_pi_into(&q.coords, &e, &mut col);
        for i in 0..p {
            out.data[i * p + j] = col[i];
        }
    }
    Ok(out)
}

pub fn d_rho(m: &dyn TargetManifold, q: &AmbientPoint) -> Result<LinearMap> {
    let mut r = d_pi(m, q)?;
    let id = LinearMap::identity(r.dim);
    for (a, b) in r.data.iter_mut().zip(&id.data) {
        *a = b - *a;
    }
    Ok(r)
}

pub fn hess_pi(m: &dyn TargetManifold, q: &AmbientPoint, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_tube(m, &q.coords)?;
    check_dim(m, x)?;
    check_dim(m, y)?;
    let mut out = vec![0.0; m.ambient_dim()];
    m.hess_pi_into(&q.coords, x, y, &mut out);
    Ok(out)
}

pub fn third_pi(m: &dyn TargetManifold, q: &AmbientPoint, x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_tube(m, &q.coords)?;
    check_dim(m, x)?;
    check_dim(m, y)?;
    check_dim(m, z)?;
    let mut out = vec![0.0; m.ambient_dim()];
    m.third_pi_into(&q.coords, x, y, z, &mut out);
    Ok(out)
}

/// J at an on-manifold point. The base of `x` is ignored in favour of `q`.
pub fn j_apply(m: &dyn TargetManifold, q: &AmbientPoint, x: &TangentVector) -> Result<TangentVector> {
    check_tube(m, &q.coords)?;
    let d = m.distance(&q.coords);
    if d > 1e-8 {
        return Err(Error::InvalidParam(format!(
            "j_apply needs an on-manifold point (|rho| = {d:.3e})"
        )));
    }
    check_tangent(m, &q.coords, &x.vec)?;
    let mut out = vec![0.0; m.ambient_dim()];
    m.j_into(&q.coords, &x.vec, &mut out);
    Ok(TangentVector {
        base: q.clone(),
        vec: out,
    })
}

/// R(X, Y)Z at an on-manifold point.
pub fn curvature(m: &dyn TargetManifold, q: &AmbientPoint, x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_tube(m, &q.coords)?;
    for v in [x, y, z] {
        check_tangent(m, &q.coords, v)?;
    }
    let mut out = vec![0.0; m.ambient_dim()];
    m.curvature_into(&q.coords, x, y, z, &mut out);
    Ok(out)
}

/// Builds a target by name ("s2" or "torus").
pub fn target_by_name(name: &str) -> Option<std::sync::Arc<dyn TargetManifold>> {
    match name {
        "s2" | "sphere" => Some(std::sync::Arc::new(Sphere2)),
        "torus" | "t2" => Some(std::sync::Arc::new(FlatTorus)),
        _ => None,
    }
}
