//! Field-level operators of the regularized ambient flow.
//!
//! With H the Hessian of Π and D³Π its derivative:
//!
//! ```text
//! T(v)   = Δv − Σ_α H(v; v_α, v_α)
//! 𝒢(v)   = ½∫|T|²
//! 𝓕(v)   = ΔT − A + 2 Σ_α ∂_α B_α          (L² gradient of 𝒢)
//!          A^c   = Σ_α ⟨T, D³Π(v; v_α, v_α, e_c)⟩
//!          B_α^c = ⟨T, H(v; v_α, e_c)⟩
//! 𝓕̃(v)  = Δ²v − 𝓕(v)
//! 𝓗(v)   = Δ(Σ_α H(v_α,v_α)) + Σ_α ∂_α H(Δv, v_α) + Σ_α H(∂_αΔv, v_α) − dρ_v(𝓕̃)
//! f_v    = J_{Π(v)} dΠ_v(Δv)
//! rhs    = −ε(𝓕 − 𝓗) + f_v + βT
//! N(v)   = rhs + εΔ²v
//! ```
//!
//! Nonlinear products are formed pointwise and (optionally) passed through
//! the 2/3-rule filter; linear terms are exact multipliers.

use crate::error::{Error, Result};
use crate::exec::{for_each_point, Exec};
use crate::geometry::TargetManifold;
use crate::spectral::{Field, GridSpec, Multiplier, Spectral, Spectrum};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const MAX_P: usize = 4;

/// Deliberate defects used to check that the verification suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    /// Flip the sign of H in the B_α terms of 𝓕 and in the three explicit
    /// terms of 𝓗 (T and 𝒢 are left intact).
    FlipHessianSign,
}

struct Mults {
    dx: Vec<Multiplier>,
    lap: Multiplier,
    dlap: Vec<Multiplier>,
    bilap: Multiplier,
    mask: Multiplier,
    lap_mask: Multiplier,
    dx_mask: Vec<Multiplier>,
}

pub struct OperatorContext {
    pub manifold: Arc<dyn TargetManifold>,
    pub spectral: Spectral,
    pub dealias: bool,
    pub mutation: Option<Mutation>,
    m: Mults,
}

impl std::fmt::Debug for OperatorContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorContext")
            .field("manifold", &self.manifold.name())
            .field("grid", self.spectral.grid())
            .field("dealias", &self.dealias)
            .field("mutation", &self.mutation)
            .finish()
    }
}

impl Clone for OperatorContext {
    fn clone(&self) -> Self {
        let mut c = Self::new(self.manifold.clone(), *self.spectral.grid());
        c.spectral.exec = self.spectral.exec;
        c.dealias = self.dealias;
        c.mutation = self.mutation;
        c
    }
}

impl OperatorContext {
    pub fn new(manifold: Arc<dyn TargetManifold>, grid: GridSpec) -> Self {
        assert!(manifold.ambient_dim() <= MAX_P, "ambient dimension above {MAX_P}");
        let sp = Spectral::new(grid);
        let dx: Vec<Multiplier> = (0..grid.dim).map(|a| sp.derivative_multiplier(a, 1)).collect();
        let lap = sp.laplacian_multiplier();
        let dlap = dx.iter().map(|d| d.compose(&lap)).collect();
        let mask = sp.dealias_multiplier();
        let m = Mults {
            lap_mask: lap.compose(&mask),
            dx_mask: dx.iter().map(|d| d.compose(&mask)).collect(),
            bilap: sp.bilaplacian_multiplier(),
            dx,
            lap,
            dlap,
            mask,
        };
        Self {
            manifold,
            spectral: sp,
            dealias: true,
            mutation: None,
            m,
        }
    }

    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn with_mutation(mut self, m: Option<Mutation>) -> Self {
        self.mutation = m;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.spectral.exec = exec;
        self
    }

    pub fn exec(&self) -> Exec {
        self.spectral.exec
    }

    pub fn grid(&self) -> &GridSpec {
        self.spectral.grid()
    }

    pub fn p(&self) -> usize {
        self.manifold.ambient_dim()
    }

    fn hsign(&self) -> f64 {
        if self.mutation == Some(Mutation::FlipHessianSign) {
            -1.0
        } else {
            1.0
        }
    }

    fn check_shape(&self, v: &Field) -> Result<()> {
        if v.grid != *self.grid() {
            return Err(Error::Shape("field grid differs from context grid".into()));
        }
        if v.p() != self.p() {
            return Err(Error::Shape(format!(
                "field has {} components, target needs {}",
                v.p(),
                self.p()
            )));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Largest |ρ(v(x))| over the listed points (all points if `None`).
    pub fn max_distance(&self, v: &Field, points: Option<&[usize]>) -> f64 {
        let p = self.p();
        let mut q = [0.0; MAX_P];
        let mut worst = 0.0f64;
        let mut visit = |i: usize| {
            v.point(i, &mut q[..p]);
            worst = worst.max(self.manifold.distance(&q[..p]));
        };
        match points {
            Some(idx) => idx.iter().for_each(|&i| visit(i)),
            None => (0..v.npoints()).for_each(&mut visit),
        }
        worst
    }

    /// Tube membership at the given points (all if `None`).
    pub fn check_tube(&self, v: &Field, points: Option<&[usize]>) -> Result<()> {
        self.check_shape(v)?;
        let d = self.max_distance(v, points);
        let r = self.manifold.tubular_radius();
        if d >= r || !d.is_finite() {
            return Err(Error::OutsideTubularNeighborhood { dist: d, radius: r });
        }
        Ok(())
    }

    fn filt(&self, f: Field) -> Field {
        if self.dealias {
            self.spectral.apply(&f, &self.m.mask)
        } else {
            f
        }
    }

    fn filt_then(&self, f: &Field, plain: &Multiplier, masked: &Multiplier) -> Field {
        let s = self.spectral.forward(f);
        self.spectral.apply_to(&s, if self.dealias { masked } else { plain })
    }

    /// Pointwise map over grid points; `f(i, out)` fills `width` values.
    fn pointwise(&self, width: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) -> Vec<f64> {
        let mut out = vec![0.0; width * self.grid().npoints()];
        for_each_point(self.exec(), &mut out, width, f);
        out
    }

    fn split(&self, data: &[f64], width: usize, blocks: usize) -> Vec<Field> {
        let p = self.p();
        let g = *self.grid();
        let n = g.npoints();
        (0..blocks)
            .map(|b| {
                let mut comps = vec![vec![0.0; n]; p];
                for i in 0..n {
                    for a in 0..p {
                        comps[a][i] = data[i * width + b * p + a];
                    }
                }
                Field { grid: g, comps }
            })
            .collect()
    }
}

fn gather(f: &Field, i: usize, buf: &mut [f64; MAX_P]) {
    for (a, c) in f.comps.iter().enumerate() {
        buf[a] = c[i];
    }
}

/// Spectral derivatives of v needed by every operator.
struct Derivs {
    spec: Spectrum,
    dv: Vec<Field>,
    lap: Field,
}

impl Derivs {
    fn new(ctx: &OperatorContext, v: &Field) -> Self {
        let spec = ctx.spectral.forward(v);
        let dv = ctx.m.dx.iter().map(|m| ctx.spectral.apply_to(&spec, m)).collect();
        let lap = ctx.spectral.apply_to(&spec, &ctx.m.lap);
        Self { spec, dv, lap }
    }
}

/// Σ_α H(v; v_α, v_α), unfiltered.
fn hess_trace(ctx: &OperatorContext, v: &Field, d: &Derivs, sign: f64) -> Field {
    let p = ctx.p();
    let m = &*ctx.manifold;
    let data = ctx.pointwise(p, |i, out| {
        let (mut q, mut x, mut h) = ([0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P]);
        gather(v, i, &mut q);
        out.iter_mut().for_each(|o| *o = 0.0);
        for dva in &d.dv {
            gather(dva, i, &mut x);
            m.hess_pi_into(&q[..p], &x[..p], &x[..p], &mut h[..p]);
            for a in 0..p {
                out[a] += sign * h[a];
            }
        }
    });
    Field::from_point_major(*ctx.grid(), p, &data)
}

struct TensionParts {
    /// Filtered Σ_α H(v_α, v_α) in spectral form.
    trace_spec: Spectrum,
    t: Field,
}

fn tension_parts(ctx: &OperatorContext, v: &Field, d: &Derivs) -> TensionParts {
    let raw = hess_trace(ctx, v, d, 1.0);
    let trace_spec = ctx.spectral.forward(&raw);
    let filtered = if ctx.dealias {
        ctx.spectral.apply_to(&trace_spec, &ctx.m.mask)
    } else {
        raw
    };
    TensionParts {
        trace_spec,
        t: d.lap.sub(&filtered),
    }
}

/// 𝓕(v) given T.
fn el_from_parts(ctx: &OperatorContext, v: &Field, d: &Derivs, t: &Field) -> Field {
    let p = ctx.p();
    let dim = ctx.grid().dim;
    let m = &*ctx.manifold;
    let hs = ctx.hsign();
    let width = p * (1 + dim);
    let data = ctx.pointwise(width, |i, out| {
        let (mut q, mut x, mut tt, mut e, mut w) =
            ([0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P]);
        gather(v, i, &mut q);
        gather(t, i, &mut tt);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (al, dva) in d.dv.iter().enumerate() {
            gather(dva, i, &mut x);
            for c in 0..p {
                e[..p].iter_mut().for_each(|z| *z = 0.0);
                e[c] = 1.0;
                m.third_pi_into(&q[..p], &x[..p], &x[..p], &e[..p], &mut w[..p]);
                out[c] += (0..p).map(|b| tt[b] * w[b]).sum::<f64>();
                m.hess_pi_into(&q[..p], &x[..p], &e[..p], &mut w[..p]);
                out[p * (1 + al) + c] = hs * (0..p).map(|b| tt[b] * w[b]).sum::<f64>();
            }
        }
    });
    let parts = ctx.split(&data, width, 1 + dim);
    let lap_t = ctx.spectral.apply(t, &ctx.m.lap);
    let mut f = lap_t.sub(&ctx.filt(parts[0].clone()));
    for al in 0..dim {
        let db = ctx.filt_then(&parts[1 + al], &ctx.m.dx[al], &ctx.m.dx_mask[al]);
        f.axpy(2.0, &db);
    }
    f
}

struct Assembly {
    t: Field,
    el: Field,
    h: Field,
    fv: Field,
    bilap: Field,
}

fn assemble(ctx: &OperatorContext, v: &Field) -> Assembly {
    let p = ctx.p();
    let dim = ctx.grid().dim;
    let m = &*ctx.manifold;
    let hs = ctx.hsign();
    let d = Derivs::new(ctx, v);
    let tp = tension_parts(ctx, v, &d);
    let el = el_from_parts(ctx, v, &d, &tp.t);
    let dlap: Vec<Field> = ctx.m.dlap.iter().map(|mm| ctx.spectral.apply_to(&d.spec, mm)).collect();
    let bilap = ctx.spectral.apply_to(&d.spec, &ctx.m.bilap);
    let ftilde = bilap.sub(&el);
    // blocks: [Σ H(∂_αΔv, v_α), dρ(𝓕̃), f_v, H(Δv, v_α) for each α]
    let width = p * (3 + dim);
    let data = ctx.pointwise(width, |i, out| {
        let (mut q, mut x, mut y, mut z, mut w, mut pq) = (
            [0.0; MAX_P],
            [0.0; MAX_P],
            [0.0; MAX_P],
            [0.0; MAX_P],
            [0.0; MAX_P],
            [0.0; MAX_P],
        );
        gather(v, i, &mut q);
        out.iter_mut().for_each(|o| *o = 0.0);
        gather(&d.lap, i, &mut y);
        for al in 0..dim {
            gather(&d.dv[al], i, &mut x);
            gather(&dlap[al], i, &mut z);
            m.hess_pi_into(&q[..p], &z[..p], &x[..p], &mut w[..p]);
            for a in 0..p {
                out[a] += hs * w[a];
            }
            m.hess_pi_into(&q[..p], &y[..p], &x[..p], &mut w[..p]);
            for a in 0..p {
                out[p * (3 + al) + a] = hs * w[a];
            }
        }
        gather(&ftilde, i, &mut z);
        m.d_pi_into(&q[..p], &z[..p], &mut w[..p]);
        for a in 0..p {
            out[p + a] = z[a] - w[a];
        }
        // f_v = J_{Π(v)} dΠ_v(Δv)
        m.d_pi_into(&q[..p], &y[..p], &mut w[..p]);
        m.project_into(&q[..p], &mut pq[..p]);
        m.j_into(&pq[..p], &w[..p], &mut x[..p]);
        out[2 * p..3 * p].copy_from_slice(&x[..p]);
    });
    let parts = ctx.split(&data, width, 3 + dim);
    let mut h = ctx
        .spectral
        .apply_to(&tp.trace_spec, if ctx.dealias { &ctx.m.lap_mask } else { &ctx.m.lap });
    if hs < 0.0 {
        h = h.scale(-1.0);
    }
    for al in 0..dim {
        h.axpy(1.0, &ctx.filt_then(&parts[3 + al], &ctx.m.dx[al], &ctx.m.dx_mask[al]));
    }
    h.axpy(1.0, &ctx.filt(parts[0].clone()));
    h.axpy(-1.0, &ctx.filt(parts[1].clone()));
    let fv = ctx.filt(parts[2].clone());
    Assembly {
        t: tp.t,
        el,
        h,
        fv,
        bilap,
    }
}

pub fn tension_ambient(ctx: &OperatorContext, v: &Field) -> Result<Field> {
    ctx.check_tube(v, None)?;
    let d = Derivs::new(ctx, v);
    Ok(tension_parts(ctx, v, &d).t)
}

pub fn schrodinger_term(ctx: &OperatorContext, v: &Field) -> Result<Field> {
    ctx.check_tube(v, None)?;
    let p = ctx.p();
    let m = &*ctx.manifold;
    let lap = ctx.spectral.laplacian(v);
    let data = ctx.pointwise(p, |i, out| {
        let (mut q, mut y, mut w, mut pq) = ([0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P]);
        gather(v, i, &mut q);
        gather(&lap, i, &mut y);
        m.d_pi_into(&q[..p], &y[..p], &mut w[..p]);
        m.project_into(&q[..p], &mut pq[..p]);
        m.j_into(&pq[..p], &w[..p], out);
    });
    Ok(ctx.filt(Field::from_point_major(*ctx.grid(), p, &data)))
}

/// 𝓕(v), the L² gradient of 𝒢.
pub fn el_operator(ctx: &OperatorContext, v: &Field) -> Result<Field> {
    ctx.check_tube(v, None)?;
    let d = Derivs::new(ctx, v);
    let tp = tension_parts(ctx, v, &d);
    Ok(el_from_parts(ctx, v, &d, &tp.t))
}

/// 𝓕̃(v) = Δ²v − 𝓕(v).
pub fn el_lower_order(ctx: &OperatorContext, v: &Field) -> Result<Field> {
    let f = el_operator(ctx, v)?;
    Ok(ctx.spectral.apply(v, &ctx.m.bilap).sub(&f))
}

/// 𝓗(v).
pub fn normal_correction(ctx: &OperatorContext, v: &Field) -> Result<Field> {
    ctx.check_tube(v, None)?;
    Ok(assemble(ctx, v).h)
}

/// Pointwise dρ_v(w) = w − dΠ_v(w).
pub fn d_rho_field(ctx: &OperatorContext, v: &Field, w: &Field) -> Field {
    let p = ctx.p();
    let m = &*ctx.manifold;
    let data = ctx.pointwise(p, |i, out| {
        let (mut q, mut x, mut y) = ([0.0; MAX_P], [0.0; MAX_P], [0.0; MAX_P]);
        gather(v, i, &mut q);
        gather(w, i, &mut x);
        m.d_pi_into(&q[..p], &x[..p], &mut y[..p]);
        for a in 0..p {
            out[a] = x[a] - y[a];
        }
    });
    Field::from_point_major(*ctx.grid(), p, &data)
}

/// Pointwise dΠ_v(w).
pub fn d_pi_field(ctx: &OperatorContext, v: &Field, w: &Field) -> Field {
    let p = ctx.p();
    let m = &*ctx.manifold;
    let data = ctx.pointwise(p, |i, out| {
        let (mut q, mut x) = ([0.0; MAX_P], [0.0; MAX_P]);
        gather(v, i, &mut q);
        gather(w, i, &mut x);
        m.d_pi_into(&q[..p], &x[..p], out);
    });
    Field::from_point_major(*ctx.grid(), p, &data)
}

/// Pointwise Π(v).
pub fn project_field(ctx: &OperatorContext, v: &Field) -> Field {
    let p = ctx.p();
    let m = &*ctx.manifold;
    let data = ctx.pointwise(p, |i, out| {
        let mut q = [0.0; MAX_P];
        gather(v, i, &mut q);
        m.project_into(&q[..p], out);
    });
    Field::from_point_major(*ctx.grid(), p, &data)
}

/// Pointwise ρ(v) = v − Π(v).
pub fn rho_field(ctx: &OperatorContext, v: &Field) -> Field {
    v.sub(&project_field(ctx, v))
}

/// All pieces of the right-hand side at once.
#[derive(Debug, Clone)]
pub struct RhsParts {
    pub tension: Field,
    pub el: Field,
    pub normal: Field,
    pub schrodinger: Field,
    pub bilap: Field,
}

impl RhsParts {
    pub fn rhs(&self, eps: f64, beta: f64) -> Field {
        let mut r = self.el.sub(&self.normal).scale(-eps);
        r.axpy(1.0, &self.schrodinger);
        r.axpy(beta, &self.tension);
        r
    }

    pub fn n(&self, eps: f64, beta: f64) -> Field {
        let mut r = self.rhs(eps, beta);
        r.axpy(eps, &self.bilap);
        r
    }
}

pub fn rhs_parts_unchecked(ctx: &OperatorContext, v: &Field) -> RhsParts {
    let a = assemble(ctx, v);
    RhsParts {
        tension: a.t,
        el: a.el,
        normal: a.h,
        schrodinger: a.fv,
        bilap: a.bilap,
    }
}

pub fn rhs_parts(ctx: &OperatorContext, v: &Field) -> Result<RhsParts> {
    ctx.check_tube(v, None)?;
    Ok(rhs_parts_unchecked(ctx, v))
}

fn check_coeffs(eps: f64, beta: f64) -> Result<()> {
    if !(eps >= 0.0 && beta >= 0.0 && eps.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "eps and beta must be finite and >= 0 (eps={eps}, beta={beta})"
        )));
    }
    Ok(())
}

/// −ε(𝓕 − 𝓗) + f_v + βT.
pub fn rhs_regularized(ctx: &OperatorContext, v: &Field, eps: f64, beta: f64) -> Result<Field> {
    check_coeffs(eps, beta)?;
    Ok(rhs_parts(ctx, v)?.rhs(eps, beta))
}

/// N(v) = rhs + εΔ²v (derivatives of order ≤ 3 only).
pub fn nonlinear_n(ctx: &OperatorContext, v: &Field, eps: f64, beta: f64) -> Result<Field> {
    check_coeffs(eps, beta)?;
    Ok(rhs_parts(ctx, v)?.n(eps, beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    /// E = ½‖∂v‖²
    pub energy: f64,
    /// 𝒢 = ½‖T(v)‖²
    pub tension_energy: f64,
}

/// E = ½ Σ_α ‖∂_α v‖².
pub fn dirichlet_energy(ctx: &OperatorContext, v: &Field) -> f64 {
    let g = ctx.spectral.gradient_sobolev_norm(v, 0.0);
    0.5 * g * g
}

/// Discrete 𝒢(v) (no tube check; used by the finite-difference oracle).
pub fn tension_energy_unchecked(ctx: &OperatorContext, v: &Field) -> f64 {
    let d = Derivs::new(ctx, v);
    let t = tension_parts(ctx, v, &d).t;
    0.5 * t.inner(&t)
}

pub fn functionals(ctx: &OperatorContext, v: &Field) -> Result<Functionals> {
    ctx.check_tube(v, None)?;
    Ok(Functionals {
        energy: dirichlet_energy(ctx, v),
        tension_energy: tension_energy_unchecked(ctx, v),
    })
}
