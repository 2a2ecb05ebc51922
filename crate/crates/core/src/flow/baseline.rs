use super::{diagnostics, step_grid, FlowParams, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::gmres;
use crate::operators::OperatorContext;
use crate::spectral::{Field, Multiplier, Spectral};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct MidpointOptions {
    /// Newton stops once max |residual| falls below this.
    pub newton_tol: f64,
    pub newton_max: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max: usize,
}

impl Default for MidpointOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            newton_max: 20,
            gmres_tol: 1e-10,
            gmres_restart: 40,
            gmres_max: 400,
        }
    }
}

fn flat(f: &Field) -> Vec<f64> {
    f.comps.concat()
}

fn unflat(like: &Field, x: &[f64]) -> Field {
    let n = like.npoints();
    Field {
        grid: like.grid,
        comps: x.chunks(n).map(|c| c.to_vec()).collect(),
    }
}

fn cross_field(a: &Field, b: &Field) -> Field {
    let n = a.npoints();
    let mut out = Field::zeros(a.grid, 3);
    for i in 0..n {
        let (a0, a1, a2) = (a.comps[0][i], a.comps[1][i], a.comps[2][i]);
        let (b0, b1, b2) = (b.comps[0][i], b.comps[1][i], b.comps[2][i]);
        out.comps[0][i] = a1 * b2 - a2 * b1;
        out.comps[1][i] = a2 * b0 - a0 * b2;
        out.comps[2][i] = a0 * b1 - a1 * b0;
    }
    out
}

fn dot_field(a: &Field, b: &Field) -> Vec<f64> {
    (0..a.npoints())
        .map(|i| (0..3).map(|c| a.comps[c][i] * b.comps[c][i]).sum())
        .collect()
}

fn scale_by(s: &[f64], f: &Field) -> Field {
    Field {
        grid: f.grid,
        comps: f
            .comps
            .iter()
            .map(|c| c.iter().zip(s).map(|(x, w)| x * w).collect())
            .collect(),
    }
}

/// Frozen-coefficient pieces of one midpoint solve.
struct Linearization<'a> {
    sp: &'a Spectral,
    beta: f64,
    a: f64,
    m: Field,
    lap_m: Field,
    grad_m: Vec<Field>,
    grad_sq: Vec<f64>,
    norm_sq: Vec<f64>,
    tangent_inv: Multiplier,
    normal_inv: Multiplier,
}

/// F(m) = m×Δm + β(Δm + |∂m|²m).
fn ll_rhs(sp: &Spectral, m: &Field, beta: f64) -> Field {
    let lap = sp.laplacian(m);
    let mut f = cross_field(m, &lap);
    if beta != 0.0 {
        let g = sp.gradient(m);
        let mut gs = vec![0.0; m.npoints()];
        for d in &g {
            gs.iter_mut().zip(dot_field(d, d)).for_each(|(s, v)| *s += v);
        }
        f.axpy(beta, &lap.add(&scale_by(&gs, m)));
    }
    f
}

impl<'a> Linearization<'a> {
    fn new(sp: &'a Spectral, m: Field, beta: f64, a: f64) -> Self {
        let lap_m = sp.laplacian(&m);
        let grad_m = sp.gradient(&m);
        let mut grad_sq = vec![0.0; m.npoints()];
        for d in &grad_m {
            grad_sq.iter_mut().zip(dot_field(d, d)).for_each(|(s, v)| *s += v);
        }
        let norm_sq = dot_field(&m, &m);
        let k2 = sp.k2();
        let tangent_inv = Multiplier::real(
            k2.iter()
                .map(|&k| 1.0 / ((1.0 + a * beta * k).powi(2) + a * a * k * k))
                .collect(),
        );
        let normal_inv = Multiplier::real(k2.iter().map(|&k| 1.0 / (1.0 + a * beta * k)).collect());
        Self {
            sp,
            beta,
            a,
            m,
            lap_m,
            grad_m,
            grad_sq,
            norm_sq,
            tangent_inv,
            normal_inv,
        }
    }

    /// δ − a[δ×Δm + m×Δδ + β(Δδ + 2⟨∂m,∂δ⟩m + |∂m|²δ)].
    fn jacobian(&self, d: &Field) -> Field {
        let lap_d = self.sp.laplacian(d);
        let mut lin = cross_field(d, &self.lap_m).add(&cross_field(&self.m, &lap_d));
        if self.beta != 0.0 {
            let gd = self.sp.gradient(d);
            let mut mix = vec![0.0; d.npoints()];
            for (a, b) in self.grad_m.iter().zip(&gd) {
                mix.iter_mut().zip(dot_field(a, b)).for_each(|(s, v)| *s += 2.0 * v);
            }
            let damp = lap_d.add(&scale_by(&mix, &self.m)).add(&scale_by(&self.grad_sq, d));
            lin.axpy(self.beta, &damp);
        }
        d.sub(&lin.scale(self.a))
    }

    /// Frozen-m inverse of (1 − aβΔ) − a m×Δ, split into tangent and normal parts.
    fn precondition(&self, r: &Field) -> Field {
        let mr = dot_field(&self.m, r);
        let coef: Vec<f64> = mr.iter().zip(&self.norm_sq).map(|(a, b)| a / b).collect();
        let rt = r.sub(&scale_by(&coef, &self.m));
        let y = self.sp.apply(&rt, &self.tangent_inv);
        let lap_y = self.sp.laplacian(&y);
        let mut z = y.add(&cross_field(&self.m, &lap_y).scale(self.a));
        if self.beta != 0.0 {
            z.axpy(-self.a * self.beta, &lap_y);
        }
        let scalar = Field {
            grid: r.grid,
            comps: vec![mr],
        };
        let ns = self.sp.apply(&scalar, &self.normal_inv);
        let nc: Vec<f64> = ns.comps[0].iter().zip(&self.norm_sq).map(|(a, b)| a / b).collect();
        z.add(&scale_by(&nc, &self.m))
    }
}

/// One implicit-midpoint step s₁ = s₀ + dt F((s₀+s₁)/2), then s₁ ← s₁/|s₁|.
fn midpoint_step(
    sp: &Spectral,
    s0: &Field,
    guess: Field,
    dt: f64,
    beta: f64,
    o: &MidpointOptions,
    t: f64,
) -> Result<Field> {
    let mut s1 = guess;
    let a = 0.5 * dt;
    for _ in 0..o.newton_max {
        let m = s0.add(&s1).scale(0.5);
        let res = s1.sub(s0).sub(&ll_rhs(sp, &m, beta).scale(dt));
        if !res.is_finite() {
            return Err(Error::MidpointSolveFailed {
                t,
                reason: "non-finite residual".into(),
            });
        }
        if res.max_abs() < o.newton_tol {
            let norms = s1.pointwise_norm();
            let inv: Vec<f64> = norms.iter().map(|n| 1.0 / n).collect();
            return Ok(scale_by(&inv, &s1));
        }
        let lin = Linearization::new(sp, m, beta, a);
        let b = flat(&res.scale(-1.0));
        let mut y = vec![0.0; b.len()];
        let mut op = |x: &[f64]| flat(&lin.jacobian(&lin.precondition(&unflat(&res, x))));
        let out = gmres(&mut op, &b, &mut y, o.gmres_tol, o.gmres_restart, o.gmres_max);
        if !out.converged && out.relative_residual > 1e-3 {
            return Err(Error::MidpointSolveFailed {
                t,
                reason: format!("GMRES stalled at relative residual {:.3e}", out.relative_residual),
            });
        }
        s1 = s1.add(&lin.precondition(&unflat(&res, &y)));
    }
    Err(Error::MidpointSolveFailed {
        t,
        reason: format!("Newton did not converge in {} iterations", o.newton_max),
    })
}

/// ε = 0 reference integrator for S² targets (∂ₜs = s×Δs + βτ(s)).
pub fn baseline_ll_midpoint(ctx: &OperatorContext, v0: &Field, p: &FlowParams) -> Result<Trajectory> {
    baseline_ll_midpoint_with(ctx, v0, p, &MidpointOptions::default())
}

pub fn baseline_ll_midpoint_with(
    ctx: &OperatorContext,
    v0: &Field,
    p: &FlowParams,
    o: &MidpointOptions,
) -> Result<Trajectory> {
    if ctx.manifold.name() != "s2" {
        return Err(Error::InvalidParam(
            "the midpoint baseline supports the S2 target only".into(),
        ));
    }
    if p.eps != 0.0 {
        return Err(Error::InvalidParam(format!(
            "the midpoint baseline runs at eps = 0, got {}",
            p.eps
        )));
    }
    FlowParams {
        unsafe_eps_zero: true,
        ..p.clone()
    }
    .validate()?;
    if v0.p() != 3 {
        return Err(Error::Shape(format!("expected 3 components, got {}", v0.p())));
    }
    let off = v0.pointwise_norm().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    if off > 1e-10 {
        return Err(Error::InvalidParam(format!(
            "initial data is off the sphere (||s|-1| = {off:.3e})"
        )));
    }
    let sp = &ctx.spectral;
    let (nsteps, dt) = step_grid(p.t_end, p.dt);
    let start = Instant::now();
    let mut traj = Trajectory {
        times: vec![0.0],
        snapshots: vec![v0.clone()],
        diagnostics: vec![],
        dt,
        steps: 0,
    };
    traj.diagnostics.push(diagnostics::record(ctx, v0, p, 0.0, 0, 0));
    let mut prev: Option<Field> = None;
    let mut s = v0.clone();
    for k in 1..=nsteps {
        let t = k as f64 * dt;
        let guess = match &prev {
            Some(q) => s.scale(2.0).sub(q),
            None => s.add(&ll_rhs(sp, &s, p.beta).scale(dt)),
        };
        let next = midpoint_step(sp, &s, guess, dt, p.beta, o, t - dt)?;
        prev = Some(std::mem::replace(&mut s, next));
        traj.steps = k;
        if k % p.record_every == 0 || k == nsteps {
            traj.diagnostics
                .push(diagnostics::record(ctx, &s, p, t, 0, start.elapsed().as_nanos() as u64));
        }
        if (p.snapshot_every > 0 && k % p.snapshot_every == 0) || k == nsteps {
            traj.times.push(t);
            traj.snapshots.push(s.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere2;
    use crate::scenario;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn ctx(m: usize) -> OperatorContext {
        OperatorContext::new(Arc::new(Sphere2), GridSpec::new(1, m, 2.0 * PI).unwrap())
    }

    #[test]
    fn helical_wave_phase() {
        let c = ctx(64);
        let v0 = scenario::helical(*c.grid(), PI / 3.0, 2, 0.0);
        let p = FlowParams {
            eps: 0.0,
            beta: 0.0,
            dt: 1e-2,
            t_end: 0.2,
            record_every: 5,
            ..FlowParams::default()
        };
        let tr = baseline_ll_midpoint(&c, &v0, &p).unwrap();
        let exact = scenario::helical(*c.grid(), PI / 3.0, 2, 0.2);
        assert!(crate::spectral::l2_distance(tr.last(), &exact) < 1e-4);
        let e0 = tr.diagnostics[0].energy;
        assert!(tr.diagnostics.iter().all(|d| (d.energy - e0).abs() < 1e-10 * e0));
    }

    #[test]
    fn preserves_unit_length_and_energy_on_random_data() {
        let c = ctx(32);
        let v0 = scenario::random_on_manifold(*c.grid(), &Sphere2, 4, 4, 1.0);
        let p = FlowParams {
            eps: 0.0,
            dt: 1e-3,
            t_end: 0.01,
            record_every: 10,
            ..FlowParams::default()
        };
        let tr = baseline_ll_midpoint(&c, &v0, &p).unwrap();
        let dev = tr
            .last()
            .pointwise_norm()
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12);
        let (e0, e1) = (tr.diagnostics[0].energy, tr.diagnostics.last().unwrap().energy);
        assert!((e1 - e0).abs() < 1e-9 * e0, "{e0} {e1}");
    }

    #[test]
    fn damping_dissipates() {
        let c = ctx(32);
        let v0 = scenario::random_on_manifold(*c.grid(), &Sphere2, 5, 3, 0.8);
        let p = FlowParams {
            eps: 0.0,
            beta: 0.5,
            dt: 1e-3,
            t_end: 0.02,
            record_every: 5,
            ..FlowParams::default()
        };
        let tr = baseline_ll_midpoint(&c, &v0, &p).unwrap();
        assert!(tr.diagnostics.windows(2).all(|w| w[1].energy < w[0].energy));
    }

    #[test]
    fn rejects_torus_and_positive_eps() {
        let c = ctx(16);
        let v0 = Field::constant(*c.grid(), &[0.0, 0.0, 1.0]);
        assert!(baseline_ll_midpoint(&c, &v0, &FlowParams::default()).is_err());
        let p = FlowParams {
            eps: 0.0,
            t_end: 0.01,
            dt: 0.01,
            ..FlowParams::default()
        };
        let tr = baseline_ll_midpoint(&c, &v0, &p).unwrap();
        assert!(tr.last().sub(&v0).max_abs() < 1e-15);
    }
}
