use super::FlowParams;
use crate::operators::{dirichlet_energy, rho_field, rhs_parts_unchecked, OperatorContext};
use crate::spectral::Field;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub tension_energy: f64,
    /// ‖∂v‖_{H^s} for each configured s.
    pub sobolev: Vec<f64>,
    pub sup_rho: f64,
    pub l2_rho: f64,
    /// Relative mismatch of the instantaneous energy identity.
    pub energy_residual: f64,
    pub picard_iters: usize,
    pub wall_ns: u64,
}

/// Both sides of dE/dt = −ε∫|∇τ|² − β∫|τ|² − ε∫⟨R(∇u,τ)∇u,τ⟩ at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// Chain rule: Σ_α ∫⟨∂_α v, ∂_α rhs(v)⟩.
    pub measured: f64,
    pub predicted: f64,
    pub gradient_term: f64,
    pub damping_term: f64,
    pub curvature_term: f64,
}

impl EnergyBalance {
    pub fn residual(&self) -> f64 {
        let scale = self.predicted.abs().max(self.measured.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.measured - self.predicted).abs() / scale
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-hand side of the energy identity, evaluated with u = Π(v),
/// τ = T(v), ∇_α τ = dΠ(∂_α τ).
pub fn energy_balance(ctx: &OperatorContext, v: &Field, eps: f64, beta: f64) -> EnergyBalance {
    let parts = rhs_parts_unchecked(ctx, v);
    let rhs = parts.rhs(eps, beta);
    let sp = &ctx.spectral;
    let dv = sp.gradient(v);
    let drhs = sp.gradient(&rhs);
    let measured: f64 = dv.iter().zip(&drhs).map(|(a, b)| a.inner(b)).sum();
    let tau = &parts.tension;
    let dtau = sp.gradient(tau);
    let m = &*ctx.manifold;
    let p = ctx.p();
    let (mut grad, mut damp, mut curv) = (0.0, 0.0, 0.0);
    let mut q = vec![0.0; p];
    let mut u = vec![0.0; p];
    let mut w = vec![0.0; p];
    let mut x = vec![0.0; p];
    let mut r = vec![0.0; p];
    for i in 0..v.npoints() {
        v.point(i, &mut w);
        m.project_into(&w, &mut q);
        let t = tau.point_vec(i);
        damp += dot(&t, &t);
        for a in 0..dv.len() {
            dtau[a].point(i, &mut x);
            m.d_pi_into(&q, &x, &mut w);
            grad += dot(&w, &w);
            dv[a].point(i, &mut x);
            m.d_pi_into(&q, &x, &mut u);
            m.curvature_into(&q, &u, &t, &u, &mut r);
            curv += dot(&r, &t);
        }
    }
    let cell = v.grid.cell();
    let (gradient_term, damping_term, curvature_term) = (-eps * grad * cell, -beta * damp * cell, -eps * curv * cell);
    EnergyBalance {
        measured,
        predicted: gradient_term + damping_term + curvature_term,
        gradient_term,
        damping_term,
        curvature_term,
    }
}

/// ∫|ρ(v)|².
pub fn rho_l2_sq(ctx: &OperatorContext, v: &Field) -> f64 {
    let r = rho_field(ctx, v);
    r.inner(&r)
}

/// (d/dt ∫|ρ|² by the chain rule, −2∫(β|∇ρ|² + ε|Δρ|²)).
pub fn rho_balance(ctx: &OperatorContext, v: &Field, eps: f64, beta: f64) -> (f64, f64) {
    let r = rho_field(ctx, v);
    let rhs = rhs_parts_unchecked(ctx, v).rhs(eps, beta);
    let measured = 2.0 * r.inner(&rhs);
    let sp = &ctx.spectral;
    let grad: f64 = sp.gradient(&r).iter().map(|g| g.inner(g)).sum();
    let lap = sp.laplacian(&r);
    (measured, -2.0 * (beta * grad + eps * lap.inner(&lap)))
}

pub(crate) fn record(
    ctx: &OperatorContext,
    v: &Field,
    p: &FlowParams,
    t: f64,
    iters: usize,
    wall_ns: u64,
) -> DiagnosticsRecord {
    let sp = &ctx.spectral;
    let spec = sp.forward(v);
    let sobolev = p
        .sobolev_orders
        .iter()
        .map(|&s| sp.gradient_sobolev_norm_of(&spec, s))
        .collect();
    let r = rho_field(ctx, v);
    let tension = rhs_parts_unchecked(ctx, v).tension;
    let energy_residual = if p.energy_residual {
        energy_balance(ctx, v, p.eps, p.beta).residual()
    } else {
        f64::NAN
    };
    DiagnosticsRecord {
        t,
        energy: dirichlet_energy(ctx, v),
        tension_energy: 0.5 * tension.inner(&tension),
        sobolev,
        sup_rho: r.lp_norm(f64::INFINITY),
        l2_rho: r.l2_norm(),
        energy_residual,
        picard_iters: iters,
        wall_ns,
    }
}

/// Worst relative mismatch between dE/dt from a fourth-order central difference
/// of the recorded energies and the right side of the energy identity, sampled
/// every `stride` steps. Needs a trajectory recorded and snapshotted every step.
pub fn differenced_energy_residual(
    ctx: &OperatorContext,
    traj: &super::Trajectory,
    eps: f64,
    beta: f64,
    stride: usize,
) -> f64 {
    let e: Vec<f64> = traj.diagnostics.iter().map(|d| d.energy).collect();
    let n = e.len().min(traj.snapshots.len());
    let dt = traj.dt;
    let mut worst: f64 = 0.0;
    let mut i = 2;
    while i + 2 < n {
        let d = (e[i - 2] - 8.0 * e[i - 1] + 8.0 * e[i + 1] - e[i + 2]) / (12.0 * dt);
        let b = energy_balance(ctx, &traj.snapshots[i], eps, beta);
        worst = worst.max((d - b.predicted).abs() / b.predicted.abs().max(f64::MIN_POSITIVE));
        i += stride.max(1);
    }
    worst
}
