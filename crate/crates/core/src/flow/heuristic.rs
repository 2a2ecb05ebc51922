use super::{duhamel_step_stats, FlowParams, StepPlan};
use crate::error::{Error, Result};
use crate::geometry::Sphere2;
use crate::operators::OperatorContext;
use crate::scenario;
use crate::spectral::{Field, GridSpec};
use std::f64::consts::PI;
use std::sync::Arc;

/// Exponent parameter of the step bound (4m − 4 = 12).
pub const HEURISTIC_M: i32 = 4;

/// Safety constant c, frozen from `calibrate_heuristic_constant` (which
/// returned ≈ 1.53e32 on the reference scenario) and rounded down.
pub const HEURISTIC_C: f64 = 1.0e32;

/// s = [n/2] + 4.
pub fn heuristic_sobolev_index(dim: usize) -> f64 {
    (dim / 2 + 4) as f64
}

/// min(ε³(1+‖∂v₀‖_{H^s})^{−(4m−4)}, ε^{−1}(1+‖∂v₀‖_{H^s})^{−4}) without the constant.
pub fn heuristic_raw(ctx: &OperatorContext, v0: &Field, eps: f64) -> f64 {
    let s = heuristic_sobolev_index(ctx.grid().dim);
    let a = 1.0 + ctx.spectral.gradient_sobolev_norm(v0, s);
    let first = eps.powi(3) * a.powi(-(4 * HEURISTIC_M - 4));
    let second = a.powi(-4) / eps;
    first.min(second)
}

/// c·raw, capped by the user's dt.
pub fn step_size_heuristic(ctx: &OperatorContext, v0: &Field, p: &FlowParams) -> Result<f64> {
    if !(p.eps > 0.0) {
        return Err(Error::InvalidParam("step-size heuristic needs eps > 0".into()));
    }
    Ok((HEURISTIC_C * heuristic_raw(ctx, v0, p.eps)).min(p.dt))
}

/// Horizon of the uniform energy estimate with C₀ = 1:
/// T₀ = min(1, E(0)^{−K}) / (8K), K = 2n + s + 8, E(0) = ‖∇u₀‖²_{H^s}.
pub fn energy_estimate_horizon(e0: f64, n: usize, s: f64) -> f64 {
    let k = 2.0 * n as f64 + s + 8.0;
    (1.0f64).min(e0.powf(-k)) / (8.0 * k)
}

/// Reference scenario: helical wave θ = π/3, k = 2, M = 256, L = 2π, ε = 1e−3.
pub fn reference_scenario() -> (OperatorContext, Field, FlowParams) {
    let g = GridSpec::new(1, 256, 2.0 * PI).expect("valid grid");
    let ctx = OperatorContext::new(Arc::new(Sphere2), g);
    let v0 = scenario::helical(g, PI / 3.0, 2, 0.0);
    let p = FlowParams {
        eps: 1e-3,
        picard_tol: 1e-12,
        picard_max: 200,
        ..FlowParams::default()
    };
    (ctx, v0, p)
}

/// Observed Picard contraction of one step of size dt on the reference scenario.
pub fn reference_contraction(dt: f64) -> Result<f64> {
    let (ctx, v0, p) = reference_scenario();
    let plan = StepPlan::new(&ctx, p.eps, dt);
    let (_, st) = duhamel_step_stats(&ctx, &v0, &plan, &FlowParams { dt, ..p }, 0.0)?;
    // ratios near the roundoff floor carry no information
    Ok(st
        .diffs
        .windows(2)
        .filter(|w| w[1] > 1e-12)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max))
}

/// Smallest c at which the reference step stops contracting by ½, scanning
/// upward from a safe value and then bisecting in log c. (Very large steps
/// converge again trivially once the semigroup annihilates every nonzero mode,
/// so the scan must find the first failure.)
pub fn calibrate_heuristic_constant() -> f64 {
    let (ctx, v0, p) = reference_scenario();
    let raw = heuristic_raw(&ctx, &v0, p.eps);
    let ok = |lc: f64| matches!(reference_contraction(lc.exp() * raw), Ok(c) if c <= 0.5);
    let mut lo = 1e20f64.ln();
    while !ok(lo) {
        lo -= std::f64::consts::LN_2;
    }
    let mut hi = lo + std::f64::consts::LN_2;
    while ok(hi) {
        lo = hi;
        hi += std::f64::consts::LN_2;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_is_monotone_in_data_size() {
        let (ctx, _, p) = reference_scenario();
        let small = scenario::helical(*ctx.grid(), PI / 3.0, 1, 0.0);
        let big = scenario::helical(*ctx.grid(), PI / 3.0, 4, 0.0);
        assert!(heuristic_raw(&ctx, &big, p.eps) < heuristic_raw(&ctx, &small, p.eps));
    }

    #[test]
    fn first_branch_scales_like_eps_cubed() {
        let (ctx, v0, _) = reference_scenario();
        let a = heuristic_raw(&ctx, &v0, 1e-3);
        let b = heuristic_raw(&ctx, &v0, 1e-4);
        assert!((a / b - 1e3).abs() < 1e-9 * 1e3);
    }

    #[test]
    fn cap_applies() {
        let (ctx, v0, p) = reference_scenario();
        let h = step_size_heuristic(&ctx, &v0, &FlowParams { dt: 1e-9, ..p.clone() }).unwrap();
        assert_eq!(h, 1e-9);
        assert!(step_size_heuristic(&ctx, &v0, &FlowParams { eps: 0.0, ..p }).is_err());
    }
}
