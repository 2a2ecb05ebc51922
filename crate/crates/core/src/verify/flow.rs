use super::{Bound, Measured, ReportEntry, Suite, VerifyOptions};
use crate::error::{Error, Result};
use crate::flow::{
    baseline_ll_midpoint, differenced_energy_residual, duhamel_step_stats, duhamel_step_with, energy_estimate_horizon,
    epsilon_continuation, integrate, reference_contraction, reference_scenario, rho_balance, step_size_heuristic,
    FlowParams, StepPlan,
};
use crate::geometry::{Sphere2, TargetManifold};
use crate::operators::{project_field, rhs_parts_unchecked, OperatorContext};
use crate::oracle::{exact_helical, rk4};
use crate::scenario;
use crate::spectral::{l2_distance, Field, GridSpec};
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

/// Error of one Duhamel step against a fine RK4 reference, at dt and dt/2.
pub fn one_step_errors(ctx: &OperatorContext, v: &Field, eps: f64, beta: f64, dt: f64) -> Result<(f64, f64)> {
    let p = FlowParams {
        eps,
        beta,
        dt,
        picard_tol: 1e-14,
        picard_max: 200,
        ..FlowParams::default()
    };
    let mut errs = [0.0; 2];
    for (i, h) in [dt, dt / 2.0].into_iter().enumerate() {
        let plan = StepPlan::new(ctx, eps, h);
        let (w, _) = duhamel_step_stats(ctx, v, &plan, &FlowParams { dt: h, ..p.clone() }, 0.0)?;
        let r = rk4(|x| rhs_parts_unchecked(ctx, x).rhs(eps, beta), v, h, 2000);
        errs[i] = l2_distance(&w, &r);
    }
    Ok((errs[0], errs[1]))
}

/// (‖v_dt − v_{dt/2}‖ / ‖v_{dt/2} − v_{dt/4}‖, the finest difference) at t_end.
pub fn halving_ratio(ctx: &OperatorContext, v0: &Field, p: &FlowParams) -> Result<(f64, f64)> {
    let mut finals = Vec::new();
    for k in 0..3 {
        let q = FlowParams {
            dt: p.dt / f64::from(1 << k),
            record_every: usize::MAX / 2,
            energy_residual: false,
            ..p.clone()
        };
        finals.push(integrate(ctx, v0, &q)?.last().clone());
    }
    let (a, b) = (l2_distance(&finals[0], &finals[1]), l2_distance(&finals[1], &finals[2]));
    Ok((a / b, b))
}

/// Largest ‖∇u(t)‖_{H^s} / ‖∇u₀‖_{H^s} over [0, T₀] for each ε, u = Π(v).
pub fn uniform_energy_ratio(ctx: &OperatorContext, v0: &Field, eps_list: &[f64], s: f64) -> Result<(f64, f64)> {
    let sp = &ctx.spectral;
    let norm = |v: &Field| sp.gradient_sobolev_norm(&project_field(ctx, v), s);
    let n0 = norm(v0);
    let t0 = energy_estimate_horizon(n0 * n0, ctx.grid().dim, s);
    let mut worst: f64 = 0.0;
    for &eps in eps_list {
        let p = FlowParams {
            eps,
            dt: t0 / 10.0,
            t_end: t0,
            record_every: 1,
            snapshot_every: 1,
            energy_residual: false,
            ..FlowParams::default()
        };
        let tr = integrate(ctx, v0, &p)?;
        for v in &tr.snapshots {
            worst = worst.max(norm(v) / n0);
        }
    }
    Ok((worst, t0))
}

pub(super) fn run(opts: &VerifyOptions) -> Vec<ReportEntry> {
    let mut s = Suite::new("flow", opts);
    let seed = opts.seed;
    let line = |m| GridSpec::new(1, m, 2.0 * PI).expect("grid");
    let s2 = || -> Arc<dyn TargetManifold> { Arc::new(Sphere2) };
    let (theta, k) = (PI / 3.0, 2);

    s.check(
        "semigroup_step",
        "one step with N ≡ 0 equals the exact semigroup",
        json!({ "m": 32, "eps": 0.02, "dt": 0.1 }),
        1e-14,
        Bound::Max,
        || {
            let g = line(32);
            let ctx = opts.ctx(s2(), g);
            let v = scenario::random_on_manifold(g, &Sphere2, seed + 1, 3, 0.8);
            let p = FlowParams {
                eps: 0.02,
                dt: 0.1,
                ..FlowParams::default()
            };
            let zero = |w: &Field| Field::zeros(w.grid, w.p());
            let (w, _) = duhamel_step_with(&ctx, &v, &StepPlan::new(&ctx, p.eps, p.dt), &p, 0.0, &zero)?;
            Ok(w.sub(&ctx.spectral.semigroup(&v, p.eps, p.dt)).max_abs().into())
        },
    );
    s.check(
        "constant_map",
        "a constant map is a fixed point",
        json!({ "m": 32, "eps": 1e-3, "t": 0.1 }),
        1e-14,
        Bound::Max,
        || {
            let g = line(32);
            let ctx = opts.ctx(s2(), g);
            let v = Field::constant(g, &[0.6, 0.0, 0.8]);
            let p = FlowParams {
                eps: 1e-3,
                beta: 0.1,
                dt: 1e-2,
                t_end: 0.1,
                ..FlowParams::default()
            };
            Ok(integrate(&ctx, &v, &p)?.last().sub(&v).max_abs().into())
        },
    );
    s.check(
        "manifold_preservation",
        "sup ρ along the regularized flow from on-manifold data",
        json!({ "m": 128, "eps": 1e-3, "beta": 0.1, "dt": 1e-3, "t": 0.2 }),
        1e-6,
        Bound::Max,
        || {
            let g = line(128);
            let ctx = opts.ctx(s2(), g);
            let v0 = scenario::helical(g, theta, k, 0.0);
            let p = FlowParams {
                eps: 1e-3,
                beta: 0.1,
                dt: 1e-3,
                t_end: 0.2,
                energy_residual: false,
                ..FlowParams::default()
            };
            let tr = integrate(&ctx, &v0, &p)?;
            Ok(tr.diagnostics.iter().map(|d| d.sup_rho).fold(0.0, f64::max).into())
        },
    );
    s.check(
        "rho_balance",
        "d/dt ∫ρ² against its dissipation identity off the manifold",
        json!({ "m": 256, "eps": 1e-3, "beta": [0.0, 0.1] }),
        1e-3,
        Bound::Max,
        || {
            let g = line(256);
            let ctx = opts.ctx(s2(), g);
            let u = scenario::random_on_manifold(g, &Sphere2, seed + 11, 4, 0.8);
            let v = scenario::radial_perturbation(&u, seed + 12, 3, 0.05);
            let mut worst: f64 = 0.0;
            for beta in [0.0, 0.1] {
                let (m, pr) = rho_balance(&ctx, &v, 1e-3, beta);
                worst = worst.max((m - pr).abs() / pr.abs());
            }
            let (m, pr) = rho_balance(&ctx.clone().with_dealias(false), &v, 1e-3, 0.1);
            Ok(Measured::with(
                worst,
                vec![("remainder_without_dealiasing", (m - pr).abs() / pr.abs())],
            ))
        },
    );
    s.check(
        "energy_identity",
        "differenced dE/dt against the energy identity (bump)",
        json!({ "m": 128, "eps": 1e-2, "beta": 0.1, "dt": 1e-3, "t": 0.05 }),
        1e-3,
        Bound::Max,
        || {
            let g = line(128);
            let ctx = opts.ctx(s2(), g);
            let v0 = scenario::bump(g, &Sphere2, 1.0, 0.8);
            let p = FlowParams {
                eps: 1e-2,
                beta: 0.1,
                dt: 1e-3,
                t_end: 0.05,
                record_every: 1,
                snapshot_every: 1,
                energy_residual: false,
                ..FlowParams::default()
            };
            let tr = integrate(&ctx, &v0, &p)?;
            Ok(differenced_energy_residual(&ctx, &tr, p.eps, p.beta, 5).into())
        },
    );

    let baseline = || -> Result<(f64, f64, f64)> {
        let g = line(64);
        let ctx = opts.ctx(s2(), g);
        let v0 = scenario::helical(g, theta, k, 0.0);
        let p = FlowParams {
            eps: 0.0,
            dt: 1e-3,
            t_end: 0.2,
            record_every: 10,
            snapshot_every: 10,
            ..FlowParams::default()
        };
        let tr = baseline_ll_midpoint(&ctx, &v0, &p)?;
        let unit = tr
            .snapshots
            .iter()
            .flat_map(|v| v.pointwise_norm())
            .map(|r| (r - 1.0).abs())
            .fold(0.0, f64::max);
        let e0 = tr.diagnostics[0].energy;
        let drift = tr
            .diagnostics
            .iter()
            .map(|d| (d.energy - e0).abs() / e0)
            .fold(0.0, f64::max);
        let exact = Field::from_fn(g, 3, |x, o| {
            o.copy_from_slice(&exact_helical(theta, k, tr.times[tr.times.len() - 1], x[0]))
        });
        Ok((unit, drift, l2_distance(tr.last(), &exact)))
    };
    let b = baseline();
    let pick = |i: usize| -> Result<Measured> {
        match &b {
            Ok(t) => Ok([t.0, t.1, t.2][i].into()),
            Err(e) => Err(Error::InvalidParam(e.to_string())),
        }
    };
    s.check(
        "baseline_unit_length",
        "max ||s| − 1| along the implicit-midpoint baseline",
        json!({ "m": 64, "dt": 1e-3, "t": 0.2 }),
        1e-9,
        Bound::Max,
        || pick(0),
    );
    s.check(
        "baseline_energy_drift",
        "relative Dirichlet energy drift of the baseline",
        json!({ "m": 64, "dt": 1e-3, "t": 0.2 }),
        1e-6,
        Bound::Max,
        || pick(1),
    );
    s.check(
        "baseline_helical_phase",
        "baseline against the exact helical solution",
        json!({ "m": 64, "dt": 1e-3, "t": 0.2 }),
        1e-4,
        Bound::Max,
        || pick(2),
    );

    s.check(
        "picard_contraction",
        "observed Picard contraction at the heuristic step",
        json!({ "scenario": "reference" }),
        0.5,
        Bound::Max,
        || {
            let (ctx, v0, p) = reference_scenario();
            let dt = step_size_heuristic(&ctx, &v0, &FlowParams { dt: 1.0, ..p })?;
            Ok(Measured::with(reference_contraction(dt)?, vec![("dt", dt)]))
        },
    );
    s.check(
        "one_step_oracle",
        "one-step error ratio under halving against an RK4 reference (8 points)",
        json!({ "m": 8, "eps": 0.05, "beta": 0.1, "dt": 0.02 }),
        4.0,
        Bound::Min,
        || {
            let g = line(8);
            let ctx = opts.ctx(s2(), g).with_dealias(false);
            let v = scenario::random_on_manifold(g, &Sphere2, seed + 21, 2, 0.5);
            let (e1, e2) = one_step_errors(&ctx, &v, 0.05, 0.1, 0.02)?;
            Ok(Measured::with(e1 / e2, vec![("error_dt", e1), ("error_half", e2)]))
        },
    );
    s.check(
        "halving_convergence",
        "ratio of successive differences under dt halving (second order gives 4)",
        json!({ "m": 64, "eps": 1e-2, "dt": 0.02, "t": 0.2 }),
        3.0,
        Bound::Min,
        || {
            let g = line(64);
            let ctx = opts.ctx(s2(), g);
            let v0 = scenario::helical(g, theta, k, 0.0);
            let p = FlowParams {
                eps: 1e-2,
                dt: 0.02,
                t_end: 0.2,
                picard_tol: 1e-13,
                picard_max: 200,
                ..FlowParams::default()
            };
            let (r, d) = halving_ratio(&ctx, &v0, &p)?;
            Ok(Measured::with(r, vec![("finest_difference", d)]))
        },
    );
    s.check(
        "uniform_energy",
        "‖∇u‖_{H^6} over [0, T₀] relative to its initial value (bump)",
        json!({ "m": 64, "eps": [1e-1, 1e-2, 1e-3, 1e-4] }),
        3.0,
        Bound::Max,
        || {
            let g = line(64);
            let ctx = opts.ctx(s2(), g);
            let v0 = scenario::bump(g, &Sphere2, 1.0, 0.8);
            let (r, t0) = uniform_energy_ratio(&ctx, &v0, &[1e-1, 1e-2, 1e-3, 1e-4], 6.0)?;
            Ok(Measured::with(r, vec![("t0", t0)]).note("horizon uses C0 = 1"))
        },
    );
    s.check(
        "continuation_monotone",
        "largest ratio of consecutive ε-pair distances (Cauchy behaviour)",
        json!({ "m": 64, "eps": [0.1, 0.01, 0.001], "t": 0.2 }),
        1.0,
        Bound::Max,
        || {
            let g = line(64);
            let ctx = opts.ctx(s2(), g);
            let v0 = scenario::helical(g, theta, k, 0.0);
            let p = FlowParams {
                dt: 1e-3,
                t_end: 0.2,
                energy_residual: false,
                ..FlowParams::default()
            };
            let c = epsilon_continuation(&ctx, &v0, &[0.1, 0.01, 0.001], &p)?;
            let d: Vec<f64> = c.final_distances().iter().map(|d| d.l2).collect();
            Ok(d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max).into())
        },
    );
    s.entries
}
