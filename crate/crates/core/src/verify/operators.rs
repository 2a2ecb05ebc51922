use super::{Bound, Measured, ReportEntry, Suite, VerifyOptions};
use crate::error::Result;
use crate::geometry::{FlatTorus, Sphere2, TargetManifold};
use crate::operators::{
    d_rho_field, dirichlet_energy, el_lower_order, el_operator, nonlinear_n, normal_correction, schrodinger_term,
    tension_ambient, tension_energy_unchecked, OperatorContext,
};
use crate::oracle::{fd_gateaux, OracleConfig};
use crate::scenario;
use crate::spectral::{Field, GridSpec};
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

/// Worst relative gap between ⟨𝓕(v), φ⟩ and the differenced derivative of 𝒢
/// over `pairs` random (v in the tube, φ) pairs.
pub fn variational_gap(ctx: &OperatorContext, target: &dyn TargetManifold, seed: u64, pairs: usize) -> Result<f64> {
    let g = *ctx.grid();
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for s in 0..pairs as u64 {
        let u = scenario::random_on_manifold(g, target, seed + 3 * s, 2, 0.6);
        let v = scenario::radial_perturbation(&u, seed + 3 * s + 1, 2, 0.05);
        let phi = scenario::random_field(g, target.ambient_dim(), seed + 3 * s + 2, 2, 1.0);
        let lhs = el_operator(ctx, &v)?.inner(&phi);
        let fd = fd_gateaux(&cfg, |w| Ok(tension_energy_unchecked(ctx, w)), &v, &phi)?;
        worst = worst.max((lhs - fd).abs() / lhs.abs().max(fd.abs()));
    }
    Ok(worst)
}

/// Worst ‖𝓗(u) − dρ_u(𝓕(u))‖ / max(‖𝓗‖, ‖dρ𝓕‖) over random on-manifold u.
pub fn normal_identity_gap(
    ctx: &OperatorContext,
    target: &dyn TargetManifold,
    seed: u64,
    fields: usize,
) -> Result<f64> {
    let g = *ctx.grid();
    let mut worst: f64 = 0.0;
    for s in 0..fields as u64 {
        let u = scenario::random_on_manifold(g, target, seed + s, 2, 0.6);
        let h = normal_correction(ctx, &u)?;
        let dr = d_rho_field(ctx, &u, &el_operator(ctx, &u)?);
        worst = worst.max(h.sub(&dr).l2_norm() / h.l2_norm().max(dr.l2_norm()));
    }
    Ok(worst)
}

/// Least-squares exponent of ‖X(v + η sin(λx)e) − X(v)‖ against λ.
pub fn frequency_exponent(ctx: &OperatorContext, v: &Field, op: &dyn Fn(&Field) -> Result<Field>) -> Result<f64> {
    let g = *ctx.grid();
    let base = op(v)?;
    let eta = 1e-7;
    let mut pts = Vec::new();
    for lam in [8.0, 16.0, 32.0] {
        let w = Field::from_fn(g, v.p(), |x, o| {
            o.iter_mut().for_each(|c| *c = 0.0);
            o[0] = eta * (lam * g.base_wavenumber() * x[0]).sin();
        });
        let d = op(&v.add(&w))?.sub(&base).l2_norm();
        pts.push(((lam as f64).ln(), d.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

pub(super) fn run(opts: &VerifyOptions) -> Vec<ReportEntry> {
    let mut s = Suite::new("operators", opts);
    let seed = opts.seed;
    let g16 = GridSpec::new(2, 16, 2.0 * PI).expect("grid");
    let g64 = GridSpec::new(2, 64, 2.0 * PI).expect("grid");
    let line = GridSpec::new(1, 64, 2.0 * PI).expect("grid");
    let s2 = || -> Arc<dyn TargetManifold> { Arc::new(Sphere2) };
    s.check(
        "variational_s2",
        "⟨𝓕(v),φ⟩ against the differenced derivative of 𝒢 (S², 16², no dealiasing)",
        json!({ "m": 16, "pairs": 10 }),
        1e-6,
        Bound::Max,
        || {
            let ctx = opts.ctx(s2(), g16).with_dealias(false);
            Ok(variational_gap(&ctx, &Sphere2, seed + 1000, 10)?.into())
        },
    );
    s.check(
        "variational_torus",
        "⟨𝓕(v),φ⟩ against the differenced derivative of 𝒢 (torus, 16², no dealiasing)",
        json!({ "m": 16, "pairs": 5 }),
        1e-6,
        Bound::Max,
        || {
            let ctx = opts.ctx(Arc::new(FlatTorus), g16).with_dealias(false);
            Ok(variational_gap(&ctx, &FlatTorus, seed + 2000, 5)?.into())
        },
    );
    s.check(
        "normal_part_identity",
        "𝓗(u) = dρ_u(𝓕(u)) for on-manifold u (S², 64², no dealiasing)",
        json!({ "m": 64, "fields": 4 }),
        1e-6,
        Bound::Max,
        || {
            let ctx = opts.ctx(s2(), g64).with_dealias(false);
            Ok(normal_identity_gap(&ctx, &Sphere2, seed + 3000, 4)?.into())
        },
    );
    s.check(
        "schrodinger_closed_form",
        "J dΠ(Δv) = v × Δv for on-sphere v",
        json!({ "m": 64 }),
        1e-12,
        Bound::Max,
        || {
            let ctx = opts.ctx(s2(), line).with_dealias(false);
            let v = scenario::random_on_manifold(line, &Sphere2, seed + 4, 4, 0.8);
            let f = schrodinger_term(&ctx, &v)?;
            let lap = ctx.spectral.laplacian(&v);
            let want = Field::from_fn(line, 3, |x, o| {
                let i = ((x[0] / line.spacing()).round() as usize) % line.m;
                let (a, b) = (v.point_vec(i), lap.point_vec(i));
                o.copy_from_slice(&crate::geometry::cross3(&a, &b));
            });
            Ok((f.sub(&want).max_abs() / want.max_abs()).into())
        },
    );
    s.check(
        "equator_is_harmonic",
        "tension of the equator map x ↦ (cos x, sin x, 0) vanishes",
        json!({ "m": 64 }),
        1e-12,
        Bound::Max,
        || {
            let ctx = opts.ctx(s2(), line);
            let v = Field::from_fn(line, 3, |x, o| o.copy_from_slice(&[x[0].cos(), x[0].sin(), 0.0]));
            Ok(tension_ambient(&ctx, &v)?.max_abs().into())
        },
    );
    s.check(
        "helical_energy",
        "E(helical) = π k² sin²θ on [0, 2π)",
        json!({ "m": 64, "theta": PI / 3.0, "k": 2 }),
        1e-12,
        Bound::Max,
        || {
            let ctx = opts.ctx(s2(), line);
            let v = scenario::helical(line, PI / 3.0, 2, 0.0);
            let want = PI * 4.0 * (PI / 3.0).sin().powi(2);
            Ok(((dirichlet_energy(&ctx, &v) - want).abs() / want).into())
        },
    );
    s.check(
        "lower_order_growth",
        "𝓕̃ = Δ²v − 𝓕 grows at most like λ^3.3 under sin(λx) perturbations",
        json!({ "m": 256, "lambda": [8, 16, 32] }),
        3.3,
        Bound::Max,
        || {
            let g = GridSpec::new(1, 256, 2.0 * PI)?;
            let ctx = opts.ctx(s2(), g).with_dealias(false);
            let v = scenario::helical(g, PI / 3.0, 2, 0.0);
            let a = frequency_exponent(&ctx, &v, &|w| el_lower_order(&ctx, w))?;
            let b = frequency_exponent(&ctx, &v, &|w| nonlinear_n(&ctx, w, 1e-2, 0.1))?;
            Ok(Measured::with(
                a.max(b),
                vec![("exponent_el_lower", a), ("exponent_n", b)],
            ))
        },
    );
    s.entries
}
