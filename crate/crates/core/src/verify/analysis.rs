use super::{Bound, Measured, ReportEntry, Suite, VerifyOptions};
use crate::analysis::{
    dilate2, gn_ratio, gn_table, gronwall_experiment, interpolation_sample, kato_check, naive_h1_distance,
    norm_equivalence_check, parallel_transport_s2, solution_distance,
};
use crate::error::Result;
use crate::flow::FlowParams;
use crate::geometry::{AmbientPoint, Sphere2, TangentVector};
use crate::operators::project_field;
use crate::oracle::{smoothing_constant, smoothing_constant_grid, transport_ode, OracleConfig};
use crate::scenario;
use crate::spectral::{GridSpec, Spectral};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

/// Worst relative change of the GN ratio of a centred Gaussian under f ↦ f(2·),
/// over all tabulated exponent tuples (1D on 128 points, 2D on 64²).
pub fn gn_dilation_gap() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (dim, m) in [(1, 128), (2, 64)] {
        let g = GridSpec::new(dim, m, 2.0 * PI)?;
        let f = scenario::gaussian_field(g, g.length / 12.0);
        let d = dilate2(&f);
        let (sa, sb) = (Spectral::new(g), Spectral::new(d.grid));
        for e in gn_table().iter().filter(|e| e.n == dim) {
            let (a, b) = (gn_ratio(&sa, &f, e)?, gn_ratio(&sb, &d, e)?);
            worst = worst.max((a - b).abs() / a);
        }
    }
    Ok(worst)
}

/// Largest ‖∂|f|‖ / ‖∂f‖ over `fields` random ℝ³-valued fields.
pub fn kato_worst(seed: u64, fields: usize) -> Result<f64> {
    let g = GridSpec::new(1, 64, 2.0 * PI)?;
    let sp = Spectral::new(g);
    let mut worst: f64 = 0.0;
    for s in 0..fields as u64 {
        let f = scenario::random_field(g, 3, seed + s, 4, 1.0);
        let (l, r) = kato_check(&sp, &f);
        worst = worst.max(l / r);
    }
    Ok(worst)
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let q: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [q[0] / n, q[1] / n, q[2] / n];
        }
    }
}

fn random_tangent(rng: &mut ChaCha8Rng, p: &[f64; 3]) -> [f64; 3] {
    let w: [f64; 3] = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let d = w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
    [w[0] - d * p[0], w[1] - d * p[1], w[2] - d * p[2]]
}

/// (worst closed form vs ODE gap, worst isometry/round-trip defect) over
/// `pairs` random non-antipodal point pairs.
pub fn transport_checks(seed: u64, pairs: usize) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = OracleConfig::default();
    let (mut ode, mut iso): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    while n < pairs {
        let (a, b) = (random_unit(&mut rng), random_unit(&mut rng));
        if 1.0 + a[0] * b[0] + a[1] * b[1] + a[2] * b[2] < 0.05 {
            continue;
        }
        n += 1;
        let v = random_tangent(&mut rng, &a);
        let (pa, pb) = (AmbientPoint::new(a.to_vec()), AmbientPoint::new(b.to_vec()));
        let w = parallel_transport_s2(
            &pa,
            &pb,
            &TangentVector {
                base: pa.clone(),
                vec: v.to_vec(),
            },
        )?;
        let r = transport_ode(&cfg, &a, &b, &v)?;
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        ode = ode.max(w.vec.iter().zip(&r).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / nv);
        let nw = w.vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        let back = parallel_transport_s2(&pb, &pa, &w)?;
        let rt = back.vec.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let tangent = w.vec.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().abs();
        iso = iso.max(((nw - nv).abs() + rt + tangent) / nv);
    }
    Ok((ode, iso))
}

/// Twin run of the regularized flow from helical data and a projected random
/// perturbation of it, tracking the transported distance.
pub fn gronwall_twins(opts: &VerifyOptions, eta: f64, t_end: f64) -> Result<crate::analysis::GronwallReport> {
    let g = GridSpec::new(1, 128, 2.0 * PI)?;
    let ctx = opts.ctx(Arc::new(Sphere2), g);
    let u1 = scenario::helical(g, PI / 3.0, 2, 0.0);
    let pert = scenario::random_field(g, 3, opts.seed + 7, 4, 1.0);
    let u2 = project_field(&ctx, &u1.add(&pert.scale(eta)));
    let p = FlowParams {
        eps: 1e-2,
        dt: 1e-3,
        t_end,
        record_every: 50,
        snapshot_every: 50,
        energy_residual: false,
        ..FlowParams::default()
    };
    gronwall_experiment(&ctx, &u1, &u2, &p)
}

pub(super) fn run(opts: &VerifyOptions) -> Vec<ReportEntry> {
    let mut s = Suite::new("analysis", opts);
    let seed = opts.seed;

    s.check(
        "gn_dilation",
        "GN ratio of a Gaussian is unchanged by f ↦ f(2·) (20 tuples)",
        json!({ "tuples": 20, "m1": 128, "m2": 64 }),
        1e-10,
        Bound::Max,
        || Ok(gn_dilation_gap()?.into()),
    );
    s.check(
        "kato",
        "‖∂|f|‖ / ‖∂f‖ over 100 random fields",
        json!({ "fields": 100, "m": 64 }),
        1.0,
        Bound::Max,
        || Ok(kato_worst(seed + 100, 100)?.into()),
    );
    let norms = || -> Result<(f64, f64)> {
        let g = GridSpec::new(2, 64, 2.0 * PI)?;
        let sp = Spectral::new(g);
        let (mut first, mut second): (f64, f64) = (0.0, 0.0);
        for k in 0..10u64 {
            let v = scenario::random_on_manifold(g, &Sphere2, seed + 300 + k, 2, 0.6);
            let r = norm_equivalence_check(&sp, &v, 2)?;
            first = first.max(r.first_order_violation / r.max_grad_sq);
            second = second.max(r.second_order_ratio);
        }
        Ok((first, second))
    };
    let nr = norms();
    s.check(
        "norm_first_order",
        "relative gap between |∇u|² (chart) and |∂v|²",
        json!({ "fields": 10, "m": 64 }),
        1e-8,
        Bound::Max,
        || {
            nr.as_ref()
                .map(|x| x.0.into())
                .map_err(|e| crate::error::Error::InvalidParam(e.to_string()))
        },
    );
    s.check(
        "norm_second_order",
        "|∇²u|² / (2|∂²v|² + C|∂v|⁴), C = 2",
        json!({ "fields": 10, "m": 64 }),
        1.0,
        Bound::Max,
        || {
            nr.as_ref()
                .map(|x| x.1.into())
                .map_err(|e| crate::error::Error::InvalidParam(e.to_string()))
        },
    );
    let tr = transport_checks(seed + 400, 50);
    s.check(
        "transport_vs_ode",
        "closed-form parallel transport against the geodesic ODE",
        json!({ "pairs": 50 }),
        1e-9,
        Bound::Max,
        || {
            tr.as_ref()
                .map(|x| x.0.into())
                .map_err(|e| crate::error::Error::InvalidParam(e.to_string()))
        },
    );
    s.check(
        "transport_isometry",
        "norm, tangency and round-trip defects of the transport",
        json!({ "pairs": 50 }),
        1e-12,
        Bound::Max,
        || {
            tr.as_ref()
                .map(|x| x.1.into())
                .map_err(|e| crate::error::Error::InvalidParam(e.to_string()))
        },
    );
    s.check(
        "distance_equivalence",
        "smallest transported distance / naive H¹ distance for nearby maps",
        json!({ "fields": 10, "eta": 1e-3 }),
        1e-3,
        Bound::Min,
        || {
            let g = GridSpec::new(1, 64, 2.0 * PI)?;
            let sp = Spectral::new(g);
            let ctx = crate::operators::OperatorContext::new(Arc::new(Sphere2), g);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for k in 0..10u64 {
                let u1 = scenario::random_on_manifold(g, &Sphere2, seed + 500 + k, 3, 0.6);
                let pert = scenario::random_field(g, 3, seed + 600 + k, 3, 1.0);
                let u2 = project_field(&ctx, &u1.add(&pert.scale(1e-3)));
                let r = solution_distance(&sp, &u1, &u2)?.total / naive_h1_distance(&sp, &u1, &u2);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            Ok(Measured::with(lo, vec![("c1", lo), ("c2", hi)]))
        },
    );
    s.check(
        "interpolation",
        "‖∂w‖_{H^3} against ‖∂w‖^{1/2}_{H^6}‖∂w‖^{1/2}_{L²}",
        json!({ "s": 6, "s_prime": 3, "fields": 20 }),
        1.0 + 1e-12,
        Bound::Max,
        || {
            let g = GridSpec::new(1, 64, 2.0 * PI)?;
            let sp = Spectral::new(g);
            let mut worst: f64 = 0.0;
            for k in 0..20u64 {
                let a = scenario::random_field(g, 3, seed + 700 + k, 6, 1.0);
                let b = scenario::random_field(g, 3, seed + 800 + k, 6, 1.0);
                let x = interpolation_sample(&sp, &a, &b, 6.0, 3.0, 0.0);
                worst = worst.max(x.lhs / x.rhs);
            }
            Ok(worst.into())
        },
    );
    s.check(
        "twin_uniqueness",
        "transported distance between two runs from identical data",
        json!({ "m": 128, "t": 0.2 }),
        1e-20,
        Bound::Max,
        || {
            let r = gronwall_twins(opts, 0.0, 0.2)?;
            Ok(r.distances.iter().map(|d| d.total).fold(0.0, f64::max).into())
        },
    );
    s.check(
        "smoothing_constant",
        "golden-section sup yⁱe^{−y⁴} against a dense log grid, i = 1..3",
        json!({ "orders": [1, 2, 3], "grid": 2000000 }),
        1e-10,
        Bound::Max,
        || {
            let mut worst: f64 = 0.0;
            let mut consts = Vec::new();
            for (i, name) in [(1, "c1"), (2, "c2"), (3, "c3")] {
                let (a, b) = (smoothing_constant(i), smoothing_constant_grid(i, 2_000_000));
                worst = worst.max((a - b).abs() / a);
                consts.push((name, a));
            }
            Ok(Measured::with(worst, consts))
        },
    );
    s.check(
        "gronwall_fit",
        "relative residual of the exponential fit to the twin distance",
        json!({ "m": 128, "eps": 1e-2, "eta": 1e-3, "t": 1.0 }),
        0.05,
        Bound::Max,
        || {
            let r = gronwall_twins(opts, 1e-3, 1.0)?;
            Ok(Measured::with(
                r.fit_residual,
                vec![("rate", r.rate), ("bound_ratio", r.bound_ratio)],
            ))
        },
    );
    s.entries
}
