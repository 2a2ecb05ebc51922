//! Acceptance criteria, one pass/fail line each.

use sflab::analysis::kato_check;
use sflab::flow::{
    baseline_ll_midpoint, differenced_energy_residual, integrate, integrate_partial, rho_balance, FlowParams,
    Trajectory,
};
use sflab::geometry::Sphere2;
use sflab::operators::{Mutation, OperatorContext};
use sflab::oracle::exact_helical;
use sflab::scenario;
use sflab::spectral::{l2_distance, Field, GridSpec, Spectral};
use sflab::verify::{
    gn_dilation_gap, gronwall_twins, normal_identity_gap, semigroup_plane_waves, smoothing_trials, transport_checks,
    uniform_energy_ratio, variational_gap, VerifyOptions,
};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

const THETA: f64 = PI / 3.0;
const K: i32 = 2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ctx(dim: usize, m: usize, mutation: Option<Mutation>) -> OperatorContext {
    let g = GridSpec::new(dim, m, 2.0 * PI).unwrap();
    OperatorContext::new(Arc::new(Sphere2), g).with_mutation(mutation)
}

fn sup_rho(tr: &Trajectory) -> f64 {
    tr.diagnostics.iter().map(|d| d.sup_rho).fold(0.0, f64::max)
}

fn c1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut modes = 0;
    for (dim, m) in [(1, 256), (2, 32)] {
        let sp = Spectral::new(GridSpec::new(dim, m, 2.0 * PI).unwrap());
        for eps in [1e-1, 1e-3] {
            for t in [1e-2, 0.5] {
                let (e, n) = semigroup_plane_waves(&sp, eps, t);
                worst = worst.max(e);
                modes += n;
            }
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("worst relative eigenvalue error {worst:.2e} over {modes} modes (tol 1e-12)"),
    }
}

fn c2() -> Outcome {
    let sp = Spectral::new(GridSpec::new(1, 64, 2.0 * PI).unwrap());
    let (worst, violations, trials) = smoothing_trials(&sp, 2024, 200);
    Outcome {
        pass: violations == 0 && trials == 200,
        detail: format!("{violations} violations in {trials} trials, worst ratio {worst:.4}"),
    }
}

fn c3() -> Outcome {
    let c = ctx(2, 16, None).with_dealias(false);
    match variational_gap(&c, &Sphere2, 1000, 50) {
        Ok(w) => Outcome {
            pass: w <= 1e-6,
            detail: format!("worst relative gap {w:.2e} over 50 pairs on 16², no dealiasing (tol 1e-6)"),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn c4() -> Outcome {
    let c = ctx(2, 64, None).with_dealias(false);
    match normal_identity_gap(&c, &Sphere2, 500, 10) {
        Ok(w) => Outcome {
            pass: w <= 1e-6,
            detail: format!("worst relative gap {w:.2e} over 10 fields on 64², no dealiasing (tol 1e-6)"),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// (worst sup ρ over β ∈ {0, 0.1}, worst off-manifold ρ-balance residual).
fn c5_measure(mutation: Option<Mutation>) -> (f64, f64) {
    let c = ctx(1, 256, mutation);
    let g = *c.grid();
    let v0 = scenario::helical(g, THETA, K, 0.0);
    let mut sup: f64 = 0.0;
    let mut bal: f64 = 0.0;
    for beta in [0.0, 0.1] {
        let p = FlowParams {
            eps: 1e-3,
            beta,
            dt: 1e-3,
            t_end: 1.0,
            record_every: 10,
            energy_residual: false,
            ..FlowParams::default()
        };
        let (tr, err) = integrate_partial(&c, &v0, &p);
        sup = sup.max(if err.is_some() { f64::INFINITY } else { sup_rho(&tr) });
        let u = scenario::random_on_manifold(g, &Sphere2, 11, 4, 0.8);
        let v = scenario::radial_perturbation(&u, 12, 3, 0.05);
        let (m, pr) = rho_balance(&c, &v, 1e-3, beta);
        bal = bal.max((m - pr).abs() / pr.abs());
    }
    (sup, bal)
}

fn c5() -> Outcome {
    let (sup, bal) = c5_measure(None);
    Outcome {
        pass: sup <= 1e-6 && bal <= 1e-3,
        detail: format!("sup ρ {sup:.2e} (tol 1e-6), off-manifold dissipation residual {bal:.2e} (tol 1e-3)"),
    }
}

fn c6() -> Outcome {
    let c = ctx(1, 256, None);
    let g = *c.grid();
    let v0 = scenario::helical(g, THETA, K, 0.0);
    let exact = Field::from_fn(g, 3, |x, o| o.copy_from_slice(&exact_helical(THETA, K, 1.0, x[0])));
    let p = FlowParams {
        eps: 0.0,
        dt: 1e-3,
        t_end: 1.0,
        record_every: 100,
        ..FlowParams::default()
    };
    let base = match baseline_ll_midpoint(&c, &v0, &p) {
        Ok(t) => t,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("baseline error: {e}"),
            }
        }
    };
    let e_base = l2_distance(base.last(), &exact);
    let e0 = base.diagnostics[0].energy;
    let drift = base
        .diagnostics
        .iter()
        .map(|d| (d.energy - e0).abs() / e0)
        .fold(0.0, f64::max);
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut errs = Vec::new();
    for &e in &eps {
        let q = FlowParams {
            eps: e,
            dt: 1e-3,
            t_end: 1.0,
            record_every: 100,
            energy_residual: false,
            ..FlowParams::default()
        };
        match integrate(&c, &v0, &q) {
            Ok(t) => errs.push(l2_distance(t.last(), &exact)),
            Err(err) => {
                return Outcome {
                    pass: false,
                    detail: format!("eps {e}: {err}"),
                }
            }
        }
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    // linear extrapolation to ε = 0 from the two smallest ε
    let slope = (errs[2] - errs[3]) / (eps[2] - eps[3]);
    let extrap = errs[3] - slope * eps[3];
    let extrap_ok = (extrap - e_base).abs() <= 0.1 * errs[3];
    let ratios: Vec<f64> = (1..4).map(|i| errs[i] / eps[i]).collect();
    let (rmin, rmax) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    let linear = rmax <= 1.1 * rmin;
    Outcome {
        pass: e_base <= 1e-4 && drift <= 1e-6 && monotone && extrap_ok && linear,
        detail: format!(
            "baseline L² error {e_base:.2e} (tol 1e-4), drift {drift:.2e} (tol 1e-6); errors {}; extrapolated {extrap:.2e}; e/ε spread {:.3}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", "),
            rmax / rmin
        ),
    }
}

fn c7() -> Outcome {
    let c = ctx(1, 128, None);
    let v0 = scenario::bump(*c.grid(), &Sphere2, 1.0, 0.8);
    let p = FlowParams {
        eps: 1e-2,
        beta: 0.1,
        dt: 1e-3,
        t_end: 0.2,
        record_every: 1,
        snapshot_every: 1,
        energy_residual: false,
        ..FlowParams::default()
    };
    match integrate(&c, &v0, &p) {
        Ok(tr) => {
            let r = differenced_energy_residual(&c, &tr, p.eps, p.beta, 20);
            Outcome {
                pass: r <= 1e-3,
                detail: format!("worst relative residual {r:.2e} (tol 1e-3)"),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn c8() -> Outcome {
    let c = ctx(1, 128, None);
    let v0 = scenario::bump(*c.grid(), &Sphere2, 1.0, 0.8);
    match uniform_energy_ratio(&c, &v0, &[1e-1, 1e-2, 1e-3, 1e-4], 6.0) {
        Ok((r, t0)) => Outcome {
            pass: r <= 3.0,
            detail: format!("max ‖∇u‖_H6 / ‖∇u₀‖_H6 = {r:.6} on [0, T₀], T₀ = {t0:.3e} (tol 3)"),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn c9() -> Outcome {
    let gap = gn_dilation_gap().unwrap_or(f64::INFINITY);
    let g = GridSpec::new(2, 32, 2.0 * PI).unwrap();
    let sp = Spectral::new(g);
    let mut kato: f64 = 0.0;
    for s in 0..100u64 {
        let f = scenario::random_field(g, 3, 9000 + s, 4, 1.0);
        let (l, r) = kato_check(&sp, &f);
        kato = kato.max(l / r);
    }
    Outcome {
        pass: gap <= 1e-10 && kato <= 1.0,
        detail: format!(
            "dilation gap {gap:.2e} over 20 tuples (tol 1e-10), worst Kato ratio {kato:.4} over 100 fields"
        ),
    }
}

fn c10() -> Outcome {
    let (ode, _) = transport_checks(77, 100).unwrap_or((f64::INFINITY, f64::INFINITY));
    let opts = VerifyOptions::default();
    let twin = gronwall_twins(&opts, 0.0, 1.0).map(|r| r.distances.iter().map(|d| d.total).fold(0.0, f64::max));
    let twin = twin.unwrap_or(f64::INFINITY);
    let (fit, bound, rate, halving) = match (gronwall_twins(&opts, 1e-3, 1.0), gronwall_twins(&opts, 5e-4, 1.0)) {
        (Ok(a), Ok(b)) => {
            let last = |r: &sflab::analysis::GronwallReport| r.distances.last().unwrap().total.sqrt();
            (a.fit_residual, a.bound_ratio, a.rate, last(&a) / last(&b))
        }
        _ => (f64::INFINITY, f64::INFINITY, f64::NAN, f64::NAN),
    };
    Outcome {
        pass: ode <= 1e-9 && twin <= 1e-20 && fit <= 0.05 && bound <= 1.0 + 1e-12,
        detail: format!(
            "transport vs ODE {ode:.2e} (tol 1e-9), twin distance {twin:.2e} (tol 1e-20), fit residual {fit:.4} (tol 0.05), \
             max d(t)/(e^(Ct) d(0)) {bound:.6} with C = {rate:.4}; sqrt-distance ratio under η halving {halving:.3}"
        ),
    }
}

fn c11() -> Outcome {
    let m = Some(Mutation::FlipHessianSign);
    let v3 = variational_gap(&ctx(2, 16, m).with_dealias(false), &Sphere2, 1000, 50).unwrap_or(f64::INFINITY);
    let v4 = normal_identity_gap(&ctx(2, 64, m).with_dealias(false), &Sphere2, 500, 10).unwrap_or(f64::INFINITY);
    let (sup, bal) = c5_measure(m);
    let (f3, f4, f5) = (v3 > 1e-6, v4 > 1e-6, sup > 1e-6 || bal > 1e-3);
    Outcome {
        pass: f3 && f4 && f5,
        detail: format!("mutated: variational gap {v3:.2e}, normal gap {v4:.2e}, sup ρ {sup:.2e}, dissipation residual {bal:.2e}; criteria 3/4/5 fail: {f3}/{f4}/{f5}"),
    }
}

fn main() {
    // plain `cargo test` passes flags such as --quiet or a name filter; honour a filter
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, &str, u64, fn() -> Outcome); 11] = [
        ("C1", "semigroup exactness", 1, c1),
        ("C2", "smoothing inequality", 10, c2),
        ("C3", "variational consistency", 60, c3),
        ("C4", "normal-part identity", 30, c4),
        ("C5", "manifold preservation", 300, c5),
        ("C6", "exact-solution regression", 600, c6),
        ("C7", "energy identity", 120, c7),
        ("C8", "uniform energy estimate", 600, c8),
        ("C9", "GN scaling and Kato", 30, c9),
        ("C10", "parallel transport and uniqueness", 300, c10),
        ("C11", "mutation sensitivity", 120, c11),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        if filter
            .as_deref()
            .is_some_and(|s| !id.eq_ignore_ascii_case(s) && !name.contains(s))
        {
            continue;
        }
        let t0 = Instant::now();
        let out = f();
        let el = t0.elapsed();
        let in_time = el <= Duration::from_secs(budget);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} {id} {name}: {} [{:.2}s, budget {budget}s{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            el.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
