use super::{max_abs_diff, Bound, Measured, ReportEntry, Suite, VerifyOptions};
use crate::geometry::{christoffel_s2, ChartPoint, FlatTorus, Sphere2, TargetManifold};
use crate::oracle::{christoffel_from_metric, fd_directional, nearest_on_sphere_mesh, OracleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SAMPLES: usize = 50;

fn unit(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
    v.iter().map(|x| x / n).collect()
}

/// Random point in the tube: a manifold point scaled radially (blockwise for the torus).
fn tube_point(rng: &mut ChaCha8Rng, m: &dyn TargetManifold) -> Vec<f64> {
    let p = m.ambient_dim();
    let mut q = unit(rng, p);
    if p == 4 {
        for b in 0..2 {
            let n = q[2 * b].hypot(q[2 * b + 1]).max(1e-3);
            let s = rng.gen_range(0.7..1.3) / n;
            q[2 * b] *= s;
            q[2 * b + 1] *= s;
        }
    } else {
        let s = rng.gen_range(0.7..1.3);
        q.iter_mut().for_each(|x| *x *= s);
    }
    q
}

fn project(m: &dyn TargetManifold, q: &[f64]) -> Vec<f64> {
    let mut o = vec![0.0; q.len()];
    m.project_into(q, &mut o);
    o
}

fn dpi(m: &dyn TargetManifold, q: &[f64], x: &[f64]) -> Vec<f64> {
    let mut o = vec![0.0; q.len()];
    m.d_pi_into(q, x, &mut o);
    o
}

fn hess(m: &dyn TargetManifold, q: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut o = vec![0.0; q.len()];
    m.hess_pi_into(q, x, y, &mut o);
    o
}

fn derivative_checks(s: &mut Suite, m: &dyn TargetManifold, seed: u64) {
    let cfg = OracleConfig::default();
    let name = m.name();
    let inputs = json!({ "target": name, "samples": SAMPLES, "fd_step": cfg.fd_step });
    s.check(
        &format!("{name}.d_pi_vs_fd"),
        "dΠ against central differences of Π",
        inputs.clone(),
        1e-8,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let (q, x) = (tube_point(&mut rng, m), unit(&mut rng, m.ambient_dim()));
                let fd = fd_directional(&cfg, |w| project(m, w), &q, &x);
                worst = worst.max(max_abs_diff(&dpi(m, &q, &x), &fd));
            }
            Ok(worst.into())
        },
    );
    s.check(
        &format!("{name}.hessian_vs_fd"),
        "D²Π(x,y) against differences of dΠ·x along y",
        inputs.clone(),
        1e-7,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let q = tube_point(&mut rng, m);
                let (x, y) = (unit(&mut rng, m.ambient_dim()), unit(&mut rng, m.ambient_dim()));
                let fd = fd_directional(&cfg, |w| dpi(m, w, &x), &q, &y);
                worst = worst.max(max_abs_diff(&hess(m, &q, &x, &y), &fd));
            }
            Ok(worst.into())
        },
    );
    s.check(
        &format!("{name}.third_vs_fd"),
        "D³Π(x,y,z) against differences of D²Π(x,y) along z",
        inputs,
        1e-6,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
            let mut worst: f64 = 0.0;
            let p = m.ambient_dim();
            for _ in 0..SAMPLES {
                let q = tube_point(&mut rng, m);
                let (x, y, z) = (unit(&mut rng, p), unit(&mut rng, p), unit(&mut rng, p));
                let fd = fd_directional(&cfg, |w| hess(m, w, &x, &y), &q, &z);
                let mut t = vec![0.0; p];
                m.third_pi_into(&q, &x, &y, &z, &mut t);
                worst = worst.max(max_abs_diff(&t, &fd));
            }
            Ok(worst.into())
        },
    );
    s.check(
        &format!("{name}.complex_structure"),
        "J² = −I and |Jx| = |x| on tangent vectors",
        json!({ "target": name }),
        1e-14,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let q = project(m, &tube_point(&mut rng, m));
                let x = dpi(m, &q, &unit(&mut rng, m.ambient_dim()));
                let (mut jx, mut jjx) = (vec![0.0; x.len()], vec![0.0; x.len()]);
                m.j_into(&q, &x, &mut jx);
                m.j_into(&q, &jx, &mut jjx);
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let njx = jx.iter().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max(max_abs_diff(&jjx, &neg)).max((nx - njx).abs());
            }
            Ok(worst.into())
        },
    );
}

pub(super) fn run(opts: &VerifyOptions) -> Vec<ReportEntry> {
    let mut s = Suite::new("geometry", opts);
    let seed = opts.seed;
    s.check(
        "s2.project_vs_mesh",
        "Π on S² against brute-force mesh search",
        json!({ "samples": SAMPLES }),
        1e-7,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let q = tube_point(&mut rng, &Sphere2);
                worst = worst.max(max_abs_diff(&project(&Sphere2, &q), &nearest_on_sphere_mesh(&q)));
            }
            Ok(worst.into())
        },
    );
    s.check(
        "s2.projection_idempotent",
        "Π(Π(q)) = Π(q) and ρ ⟂ tangent space",
        json!({ "samples": SAMPLES }),
        1e-14,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 11);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let q = tube_point(&mut rng, &Sphere2);
                let p1 = project(&Sphere2, &q);
                worst = worst.max(max_abs_diff(&project(&Sphere2, &p1), &p1));
                let rho: Vec<f64> = q.iter().zip(&p1).map(|(a, b)| a - b).collect();
                let t = dpi(&Sphere2, &p1, &unit(&mut rng, 3));
                worst = worst.max(rho.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>().abs());
            }
            Ok(worst.into())
        },
    );
    derivative_checks(&mut s, &Sphere2, seed + 20);
    derivative_checks(&mut s, &FlatTorus, seed + 30);
    s.check(
        "s2.christoffel_vs_metric_fd",
        "closed-form Γ against differences of the chart metric",
        json!({ "samples": SAMPLES }),
        1e-7,
        Bound::Max,
        || {
            let cfg = OracleConfig::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 12);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let c = ChartPoint::new(rng.gen_range(0.2..2.9), rng.gen_range(-3.0..3.0))?;
                let a = christoffel_s2(c)?;
                let b = christoffel_from_metric(&cfg, |t, _| [1.0, t.sin().powi(2)], c.theta, c.phi);
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            worst = worst.max((a[i][j][k] - b[i][j][k]).abs());
                        }
                    }
                }
            }
            Ok(worst.into())
        },
    );
    s.check(
        "s2.sectional_curvature",
        "⟨R(X,Y)Y,X⟩ = |X|²|Y|² − ⟨X,Y⟩² on S²",
        json!({ "samples": SAMPLES }),
        1e-14,
        Bound::Max,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 13);
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let q = project(&Sphere2, &tube_point(&mut rng, &Sphere2));
                let x = dpi(&Sphere2, &q, &unit(&mut rng, 3));
                let y = dpi(&Sphere2, &q, &unit(&mut rng, 3));
                let mut r = [0.0; 3];
                Sphere2.curvature_into(&q, &x, &y, &y, &mut r);
                let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
                let want = d(&x, &x) * d(&y, &y) - d(&x, &y).powi(2);
                worst = worst.max((d(&r, &x) - want).abs());
            }
            Ok(Measured::from(worst))
        },
    );
    s.entries
}
