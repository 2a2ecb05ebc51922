use super::{max_abs_diff, Bound, Measured, ReportEntry, Suite, VerifyOptions};
use crate::oracle::{dft_apply, smoothing_constant, sobolev_norm_direct};
use crate::scenario::random_field;
use crate::spectral::{io, Field, GridSpec, Spectral};
use serde_json::json;
use std::f64::consts::PI;

/// Worst relative error of the plane-wave eigenvalue ⟨S(t)f, f⟩/⟨f, f⟩ against
/// e^{−ε|k|⁴t}, over modes with eigenvalue ≥ 1e−3 (below that the roundoff of the
/// unit-size input dominates any relative comparison). Returns (error, modes tested).
pub fn semigroup_plane_waves(sp: &Spectral, eps: f64, t: f64) -> (f64, usize) {
    let g = *sp.grid();
    let k0 = g.base_wavenumber();
    let kmax = (g.m / 2) as i32 - 1;
    let ky_range = if g.dim == 2 { -kmax..=kmax } else { 0..=0 };
    let (mut worst, mut tested) = (0.0f64, 0);
    for kx in 0..=kmax {
        for ky in ky_range.clone() {
            let k2 = k0 * k0 * (kx * kx + ky * ky) as f64;
            let lam = (-eps * k2 * k2 * t).exp();
            if lam < 1e-3 {
                continue;
            }
            let f = Field::from_fn(g, 1, |x, o| o[0] = (k0 * (kx as f64 * x[0] + ky as f64 * x[1])).cos());
            let got = sp.semigroup(&f, eps, t).inner(&f) / f.inner(&f);
            worst = worst.max((got - lam).abs() / lam);
            tested += 1;
        }
    }
    (worst, tested)
}

/// Largest ratio ‖D^s S(t)f‖ / (C_i (εt)^{−i/4} ‖D^{s−i}f‖) over random fields
/// (≤ 1 means no violation), the violation count and the number of trials run.
pub fn smoothing_trials(sp: &Spectral, seed: u64, trials: usize) -> (f64, usize, usize) {
    let g = *sp.grid();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    let mut n = 0;
    'outer: for i in 1..=3u32 {
        let c = smoothing_constant(i);
        for eps in [1e-1, 1e-3] {
            for t in [1e-2, 1.0] {
                for r in 0.. {
                    if n >= trials {
                        break 'outer;
                    }
                    if r * 12 >= trials {
                        break;
                    }
                    let f = random_field(g, 1, seed + n as u64, 12, 1.0);
                    let s = i as f64 + (r % 3) as f64;
                    let lhs = sp.homogeneous_norm(&sp.semigroup(&f, eps, t), s);
                    let rhs = c * (eps * t).powf(-(i as f64) / 4.0) * sp.homogeneous_norm(&f, s - i as f64);
                    let ratio = lhs / rhs;
                    if ratio > 1.0 + 1e-12 {
                        violations += 1;
                    }
                    worst = worst.max(ratio);
                    n += 1;
                }
            }
        }
    }
    (worst, violations, n)
}

pub(super) fn run(opts: &VerifyOptions) -> Vec<ReportEntry> {
    let mut s = Suite::new("spectral", opts);
    let seed = opts.seed;
    let g2 = GridSpec::new(2, 16, 2.0 * PI).expect("grid");
    let g1 = GridSpec::new(1, 64, 3.0).expect("grid");
    s.check(
        "round_trip",
        "inverse(forward(f)) = f",
        json!({ "n": 2, "m": 32 }),
        1e-13,
        Bound::Max,
        || {
            let g = GridSpec::new(2, 32, 5.0)?;
            let sp = Spectral::new(g);
            let f = random_field(g, 3, seed + 1, 8, 1.0);
            Ok(sp.inverse(&sp.forward(&f)).sub(&f).max_abs().into())
        },
    );
    s.check(
        "derivative_vs_direct_dft",
        "∂_x, ∂_y², Δ multipliers against direct DFT summation",
        json!({ "n": 2, "m": 16 }),
        1e-11,
        Bound::Max,
        || {
            let sp = Spectral::new(g2);
            let f = random_field(g2, 1, seed + 2, 7, 1.0);
            let mut worst: f64 = 0.0;
            let got = sp.derivative(&f, 0, 1);
            let want = dft_apply(&g2, &f.comps[0], |k, ny| if ny[0] { (0.0, 0.0) } else { (0.0, k[0]) });
            worst = worst.max(max_abs_diff(&got.comps[0], &want));
            let got = sp.derivative(&f, 1, 2);
            let want = dft_apply(&g2, &f.comps[0], |k, _| (-k[1] * k[1], 0.0));
            worst = worst.max(max_abs_diff(&got.comps[0], &want));
            let got = sp.laplacian(&f);
            let want = dft_apply(&g2, &f.comps[0], |k, _| (-(k[0] * k[0] + k[1] * k[1]), 0.0));
            worst = worst.max(max_abs_diff(&got.comps[0], &want));
            Ok(worst.into())
        },
    );
    s.check(
        "semigroup_plane_waves",
        "S_ε(t) cos(k·x) = e^{−ε|k|⁴t} cos(k·x)",
        json!({ "n": 2, "m": 16, "eps": 1e-2, "t": 0.5 }),
        1e-12,
        Bound::Max,
        || {
            let (err, modes) = semigroup_plane_waves(&Spectral::new(g2), 1e-2, 0.5);
            Ok(Measured::with(err, vec![("modes", modes as f64)]))
        },
    );
    s.check(
        "smoothing_inequality",
        "‖D^s S(t)f‖ ≤ C_i (εt)^{−i/4} ‖D^{s−i}f‖, worst ratio",
        json!({ "n": 1, "m": 64, "trials": 200 }),
        1.0 + 1e-12,
        Bound::Max,
        || {
            let (worst, violations, trials) = smoothing_trials(&Spectral::new(g1), seed + 100, 200);
            Ok(Measured::with(
                worst,
                vec![("violations", violations as f64), ("trials", trials as f64)],
            ))
        },
    );
    s.check(
        "sobolev_vs_direct",
        "‖f‖_{H^s} against direct-summation DFT",
        json!({ "n": 2, "m": 16, "s": 2.5 }),
        1e-10,
        Bound::Max,
        || {
            let sp = Spectral::new(g2);
            let f = random_field(g2, 2, seed + 3, 6, 1.0);
            let (a, b) = (sp.sobolev_norm(&f, 2.5), sobolev_norm_direct(&f, 2.5));
            Ok(((a - b).abs() / b).into())
        },
    );
    s.check(
        "parseval",
        "physical and spectral L² inner products agree",
        json!({ "n": 1, "m": 64 }),
        1e-12,
        Bound::Max,
        || {
            let sp = Spectral::new(g1);
            let f = random_field(g1, 2, seed + 4, 20, 1.0);
            let a = f.inner(&f);
            let b = sp.l2_norm(&f).powi(2);
            Ok(((a - b).abs() / a).into())
        },
    );
    s.check(
        "dealias_projection",
        "2/3 rule keeps exactly 3|j| ≤ M and is idempotent",
        json!({ "n": 2, "m": 16 }),
        1e-14,
        Bound::Max,
        || {
            let sp = Spectral::new(g2);
            let mut wrong = 0usize;
            for (idx, keep) in sp.dealias_mask().iter().enumerate() {
                let k = g2.index(idx);
                let want = 3 * g2.signed(k[0]).unsigned_abs() as usize <= g2.m
                    && 3 * g2.signed(k[1]).unsigned_abs() as usize <= g2.m;
                wrong += usize::from(want != *keep);
            }
            let f = random_field(g2, 1, seed + 5, 7, 1.0);
            let once = sp.dealias(&f);
            let twice = sp.dealias(&once);
            Ok((wrong as f64 + twice.sub(&once).max_abs()).into())
        },
    );
    s.check(
        "binary_round_trip",
        "binary field file reproduces every bit",
        json!({ "n": 2, "m": 16 }),
        0.0,
        Bound::Max,
        || {
            let f = random_field(g2, 3, seed + 6, 5, 1.0);
            let mut buf = Vec::new();
            io::write_binary(&f, &mut buf)?;
            let back = io::read_binary(buf.as_slice())?;
            let same = f
                .comps
                .iter()
                .zip(&back.comps)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            Ok(if same && back.grid == f.grid { 0.0 } else { 1.0 }.into())
        },
    );
    s.entries
}
