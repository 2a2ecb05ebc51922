//! Brute-force reference implementations.
//!
//! Nothing here calls into `spectral`: Fourier checks use direct summation
//! and geometry checks use dense finite differences, so a bug shared with
//! the fast kernels would have to be made twice.

use crate::error::{Error, Result};
use crate::spectral::{Field, GridSpec};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Finite-difference step, relative to the scale of the base point.
    pub fd_step: f64,
    pub richardson_levels: usize,
    pub ode_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            richardson_levels: 3,
            ode_tol: 1e-10,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-8..=1e-3).contains(&self.fd_step) {
            return Err(Error::InvalidParam(format!(
                "fd_step {} outside [1e-8, 1e-3]",
                self.fd_step
            )));
        }
        if self.richardson_levels == 0 || self.richardson_levels > 8 {
            return Err(Error::InvalidParam("richardson_levels must be in 1..=8".into()));
        }
        if !(self.ode_tol > 0.0) {
            return Err(Error::InvalidParam("ode_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Richardson table for a symmetric O(h²) difference sampled at h, h/2, h/4, ...
pub fn richardson(samples: &[f64]) -> f64 {
    let mut t = samples.to_vec();
    for j in 1..samples.len() {
        let f = 4f64.powi(j as i32);
        for i in (j..samples.len()).rev() {
            t[i] = t[i] + (t[i] - t[i - 1]) / (f - 1.0);
        }
    }
    *t.last().expect("at least one sample")
}

/// Central differences of `g` at `v` in direction `phi`, extrapolated.
pub fn fd_gateaux(cfg: &OracleConfig, g: impl Fn(&Field) -> Result<f64>, v: &Field, phi: &Field) -> Result<f64> {
    cfg.validate()?;
    let scale = v.max_abs().max(1.0) / phi.max_abs().max(f64::MIN_POSITIVE);
    let h0 = cfg.fd_step * scale;
    let eval = |s: f64| {
        let mut w = v.clone();
        w.axpy(s, phi);
        g(&w).map_err(|e| match e {
            Error::OutsideTubularNeighborhood { .. } => Error::TubeExit,
            e => e,
        })
    };
    let mut samples = Vec::with_capacity(cfg.richardson_levels);
    for l in 0..cfg.richardson_levels {
        let h = h0 / 2f64.powi(l as i32);
        samples.push((eval(h)? - eval(-h)?) / (2.0 * h));
    }
    Ok(richardson(&samples))
}

/// Central-difference derivative of a vector map along `dir`.
pub fn fd_directional(cfg: &OracleConfig, f: impl Fn(&[f64]) -> Vec<f64>, q: &[f64], dir: &[f64]) -> Vec<f64> {
    let h0 = cfg.fd_step * q.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let shift = |s: f64| -> Vec<f64> { q.iter().zip(dir).map(|(a, b)| a + s * b).collect() };
    let levels: Vec<Vec<f64>> = (0..cfg.richardson_levels)
        .map(|l| {
            let h = h0 / 2f64.powi(l as i32);
            let (a, b) = (f(&shift(h)), f(&shift(-h)));
            a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
        })
        .collect();
    (0..levels[0].len())
        .map(|c| richardson(&levels.iter().map(|v| v[c]).collect::<Vec<_>>()))
        .collect()
}

/// Exact helical solution of ∂ₜs = s×Δs.
pub fn exact_helical(theta: f64, k: i32, t: f64, x: f64) -> [f64; 3] {
    let omega = helical_frequency(theta, k);
    let ph = k as f64 * x - omega * t;
    [theta.sin() * ph.cos(), theta.sin() * ph.sin(), theta.cos()]
}

pub fn helical_frequency(theta: f64, k: i32) -> f64 {
    (k * k) as f64 * theta.cos()
}

/// sup_{y≥0} yⁱ e^{−y⁴} by golden-section search.
pub fn smoothing_constant(i: u32) -> f64 {
    let f = |y: f64| y.powi(i as i32) * (-y.powi(4)).exp();
    let (mut a, mut b) = (0.0f64, 3.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-12 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    f(0.5 * (a + b))
}

/// Same supremum by brute force over `n` log-spaced points in [0.1, 3].
pub fn smoothing_constant_grid(i: u32, n: usize) -> f64 {
    let (lo, hi) = (0.1f64.ln(), 3f64.ln());
    (0..n)
        .map(|j| {
            let y = (lo + (hi - lo) * j as f64 / (n - 1) as f64).exp();
            y.powi(i as i32) * (-y.powi(4)).exp()
        })
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Parallel transport along the minimizing great circle by RK4 on
/// V' = −⟨V, γ'⟩γ, refined until two resolutions agree to `ode_tol`.
pub fn transport_ode(cfg: &OracleConfig, p1: &[f64], p2: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let c = dot(p1, p2).clamp(-1.0, 1.0);
    if c <= -1.0 + 1e-6 {
        return Err(Error::AntipodalPoints(c));
    }
    let angle = c.acos();
    if angle < 1e-15 {
        return Ok(v.to_vec());
    }
    let e: Vec<f64> = p2.iter().zip(p1).map(|(b, a)| (b - c * a) / angle.sin()).collect();
    let gamma = |s: f64| -> [Vec<f64>; 2] {
        let (sn, cs) = s.sin_cos();
        let g = p1.iter().zip(&e).map(|(a, b)| cs * a + sn * b).collect();
        let dg = p1.iter().zip(&e).map(|(a, b)| -sn * a + cs * b).collect();
        [g, dg]
    };
    let rhs = |s: f64, w: &[f64]| -> Vec<f64> {
        let [g, dg] = gamma(s);
        let k = dot(w, &dg);
        g.iter().map(|x| -k * x).collect()
    };
    let integrate = |n: usize| -> Vec<f64> {
        let h = angle / n as f64;
        let mut w = v.to_vec();
        for j in 0..n {
            let s = j as f64 * h;
            let k1 = rhs(s, &w);
            let w2: Vec<f64> = w.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
            let k2 = rhs(s + 0.5 * h, &w2);
            let w3: Vec<f64> = w.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
            let k3 = rhs(s + 0.5 * h, &w3);
            let w4: Vec<f64> = w.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = rhs(s + h, &w4);
            for i in 0..w.len() {
                w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        w
    };
    let mut n = 16;
    let mut prev = integrate(n);
    loop {
        n *= 2;
        let next = integrate(n);
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // RK4 error of `next` is about diff/15
        if diff < cfg.ode_tol || n > 1 << 20 {
            return Ok(next);
        }
        prev = next;
    }
}

/// Direct-summation DFT of one real component (same sign/normalization
/// convention as the fast transform: unnormalized forward).
pub fn dft(grid: &GridSpec, f: &[f64]) -> Vec<(f64, f64)> {
    let n = grid.npoints();
    let m = grid.m as f64;
    (0..n)
        .map(|kidx| {
            let k = grid.index(kidx);
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &val) in f.iter().enumerate() {
                let x = grid.index(i);
                let ph = -2.0 * PI * (k[0] as f64 * x[0] as f64 + k[1] as f64 * x[1] as f64) / m;
                re += val * ph.cos();
                im += val * ph.sin();
            }
            (re, im)
        })
        .collect()
}

/// Apply a real symbol of the signed wavevector by direct summation.
/// `odd_nyquist_zero` drops the Nyquist line of the given axis.
pub fn dft_apply(grid: &GridSpec, f: &[f64], symbol: impl Fn([f64; 2], [bool; 2]) -> (f64, f64)) -> Vec<f64> {
    let n = grid.npoints();
    let m = grid.m as f64;
    let k0 = 2.0 * PI / grid.length;
    let coeffs = dft(grid, f);
    let half = (grid.m / 2) as i64;
    let sym: Vec<(f64, f64)> = (0..n)
        .map(|kidx| {
            let k = grid.index(kidx);
            let s0 = grid.signed(k[0]);
            let s1 = if grid.dim == 2 { grid.signed(k[1]) } else { 0 };
            symbol(
                [k0 * s0 as f64, k0 * s1 as f64],
                [s0 == -half, grid.dim == 2 && s1 == -half],
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let x = grid.index(i);
            let mut acc = 0.0;
            for (kidx, (c, s)) in coeffs.iter().zip(&sym).enumerate() {
                let k = grid.index(kidx);
                let ph = 2.0 * PI * (k[0] as f64 * x[0] as f64 + k[1] as f64 * x[1] as f64) / m;
                // (c.0 + i c.1)(s.0 + i s.1) e^{iph}, real part
                let pr = c.0 * s.0 - c.1 * s.1;
                let pi = c.0 * s.1 + c.1 * s.0;
                acc += pr * ph.cos() - pi * ph.sin();
            }
            acc / n as f64
        })
        .collect()
}

/// Σ_ξ (1+|ξ|²)^s |f̂(ξ)|² by direct summation over all components.
pub fn sobolev_norm_direct(f: &Field, s: f64) -> f64 {
    let g = f.grid;
    let n = g.npoints() as f64;
    let k0 = 2.0 * PI / g.length;
    let mut acc = 0.0;
    for c in &f.comps {
        for (kidx, (re, im)) in dft(&g, c).into_iter().enumerate() {
            let k = g.index(kidx);
            let s0 = g.signed(k[0]) as f64;
            let s1 = if g.dim == 2 { g.signed(k[1]) as f64 } else { 0.0 };
            let k2 = k0 * k0 * (s0 * s0 + s1 * s1);
            acc += (1.0 + k2).powf(s) * (re * re + im * im);
        }
    }
    (acc * g.measure() / (n * n)).sqrt()
}

/// Nearest point of the unit sphere to `q` by brute-force search over a
/// latitude/longitude mesh, refined around the best cell.
pub fn nearest_on_sphere_mesh(q: &[f64]) -> [f64; 3] {
    let pt = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
    let d2 = |a: [f64; 3]| (0..3).map(|i| (a[i] - q[i]).powi(2)).sum::<f64>();
    let (mut t0, mut t1, mut p0, mut p1) = (0.0, PI, -PI, PI);
    let mut best = (0.0, 0.0);
    for _ in 0..12 {
        let n = 200;
        let mut bd = f64::INFINITY;
        for i in 0..=n {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            for j in 0..=n {
                let p = p0 + (p1 - p0) * j as f64 / n as f64;
                let d = d2(pt(t, p));
                if d < bd {
                    bd = d;
                    best = (t, p);
                }
            }
        }
        let (dt, dp) = (4.0 * (t1 - t0) / n as f64, 4.0 * (p1 - p0) / n as f64);
        t0 = (best.0 - dt).max(0.0);
        t1 = (best.0 + dt).min(PI);
        p0 = best.1 - dp;
        p1 = best.1 + dp;
    }
    pt(best.0, best.1)
}

/// Γ^i_{jk} for a diagonal 2×2 metric given as a function of (θ, φ),
/// from finite differences of the metric components.
pub fn christoffel_from_metric(
    cfg: &OracleConfig,
    g: impl Fn(f64, f64) -> [f64; 2],
    theta: f64,
    phi: f64,
) -> [[[f64; 2]; 2]; 2] {
    let dg = |axis: usize| -> [f64; 2] {
        let q = [theta, phi];
        let mut dir = [0.0; 2];
        dir[axis] = 1.0;
        let d = fd_directional(cfg, |x| g(x[0], x[1]).to_vec(), &q, &dir);
        [d[0], d[1]]
    };
    // ∂_l g_{mm} for diagonal metrics
    let d = [dg(0), dg(1)];
    let gv = g(theta, phi);
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                // ½ g^{ii}(∂_j g_{ik} + ∂_k g_{ij} − ∂_i g_{jk})
                let gik = |l: usize, a: usize, b: usize| if a == b { d[l][a] } else { 0.0 };
                out[i][j][k] = 0.5 / gv[i] * (gik(j, i, k) + gik(k, i, j) - gik(i, j, k));
            }
        }
    }
    out
}

/// Classical RK4 with `nsub` equal substeps.
pub fn rk4(f: impl Fn(&Field) -> Field, v0: &Field, t: f64, nsub: usize) -> Field {
    let h = t / nsub as f64;
    let mut v = v0.clone();
    for _ in 0..nsub {
        let k1 = f(&v);
        let mut w = v.clone();
        w.axpy(0.5 * h, &k1);
        let k2 = f(&w);
        let mut w = v.clone();
        w.axpy(0.5 * h, &k2);
        let k3 = f(&w);
        let mut w = v.clone();
        w.axpy(h, &k3);
        let k4 = f(&w);
        v.axpy(h / 6.0, &k1);
        v.axpy(h / 3.0, &k2);
        v.axpy(h / 3.0, &k3);
        v.axpy(h / 6.0, &k4);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_bounds() {
        assert!(OracleConfig::default().validate().is_ok());
        assert!(OracleConfig {
            fd_step: 1e-2,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(OracleConfig {
            fd_step: 1e-9,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn gateaux_of_quadratic() {
        let g = GridSpec::new(1, 16, 1.0).unwrap();
        let f = Field::from_fn(g, 2, |x, o| {
            o[0] = (6.0 * x[0]).sin();
            o[1] = 0.3 + x[0];
        });
        let phi = Field::from_fn(g, 2, |x, o| {
            o[0] = x[0] * x[0];
            o[1] = -(2.0 * x[0]).cos();
        });
        let d = fd_gateaux(&OracleConfig::default(), |w| Ok(w.inner(w)), &f, &phi).unwrap();
        assert!((d - 2.0 * f.inner(&phi)).abs() < 1e-10);
    }

    #[test]
    fn richardson_gains_per_level() {
        // g(v) = Σ sin(20 v_i): large higher derivatives keep truncation above roundoff
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        let v = Field::from_fn(g, 1, |x, o| o[0] = x[0]);
        let phi = Field::constant(g, &[1.0]);
        let func = |w: &Field| Ok(w.comps[0].iter().map(|x| (20.0 * x).sin()).sum::<f64>());
        let exact: f64 = v.comps[0].iter().map(|x| 20.0 * (20.0 * x).cos()).sum();
        let errs: Vec<f64> = (1..=3)
            .map(|l| {
                let cfg = OracleConfig {
                    fd_step: 1e-3,
                    richardson_levels: l,
                    ode_tol: 1e-10,
                };
                (fd_gateaux(&cfg, func, &v, &phi).unwrap() - exact).abs()
            })
            .collect();
        assert!(errs[1] * 10.0 <= errs[0], "{errs:?}");
        assert!(errs[2] * 10.0 <= errs[1], "{errs:?}");
    }

    #[test]
    fn helical_examples() {
        assert_eq!(helical_frequency(PI / 2.0, 3).abs() < 1e-14, true);
        assert!((helical_frequency(PI / 3.0, 2) - 2.0).abs() < 1e-14);
        for (t, x) in [(0.0, 0.1), (1.3, 4.0), (-2.0, 0.7)] {
            let s = exact_helical(0.8, 3, t, x);
            assert!((dot(&s, &s) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn smoothing_constants() {
        let c1 = smoothing_constant(1);
        assert!((c1 - 0.25f64.powf(0.25) * (-0.25f64).exp()).abs() < 1e-12);
        for i in 1..=3 {
            let c = smoothing_constant(i);
            let want = (i as f64 / 4.0).powf(i as f64 / 4.0) * (-(i as f64) / 4.0).exp();
            assert!(c > 0.0 && c.is_finite());
            assert!((c - want).abs() < 1e-12);
            assert!((smoothing_constant_grid(i, 1_000_000) - c).abs() < 1e-10);
        }
    }

    #[test]
    fn transport_identity_and_norm() {
        let cfg = OracleConfig::default();
        let p = [0.0, 0.6, 0.8];
        let v = [1.0, 0.0, 0.0];
        assert_eq!(transport_ode(&cfg, &p, &p, &v).unwrap(), v.to_vec());
        let w = transport_ode(&cfg, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-9 && w[1].abs() < 1e-9 && w[2].abs() < 1e-9);
        assert!(matches!(
            transport_ode(&cfg, &[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0], &v),
            Err(Error::AntipodalPoints(_))
        ));
    }

    #[test]
    fn mesh_projection_matches_radial() {
        let p = nearest_on_sphere_mesh(&[3.0, 4.0, 0.0]);
        // the squared distance is flat to second order at the minimum: ~1e-8 is the floor
        assert!((p[0] - 0.6).abs() < 1e-7 && (p[1] - 0.8).abs() < 1e-7 && p[2].abs() < 1e-7);
    }
}
