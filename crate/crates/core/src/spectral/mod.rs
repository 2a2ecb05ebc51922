//! Fourier-multiplier calculus on the periodic box.

mod field;
mod grid;
pub mod io;

pub use field::{l2_distance, Field};
pub use grid::GridSpec;

use crate::exec::{for_each_mut, Exec};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Spectral coefficients (unnormalized forward DFT), same layout as `Field`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: GridSpec,
    pub comps: Vec<Vec<Complex64>>,
}

/// Symbol sampled on the grid's frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub values: Vec<Complex64>,
}

impl Multiplier {
    pub fn real(values: Vec<f64>) -> Self {
        Self {
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn compose(&self, o: &Multiplier) -> Multiplier {
        Multiplier {
            values: self.values.iter().zip(&o.values).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Transform plans plus precomputed wavenumber tables for one grid.
pub struct Spectral {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Wavevector per mode, per axis (Nyquist kept as −M/2·2π/L).
    xi: Vec<[f64; 2]>,
    /// Whether each mode sits on the Nyquist line of axis 0 / 1.
    nyq: Vec<[bool; 2]>,
    k2: Vec<f64>,
    keep: Vec<bool>,
    pub exec: Exec,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .field("exec", &self.exec)
            .finish()
    }
}

impl Clone for Spectral {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            fwd: self.fwd.clone(),
            inv: self.inv.clone(),
            xi: self.xi.clone(),
            nyq: self.nyq.clone(),
            k2: self.k2.clone(),
            keep: self.keep.clone(),
            exec: self.exec,
        }
    }
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.m);
        let inv = planner.plan_fft_inverse(grid.m);
        let n = grid.npoints();
        let k0 = grid.base_wavenumber();
        let half = (grid.m / 2) as i64;
        let mut xi = Vec::with_capacity(n);
        let mut nyq = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let idx = grid.index(i);
            let s = [grid.signed(idx[0]), if grid.dim == 2 { grid.signed(idx[1]) } else { 0 }];
            xi.push([k0 * s[0] as f64, k0 * s[1] as f64]);
            nyq.push([s[0] == -half, grid.dim == 2 && s[1] == -half]);
            keep.push(s.iter().all(|j| 3 * j.unsigned_abs() as usize <= grid.m));
        }
        let k2 = xi.iter().map(|k| k[0] * k[0] + k[1] * k[1]).collect();
        Self {
            grid,
            fwd,
            inv,
            xi,
            nyq,
            k2,
            keep,
            exec: Exec::Auto,
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// |ξ|² per mode.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn xi(&self) -> &[[f64; 2]] {
        &self.xi
    }

    fn transform_axes(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.grid.m;
        plan.process(data);
        if self.grid.dim == 2 {
            let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
            for r in 0..m {
                for c in 0..m {
                    t[c * m + r] = data[r * m + c];
                }
            }
            plan.process(&mut t);
            for r in 0..m {
                for c in 0..m {
                    data[r * m + c] = t[c * m + r];
                }
            }
        }
    }

    pub fn forward(&self, f: &Field) -> Spectrum {
        assert_eq!(f.grid, self.grid, "field grid differs from transform grid");
        let mut comps: Vec<Vec<Complex64>> = f
            .comps
            .iter()
            .map(|c| c.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        for_each_mut(self.exec, self.grid.npoints(), &mut comps, |_, c| {
            self.transform_axes(c, &self.fwd)
        });
        Spectrum { grid: self.grid, comps }
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, s: &Spectrum) -> Field {
        let mut comps = s.comps.clone();
        let norm = 1.0 / self.grid.npoints() as f64;
        for_each_mut(self.exec, self.grid.npoints(), &mut comps, |_, c| {
            self.transform_axes(c, &self.inv)
        });
        Field {
            grid: self.grid,
            comps: comps
                .into_iter()
                .map(|c| c.into_iter().map(|z| z.re * norm).collect())
                .collect(),
        }
    }

    pub fn apply_spectrum(&self, s: &Spectrum, m: &Multiplier) -> Spectrum {
        Spectrum {
            grid: s.grid,
            comps: s
                .comps
                .iter()
                .map(|c| c.iter().zip(&m.values).map(|(a, b)| a * b).collect())
                .collect(),
        }
    }

    /// Multiplier applied to an already transformed field, returned in physical space.
    pub fn apply_to(&self, s: &Spectrum, m: &Multiplier) -> Field {
        self.inverse(&self.apply_spectrum(s, m))
    }

    pub fn apply(&self, f: &Field, m: &Multiplier) -> Field {
        self.apply_to(&self.forward(f), m)
    }

    pub fn multiplier(&self, symbol: impl Fn(&[f64; 2]) -> Complex64) -> Multiplier {
        Multiplier {
            values: self.xi.iter().map(symbol).collect(),
        }
    }

    /// (i ξ_axis)^order; odd orders vanish on the Nyquist line.
    pub fn derivative_multiplier(&self, axis: usize, order: u32) -> Multiplier {
        assert!(axis < self.grid.dim, "axis out of range");
        let i_pow = Complex64::new(0.0, 1.0).powu(order);
        let values = self
            .xi
            .iter()
            .zip(&self.nyq)
            .map(|(k, ny)| {
                if order % 2 == 1 && ny[axis] {
                    Complex64::new(0.0, 0.0)
                } else {
                    i_pow * k[axis].powi(order as i32)
                }
            })
            .collect();
        Multiplier { values }
    }

    pub fn laplacian_multiplier(&self) -> Multiplier {
        Multiplier::real(self.k2.iter().map(|k| -k).collect())
    }

    pub fn bilaplacian_multiplier(&self) -> Multiplier {
        Multiplier::real(self.k2.iter().map(|k| k * k).collect())
    }

    /// |ξ|^s with |0|^0 = 1 and |0|^s = 0 for s > 0.
    pub fn fractional_multiplier(&self, s: f64) -> Multiplier {
        assert!(s >= 0.0, "fractional order must be nonnegative");
        Multiplier::real(
            self.k2
                .iter()
                .map(|&k| {
                    if s == 0.0 {
                        1.0
                    } else if k == 0.0 {
                        0.0
                    } else {
                        k.powf(0.5 * s)
                    }
                })
                .collect(),
        )
    }

    /// e^{−ε|ξ|⁴t}.
    pub fn semigroup_multiplier(&self, eps: f64, t: f64) -> Multiplier {
        Multiplier::real(self.k2.iter().map(|&k| (-eps * k * k * t).exp()).collect())
    }

    pub fn dealias_multiplier(&self) -> Multiplier {
        Multiplier::real(self.keep.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect())
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.keep
    }

    pub fn derivative(&self, f: &Field, axis: usize, order: u32) -> Field {
        self.apply(f, &self.derivative_multiplier(axis, order))
    }

    pub fn laplacian(&self, f: &Field) -> Field {
        self.apply(f, &self.laplacian_multiplier())
    }

    pub fn fractional(&self, f: &Field, s: f64) -> Field {
        self.apply(f, &self.fractional_multiplier(s))
    }

    pub fn semigroup(&self, f: &Field, eps: f64, t: f64) -> Field {
        assert!(eps >= 0.0 && t >= 0.0, "semigroup needs eps, t >= 0");
        if eps == 0.0 || t == 0.0 {
            return f.clone();
        }
        self.apply(f, &self.semigroup_multiplier(eps, t))
    }

    /// 2/3-rule truncation.
    pub fn dealias(&self, f: &Field) -> Field {
        self.apply(f, &self.dealias_multiplier())
    }

    /// Σ_ξ w(ξ)|f̂(ξ)|² scaled to the continuous L² normalization.
    pub fn weighted_energy(&self, s: &Spectrum, w: impl Fn(f64) -> f64) -> f64 {
        let n = self.grid.npoints() as f64;
        let scale = self.grid.measure() / (n * n);
        let wk: Vec<f64> = self.k2.iter().map(|&k| w(k)).collect();
        s.comps
            .iter()
            .map(|c| c.iter().zip(&wk).map(|(z, w)| w * z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * scale
    }

    /// (Σ (1+|ξ|²)^s |f̂|²)^{1/2}.
    pub fn sobolev_norm(&self, f: &Field, s: f64) -> f64 {
        self.sobolev_norm_of(&self.forward(f), s)
    }

    pub fn sobolev_norm_of(&self, sp: &Spectrum, s: f64) -> f64 {
        self.weighted_energy(sp, |k| (1.0 + k).powf(s)).sqrt()
    }

    /// ‖D^s f‖_{L²} (homogeneous seminorm).
    pub fn homogeneous_norm(&self, f: &Field, s: f64) -> f64 {
        self.homogeneous_norm_of(&self.forward(f), s)
    }

    pub fn homogeneous_norm_of(&self, sp: &Spectrum, s: f64) -> f64 {
        self.weighted_energy(sp, |k| {
            if s == 0.0 {
                1.0
            } else if k == 0.0 {
                0.0
            } else {
                k.powf(s)
            }
        })
        .sqrt()
    }

    /// ‖∂v‖_{H^s} = (Σ |ξ|²(1+|ξ|²)^s |v̂|²)^{1/2}: the H^s norm of the full gradient.
    pub fn gradient_sobolev_norm(&self, f: &Field, s: f64) -> f64 {
        self.gradient_sobolev_norm_of(&self.forward(f), s)
    }

    pub fn gradient_sobolev_norm_of(&self, sp: &Spectrum, s: f64) -> f64 {
        // odd derivative multipliers drop the Nyquist line
        let n = self.grid.npoints() as f64;
        let scale = self.grid.measure() / (n * n);
        let mut acc = 0.0;
        for c in &sp.comps {
            for (i, z) in c.iter().enumerate() {
                let mut g = 0.0;
                for a in 0..self.grid.dim {
                    if !self.nyq[i][a] {
                        g += self.xi[i][a] * self.xi[i][a];
                    }
                }
                acc += g * (1.0 + self.k2[i]).powf(s) * z.norm_sqr();
            }
        }
        (acc * scale).sqrt()
    }

    pub fn l2_norm(&self, f: &Field) -> f64 {
        self.weighted_energy(&self.forward(f), |_| 1.0).sqrt()
    }

    /// Gradient components ∂_α f for α < dim.
    pub fn gradient(&self, f: &Field) -> Vec<Field> {
        let s = self.forward(f);
        (0..self.grid.dim)
            .map(|a| self.apply_to(&s, &self.derivative_multiplier(a, 1)))
            .collect()
    }
}
