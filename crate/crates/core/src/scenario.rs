//! Initial data.

use crate::geometry::TargetManifold;
use crate::oracle::exact_helical;
use crate::spectral::{Field, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Helical wave on S² at time t (varies along axis 0).
pub fn helical(grid: GridSpec, theta: f64, k: i32, t: f64) -> Field {
    Field::from_fn(grid, 3, |x, o| o.copy_from_slice(&exact_helical(theta, k, t, x[0])))
}

/// exp(−|x − c|²/w²) centred in the box.
fn gaussian(grid: &GridSpec, x: &[f64; 2], width: f64) -> f64 {
    let c = 0.5 * grid.length;
    let r2: f64 = (0..grid.dim).map(|a| (x[a] - c) * (x[a] - c)).sum();
    (-r2 / (width * width)).exp()
}

/// Localized tilt away from a constant state: on S² the north pole is
/// rotated towards +x by `amplitude`·gaussian; on the torus both angles
/// are bumped (second one by half). Constant far from the centre.
pub fn bump(grid: GridSpec, target: &dyn TargetManifold, amplitude: f64, width: f64) -> Field {
    match target.ambient_dim() {
        3 => Field::from_fn(grid, 3, |x, o| {
            let psi = amplitude * gaussian(&grid, x, width);
            o.copy_from_slice(&[psi.sin(), 0.0, psi.cos()]);
        }),
        _ => Field::from_fn(grid, 4, |x, o| {
            let g = gaussian(&grid, x, width);
            let (a, b) = (amplitude * g, 0.5 * amplitude * g);
            o.copy_from_slice(&[a.cos(), a.sin(), b.cos(), b.sin()]);
        }),
    }
}

/// Smooth random periodic function: `modes` random Fourier modes per axis
/// with amplitudes decaying like 1/(1+|j|)².
pub struct RandomSmooth {
    terms: Vec<([i32; 2], f64, f64)>,
    offset: f64,
}

impl RandomSmooth {
    pub fn new(rng: &mut impl Rng, dim: usize, modes: i32, amplitude: f64, offset: f64) -> Self {
        let mut terms = Vec::new();
        let ky_range = if dim == 2 { -modes..=modes } else { 0..=0 };
        for kx in -modes..=modes {
            for ky in ky_range.clone() {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
                let amp = amplitude * decay * rng.gen_range(-1.0..1.0);
                terms.push(([kx, ky], amp, rng.gen_range(0.0..2.0 * PI)));
            }
        }
        Self { terms, offset }
    }

    pub fn eval(&self, grid: &GridSpec, x: &[f64; 2]) -> f64 {
        let k0 = grid.base_wavenumber();
        self.offset
            + self
                .terms
                .iter()
                .map(|(k, a, ph)| a * (k0 * (k[0] as f64 * x[0] + k[1] as f64 * x[1]) + ph).cos())
                .sum::<f64>()
    }
}

/// Smooth random on-manifold field (S² via spherical angles kept away
/// from the poles, torus via two angle fields).
pub fn random_on_manifold(grid: GridSpec, target: &dyn TargetManifold, seed: u64, modes: i32, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0.0..2.0 * PI);
    let a = RandomSmooth::new(&mut rng, grid.dim, modes, amplitude, offset);
    let b = RandomSmooth::new(&mut rng, grid.dim, modes, amplitude, 0.0);
    match target.ambient_dim() {
        3 => Field::from_fn(grid, 3, |x, o| {
            let theta = PI / 2.0 + 0.6 * (b.eval(&grid, x)).tanh();
            let phi = a.eval(&grid, x);
            o.copy_from_slice(&[theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }),
        _ => Field::from_fn(grid, 4, |x, o| {
            let (s, t) = (a.eval(&grid, x), b.eval(&grid, x));
            o.copy_from_slice(&[s.cos(), s.sin(), t.cos(), t.sin()]);
        }),
    }
}

/// Scalar Gaussian centred in the box, exp(−|x − c|²/w²).
pub fn gaussian_field(grid: GridSpec, width: f64) -> Field {
    let c = grid.length / 2.0;
    Field::from_fn(grid, 1, |x, o| {
        let r2 = (x[0] - c).powi(2) + if grid.dim == 2 { (x[1] - c).powi(2) } else { 0.0 };
        o[0] = (-r2 / (width * width)).exp();
    })
}

/// Radially perturbed copy of `v`: v·(1 + η·g(x)) with smooth random g, |g| ≤ 1.
pub fn radial_perturbation(v: &Field, seed: u64, modes: i32, eta: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = RandomSmooth::new(&mut rng, v.grid.dim, modes, 1.0, 0.0);
    let grid = v.grid;
    let mut out = v.clone();
    for i in 0..v.npoints() {
        let s = 1.0 + eta * g.eval(&grid, &grid.coords(i)).tanh();
        for c in out.comps.iter_mut() {
            c[i] *= s;
        }
    }
    out
}

/// Smooth random ambient field with p components (used as test directions).
pub fn random_field(grid: GridSpec, p: usize, seed: u64, modes: i32, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs: Vec<RandomSmooth> = (0..p)
        .map(|_| RandomSmooth::new(&mut rng, grid.dim, modes, amplitude, 0.0))
        .collect();
    Field::from_fn(grid, p, |x, o| {
        for (a, f) in fs.iter().enumerate() {
            o[a] = f.eval(&grid, x);
        }
    })
}
