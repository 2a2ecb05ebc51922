use super::GridSpec;
use crate::error::{Error, Result};

/// Ambient-valued grid function: `comps[a][i]` is component a at point i.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub comps: Vec<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: GridSpec, p: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.npoints()]; p],
        }
    }

    pub fn constant(grid: GridSpec, value: &[f64]) -> Self {
        Self {
            grid,
            comps: value.iter().map(|&c| vec![c; grid.npoints()]).collect(),
        }
    }

    pub fn from_comps(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.npoints()) {
            return Err(Error::Shape("component length differs from grid size".into()));
        }
        Ok(Self { grid, comps })
    }

    /// Sample `f(x, out)` at every grid point.
    pub fn from_fn(grid: GridSpec, p: usize, f: impl Fn(&[f64; 2], &mut [f64])) -> Self {
        let mut out = Self::zeros(grid, p);
        let mut buf = vec![0.0; p];
        for i in 0..grid.npoints() {
            f(&grid.coords(i), &mut buf);
            for a in 0..p {
                out.comps[a][i] = buf[a];
            }
        }
        out
    }

    /// Rebuild from point-major storage (`p` values per point).
    pub fn from_point_major(grid: GridSpec, p: usize, data: &[f64]) -> Self {
        let n = grid.npoints();
        let mut comps = vec![vec![0.0; n]; p];
        for i in 0..n {
            for a in 0..p {
                comps[a][i] = data[i * p + a];
            }
        }
        Self { grid, comps }
    }

    pub fn p(&self) -> usize {
        self.comps.len()
    }

    pub fn npoints(&self) -> usize {
        self.grid.npoints()
    }

    pub fn point(&self, i: usize, out: &mut [f64]) {
        for (a, c) in self.comps.iter().enumerate() {
            out[a] = c[i];
        }
    }

    pub fn point_vec(&self, i: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[i]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    fn same_shape(&self, o: &Field) {
        assert_eq!(self.grid, o.grid, "grid mismatch");
        assert_eq!(self.p(), o.p(), "component count mismatch");
    }

    pub fn zip_map(&self, o: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        self.same_shape(o);
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Field { grid: self.grid, comps }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            comps: self.comps.iter().map(|c| c.iter().map(|x| f(*x)).collect()).collect(),
        }
    }

    pub fn add(&self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|x| s * x)
    }

    /// self += s·o
    pub fn axpy(&mut self, s: f64, o: &Field) {
        self.same_shape(o);
        for (a, b) in self.comps.iter_mut().zip(&o.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.npoints() as f64;
        self.comps.iter().map(|c| c.iter().sum::<f64>() / n).collect()
    }

    pub fn add_constant(&self, c: &[f64]) -> Field {
        Field {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(c)
                .map(|(v, &k)| v.iter().map(|x| x + k).collect())
                .collect(),
        }
    }

    /// ∫⟨f, g⟩ by the rectangle rule.
    pub fn inner(&self, o: &Field) -> f64 {
        self.same_shape(o);
        let s: f64 = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        s * self.grid.cell()
    }

    /// Pointwise Euclidean norm |f(x_i)|.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        (0..self.npoints())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rectangle-rule Lᵖ norm of the pointwise Euclidean norm; p = ∞ is the grid max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let pw = self.pointwise_norm();
        if p.is_infinite() {
            return pw.iter().fold(0.0, |m: f64, x| m.max(*x));
        }
        assert!(p >= 1.0, "lp_norm needs p >= 1");
        (pw.iter().map(|x| x.powf(p)).sum::<f64>() * self.grid.cell()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Single component as its own field.
    pub fn component(&self, a: usize) -> Field {
        Field {
            grid: self.grid,
            comps: vec![self.comps[a].clone()],
        }
    }
}

/// ‖f − g‖_{L²}.
pub fn l2_distance(f: &Field, g: &Field) -> f64 {
    f.sub(g).l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lp_norms_of_simple_fields() {
        let g = GridSpec::new(1, 64, 2.0 * PI).unwrap();
        let one = Field::constant(g, &[1.0]);
        for p in [1.0, 2.0, 3.5] {
            assert!((one.lp_norm(p) - (2.0 * PI).powf(1.0 / p)).abs() < 1e-12);
        }
        assert_eq!(one.lp_norm(f64::INFINITY), 1.0);
        let s = Field::from_fn(g, 1, |x, o| o[0] = x[0].sin());
        assert!((s.lp_norm(2.0) - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn lp_norm_two_dims_measure() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let one = Field::constant(g, &[0.6, 0.8]);
        assert!((one.lp_norm(2.0) - 3.0).abs() < 1e-13);
    }
}
