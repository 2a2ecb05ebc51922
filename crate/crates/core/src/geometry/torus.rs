use super::sphere::{unit_d_pi, unit_hess, unit_project, unit_third};
use super::{norm, TargetManifold};

/// Flat torus S¹×S¹ ⊂ ℝ⁴ (product of unit circles in the (1,2) and (3,4)
/// planes). Zero curvature; J rotates the frame t₁ = (−q₂,q₁,0,0),
/// t₂ = (0,0,−q₄,q₃) by a quarter turn: J t₁ = t₂.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatTorus;

fn split<'a>(v: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    v.split_at(2)
}

impl TargetManifold for FlatTorus {
    fn name(&self) -> &'static str {
        "torus"
    }
    fn ambient_dim(&self) -> usize {
        4
    }
    fn tubular_radius(&self) -> f64 {
        0.5
    }
    fn distance(&self, q: &[f64]) -> f64 {
        let (a, b) = split(q);
        let da = norm(a) - 1.0;
        let db = norm(b) - 1.0;
        (da * da + db * db).sqrt()
    }
    fn in_domain(&self, q: &[f64]) -> bool {
        norm(&q[..2]) > 1e-8 && norm(&q[2..]) > 1e-8
    }
    fn project_into(&self, q: &[f64], out: &mut [f64]) {
        let (o1, o2) = out.split_at_mut(2);
        unit_project(&q[..2], o1);
        unit_project(&q[2..], o2);
    }
    fn d_pi_into(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        let (o1, o2) = out.split_at_mut(2);
        unit_d_pi(&q[..2], &x[..2], o1);
        unit_d_pi(&q[2..], &x[2..], o2);
    }
    fn hess_pi_into(&self, q: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
        let (o1, o2) = out.split_at_mut(2);
        unit_hess(&q[..2], &x[..2], &y[..2], o1);
        unit_hess(&q[2..], &x[2..], &y[2..], o2);
    }
    fn third_pi_into(&self, q: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        let (o1, o2) = out.split_at_mut(2);
        unit_third(&q[..2], &x[..2], &y[..2], &z[..2], o1);
        unit_third(&q[2..], &x[2..], &y[2..], &z[2..], o2);
    }
    fn j_into(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        let t1 = [-q[1], q[0], 0.0, 0.0];
        let t2 = [0.0, 0.0, -q[3], q[2]];
        let x1: f64 = (0..4).map(|i| x[i] * t1[i]).sum();
        let x2: f64 = (0..4).map(|i| x[i] * t2[i]).sum();
        for i in 0..4 {
            out[i] = x1 * t2[i] - x2 * t1[i];
        }
    }
    fn curvature_into(&self, _q: &[f64], _x: &[f64], _y: &[f64], _z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_squares_to_minus_identity() {
        let (a, b) = (0.7_f64, -1.9_f64);
        let q = [a.cos(), a.sin(), b.cos(), b.sin()];
        let x = [-0.3 * a.sin(), 0.3 * a.cos(), 1.2 * b.sin(), -1.2 * b.cos()];
        let mut jx = [0.0; 4];
        let mut jjx = [0.0; 4];
        FlatTorus.j_into(&q, &x, &mut jx);
        FlatTorus.j_into(&q, &jx, &mut jjx);
        for i in 0..4 {
            assert!((jjx[i] + x[i]).abs() < 1e-14);
        }
        let ip: f64 = (0..4).map(|i| jx[i] * x[i]).sum();
        assert!(ip.abs() < 1e-14);
    }

    #[test]
    fn distance_is_blockwise() {
        let q = [2.0, 0.0, 0.0, 1.0];
        assert!((FlatTorus.distance(&q) - 1.0).abs() < 1e-15);
        assert!(!FlatTorus.in_tube(&q));
    }
}
