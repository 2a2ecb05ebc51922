use super::{dot, norm, TargetManifold};

// Unit sphere S^{d-1} ⊂ ℝ^d, Π(q) = q/|q|. Shared with the torus, whose
// factors are unit circles. Notation: r = |q|, n = q/r, a_x = ⟨n, x⟩.

pub(crate) fn unit_project(q: &[f64], out: &mut [f64]) {
    let r = norm(q);
    for (o, v) in out.iter_mut().zip(q) {
        *o = v / r;
    }
}

pub(crate) fn unit_d_pi(q: &[f64], x: &[f64], out: &mut [f64]) {
    let r = norm(q);
    let ax = dot(q, x) / r;
    for i in 0..q.len() {
        out[i] = (x[i] - ax * q[i] / r) / r;
    }
}

// H(x,y) = −r⁻²[a_y Px + a_x Py + ⟨Px,Py⟩ n]
pub(crate) fn unit_hess(q: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
    let r = norm(q);
    let ax = dot(q, x) / r;
    let ay = dot(q, y) / r;
    let bxy = dot(x, y) - ax * ay;
    let r2 = r * r;
    for i in 0..q.len() {
        let n = q[i] / r;
        let px = x[i] - ax * n;
        let py = y[i] - ay * n;
        out[i] = -(ay * px + ax * py + bxy * n) / r2;
    }
}

// Derivative of the Hessian along z, written in raw ambient form:
// r³ D³Π = −(⟨y,z⟩x + ⟨x,z⟩y + ⟨x,y⟩z) + 3(a_y a_z x + a_x a_z y + a_x a_y z)
//          + 3n(a_z⟨x,y⟩ + a_y⟨x,z⟩ + a_x⟨y,z⟩) − 15 a_x a_y a_z n
pub(crate) fn unit_third(q: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
    let r = norm(q);
    let ax = dot(q, x) / r;
    let ay = dot(q, y) / r;
    let az = dot(q, z) / r;
    let xy = dot(x, y);
    let xz = dot(x, z);
    let yz = dot(y, z);
    let r3 = r * r * r;
    let cn = 3.0 * (az * xy + ay * xz + ax * yz) - 15.0 * ax * ay * az;
    for i in 0..q.len() {
        let n = q[i] / r;
        out[i] =
            (-(yz * x[i] + xz * y[i] + xy * z[i]) + 3.0 * (ay * az * x[i] + ax * az * y[i] + ax * ay * z[i]) + cn * n)
                / r3;
    }
}

/// Round sphere S² ⊂ ℝ³ with J_q X = q × X.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sphere2;

pub fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl TargetManifold for Sphere2 {
    fn name(&self) -> &'static str {
        "s2"
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn tubular_radius(&self) -> f64 {
        0.5
    }
    fn distance(&self, q: &[f64]) -> f64 {
        (norm(q) - 1.0).abs()
    }
    fn in_domain(&self, q: &[f64]) -> bool {
        norm(q) > 1e-8
    }
    fn project_into(&self, q: &[f64], out: &mut [f64]) {
        unit_project(q, out)
    }
    fn d_pi_into(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        unit_d_pi(q, x, out)
    }
    fn hess_pi_into(&self, q: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
        unit_hess(q, x, y, out)
    }
    fn third_pi_into(&self, q: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        unit_third(q, x, y, z, out)
    }
    fn j_into(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&cross(q, x));
    }
    fn curvature_into(&self, _q: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        let yz = dot(y, z);
        let xz = dot(x, z);
        for i in 0..3 {
            out[i] = yz * x[i] - xz * y[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{d_pi, d_rho, hess_pi, j_apply, project, AmbientPoint, LinearMap, TangentVector};
    use crate::Error;

    fn pt(c: &[f64]) -> AmbientPoint {
        AmbientPoint::new(c.to_vec())
    }

    #[test]
    fn project_examples() {
        let m = Sphere2;
        assert_eq!(project(&m, &pt(&[0.0, 0.0, 2.0])).unwrap().coords, vec![0.0, 0.0, 1.0]);
        let p = project(&m, &pt(&[3.0, 4.0, 0.0])).unwrap();
        assert!((p.coords[0] - 0.6).abs() < 1e-15 && (p.coords[1] - 0.8).abs() < 1e-15);
        let on = [0.48, 0.6, 0.64];
        assert_eq!(project(&m, &pt(&on)).unwrap().coords, on.to_vec());
    }

    #[test]
    fn project_rejects_outside_tube() {
        let e = project(&Sphere2, &pt(&[0.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(e, Error::OutsideTubularNeighborhood { .. }));
        assert!(!Sphere2.in_tube(&[0.0, 0.0, 1.6]));
        assert!(Sphere2.in_tube(&[0.0, 0.0, 1.4]));
    }

    #[test]
    fn d_pi_closed_form_examples() {
        let a = d_pi(&Sphere2, &pt(&[0.0, 0.0, 1.0])).unwrap();
        let mut want = LinearMap::zeros(3);
        want.data[0] = 1.0;
        want.data[4] = 1.0;
        assert!(a.max_abs_diff(&want) < 1e-15);
        let b = d_pi(&Sphere2, &pt(&[0.0, 0.0, 2.0])).unwrap();
        want.data[0] = 0.5;
        want.data[4] = 0.5;
        assert!(b.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn d_pi_plus_d_rho_is_identity() {
        let q = pt(&[0.3, -1.1, 0.4]);
        let a = d_pi(&Sphere2, &q).unwrap();
        let b = d_rho(&Sphere2, &q).unwrap();
        let mut s = a.clone();
        for (x, y) in s.data.iter_mut().zip(&b.data) {
            *x += y;
        }
        assert!(s.max_abs_diff(&LinearMap::identity(3)) < 1e-12);
    }

    #[test]
    fn hessian_at_pole() {
        let h = hess_pi(&Sphere2, &pt(&[0.0, 0.0, 1.0]), &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h, vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn j_examples() {
        let q = pt(&[0.0, 0.0, 1.0]);
        let x = TangentVector {
            base: q.clone(),
            vec: vec![1.0, 0.0, 0.0],
        };
        assert_eq!(j_apply(&Sphere2, &q, &x).unwrap().vec, vec![0.0, 1.0, 0.0]);
        let bad = TangentVector {
            base: q.clone(),
            vec: vec![1.0, 0.0, 0.1],
        };
        assert!(matches!(j_apply(&Sphere2, &q, &bad), Err(Error::NotTangent(_))));
    }
}
