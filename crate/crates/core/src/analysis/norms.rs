use crate::error::{Error, Result};
use crate::geometry::{christoffel_s2, ChartPoint};
use crate::spectral::{Field, Spectral};
use serde::{Deserialize, Serialize};

/// Bound of the unit sphere's second fundamental form enters as C = 2|II|² = 2.
pub const SECOND_ORDER_C: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalenceReport {
    pub order: u32,
    /// max_x ||∇u|² − |∂v|²|.
    pub first_order_violation: f64,
    /// max_x (|∇²u|² − 2|∂²v|² − C|∂v|⁴)₊; zero when the bound holds.
    pub second_order_violation: f64,
    /// max_x |∇²u|² / (2|∂²v|² + C|∂v|⁴) over points with a nonzero bound.
    pub second_order_ratio: f64,
    pub c: f64,
    pub max_grad_sq: f64,
}

/// Compare intrinsic derivatives of u (spherical chart, Christoffel symbols)
/// with ambient derivatives of v on an on-sphere field, orders 1..=k (k ≤ 2).
pub fn norm_equivalence_check(sp: &Spectral, v: &Field, k: u32) -> Result<NormEquivalenceReport> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidParam(format!(
            "chart derivatives are implemented for k = 1, 2; got {k}"
        )));
    }
    if v.p() != 3 {
        return Err(Error::Shape(format!("expected an S2-valued field, got p = {}", v.p())));
    }
    let dim = sp.grid().dim;
    let d1 = sp.gradient(v);
    let d2: Vec<Vec<Field>> = (0..dim).map(|a| sp.gradient(&d1[a])).collect();
    let mut rep = NormEquivalenceReport {
        order: k,
        first_order_violation: 0.0,
        second_order_violation: 0.0,
        second_order_ratio: 0.0,
        c: SECOND_ORDER_C,
        max_grad_sq: 0.0,
    };
    for i in 0..v.npoints() {
        let q = v.point_vec(i);
        let c = ChartPoint::from_ambient(&q)?;
        let (st, ct) = c.theta.sin_cos();
        let rho2 = q[0] * q[0] + q[1] * q[1];
        let dv: Vec<Vec<f64>> = d1.iter().map(|f| f.point_vec(i)).collect();
        let th: Vec<f64> = dv.iter().map(|d| -d[2] / st).collect();
        let ph: Vec<f64> = dv.iter().map(|d| (q[0] * d[1] - q[1] * d[0]) / rho2).collect();
        let grad_u: f64 = (0..dim).map(|a| th[a] * th[a] + st * st * ph[a] * ph[a]).sum();
        let grad_v: f64 = dv.iter().map(|d| d.iter().map(|x| x * x).sum::<f64>()).sum();
        rep.first_order_violation = rep.first_order_violation.max((grad_u - grad_v).abs());
        rep.max_grad_sq = rep.max_grad_sq.max(grad_v);
        if k < 2 {
            continue;
        }
        let gam = christoffel_s2(c)?;
        let mut hess_u = 0.0;
        let mut hess_v = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                let dd = d2[a][b].point_vec(i);
                hess_v += dd.iter().map(|x| x * x).sum::<f64>();
                // differentiate cosθ = v_z and tanφ = v_y/v_x once more
                let th_ab = -(dd[2] + ct * th[a] * th[b]) / st;
                let cross = q[0] * dv[a][1] - q[1] * dv[a][0];
                let dcross = dv[b][0] * dv[a][1] + q[0] * dd[1] - dv[b][1] * dv[a][0] - q[1] * dd[0];
                let drho2 = 2.0 * (q[0] * dv[b][0] + q[1] * dv[b][1]);
                let ph_ab = dcross / rho2 - cross * drho2 / (rho2 * rho2);
                let first = [th[a], ph[a]];
                let second = [th[b], ph[b]];
                let mut h = [th_ab, ph_ab];
                for (kk, hk) in h.iter_mut().enumerate() {
                    for ii in 0..2 {
                        for jj in 0..2 {
                            *hk += gam[kk][ii][jj] * first[ii] * second[jj];
                        }
                    }
                }
                hess_u += h[0] * h[0] + st * st * h[1] * h[1];
            }
        }
        let bound = 2.0 * hess_v + SECOND_ORDER_C * grad_v * grad_v;
        rep.second_order_violation = rep.second_order_violation.max(hess_u - bound).max(0.0);
        if bound > 0.0 {
            rep.second_order_ratio = rep.second_order_ratio.max(hess_u / bound);
        }
    }
    Ok(rep)
}
