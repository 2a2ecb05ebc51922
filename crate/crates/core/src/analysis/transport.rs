use crate::error::{Error, Result};
use crate::exec;
use crate::flow::{integrate, FlowParams, Trajectory};
use crate::geometry::{AmbientPoint, TangentVector};
use crate::operators::{project_field, OperatorContext};
use crate::spectral::{Field, Spectral};
use serde::{Deserialize, Serialize};

/// Minimum 1 + ⟨pt1, pt2⟩ for a unique minimizing geodesic.
pub const ANTIPODAL_MARGIN: f64 = 1e-6;

fn transport_raw(p1: &[f64], p2: &[f64], v: &[f64]) -> Result<[f64; 3]> {
    if p1 == p2 {
        return Ok([v[0], v[1], v[2]]);
    }
    let c = 1.0 + p1[0] * p2[0] + p1[1] * p2[1] + p1[2] * p2[2];
    if c <= ANTIPODAL_MARGIN {
        return Err(Error::AntipodalPoints(c - 1.0));
    }
    let s = (v[0] * p2[0] + v[1] * p2[1] + v[2] * p2[2]) / c;
    Ok([
        v[0] - s * (p1[0] + p2[0]),
        v[1] - s * (p1[1] + p2[1]),
        v[2] - s * (p1[2] + p2[2]),
    ])
}

/// Parallel transport along the minimizing great circle from pt1 to pt2.
pub fn parallel_transport_s2(pt1: &AmbientPoint, pt2: &AmbientPoint, v: &TangentVector) -> Result<TangentVector> {
    if pt1.coords.len() != 3 || pt2.coords.len() != 3 || v.vec.len() != 3 {
        return Err(Error::Shape("parallel transport works on points of R^3".into()));
    }
    let w = transport_raw(&pt1.coords, &pt2.coords, &v.vec)?;
    Ok(TangentVector {
        base: pt2.clone(),
        vec: w.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionDistance {
    /// Σ_α ‖W_α − Ṽ_α‖²_{L²}.
    pub transport_term: f64,
    /// ‖u₁ − u₂‖²_{L²}.
    pub position_term: f64,
    pub total: f64,
}

/// Transport each ∂_α u₁(x) to u₂(x) and compare with ∂_α u₂(x).
pub fn solution_distance(sp: &Spectral, u1: &Field, u2: &Field) -> Result<SolutionDistance> {
    if u1.grid != u2.grid || u1.p() != 3 || u2.p() != 3 {
        return Err(Error::Shape(
            "solution distance needs two S2-valued fields on one grid".into(),
        ));
    }
    let (g1, g2) = (sp.gradient(u1), sp.gradient(u2));
    let mut tt = 0.0;
    for i in 0..u1.npoints() {
        let (a, b) = (u1.point_vec(i), u2.point_vec(i));
        for (d1, d2) in g1.iter().zip(&g2) {
            let v = transport_raw(&a, &b, &d1.point_vec(i))?;
            let w = d2.point_vec(i);
            tt += (0..3).map(|c| (w[c] - v[c]).powi(2)).sum::<f64>();
        }
    }
    let transport_term = tt * u1.grid.cell();
    let diff = u1.sub(u2);
    let position_term = diff.inner(&diff);
    Ok(SolutionDistance {
        transport_term,
        position_term,
        total: transport_term + position_term,
    })
}

/// Naive H¹ distance ‖∂u₁ − ∂u₂‖² + ‖u₁ − u₂‖².
pub fn naive_h1_distance(sp: &Spectral, u1: &Field, u2: &Field) -> f64 {
    let d = u1.sub(u2);
    d.inner(&d) + sp.gradient(&d).iter().map(|g| g.inner(g)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub times: Vec<f64>,
    pub distances: Vec<SolutionDistance>,
    /// Fitted slope C of log(total) against t over the second half of the window.
    pub rate: f64,
    pub intercept: f64,
    /// max |fit − total| / total over the fitted samples.
    pub fit_residual: f64,
    /// max_t total(t) / (e^{Ct} total(0)).
    pub bound_ratio: f64,
}

/// Evolve both initial data with the same parameters and track the transported distance.
pub fn gronwall_experiment(
    ctx: &OperatorContext,
    u1_0: &Field,
    u2_0: &Field,
    p: &FlowParams,
) -> Result<GronwallReport> {
    let (a, b) = exec::join(ctx.exec(), || integrate(ctx, u1_0, p), || integrate(ctx, u2_0, p));
    let (a, b): (Trajectory, Trajectory) = (a?, b?);
    if a.times != b.times {
        return Err(Error::Shape("twin runs produced different sample times".into()));
    }
    let mut distances = Vec::with_capacity(a.times.len());
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        distances.push(solution_distance(
            &ctx.spectral,
            &project_field(ctx, x),
            &project_field(ctx, y),
        )?);
    }
    let times = a.times;
    let half = times.len() / 2;
    let pts: Vec<(f64, f64)> = times[half..]
        .iter()
        .zip(&distances[half..])
        .filter(|(_, d)| d.total > 0.0)
        .map(|(t, d)| (*t, d.total.ln()))
        .collect();
    let (rate, intercept, fit_residual) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let c = sxy / sxx;
        let b0 = my - c * mx;
        let res = pts
            .iter()
            .map(|(t, l)| ((b0 + c * t).exp() / l.exp() - 1.0).abs())
            .fold(0.0, f64::max);
        (c, b0, res)
    } else {
        (
            0.0,
            distances.first().map_or(0.0, |d| d.total.max(f64::MIN_POSITIVE).ln()),
            0.0,
        )
    };
    let d0 = distances[0].total;
    let bound_ratio = if d0 > 0.0 {
        times
            .iter()
            .zip(&distances)
            .map(|(t, d)| d.total / ((rate * t).exp() * d0))
            .fold(0.0, f64::max)
    } else if distances.iter().all(|d| d.total == 0.0) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GronwallReport {
        times,
        distances,
        rate,
        intercept,
        fit_residual,
        bound_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSample {
    pub t: f64,
    /// ‖∂(v₁−v₂)‖_{H^{s′}}.
    pub lhs: f64,
    /// ‖∂(v₁−v₂)‖^{s′/s}_{H^s} ‖∂(v₁−v₂)‖^{1−s′/s}_{L²}.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub s: f64,
    pub s_prime: f64,
    pub samples: Vec<InterpolationSample>,
    /// max lhs/rhs; ≤ 1 (up to rounding) with the spectral norms.
    pub max_ratio: f64,
}

pub fn interpolation_sample(
    sp: &Spectral,
    v1: &Field,
    v2: &Field,
    s: f64,
    s_prime: f64,
    t: f64,
) -> InterpolationSample {
    let d = sp.forward(&v1.sub(v2));
    let th = s_prime / s;
    let lhs = sp.gradient_sobolev_norm_of(&d, s_prime);
    let rhs = sp.gradient_sobolev_norm_of(&d, s).powf(th) * sp.gradient_sobolev_norm_of(&d, 0.0).powf(1.0 - th);
    InterpolationSample { t, lhs, rhs }
}

pub fn interpolation_dependence(
    sp: &Spectral,
    a: &Trajectory,
    b: &Trajectory,
    s: f64,
    s_prime: f64,
) -> Result<InterpolationReport> {
    if !(s > 0.0 && (0.0..=s).contains(&s_prime)) {
        return Err(Error::InvalidParam(format!(
            "need 0 <= s' <= s, s > 0 (s = {s}, s' = {s_prime})"
        )));
    }
    if a.times != b.times {
        return Err(Error::Shape("trajectories are not on a common time grid".into()));
    }
    let samples: Vec<InterpolationSample> = a
        .times
        .iter()
        .zip(a.snapshots.iter().zip(&b.snapshots))
        .map(|(t, (x, y))| interpolation_sample(sp, x, y, s, s_prime, *t))
        .collect();
    let max_ratio = samples
        .iter()
        .filter(|x| x.rhs > 0.0)
        .map(|x| x.lhs / x.rhs)
        .fold(0.0, f64::max);
    Ok(InterpolationReport {
        s,
        s_prime,
        samples,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere2;
    use crate::scenario;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn pt(x: f64, y: f64, z: f64) -> AmbientPoint {
        AmbientPoint::new(vec![x, y, z])
    }

    #[test]
    fn quarter_turn_example() {
        let (a, b) = (pt(1.0, 0.0, 0.0), pt(0.0, 1.0, 0.0));
        let v = TangentVector {
            base: a.clone(),
            vec: vec![0.0, 1.0, 0.0],
        };
        let w = parallel_transport_s2(&a, &b, &v).unwrap();
        assert_eq!(w.vec, vec![-1.0, 0.0, 0.0]);
        let v = TangentVector {
            base: a.clone(),
            vec: vec![0.0, 0.3, 0.7],
        };
        assert_eq!(parallel_transport_s2(&a, &a, &v).unwrap().vec, v.vec);
        assert!(matches!(
            parallel_transport_s2(&a, &pt(-1.0, 0.0, 0.0), &v),
            Err(Error::AntipodalPoints(_))
        ));
    }

    #[test]
    fn identical_fields_have_zero_distance() {
        let g = GridSpec::new(1, 32, 2.0 * PI).unwrap();
        let u = scenario::random_on_manifold(g, &Sphere2, 2, 4, 0.7);
        let d = solution_distance(&Spectral::new(g), &u, &u).unwrap();
        assert_eq!((d.transport_term, d.position_term, d.total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn small_rotation_is_quadratically_small() {
        let g = GridSpec::new(1, 32, 2.0 * PI).unwrap();
        let u = scenario::random_on_manifold(g, &Sphere2, 2, 4, 0.7);
        let a = 1e-3f64;
        let (s, c) = a.sin_cos();
        let r = Field::from_fn(g, 3, |x, o| {
            let i = ((x[0] / g.spacing()).round() as usize) % g.m;
            let q = u.point_vec(i);
            o[0] = c * q[0] - s * q[1];
            o[1] = s * q[0] + c * q[1];
            o[2] = q[2];
        });
        let d = solution_distance(&Spectral::new(g), &u, &r).unwrap();
        assert!(d.total > 0.0 && d.total < 1e-4, "{d:?}");
    }

    #[test]
    fn interpolation_endpoints_are_identities() {
        let g = GridSpec::new(1, 32, 2.0 * PI).unwrap();
        let sp = Spectral::new(g);
        let a = scenario::random_field(g, 3, 1, 6, 1.0);
        let b = scenario::random_field(g, 3, 2, 6, 1.0);
        let x = interpolation_sample(&sp, &a, &b, 6.0, 0.0, 0.0);
        assert!((x.lhs - x.rhs).abs() < 1e-12 * x.rhs);
        let x = interpolation_sample(&sp, &a, &b, 6.0, 6.0, 0.0);
        assert!((x.lhs - x.rhs).abs() < 1e-12 * x.rhs);
        let x = interpolation_sample(&sp, &a, &b, 6.0, 3.0, 0.0);
        assert!(x.lhs <= x.rhs * (1.0 + 1e-12));
    }
}
