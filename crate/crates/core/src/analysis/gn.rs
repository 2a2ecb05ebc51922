use crate::error::{Error, Result};
use crate::spectral::{Field, GridSpec, Multiplier, Spectral};
use serde::{Deserialize, Serialize};

/// Exponents of ‖∂^j f‖_{L^p} ≤ C‖∂^k f‖^a_{L^q}‖f‖^{1−a}_{L^r}; f64::INFINITY encodes ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNExponents {
    pub n: usize,
    pub j: u32,
    pub k: u32,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub a: f64,
    /// False in the excluded endpoint a = 1, r = n/(k−1) ≠ 1.
    pub valid: bool,
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn in_range(x: f64) -> bool {
    x >= 1.0 && !x.is_nan()
}

impl GNExponents {
    pub fn new(n: usize, j: u32, k: u32, p: f64, q: f64, r: f64, a: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if n == 0 || j > k || k == 0 {
            return bad(format!("need n >= 1 and 0 <= j <= k, k >= 1 (n={n}, j={j}, k={k})"));
        }
        if !(in_range(p) && in_range(q) && in_range(r)) {
            return bad(format!("p, q, r must lie in [1, inf] (p={p}, q={q}, r={r})"));
        }
        let lo = j as f64 / k as f64;
        if !(a > lo || (j == 0 && a > 0.0)) || a > 1.0 {
            return bad(format!("a = {a} outside ({lo}, 1]"));
        }
        let nf = n as f64;
        let rhs = j as f64 / nf + inv(r) + a * (inv(q) - inv(r) - k as f64 / nf);
        if (inv(p) - rhs).abs() > 1e-12 {
            return bad(format!(
                "exponent relation violated: 1/p = {} but the right side is {rhs}",
                inv(p)
            ));
        }
        let endpoint = k > 1 && a == 1.0 && r.is_finite() && r != 1.0 && (r - nf / (k - 1) as f64).abs() < 1e-12;
        Ok(Self {
            n,
            j,
            k,
            p,
            q,
            r,
            a,
            valid: !endpoint,
        })
    }

    /// Solve the relation for p.
    pub fn with_derived_p(n: usize, j: u32, k: u32, q: f64, r: f64, a: f64) -> Result<Self> {
        let nf = n as f64;
        let ip = j as f64 / nf + inv(r) + a * (inv(q) - inv(r) - k as f64 / nf);
        if !(0.0..=1.0 + 1e-15).contains(&ip) {
            return Err(Error::InvalidParam(format!("derived 1/p = {ip} outside [0, 1]")));
        }
        let p = if ip.abs() < 1e-15 {
            f64::INFINITY
        } else {
            1.0 / ip.min(1.0)
        };
        Self::new(n, j, k, p, q, r, a)
    }
}

/// Twenty tuples satisfying the exponent relation, one and two space dimensions.
pub fn gn_table() -> Vec<GNExponents> {
    let inf = f64::INFINITY;
    let rows: [(usize, u32, u32, f64, f64, f64); 20] = [
        (1, 0, 1, 2.0, 2.0, 0.5),
        (1, 0, 1, 2.0, 2.0, 0.25),
        (1, 0, 1, 2.0, 1.0, 0.4),
        (1, 0, 2, 2.0, 2.0, 0.25),
        (1, 1, 2, 2.0, 2.0, 0.75),
        (1, 1, 2, 2.0, 2.0, 0.6),
        (1, 0, 2, 2.0, 4.0, 0.1),
        (1, 1, 3, 2.0, 2.0, 0.5),
        (1, 2, 3, 2.0, 2.0, 0.8),
        (1, 0, 1, inf, 2.0, 0.2),
        (2, 0, 1, 2.0, 2.0, 0.5),
        (2, 0, 1, 2.0, 4.0, 0.25),
        (2, 0, 2, 2.0, 2.0, 0.5),
        (2, 1, 2, 2.0, 2.0, 0.75),
        (2, 1, 2, 2.0, 2.0, 0.9),
        (2, 0, 2, 2.0, 1.0, 0.3),
        (2, 1, 3, 2.0, 2.0, 0.6),
        (2, 2, 3, 2.0, 2.0, 0.8),
        (2, 0, 1, 4.0, 2.0, 0.5),
        (2, 1, 2, 3.0, 2.0, 0.8),
    ];
    rows.iter()
        .map(|&(n, j, k, q, r, a)| {
            GNExponents::with_derived_p(n, j, k, q, r, a).expect("table row satisfies the relation")
        })
        .collect()
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Pointwise |∂^j f|² summed over all ordered index tuples and components.
pub fn derivative_magnitude_sq(sp: &Spectral, f: &Field, j: u32) -> Vec<f64> {
    let dim = sp.grid().dim;
    let spec = sp.forward(f);
    let mut out = vec![0.0; f.npoints()];
    let splits: Vec<(u32, f64)> = if dim == 1 {
        vec![(j, 1.0)]
    } else {
        (0..=j).map(|a| (a, binom(j, a))).collect()
    };
    for (ax, mult) in splits {
        let mut m: Multiplier = sp.derivative_multiplier(0, ax);
        if dim == 2 {
            m = m.compose(&sp.derivative_multiplier(1, j - ax));
        }
        let d = sp.apply_to(&spec, &m);
        for c in &d.comps {
            out.iter_mut().zip(c).for_each(|(o, v)| *o += mult * v * v);
        }
    }
    out
}

/// ‖g‖_{L^p} of a pointwise magnitude given as g² (rectangle rule; p = ∞ is the grid max).
fn lp_of_sq(grid: &GridSpec, sq: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return sq.iter().fold(0.0f64, |m, v| m.max(v.sqrt()));
    }
    let s: f64 = sq.iter().map(|v| v.sqrt().powf(p)).sum();
    (s * grid.cell()).powf(1.0 / p)
}

pub fn gn_ratio(sp: &Spectral, f: &Field, e: &GNExponents) -> Result<f64> {
    if sp.grid().dim != e.n {
        return Err(Error::InvalidParam(format!(
            "grid dimension {} but exponents for n = {}",
            sp.grid().dim,
            e.n
        )));
    }
    let g = sp.grid();
    let num = lp_of_sq(g, &derivative_magnitude_sq(sp, f, e.j), e.p);
    let dk = lp_of_sq(g, &derivative_magnitude_sq(sp, f, e.k), e.q);
    let d0 = lp_of_sq(g, &derivative_magnitude_sq(sp, f, 0), e.r);
    if dk < 1e-14 || d0 < 1e-14 {
        return Err(Error::DegenerateDenominator(dk.min(d0)));
    }
    Ok(num / (dk.powf(e.a) * d0.powf(1.0 - e.a)))
}

/// f(2·) on the same box: samples kept, spacing halved, the rest zero padded.
pub fn dilate2(f: &Field) -> Field {
    let g = f.grid;
    let big = GridSpec::new(g.dim, 2 * g.m, g.length).expect("doubling keeps the grid valid");
    let mut out = Field::zeros(big, f.p());
    for i in 0..f.npoints() {
        let (a, b) = (i % g.m, i / g.m);
        let j = a + b * big.m;
        for c in 0..f.p() {
            out.comps[c][j] = f.comps[c][i];
        }
    }
    out
}

/// (‖∂|f|‖_{L²}, ‖∂f‖_{L²}) with ∂|f| = ⟨f, ∂f⟩/|f| where f ≠ 0.
pub fn kato_check(sp: &Spectral, f: &Field) -> (f64, f64) {
    let grads = sp.gradient(f);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..f.npoints() {
        let v = f.point_vec(i);
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for g in &grads {
            let d = g.point_vec(i);
            let dd: f64 = d.iter().map(|x| x * x).sum();
            rhs += dd;
            if nv > 0.0 {
                let proj: f64 = v.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / nv;
                lhs += proj * proj;
            } else {
                // |f| is Lipschitz with slope ≤ |∂f| at a zero
                lhs += dd;
            }
        }
    }
    let cell = f.grid.cell();
    ((lhs * cell).sqrt(), (rhs * cell).sqrt())
}
