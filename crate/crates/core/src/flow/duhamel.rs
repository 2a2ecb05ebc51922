use super::FlowParams;
use crate::error::{Error, Result};
use crate::operators::{rhs_parts_unchecked, OperatorContext};
use crate::spectral::{Field, Multiplier, Spectrum};

/// φ₁(z) = (1 − e^{−z})/z and φ₂(z) = (e^{−z} − 1 + z)/z², series near 0.
pub fn phi_functions(z: f64) -> (f64, f64) {
    if z < 0.5 {
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0; // (−z)^j / j!
        for j in 0..20 {
            p1 += term / (j + 1) as f64;
            p2 += term / ((j + 1) * (j + 2)) as f64;
            term *= -z / (j + 1) as f64;
        }
        (p1, p2)
    } else {
        let e = (-z).exp();
        ((1.0 - e) / z, (e - 1.0 + z) / (z * z))
    }
}

/// Per-mode weights of one exponential-trapezoid step of size dt:
/// v₁ = e^{−z}v₀ + dt(φ₁−φ₂)N(v₀) + dtφ₂N(v₁), z = ε|ξ|⁴dt.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub dt: f64,
    pub semigroup: Multiplier,
    pub w_start: Multiplier,
    pub w_end: Multiplier,
}

impl StepPlan {
    pub fn new(ctx: &OperatorContext, eps: f64, dt: f64) -> Self {
        let k2 = ctx.spectral.k2();
        let mut sg = Vec::with_capacity(k2.len());
        let mut w0 = Vec::with_capacity(k2.len());
        let mut w1 = Vec::with_capacity(k2.len());
        for &k in k2 {
            let z = eps * k * k * dt;
            let (p1, p2) = phi_functions(z);
            sg.push((-z).exp());
            w0.push(dt * (p1 - p2));
            w1.push(dt * p2);
        }
        Self {
            dt,
            semigroup: Multiplier::real(sg),
            w_start: Multiplier::real(w0),
            w_end: Multiplier::real(w1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    /// Successive L² differences of the Picard iterates.
    pub diffs: Vec<f64>,
}

impl StepStats {
    /// Largest ratio of consecutive differences (the observed contraction).
    pub fn contraction(&self) -> f64 {
        self.diffs
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

fn combine(a: &Spectrum, m: &Multiplier, b: &Spectrum) -> Spectrum {
    Spectrum {
        grid: a.grid,
        comps: a
            .comps
            .iter()
            .zip(&b.comps)
            .map(|(x, y)| x.iter().zip(y).zip(&m.values).map(|((u, w), s)| u + s * w).collect())
            .collect(),
    }
}

fn scale_spec(s: &Spectrum, m: &Multiplier) -> Spectrum {
    Spectrum {
        grid: s.grid,
        comps: s
            .comps
            .iter()
            .map(|c| c.iter().zip(&m.values).map(|(a, b)| a * b).collect())
            .collect(),
    }
}

/// One Duhamel step with an arbitrary nonlinearity `n` (the flow passes
/// N(v); tests pass N ≡ 0 or linear maps).
pub fn duhamel_step_with(
    ctx: &OperatorContext,
    v: &Field,
    plan: &StepPlan,
    p: &FlowParams,
    t: f64,
    n: &dyn Fn(&Field) -> Field,
) -> Result<(Field, StepStats)> {
    let sp = &ctx.spectral;
    let gamma = v.mean();
    let neg: Vec<f64> = gamma.iter().map(|g| -g).collect();
    // S(dt)(v − γ) + γ
    let base = scale_spec(&sp.forward(&v.add_constant(&neg)), &plan.semigroup);
    let mut seed = sp.inverse(&base).add_constant(&gamma);
    let n0 = sp.forward(&n(v));
    let fixed = combine(&base, &plan.w_start, &n0);
    let mut stats = StepStats::default();
    let mut growth = 0;
    loop {
        let nw = sp.forward(&n(&seed));
        let next_spec = combine(&fixed, &plan.w_end, &nw);
        let next = sp.inverse(&next_spec).add_constant(&gamma);
        if !next.is_finite() {
            return Err(Error::PicardDiverged { t, diffs: stats.diffs });
        }
        let d = crate::spectral::l2_distance(&next, &seed);
        stats.iterations += 1;
        if let Some(&last) = stats.diffs.last() {
            growth = if d > last { growth + 1 } else { 0 };
        }
        stats.diffs.push(d);
        seed = next;
        if d < p.picard_tol {
            return Ok((seed, stats));
        }
        if growth >= 3 {
            return Err(Error::PicardDiverged { t, diffs: stats.diffs });
        }
        if stats.iterations >= p.picard_max {
            return Err(Error::PicardStalled {
                iters: stats.iterations,
                last: d,
            });
        }
    }
}

/// One step of the regularized flow (Picard-converged exponential trapezoid).
pub fn duhamel_step(ctx: &OperatorContext, v: &Field, p: &FlowParams) -> Result<Field> {
    p.validate()?;
    ctx.check_tube(v, None)?;
    let plan = StepPlan::new(ctx, p.eps, p.dt);
    let n = |w: &Field| rhs_parts_unchecked(ctx, w).n(p.eps, p.beta);
    Ok(duhamel_step_with(ctx, v, &plan, p, 0.0, &n)?.0)
}

/// Same, also returning the Picard statistics.
pub fn duhamel_step_stats(
    ctx: &OperatorContext,
    v: &Field,
    plan: &StepPlan,
    p: &FlowParams,
    t: f64,
) -> Result<(Field, StepStats)> {
    let n = |w: &Field| rhs_parts_unchecked(ctx, w).n(p.eps, p.beta);
    duhamel_step_with(ctx, v, plan, p, t, &n)
}
