//! Time integration of the regularized ambient flow.

mod baseline;
pub mod checkpoint;
mod continuation;
pub mod diagnostics;
mod duhamel;
mod heuristic;

pub use baseline::{baseline_ll_midpoint, baseline_ll_midpoint_with, MidpointOptions};
pub use continuation::{empirical_rate, epsilon_continuation, Continuation, PairDistance};
pub use diagnostics::{
    differenced_energy_residual, energy_balance, rho_balance, rho_l2_sq, DiagnosticsRecord, EnergyBalance,
};
pub use duhamel::{duhamel_step, duhamel_step_stats, duhamel_step_with, phi_functions, StepPlan, StepStats};
pub use heuristic::{
    calibrate_heuristic_constant, energy_estimate_horizon, heuristic_raw, heuristic_sobolev_index,
    reference_contraction, reference_scenario, step_size_heuristic, HEURISTIC_C, HEURISTIC_M,
};

use crate::error::{Error, Result};
use crate::operators::{project_field, OperatorContext};
use crate::spectral::Field;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub eps: f64,
    pub beta: f64,
    /// Step size; in auto mode the cap on the heuristic step.
    pub dt: f64,
    pub auto_dt: bool,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub t_end: f64,
    /// Diagnostics every this many steps (plus the final step).
    pub record_every: usize,
    /// Snapshots every this many steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub project_each_step: bool,
    /// Permit ε = 0 in the Duhamel integrator.
    pub unsafe_eps_zero: bool,
    /// Permit initial data that is in the tube but off the manifold.
    pub off_manifold: bool,
    /// Orders s of the monitored ‖∂v‖_{H^s}.
    pub sobolev_orders: Vec<f64>,
    pub blowup_factor: f64,
    pub max_halvings: u32,
    pub tube_seed: u64,
    /// Evaluate the energy-identity residual at each record (one extra assembly).
    pub energy_residual: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            beta: 0.0,
            dt: 1e-3,
            auto_dt: false,
            picard_tol: 1e-10,
            picard_max: 50,
            t_end: 1.0,
            record_every: 10,
            snapshot_every: 0,
            project_each_step: false,
            unsafe_eps_zero: false,
            off_manifold: false,
            sobolev_orders: vec![1.0, 4.0],
            blowup_factor: 1e3,
            max_halvings: 4,
            tube_seed: 0,
            energy_residual: true,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and >= 0, got {}", self.eps));
        }
        if self.eps == 0.0 && !self.unsafe_eps_zero {
            return bad("eps = 0 needs the baseline integrator or the unsafe flag".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return bad("picard_tol must be positive and picard_max >= 1".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1".into());
        }
        if self.sobolev_orders.iter().any(|s| !(*s >= 0.0)) {
            return bad("sobolev orders must be >= 0".into());
        }
        if !(self.blowup_factor > 1.0) {
            return bad("blowup_factor must exceed 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Snapshot times, strictly increasing.
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.snapshots
            .last()
            .expect("trajectory has at least the initial snapshot")
    }

    /// Snapshot at time t (exact match within 1e-12).
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.times
            .iter()
            .position(|s| (s - t).abs() < 1e-12)
            .map(|i| &self.snapshots[i])
    }
}

/// Step count and size covering [0, t_end] with steps no longer than `dt`.
pub fn step_grid(t_end: f64, dt: f64) -> (usize, f64) {
    if t_end == 0.0 {
        return (0, dt);
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    (n, t_end / n as f64)
}

struct Stepper<'a> {
    ctx: &'a OperatorContext,
    p: &'a FlowParams,
    plans: HashMap<u64, StepPlan>,
}

impl<'a> Stepper<'a> {
    fn plan(&mut self, dt: f64) -> StepPlan {
        let (ctx, eps) = (self.ctx, self.p.eps);
        self.plans
            .entry(dt.to_bits())
            .or_insert_with(|| StepPlan::new(ctx, eps, dt))
            .clone()
    }

    /// One step, retried as two half steps on Picard failure.
    fn advance(&mut self, v: &Field, dt: f64, t: f64, depth: u32) -> Result<(Field, usize)> {
        let plan = self.plan(dt);
        match duhamel_step_stats(self.ctx, v, &plan, self.p, t) {
            Ok((w, st)) => Ok((w, st.iterations)),
            Err(e @ (Error::PicardDiverged { .. } | Error::PicardStalled { .. })) => {
                if depth >= self.p.max_halvings {
                    return Err(e);
                }
                let (mid, i1) = self.advance(v, 0.5 * dt, t, depth + 1)?;
                let (end, i2) = self.advance(&mid, 0.5 * dt, t + 0.5 * dt, depth + 1)?;
                Ok((end, i1 + i2))
            }
            Err(e) => Err(e),
        }
    }
}

/// Integrate and keep whatever was produced before a failure.
pub fn integrate_partial(ctx: &OperatorContext, v0: &Field, p: &FlowParams) -> (Trajectory, Option<Error>) {
    integrate_observed(ctx, v0, p, &mut |_| {})
}

/// As `integrate_partial`, calling `on_record` for every diagnostics record as it is produced.
pub fn integrate_observed(
    ctx: &OperatorContext,
    v0: &Field,
    p: &FlowParams,
    on_record: &mut dyn FnMut(&DiagnosticsRecord),
) -> (Trajectory, Option<Error>) {
    let mut traj = Trajectory {
        times: vec![],
        snapshots: vec![],
        diagnostics: vec![],
        dt: p.dt,
        steps: 0,
    };
    if let Err(e) = p.validate().and_then(|_| ctx.check_tube(v0, None)) {
        return (traj, Some(e));
    }
    if !p.off_manifold {
        let d = ctx.max_distance(v0, None);
        if d > 1e-10 {
            return (
                traj,
                Some(Error::InvalidParam(format!(
                    "initial data is off the manifold (|rho| = {d:.3e}); set off_manifold"
                ))),
            );
        }
    }
    let dt_req = if p.auto_dt {
        match step_size_heuristic(ctx, v0, p) {
            Ok(h) => h,
            Err(e) => return (traj, Some(e)),
        }
    } else {
        p.dt
    };
    let (nsteps, dt) = step_grid(p.t_end, dt_req);
    traj.dt = dt;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(p.tube_seed);
    let npts = v0.npoints();
    let nsample = (npts / 100).max(1);
    let mut stepper = Stepper {
        ctx,
        p,
        plans: HashMap::new(),
    };

    let rec0 = diagnostics::record(ctx, v0, p, 0.0, 0, start.elapsed().as_nanos() as u64);
    let initial: Vec<f64> = rec0.sobolev.clone();
    on_record(&rec0);
    traj.diagnostics.push(rec0);
    traj.times.push(0.0);
    traj.snapshots.push(v0.clone());

    let mut v = v0.clone();
    for k in 1..=nsteps {
        let t_prev = (k - 1) as f64 * dt;
        let t = k as f64 * dt;
        let (mut w, iters) = match stepper.advance(&v, dt, t_prev, 0) {
            Ok(r) => r,
            Err(e) => return (traj, Some(e)),
        };
        if p.project_each_step {
            w = project_field(ctx, &w);
        }
        let check = if k % 10 == 0 {
            ctx.check_tube(&w, None)
        } else {
            let idx = sample(&mut rng, npts, nsample).into_vec();
            ctx.check_tube(&w, Some(&idx))
        };
        if let Err(e) = check {
            return (traj, Some(e));
        }
        v = w;
        traj.steps = k;
        if k % p.record_every == 0 || k == nsteps {
            let rec = diagnostics::record(ctx, &v, p, t, iters, start.elapsed().as_nanos() as u64);
            for (val, init) in rec.sobolev.iter().zip(&initial) {
                if *init > 0.0 && *val > p.blowup_factor * init {
                    let limit = p.blowup_factor * init;
                    let value = *val;
                    on_record(&rec);
                    traj.diagnostics.push(rec);
                    return (traj, Some(Error::BlowupDetected { t, value, limit }));
                }
            }
            on_record(&rec);
            traj.diagnostics.push(rec);
        }
        if (p.snapshot_every > 0 && k % p.snapshot_every == 0) || k == nsteps {
            traj.times.push(t);
            traj.snapshots.push(v.clone());
        }
    }
    (traj, None)
}

/// Regularized flow from v0 up to t_end.
pub fn integrate(ctx: &OperatorContext, v0: &Field, p: &FlowParams) -> Result<Trajectory> {
    match integrate_partial(ctx, v0, p) {
        (t, None) => Ok(t),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere2;
    use crate::scenario;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn ctx(m: usize) -> OperatorContext {
        OperatorContext::new(Arc::new(Sphere2), GridSpec::new(1, m, 2.0 * PI).unwrap())
    }

    #[test]
    fn step_grid_covers_horizon() {
        assert_eq!(step_grid(1.0, 1e-3), (1000, 1e-3));
        let (n, dt) = step_grid(1.0, 0.3);
        assert_eq!(n, 4);
        assert!((dt - 0.25).abs() < 1e-15);
        assert_eq!(step_grid(0.0, 0.1).0, 0);
    }

    #[test]
    fn constant_map_stays_constant() {
        let c = ctx(32);
        let v0 = Field::constant(*c.grid(), &[0.0, 0.6, 0.8]);
        let p = FlowParams {
            t_end: 0.05,
            dt: 0.01,
            record_every: 1,
            ..FlowParams::default()
        };
        let tr = integrate(&c, &v0, &p).unwrap();
        assert_eq!(tr.steps, 5);
        assert!(tr.last().sub(&v0).max_abs() < 1e-15);
        assert!(tr.diagnostics.iter().all(|d| d.energy == 0.0));
    }

    #[test]
    fn eps_zero_requires_flag() {
        let c = ctx(16);
        let v0 = scenario::helical(*c.grid(), 1.0, 1, 0.0);
        let p = FlowParams {
            eps: 0.0,
            ..FlowParams::default()
        };
        assert!(matches!(integrate(&c, &v0, &p), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn off_manifold_data_requires_flag() {
        let c = ctx(16);
        let v0 = scenario::radial_perturbation(&scenario::helical(*c.grid(), 1.0, 1, 0.0), 1, 2, 0.01);
        let p = FlowParams {
            t_end: 0.01,
            dt: 0.01,
            ..FlowParams::default()
        };
        assert!(integrate(&c, &v0, &p).is_err());
        let p = FlowParams {
            off_manifold: true,
            ..p
        };
        assert!(integrate(&c, &v0, &p).is_ok());
    }

    #[test]
    fn huge_step_reports_picard_failure() {
        let c = ctx(64);
        let v0 = scenario::random_on_manifold(*c.grid(), &Sphere2, 9, 6, 1.0);
        let p = FlowParams {
            eps: 1e-4,
            dt: 0.5,
            t_end: 0.5,
            max_halvings: 0,
            ..FlowParams::default()
        };
        let e = integrate(&c, &v0, &p).unwrap_err();
        assert!(
            matches!(e, Error::PicardDiverged { .. } | Error::PicardStalled { .. }),
            "{e:?}"
        );
    }
}
