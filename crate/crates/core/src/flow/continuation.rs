use super::{heuristic_sobolev_index, integrate, step_size_heuristic, FlowParams, Trajectory};
use crate::error::{Error, Result};
use crate::exec::map_jobs;
use crate::operators::OperatorContext;
use crate::spectral::{l2_distance, Field};
use serde::{Deserialize, Serialize};

/// Distances between two runs at one common snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub eps_a: f64,
    pub eps_b: f64,
    pub t: f64,
    pub l2: f64,
    /// ‖v_a − v_b‖_{H^{s−1}}, s = [n/2] + 4.
    pub hs: f64,
}

#[derive(Debug, Clone)]
pub struct Continuation {
    pub eps: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// Consecutive pairs (ε_i, ε_{i+1}) at every common snapshot time.
    pub distances: Vec<PairDistance>,
    pub dt: f64,
}

impl Continuation {
    /// Final-time distances between consecutive runs.
    pub fn final_distances(&self) -> Vec<PairDistance> {
        let t_end = self.trajectories[0].times.last().copied().unwrap_or(0.0);
        self.distances
            .iter()
            .copied()
            .filter(|d| (d.t - t_end).abs() < 1e-12)
            .collect()
    }

    /// Final-time L² distance of each run to a reference field.
    pub fn distance_to(&self, reference: &Field) -> Vec<f64> {
        self.trajectories
            .iter()
            .map(|t| l2_distance(t.last(), reference))
            .collect()
    }
}

/// Least-squares slope of log d against log ε (the empirical rate; not a theorem).
pub fn empirical_rate(eps: &[f64], d: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(d)
        .filter(|(_, d)| **d > 0.0)
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Run `integrate` for each ε on one time grid (the smallest ε fixes dt in auto mode).
pub fn epsilon_continuation(
    ctx: &OperatorContext,
    v0: &Field,
    eps_list: &[f64],
    p: &FlowParams,
) -> Result<Continuation> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParam("eps_list is empty".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParam(
            "eps_list must be positive and strictly decreasing".into(),
        ));
    }
    let dt = if p.auto_dt {
        let smallest = *eps_list.last().unwrap();
        step_size_heuristic(
            ctx,
            v0,
            &FlowParams {
                eps: smallest,
                ..p.clone()
            },
        )?
    } else {
        p.dt
    };
    let runs = map_jobs(ctx.exec(), eps_list, |&eps| {
        integrate(
            ctx,
            v0,
            &FlowParams {
                eps,
                dt,
                auto_dt: false,
                ..p.clone()
            },
        )
    });
    let trajectories = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let sprime = heuristic_sobolev_index(ctx.grid().dim) - 1.0;
    let mut distances = Vec::new();
    for (i, pair) in trajectories.windows(2).enumerate() {
        for (k, t) in pair[0].times.iter().enumerate() {
            let Some(b) = pair[1].at(*t) else { continue };
            let a = &pair[0].snapshots[k];
            distances.push(PairDistance {
                eps_a: eps_list[i],
                eps_b: eps_list[i + 1],
                t: *t,
                l2: l2_distance(a, b),
                hs: ctx.spectral.sobolev_norm(&a.sub(b), sprime),
            });
        }
    }
    Ok(Continuation {
        eps: eps_list.to_vec(),
        trajectories,
        distances,
        dt: super::step_grid(p.t_end, dt).1,
    })
}
