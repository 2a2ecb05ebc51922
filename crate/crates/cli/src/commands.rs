use crate::config::{ConfigError, Integrator, RunConfig, Scenario};
use serde::Serialize;
use sflab::flow::{
    baseline_ll_midpoint, checkpoint, epsilon_continuation, heuristic_sobolev_index, integrate_observed,
    DiagnosticsRecord, FlowParams, Trajectory,
};
use sflab::geometry::target_by_name;
use sflab::operators::{Mutation, OperatorContext};
use sflab::scenario;
use sflab::spectral::{io, l2_distance, Field};
use sflab::verify::{run_suite, VerifyOptions};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    /// Number of failed verification entries.
    Verify(usize),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Verify(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "{m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Verify(n) => write!(f, "{n} verification check(s) failed"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("{}: {e}", path.display()))
}

pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Overrides {
    fn say(&self, msg: impl fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    status: &'static str,
    error: Option<String>,
    dt: f64,
    steps: usize,
    threads: usize,
    timings: Timings,
}

#[derive(Serialize, Default)]
struct Timings {
    setup_ms: f64,
    run_ms: f64,
    output_ms: f64,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Config with command-line overrides and the initial-data path made absolute.
fn resolve(path: &Path, o: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &o.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
        cfg.flow.tube_seed = seed;
    }
    if let Scenario::File { path: p } = &mut cfg.scenario {
        if p.is_relative() {
            *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
        }
    }
    Ok(cfg)
}

/// Operator context and initial data, checked without touching the output directory.
fn prepare(cfg: &RunConfig) -> Result<(OperatorContext, Field), Failure> {
    let m = target_by_name(&cfg.target).ok_or_else(|| Failure::Config(format!("unknown target '{}'", cfg.target)))?;
    let g = cfg.grid;
    let v0 = match &cfg.scenario {
        Scenario::Helical { theta, k } => scenario::helical(g, *theta, *k, 0.0),
        Scenario::Bump { amplitude, width } => scenario::bump(g, m.as_ref(), *amplitude, *width),
        Scenario::Constant { value } => Field::constant(g, value),
        Scenario::Random { modes, amplitude } => {
            scenario::random_on_manifold(g, m.as_ref(), cfg.seed, *modes, *amplitude)
        }
        Scenario::File { path } => {
            let f = if path.extension().is_some_and(|e| e == "csv") {
                io::read_csv(File::open(path).map_err(io_err(path))?)
            } else {
                io::load_binary(path)
            }
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            if f.grid != g {
                return Err(Failure::Config(format!(
                    "{}: grid {:?} does not match [grid] {:?}",
                    path.display(),
                    f.grid,
                    g
                )));
            }
            if f.p() != m.ambient_dim() {
                return Err(Failure::Config(format!(
                    "{}: {} components, target needs {}",
                    path.display(),
                    f.p(),
                    m.ambient_dim()
                )));
            }
            f
        }
    };
    let ctx = OperatorContext::new(m, g);
    ctx.check_tube(&v0, None)
        .map_err(|e| Failure::Config(format!("initial data: {e}")))?;
    let d = ctx.max_distance(&v0, None);
    if !cfg.flow.off_manifold && d > 1e-10 {
        return Err(Failure::Config(format!(
            "initial data is off the target (|rho| = {d:.3e}); set off_manifold = true"
        )));
    }
    Ok((ctx, v0))
}

fn csv_header(orders: &[f64]) -> String {
    let hs: Vec<String> = orders.iter().map(|s| format!("dH{s}")).collect();
    format!("# t,E,G,{},sup_rho,l2_rho,energy_residual,picard_iters\n", hs.join(","))
}

/// One CSV row; wall-clock time is left out so identical runs give identical files.
fn csv_row(r: &DiagnosticsRecord) -> String {
    let mut s = format!("{:e},{:e},{:e}", r.t, r.energy, r.tension_energy);
    for h in &r.sobolev {
        s += &format!(",{h:e}");
    }
    s + &format!(
        ",{:e},{:e},{:e},{}\n",
        r.sup_rho, r.l2_rho, r.energy_residual, r.picard_iters
    )
}

fn write_diagnostics(path: &Path, orders: &[f64], recs: &[DiagnosticsRecord]) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    w.write_all(csv_header(orders).as_bytes()).map_err(io_err(path))?;
    for r in recs {
        w.write_all(csv_row(r).as_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn save_checkpoints(dir: &Path, traj: &Trajectory, p: &FlowParams) -> Result<(), Failure> {
    let dir = dir.join("checkpoints");
    for (i, (t, f)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let upto = traj.diagnostics.partition_point(|r| r.t <= *t + 1e-12);
        checkpoint::save(&dir, &format!("snap_{i:04}"), f, *t, p, &traj.diagnostics[..upto])
            .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Runs the configured integrator, streaming diagnostics to `dir/diagnostics.csv`.
fn run_flow(
    cfg: &RunConfig,
    ctx: &OperatorContext,
    v0: &Field,
    dir: &Path,
    o: &Overrides,
) -> (Trajectory, Option<String>, Result<(), Failure>) {
    let p = cfg.params();
    let path = dir.join("diagnostics.csv");
    let mut w = match File::create(&path) {
        Ok(f) => BufWriter::new(f),
        Err(e) => return (empty_traj(&p), None, Err(io_err(&path)(e))),
    };
    let mut io_fail = w.write_all(csv_header(&p.sobolev_orders).as_bytes()).err();
    let quiet = o.quiet;
    let (traj, err) = match cfg.integrator {
        Integrator::Duhamel => integrate_observed(ctx, v0, &p, &mut |r| {
            if io_fail.is_none() {
                io_fail = w.write_all(csv_row(r).as_bytes()).err();
            }
            if !quiet {
                eprintln!(
                    "t = {:.6}  E = {:.6e}  sup|rho| = {:.3e}  picard = {}",
                    r.t, r.energy, r.sup_rho, r.picard_iters
                );
            }
        }),
        Integrator::Midpoint => match baseline_ll_midpoint(ctx, v0, &p) {
            Ok(t) => {
                for r in &t.diagnostics {
                    if io_fail.is_none() {
                        io_fail = w.write_all(csv_row(r).as_bytes()).err();
                    }
                }
                (t, None)
            }
            Err(e) => (empty_traj(&p), Some(e)),
        },
    };
    let io = match io_fail.or_else(|| w.flush().err()) {
        Some(e) => Err(io_err(&path)(e)),
        None => Ok(()),
    };
    (traj, err.map(|e| e.to_string()), io)
}

fn empty_traj(p: &FlowParams) -> Trajectory {
    Trajectory {
        times: vec![],
        snapshots: vec![],
        diagnostics: vec![],
        dt: p.dt,
        steps: 0,
    }
}

pub fn simulate(path: &Path, o: &Overrides) -> Result<(), Failure> {
    let t0 = Instant::now();
    let cfg = resolve(path, o)?;
    let (ctx, v0) = prepare(&cfg)?;
    simulate_with(&cfg, &ctx, &v0, "simulate", t0, o)
}

fn simulate_with(
    cfg: &RunConfig,
    ctx: &OperatorContext,
    v0: &Field,
    command: &'static str,
    t0: Instant,
    o: &Overrides,
) -> Result<(), Failure> {
    create_out(&cfg.out)?;
    let mut timings = Timings {
        setup_ms: ms(t0),
        ..Timings::default()
    };
    let t1 = Instant::now();
    let (traj, err, io) = run_flow(cfg, ctx, v0, &cfg.out, o);
    timings.run_ms = ms(t1);
    let t2 = Instant::now();
    io?;
    save_checkpoints(&cfg.out, &traj, &cfg.params())?;
    timings.output_ms = ms(t2);
    let rec = RunRecord {
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        status: if err.is_some() { "failed" } else { "ok" },
        error: err.clone(),
        dt: traj.dt,
        steps: traj.steps,
        threads: rayon::current_num_threads(),
        timings,
    };
    write_json(&cfg.out.join("run.json"), &rec)?;
    match err {
        Some(e) => Err(Failure::Numerical(e)),
        None => {
            o.say(format_args!(
                "{} steps, dt = {:e}; wrote {}",
                traj.steps,
                traj.dt,
                cfg.out.display()
            ));
            Ok(())
        }
    }
}

pub fn sweep_eps(path: &Path, o: &Overrides) -> Result<(), Failure> {
    let t0 = Instant::now();
    let cfg = resolve(path, o)?;
    if cfg.integrator != Integrator::Duhamel {
        return Err(Failure::Config(
            "sweep-eps runs the duhamel integrator; the midpoint run is [sweep] baseline".into(),
        ));
    }
    let (ctx, v0) = prepare(&cfg)?;
    if cfg.sweep_eps.len() == 1 && !cfg.sweep_baseline {
        let one = RunConfig {
            flow: FlowParams {
                eps: cfg.sweep_eps[0],
                ..cfg.flow.clone()
            },
            ..cfg
        };
        return simulate_with(&one, &ctx, &v0, "sweep-eps", t0, o);
    }
    create_out(&cfg.out)?;
    let mut timings = Timings {
        setup_ms: ms(t0),
        ..Timings::default()
    };
    let t1 = Instant::now();
    let p = cfg.params();
    o.say(format_args!("sweeping eps = {:?}", cfg.sweep_eps));
    let cont = epsilon_continuation(&ctx, &v0, &cfg.sweep_eps, &p);
    let base = match (&cont, cfg.sweep_baseline) {
        (Ok(c), true) => {
            o.say("baseline (eps = 0, midpoint)");
            Some(baseline_ll_midpoint(
                &ctx,
                &v0,
                &FlowParams {
                    eps: 0.0,
                    dt: c.dt,
                    auto_dt: false,
                    ..p.clone()
                },
            ))
        }
        _ => None,
    };
    timings.run_ms = ms(t1);
    let t2 = Instant::now();
    let err = match (&cont, &base) {
        (Err(e), _) | (_, Some(Err(e))) => Some(e.to_string()),
        _ => None,
    };
    let (mut dt, mut steps) = (p.dt, 0);
    if let (Ok(c), None) = (&cont, &err) {
        dt = c.dt;
        steps = c.trajectories[0].steps;
        for (eps, traj) in c.eps.iter().zip(&c.trajectories) {
            let dir = cfg.out.join(format!("eps_{eps:e}"));
            create_out(&dir)?;
            write_diagnostics(&dir.join("diagnostics.csv"), &p.sobolev_orders, &traj.diagnostics)?;
            save_checkpoints(
                &dir,
                traj,
                &FlowParams {
                    eps: *eps,
                    dt,
                    auto_dt: false,
                    ..p.clone()
                },
            )?;
        }
        let path = cfg.out.join("pairwise.csv");
        let mut s = String::from("# eps_a,eps_b,t,l2,hs_prime\n");
        for d in &c.distances {
            s += &format!("{:e},{:e},{:e},{:e},{:e}\n", d.eps_a, d.eps_b, d.t, d.l2, d.hs);
        }
        fs::write(&path, s).map_err(io_err(&path))?;
        let sprime = heuristic_sobolev_index(cfg.grid.dim) - 1.0;
        let fin = c.final_distances();
        let path = cfg.out.join("convergence.csv");
        let mut s = String::from("# eps,l2_next,hs_prime_next,l2_baseline,hs_prime_baseline\n");
        for (i, (eps, traj)) in c.eps.iter().zip(&c.trajectories).enumerate() {
            let (nl, nh) = fin.get(i).map_or((f64::NAN, f64::NAN), |d| (d.l2, d.hs));
            let (bl, bh) = match &base {
                Some(Ok(b)) => (
                    l2_distance(traj.last(), b.last()),
                    ctx.spectral.sobolev_norm(&traj.last().sub(b.last()), sprime),
                ),
                _ => (f64::NAN, f64::NAN),
            };
            s += &format!("{eps:e},{nl:e},{nh:e},{bl:e},{bh:e}\n");
        }
        fs::write(&path, s).map_err(io_err(&path))?;
        if let Some(Ok(b)) = &base {
            let dir = cfg.out.join("baseline");
            create_out(&dir)?;
            write_diagnostics(&dir.join("diagnostics.csv"), &p.sobolev_orders, &b.diagnostics)?;
        }
    }
    timings.output_ms = ms(t2);
    let rec = RunRecord {
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep-eps",
        config: &cfg,
        status: if err.is_some() { "failed" } else { "ok" },
        error: err.clone(),
        dt,
        steps,
        threads: rayon::current_num_threads(),
        timings,
    };
    write_json(&cfg.out.join("run.json"), &rec)?;
    match err {
        Some(e) => Err(Failure::Numerical(e)),
        None => {
            o.say(format_args!("wrote {}", cfg.out.display()));
            Ok(())
        }
    }
}

pub fn verify(suite: &str, mutation: Option<&str>, o: &Overrides) -> Result<(), Failure> {
    let mutation = match mutation {
        None => None,
        Some("flip-hessian-sign") => Some(Mutation::FlipHessianSign),
        Some(m) => return Err(Failure::Config(format!("unknown mutation '{m}'"))),
    };
    let opts = VerifyOptions {
        seed: o.seed.unwrap_or(0),
        mutation,
        ..VerifyOptions::default()
    };
    let report = run_suite(suite, &opts).map_err(|e| Failure::Config(e.to_string()))?;
    let out = o.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    create_out(&out)?;
    write_json(&out.join("report.json"), &report)?;
    for e in &report.entries {
        let op = if e.bound == sflab::verify::Bound::Max {
            "<="
        } else {
            ">="
        };
        o.say(format_args!(
            "{} {:<34} {:.3e} {op} {:.1e}",
            if e.passed { "PASS" } else { "FAIL" },
            e.id,
            e.measured,
            e.tolerance
        ));
    }
    let failed = report.failures().count();
    o.say(format_args!(
        "{} entries, {failed} failed; wrote {}",
        report.entries.len(),
        out.join("report.json").display()
    ));
    if failed > 0 {
        Err(Failure::Verify(failed))
    } else {
        Ok(())
    }
}
