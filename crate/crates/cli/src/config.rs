//! Plain-text run configuration: `key = value` lines, optional `[section]`
//! headers, `#` comments. Every key is validated before anything runs.

use serde::{Deserialize, Serialize};
use sflab::flow::FlowParams;
use sflab::geometry::target_by_name;
use sflab::spectral::GridSpec;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scenario {
    Helical { theta: f64, k: i32 },
    Bump { amplitude: f64, width: f64 },
    Constant { value: Vec<f64> },
    Random { modes: i32, amplitude: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Duhamel,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub target: String,
    pub grid: GridSpec,
    pub integrator: Integrator,
    pub flow: FlowParams,
    /// ε values for sweep-eps, strictly decreasing.
    pub sweep_eps: Vec<f64>,
    /// Also run the ε = 0 baseline in a sweep (S² only).
    pub sweep_baseline: bool,
    pub out: PathBuf,
    pub seed: u64,
}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("", &["scenario", "target", "seed"]),
    ("grid", &["n", "M", "L"]),
    (
        "flow",
        &[
            "eps",
            "beta",
            "dt",
            "t_end",
            "integrator",
            "picard_tol",
            "picard_max",
            "record_every",
            "snapshot_every",
            "project",
            "sobolev",
            "energy_residual",
            "blowup_factor",
            "max_halvings",
            "off_manifold",
        ],
    ),
    (
        "initial",
        &["theta", "k", "amplitude", "width", "value", "modes", "path"],
    ),
    ("output", &["dir"]),
    ("sweep", &["eps", "baseline"]),
];

fn scenario_keys(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "helical" => &["theta", "k"],
        "bump" => &["amplitude", "width"],
        "constant" => &["value"],
        "random" => &["modes", "amplitude"],
        "file" => &["path"],
        _ => return None,
    })
}

/// Raw `section.key -> (value, line)` map.
fn tokenize(text: &str) -> Res<BTreeMap<String, (String, usize)>> {
    let mut map = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(format!("line {ln}: unterminated section header"));
            };
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return err(format!("line {ln}: unknown section [{name}]"));
            }
            section = name.to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {ln}: expected `key = value`"));
        };
        let (k, v) = (k.trim(), v.trim());
        let allowed = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&k) {
            let where_ = if section.is_empty() {
                "top level".to_string()
            } else {
                format!("[{section}]")
            };
            return err(format!("line {ln}: unknown key '{k}' at {where_}"));
        }
        if v.is_empty() {
            return err(format!("line {ln}: empty value for '{k}'"));
        }
        let full = if section.is_empty() {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        if map.insert(full.clone(), (v.to_string(), ln)).is_some() {
            return err(format!("line {ln}: duplicate key '{full}'"));
        }
    }
    Ok(map)
}

/// Number with optional π factor: `3`, `1e-3`, `pi`, `2pi`, `2*pi`, `pi/3`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let coef = num.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let c = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().ok()?
    };
    Some(c * PI / den)
}

struct Table(BTreeMap<String, (String, usize)>);

impl Table {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.0.remove(key)
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> Res<f64> {
        match self.take(key) {
            Some((v, ln)) => {
                parse_number(&v).ok_or_else(|| ConfigError(format!("line {ln}: '{key}' is not a number: {v}")))
            }
            None => default.ok_or_else(|| ConfigError(format!("missing required key '{key}'"))),
        }
    }

    fn int<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Res<T> {
        match self.take(key) {
            Some((v, ln)) => v
                .parse()
                .map_err(|_| ConfigError(format!("line {ln}: '{key}' is not an integer: {v}"))),
            None => default.ok_or_else(|| ConfigError(format!("missing required key '{key}'"))),
        }
    }

    fn boolean(&mut self, key: &str, default: bool) -> Res<bool> {
        match self.take(key) {
            Some((v, ln)) => match v.as_str() {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => err(format!("line {ln}: '{key}' must be true or false, got {v}")),
            },
            None => Ok(default),
        }
    }

    fn list(&mut self, key: &str) -> Res<Option<Vec<f64>>> {
        let Some((v, ln)) = self.take(key) else { return Ok(None) };
        v.split(',')
            .map(|x| {
                parse_number(x)
                    .ok_or_else(|| ConfigError(format!("line {ln}: bad list entry '{}' in '{key}'", x.trim())))
            })
            .collect::<Res<Vec<_>>>()
            .map(Some)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Res<Self> {
        let mut t = Table(tokenize(text)?);
        let (scen, scen_line) = t
            .take("scenario")
            .ok_or_else(|| ConfigError("missing required key 'scenario'".into()))?;
        let Some(keys) = scenario_keys(&scen) else {
            return err(format!(
                "line {scen_line}: unknown scenario '{scen}' (helical, bump, constant, random, file)"
            ));
        };
        for (k, (_, ln)) in t.0.iter() {
            if let Some(name) = k.strip_prefix("initial.") {
                if !keys.contains(&name) {
                    return err(format!("line {ln}: key '{name}' does not apply to scenario '{scen}'"));
                }
            }
        }
        let target = t.take("target").map(|v| v.0).unwrap_or_else(|| "s2".into());
        let seed = t.int("seed", Some(0u64))?;
        let grid = GridSpec::new(
            t.int("grid.n", Some(1usize))?,
            t.int("grid.M", None)?,
            t.num("grid.L", Some(2.0 * PI))?,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let scenario = match scen.as_str() {
            "helical" => Scenario::Helical {
                theta: t.num("initial.theta", None)?,
                k: t.int("initial.k", None)?,
            },
            "bump" => Scenario::Bump {
                amplitude: t.num("initial.amplitude", None)?,
                width: t.num("initial.width", None)?,
            },
            "constant" => Scenario::Constant {
                value: t
                    .list("initial.value")?
                    .ok_or_else(|| ConfigError("missing required key 'value'".into()))?,
            },
            "random" => Scenario::Random {
                modes: t.int("initial.modes", Some(3))?,
                amplitude: t.num("initial.amplitude", Some(0.5))?,
            },
            _ => Scenario::File {
                path: PathBuf::from(
                    t.take("initial.path")
                        .ok_or_else(|| ConfigError("missing required key 'path'".into()))?
                        .0,
                ),
            },
        };
        let d = FlowParams::default();
        let (dt, auto_dt) = match t.take("flow.dt") {
            Some((v, _)) if v == "auto" => (1.0, true),
            Some((v, ln)) => (
                parse_number(&v).ok_or_else(|| ConfigError(format!("line {ln}: 'dt' must be a number or auto")))?,
                false,
            ),
            None => (d.dt, false),
        };
        let integrator = match t.take("flow.integrator") {
            None => Integrator::Duhamel,
            Some((v, ln)) => match v.as_str() {
                "duhamel" => Integrator::Duhamel,
                "midpoint" => Integrator::Midpoint,
                _ => return err(format!("line {ln}: integrator must be duhamel or midpoint, got {v}")),
            },
        };
        let eps_default = if integrator == Integrator::Midpoint { 0.0 } else { d.eps };
        let flow = FlowParams {
            eps: t.num("flow.eps", Some(eps_default))?,
            beta: t.num("flow.beta", Some(d.beta))?,
            dt,
            auto_dt,
            picard_tol: t.num("flow.picard_tol", Some(d.picard_tol))?,
            picard_max: t.int("flow.picard_max", Some(d.picard_max))?,
            t_end: t.num("flow.t_end", Some(d.t_end))?,
            record_every: t.int("flow.record_every", Some(d.record_every))?,
            snapshot_every: t.int("flow.snapshot_every", Some(d.snapshot_every))?,
            project_each_step: t.boolean("flow.project", d.project_each_step)?,
            unsafe_eps_zero: false,
            off_manifold: t.boolean("flow.off_manifold", d.off_manifold)?,
            sobolev_orders: t.list("flow.sobolev")?.unwrap_or(d.sobolev_orders),
            blowup_factor: t.num("flow.blowup_factor", Some(d.blowup_factor))?,
            max_halvings: t.int("flow.max_halvings", Some(d.max_halvings))?,
            tube_seed: seed,
            energy_residual: t.boolean("flow.energy_residual", d.energy_residual)?,
        };
        let sweep_eps = t.list("sweep.eps")?.unwrap_or_else(|| vec![flow.eps]);
        let sweep_baseline = t.boolean("sweep.baseline", false)?;
        let out = PathBuf::from(t.take("output.dir").map(|v| v.0).unwrap_or_else(|| "out".into()));
        debug_assert!(t.0.is_empty(), "unconsumed keys {:?}", t.0.keys());
        let cfg = RunConfig {
            scenario,
            target,
            grid,
            integrator,
            flow,
            sweep_eps,
            sweep_baseline,
            out,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or the resolved config inside a run.json.
    pub fn load(path: &Path) -> Res<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            let cfg: RunConfig = serde_json::from_value(v.get("config").cloned().unwrap_or(v))
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::parse(&text)
    }

    pub fn validate(&self) -> Res<()> {
        let Some(m) = target_by_name(&self.target) else {
            return err(format!("unknown target '{}' (s2 or torus)", self.target));
        };
        GridSpec::new(self.grid.dim, self.grid.m, self.grid.length).map_err(|e| ConfigError(e.to_string()))?;
        let mut p = self.flow.clone();
        if self.integrator == Integrator::Midpoint {
            if m.ambient_dim() != 3 {
                return err("the midpoint baseline needs target s2");
            }
            if p.eps != 0.0 {
                return err("the midpoint baseline runs eps = 0");
            }
            if p.auto_dt {
                return err("dt = auto needs eps > 0");
            }
            p.unsafe_eps_zero = true;
        }
        p.validate().map_err(|e| ConfigError(e.to_string()))?;
        match &self.scenario {
            Scenario::Helical { theta, k } => {
                if m.ambient_dim() != 3 {
                    return err("the helical scenario needs target s2");
                }
                if !(0.0..=PI).contains(theta) {
                    return err(format!("theta must lie in [0, pi], got {theta}"));
                }
                let periods = self.grid.length * f64::from(*k) / (2.0 * PI);
                if (periods - periods.round()).abs() > 1e-9 {
                    return err("helical data is not periodic: k*L must be a multiple of 2pi");
                }
            }
            Scenario::Bump { width, .. } if !(*width > 0.0) => return err("bump width must be positive"),
            Scenario::Constant { value } => {
                if value.len() != m.ambient_dim() {
                    return err(format!(
                        "constant value needs {} components, got {}",
                        m.ambient_dim(),
                        value.len()
                    ));
                }
                if m.distance(value) > 1e-10 {
                    return err("constant value is not on the target");
                }
            }
            Scenario::Random { modes, .. } if *modes < 1 => return err("random scenario needs modes >= 1"),
            _ => {}
        }
        if self.sweep_eps.is_empty()
            || self
                .sweep_eps
                .iter()
                .any(|e| !(*e > 0.0) && self.integrator == Integrator::Duhamel)
            || self.sweep_eps.windows(2).any(|w| w[1] >= w[0])
        {
            return err("sweep eps must be positive and strictly decreasing");
        }
        if self.sweep_baseline && m.ambient_dim() != 3 {
            return err("the sweep baseline needs target s2");
        }
        Ok(())
    }

    /// Flow parameters as handed to the integrators.
    pub fn params(&self) -> FlowParams {
        FlowParams {
            unsafe_eps_zero: self.integrator == Integrator::Midpoint,
            ..self.flow.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
        scenario = helical   # comment
        [grid]
        M = 64
        [flow]
        eps = 1e-2
        dt = 1e-3
        t_end = 0.01
        sobolev = 1, 2.5
        [initial]
        theta = pi/3
        k = 2
    ";

    #[test]
    fn parses_basic_config() {
        let c = RunConfig::parse(BASIC).unwrap();
        assert_eq!(c.grid, GridSpec::new(1, 64, 2.0 * PI).unwrap());
        assert_eq!(c.scenario, Scenario::Helical { theta: PI / 3.0, k: 2 });
        assert_eq!(c.flow.sobolev_orders, vec![1.0, 2.5]);
        assert_eq!(c.sweep_eps, vec![1e-2]);
        assert_eq!(c.out, PathBuf::from("out"));
    }

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("2pi"), Some(2.0 * PI));
        assert_eq!(parse_number("2*pi"), Some(2.0 * PI));
        assert_eq!(parse_number("pi"), Some(PI));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("pie"), None);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |s: &str| RunConfig::parse(s).unwrap_err().0;
        assert!(bad(&BASIC.replace("k = 2", "k = 2\nfoo = 1")).contains("unknown key 'foo'"));
        assert!(bad(&BASIC.replace("[grid]", "[grids]")).contains("unknown section"));
        assert!(bad(&BASIC.replace("k = 2", "k = 2\nk = 3")).contains("duplicate"));
        assert!(bad(&BASIC.replace("k = 2", "width = 1")).contains("does not apply"));
        assert!(bad(&BASIC.replace("M = 64", "M = 60")).contains("power of two"));
        assert!(bad(&BASIC.replace("eps = 1e-2", "eps = 0")).contains("eps"));
        assert!(
            bad(&BASIC.replace("scenario = helical", "scenario = helical\ntarget = torus")).contains("needs target s2")
        );
        assert!(bad(&format!("{BASIC}\n[sweep]\neps = 1e-3, 1e-2")).contains("decreasing"));
        assert!(bad("M = 4").contains("unknown key"));
        assert!(bad(&BASIC.replace("M = 64", "M = 64\nL = 3")).contains("periodic"));
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::parse(&format!("{BASIC}\n[sweep]\neps = 1e-1, 1e-2\nbaseline = true")).unwrap();
        assert_eq!(c.sweep_eps, vec![1e-1, 1e-2]);
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
