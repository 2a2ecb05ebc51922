mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "sflab",
    version,
    about = "Regularized Schrödinger-map flow solver and verification lab"
)]
struct Cli {
    /// Output directory (overrides the config)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress output
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run one regularized (or baseline) flow from a config or run.json
    Simulate { config: PathBuf },
    /// Run the flow for each ε in [sweep] eps and tabulate distances
    SweepEps { config: PathBuf },
    /// Run a verification suite: geometry, spectral, operators, flow, analysis, all
    Verify {
        suite: String,
        #[arg(long, hide = true)]
        mutation: Option<String>,
    },
}

fn threads_from_env() -> Result<(), String> {
    let Ok(v) = std::env::var("SFLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("SFLAB_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let o = commands::Overrides {
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let r = match cli.cmd {
        Cmd::Simulate { config } => commands::simulate(&config, &o),
        Cmd::SweepEps { config } => commands::sweep_eps(&config, &o),
        Cmd::Verify { suite, mutation } => commands::verify(&suite, mutation.as_deref(), &o),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use commands::Failure;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let c = Cli::try_parse_from(["sflab", "verify", "spectral", "--out", "x", "--seed", "3", "--quiet"]).unwrap();
        assert_eq!(c.out, Some(PathBuf::from("x")));
        assert_eq!(c.seed, Some(3));
        assert!(c.quiet);
        assert!(matches!(c.cmd, Cmd::Verify { ref suite, mutation: None } if suite == "spectral"));
    }

    #[test]
    fn failure_codes() {
        assert_eq!(Failure::Config("x".into()).code(), 1);
        assert_eq!(Failure::Numerical("x".into()).code(), 2);
        assert_eq!(Failure::Verify(1).code(), 3);
    }
}
