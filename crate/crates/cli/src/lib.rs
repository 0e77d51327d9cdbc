//! Command-line driver: configure a run, execute it, persist artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Settings};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "qrm", version, about = "Quasi-reversibility reconstruction of wave-equation initial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate boundary data for a configuration.
    Simulate(RunArgs),
    /// Reconstruct from the data written by `simulate`.
    Reconstruct {
        /// Directory written by `simulate`.
        data_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Simulate and reconstruct one named test.
    RunTest {
        /// test1 ... test5
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Reconstruct over several noise levels and seeds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Number of consecutive seeds per noise level, starting at --seed.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Summarize a run or sweep directory after checking its manifest.
    Report {
        dir: PathBuf,
        /// Also write report.txt and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset to start from (test1 ... test5).
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated noise levels.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    ablate_init_penalty: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    w_trace: Option<f64>,
    #[arg(long)]
    w_flux: Option<f64>,
    #[arg(long)]
    w_init: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
}

impl RunArgs {
    /// File settings first, then flags, so flags win.
    fn settings(&self, test: Option<&str>, seeds: Option<usize>) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let mut flag = |key: &str, value: Option<String>| -> Result<()> {
            match value {
                Some(v) => flags.push(key, &v, None),
                None => Ok(()),
            }
        };
        flag("test", test.map(str::to_string).or_else(|| self.test.clone()))?;
        flag("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        flag("seed", self.seed.map(|v| v.to_string()))?;
        flag("seeds", seeds.map(|v| v.to_string()))?;
        flag("noise", self.noise.clone())?;
        flag("ablate_init_penalty", self.ablate_init_penalty.then(|| "true".to_string()))?;
        flag("epsilon", self.epsilon.map(|v| format!("{v:?}")))?;
        flag("w_trace", self.w_trace.map(|v| format!("{v:?}")))?;
        flag("w_flux", self.w_flux.map(|v| format!("{v:?}")))?;
        flag("w_init", self.w_init.map(|v| format!("{v:?}")))?;
        flag("iters", self.iters.map(|v| v.to_string()))?;
        s.extend(flags);
        Ok(s)
    }
}

/// What a successful command leaves for the caller to print.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Wrote(PathBuf),
    Report(String),
    Display(String),
}

/// Parse `args` (including the program name) and execute the command.
/// `threads` is the value of `QRM_THREADS`, if set.
pub fn run<I, T>(args: I, threads: Option<&str>) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        // Help and version requests.
        Err(e) if !e.use_stderr() => return Ok(Outcome::Display(e.to_string())),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::config(first.trim_start_matches("error: ")));
        }
    };
    match cli.command {
        Command::Simulate(run) => {
            let cfg = RunConfig::resolve(&run.settings(None, None)?)?;
            commands::simulate_cmd(&cfg).map(Outcome::Wrote)
        }
        Command::Reconstruct { data_dir, run } => {
            let cfg = RunConfig::resolve(&run.settings(None, None)?)?;
            commands::reconstruct_cmd(&cfg, &data_dir).map(Outcome::Wrote)
        }
        Command::RunTest { name, run } => {
            let cfg = RunConfig::resolve(&run.settings(Some(&name), None)?)?;
            commands::run_test_cmd(&cfg).map(Outcome::Wrote)
        }
        Command::Sweep { run, seeds } => {
            let workers = commands::worker_count(threads)?;
            let cfg = RunConfig::resolve(&run.settings(None, seeds)?)?;
            commands::sweep_cmd(&cfg, workers).map(Outcome::Wrote)
        }
        Command::Report { dir, out } => commands::report_cmd(&dir, out.as_deref()).map(Outcome::Report),
    }
}
