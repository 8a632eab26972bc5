use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use radiflow::commands;
use radiflow::config::{parse_ladder, ExperimentKind, RunConfig};
use radiflow::report::report;
use radiflow::{AppError, AppResult};

#[derive(Parser)]
#[command(name = "radiflow", version, about = "Radiative flow mode analysis, simulation and limit studies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Noneq,
    Degen,
    Poisson,
    Modpressure,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Noneq => ExperimentKind::NonEq,
            KindArg::Degen => ExperimentKind::Degen,
            KindArg::Poisson => ExperimentKind::Poisson,
            KindArg::Modpressure => ExperimentKind::ModPressure,
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Config file (`section.key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.kind`.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Comma separated, decreasing; overrides `experiment.eps_ladder`.
    #[arg(long)]
    eps_ladder: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectrum of the mode matrix on a frequency ladder.
    Modes(Common),
    /// Random draws of the abstract four-equation class.
    Toy(Common),
    /// One run of the full system.
    Simulate(Common),
    /// One run of a limit system.
    Limits(Common),
    /// Eps-family against its limit.
    Converge(Common),
    /// Summarise an output directory.
    Report {
        run_dir: PathBuf,
    },
}

fn load(c: &Common) -> AppResult<(RunConfig, PathBuf)> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.experiment.seed = s;
    }
    if let Some(k) = c.kind {
        cfg.experiment.kind = k.into();
    }
    if let Some(l) = &c.eps_ladder {
        cfg.experiment.eps_ladder = parse_ladder(l)
            .ok_or_else(|| AppError::Validation(format!("--eps-ladder: cannot parse `{l}`")))?;
    }
    cfg.validate(&Default::default())?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

fn run(cli: Cli) -> AppResult<(Vec<PathBuf>, bool)> {
    let done = |v: Vec<PathBuf>| Ok((v, true));
    match cli.cmd {
        Cmd::Modes(c) => load(&c).and_then(|(cfg, out)| commands::modes(&cfg, &out)).and_then(done),
        Cmd::Toy(c) => load(&c).and_then(|(cfg, out)| commands::toy(&cfg, &out)).and_then(done),
        Cmd::Simulate(c) => load(&c).and_then(|(cfg, out)| commands::simulate(&cfg, &out)).and_then(done),
        Cmd::Limits(c) => {
            let (cfg, out) = load(&c)?;
            done(commands::limits(&cfg, cfg.experiment.kind, &out)?)
        }
        Cmd::Converge(c) => {
            let (cfg, out) = load(&c)?;
            let (paths, partial) = commands::converge(&cfg, &out)?;
            Ok((paths, !partial))
        }
        Cmd::Report { run_dir } => done(report(Path::new(&run_dir))?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((paths, complete)) => {
            for p in paths {
                println!("{}", p.display());
            }
            if complete {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", serde_json::json!({ "error": "PartialReport", "message": "some family members failed" }));
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
