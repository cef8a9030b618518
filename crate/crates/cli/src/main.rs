use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conley_cli::{emit_tables, run_with_threads, CliError, Format, ScenarioConfig, Task};

#[derive(Parser)]
#[command(name = "conley", version, about = "Conley index and local Morse homology scenarios")]
struct Cli {
    #[command(subcommand)]
    task: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Index pair, classical and E-graded Conley index
    Index,
    /// Local Morse homology of a gradient system
    Morse,
    /// Morse homology against the E-index of the same flow
    Compare,
    /// Continuation along a homotopy
    Continue,
    /// E-cohomology of a level family
    Ecoh,
    /// Acceptance battery
    Suite,
}

#[derive(Args)]
struct Opts {
    /// Scenario file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Catalog system, when no config file is given
    #[arg(long, global = true)]
    system: Option<String>,
    /// Write N and L cell snapshots (needs --out)
    #[arg(long, global = true)]
    dump_cells: bool,
    /// CSV tables instead of the text report
    #[arg(long, global = true)]
    csv: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Amplitude of a Gaussian bump added to the field
    #[arg(long, global = true)]
    perturb: Option<f64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

impl Command {
    fn task(self) -> Task {
        match self {
            Command::Index => Task::Index,
            Command::Morse => Task::Morse,
            Command::Compare => Task::Compare,
            Command::Continue => Task::Continue,
            Command::Ecoh => Task::Ecoh,
            Command::Suite => Task::Suite,
        }
    }
}

fn load(task: Task, opts: &Opts) -> Result<ScenarioConfig, CliError> {
    let mut config = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            ScenarioConfig::load(&text, task)?
        }
        None => ScenarioConfig::for_task(task),
    };
    if let Some(name) = &opts.system {
        config.system = Default::default();
        config.system.catalog = Some(name.clone());
    }
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(eps) = opts.perturb {
        config.perturb = eps;
    }
    if let Some(dir) = &opts.out {
        config.output.dir = Some(dir.clone());
    }
    config.output.csv |= opts.csv;
    config.output.dump_cells |= opts.dump_cells;
    Ok(config)
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let config = load(cli.task.task(), &cli.opts)?;
    if cli.opts.threads == 0 {
        return Err(CliError::config("threads", "must be at least 1"));
    }
    let report = run_with_threads(&config, cli.opts.threads)?;
    let format = if config.output.csv { Format::Csv } else { Format::Text };
    print!("{}", report.render(format));
    if let Some(dir) = &config.output.dir {
        for path in emit_tables(&report, format, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    for (stage, t) in &report.stage_timings {
        eprintln!("{stage}: {:.2}s", t.as_secs_f64());
    }
    eprintln!("elapsed: {:.2}s", report.timing.as_secs_f64());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
