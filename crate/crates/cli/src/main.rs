use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kfw_cli::config::{ProblemSource, RunConfig, Scale};
use kfw_cli::{build_problem, certify_point, export_problem, load_config, run_compare, CliError};

#[derive(Parser)]
#[command(name = "kfw", version, about = "Run and compare Frank-Wolfe type solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the first configured solver (or the one named by --solver).
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solver: Option<String>,
    },
    /// Run every configured solver on the problem.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Print the certificate of a point stored in a Matrix Market file.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        point: PathBuf,
    },
    /// Write the configured problem as Matrix Market files.
    Gen {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel solver runs; overrides output.jobs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Problem seed; overrides problem.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full experiment sizes.
    #[arg(long)]
    paper_scale: bool,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let text = fs::read_to_string(&self.config).map_err(|e| CliError::io(&self.config, e))?;
        let mut config = load_config(&text)?;
        let base = self.config.parent().unwrap_or(Path::new(".")).to_path_buf();
        if let ProblemSource::Bench(b) = &mut config.problem.source {
            if let Some(seed) = self.seed {
                b.seed = seed;
            }
            if self.paper_scale {
                b.scale = Scale::Paper;
            }
        }
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        } else if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(kfw::error::KfwError::Config("--jobs must be at least 1".into()).into());
            }
            config.output.jobs = jobs;
        }
        Ok((config, base))
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { common, solver } => {
            let (mut config, base) = common.load()?;
            let index = match &solver {
                Some(label) => config
                    .solvers
                    .iter()
                    .position(|s| &s.label == label)
                    .ok_or_else(|| kfw::error::KfwError::Config(format!("no solver labelled '{label}'")))?,
                None => 0,
            };
            config.solvers = vec![config.solvers.swap_remove(index)];
            report(run_compare(&config, &base)?)
        }
        Command::Compare { common } => {
            let (config, base) = common.load()?;
            report(run_compare(&config, &base)?)
        }
        Command::Certify { common, point } => {
            let (config, base) = common.load()?;
            let cert = certify_point(&config, &base, &point)?;
            println!("{}", serde_json::to_string_pretty(&cert).expect("certificate serializes"));
            Ok(0)
        }
        Command::Gen { common } => {
            let (config, base) = common.load()?;
            let problem = build_problem(&config.problem, &base)?;
            let path = export_problem(&problem, &config.output.dir)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn report(summary: kfw_cli::RunSummary) -> Result<i32, CliError> {
    println!("problem {} ({})", summary.problem.name, summary.problem.hash);
    for s in &summary.solvers {
        match (&s.error, s.final_objective) {
            (Some(e), _) => println!("  {:<20} error: {e}", s.label),
            (None, Some(f)) => println!(
                "  {:<20} f = {f:.10e}  iterations {:>5}  {}  {:.3}s",
                s.label,
                s.iterations.unwrap_or(0),
                s.stop_reason.unwrap_or("-"),
                s.total_seconds
            ),
            (None, None) => {}
        }
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
