use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use closedloop::experiments::{self, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "closedloop", version, about = "Closed-loop channel probing and ISAC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive check of the conditional-type deviation bound.
    Lemma1Scan(RunArgs),
    /// Compare the threshold tree with the exhaustive optimum.
    OptimalAudit(RunArgs),
    /// Check the surgery identity and monotone well-ordering on every tree.
    SurgeryAudit(RunArgs),
    /// Check that the score has zero conditional drift.
    MartingaleAudit(RunArgs),
    /// Monte Carlo deviation probability with a Wilson interval.
    McDeviation(RunArgs),
    /// Rate/distortion frontier of a state-dependent channel.
    IsacFrontier(RunArgs),
    /// Simulate error and distortion-excess rates of a code.
    IsacSimulate(RunArgs),
    /// Per-message change-of-measure quantities of a small code.
    ConverseDemo(RunArgs),
    /// Print the built-in config of an experiment.
    DefaultConfig { kind: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// INI config; the built-in default is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed for every random stream (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output bytes do not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Command {
    fn split(self) -> Option<(Kind, RunArgs)> {
        Some(match self {
            Command::Lemma1Scan(a) => (Kind::Lemma1Scan, a),
            Command::OptimalAudit(a) => (Kind::OptimalAudit, a),
            Command::SurgeryAudit(a) => (Kind::SurgeryAudit, a),
            Command::MartingaleAudit(a) => (Kind::MartingaleAudit, a),
            Command::McDeviation(a) => (Kind::McDeviation, a),
            Command::IsacFrontier(a) => (Kind::IsacFrontier, a),
            Command::IsacSimulate(a) => (Kind::IsacSimulate, a),
            Command::ConverseDemo(a) => (Kind::ConverseDemo, a),
            Command::DefaultConfig { .. } => return None,
        })
    }
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::DefaultConfig { kind } = &cli.command {
        return match kind.parse::<Kind>() {
            Ok(k) => {
                let text = k.default_config().replace("[experiment]\n", &format!("[experiment]\nkind = {k}\n"));
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        };
    }
    let Some((kind, args)) = cli.command.split() else { unreachable!() };
    let Format::Csv = args.format;

    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, Some(kind)),
        None => Ok(ExperimentConfig::default_for(kind)),
    };
    if let Ok(c) = &mut cfg {
        if let Some(out) = &args.out {
            c.out_dir = out.clone();
        }
        if let Some(seed) = args.seed {
            c.grid.seed = seed;
        }
    }
    let result = cfg.and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers as usize)
            .build()
            .map_err(|e| closedloop::Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| experiments::run(&cfg)).map(|m| (cfg, m))
    });

    match result {
        Ok((cfg, manifest)) => {
            println!("{} (seed {})", manifest.kind, manifest.seed);
            for o in &manifest.outputs {
                println!("  {} rows  {}", o.rows, cfg.out_dir.join(&o.file).display());
            }
            println!("  manifest  {}", experiments::manifest_path(&cfg.out_dir).display());
            if manifest.all_pass {
                println!("all checks passed");
                ExitCode::SUCCESS
            } else {
                println!("VIOLATION: at least one row has pass=false");
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) if e.is_violation() => {
            eprintln!("violation: {e}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
