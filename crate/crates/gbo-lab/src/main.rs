use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use gbo_lab::{examples, RunConfig, Verb};

#[derive(Parser)]
#[command(
    name = "gbo-lab",
    version,
    about = "Numerical experiments for the dispersion-generalized Benjamin-Ono family"
)]
struct Cli {
    /// Print the bundled example configurations and exit.
    #[arg(long)]
    list_examples: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the equation and track conserved quantities.
    Simulate(RunArgs),
    /// Evaluate spacetime norms and the Strichartz-ratio family.
    Norms(RunArgs),
    /// Sample the resonance lower bounds and admissible-b windows.
    Resonance(RunArgs),
    /// Bilinear counterexample sweeps and slope fits.
    Xfail(RunArgs),
    /// Picard iteration of the truncated Duhamel map.
    Picard(RunArgs),
    /// Time-cutoff scale sweeps.
    Cutoffs(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, required_unless_present = "example", conflicts_with = "example")]
    config: Option<PathBuf>,
    /// Name of a bundled configuration instead of --config.
    #[arg(long)]
    example: Option<String>,
    /// Output root; each run writes to <out>/<name>/.
    #[arg(long, env = "GBO_LAB_OUT", default_value = "gbo-lab-out")]
    out: PathBuf,
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(verb: Verb, args: RunArgs) -> Result<bool> {
    let mut config = match (&args.config, &args.example) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => examples::get(name)?,
        (None, None) => bail!("one of --config or --example is required"),
    };
    if config.experiment.verb() != verb {
        bail!(
            "configuration {:?} is for `{}`, not `{}`",
            config.name,
            config.experiment.verb().as_str(),
            verb.as_str()
        );
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (manifest, dir) = gbo_lab::execute(&config, &args.out, args.jobs)?;
    for check in &manifest.checks {
        println!("{}", check.describe());
    }
    println!("wrote {}", dir.display());
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        None if cli.list_examples => examples::listing().map(|s| {
            print!("{s}");
            true
        }),
        None => {
            eprintln!("error: no command given; run with --help");
            return ExitCode::from(2);
        }
        Some(cmd) => match cmd {
            Command::Simulate(a) => run(Verb::Simulate, a),
            Command::Norms(a) => run(Verb::Norms, a),
            Command::Resonance(a) => run(Verb::Resonance, a),
            Command::Xfail(a) => run(Verb::Xfail, a),
            Command::Picard(a) => run(Verb::Picard, a),
            Command::Cutoffs(a) => run(Verb::Cutoffs, a),
        },
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
