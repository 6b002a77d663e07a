use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noma_secrecy::experiment::{run_optimize, run_rates, run_sweep, run_validate, ExperimentOutput, ExperimentSpec, Mode};

#[derive(Parser)]
#[command(name = "noma-secrecy", version, about = "Secrecy rates and power allocation for massive-MIMO NOMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form rates for a given allocation
    Rates(Common),
    /// Closed-form moments and rates against Monte Carlo
    Validate(Common),
    /// Run the proposed allocator and the baselines
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "se")]
        mode: ModeArg,
    },
    /// Every allocator, SE and EE, along the spec's sweep axis
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment spec (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV; companions are written next to it. Defaults to the spec's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Se,
    Ee,
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let (common, job): (_, fn(&ExperimentSpec) -> noma_secrecy::Result<ExperimentOutput>) = match cli.command {
        Command::Rates(c) => (c, run_rates),
        Command::Validate(c) => (c, run_validate),
        Command::Optimize { common, mode } => (
            common,
            match mode {
                ModeArg::Se => |s| run_optimize(s, Mode::Se),
                ModeArg::Ee => |s| run_optimize(s, Mode::Ee),
            },
        ),
        Command::Sweep(c) => (c, run_sweep),
    };
    let text = std::fs::read_to_string(&common.spec)
        .map_err(|e| format!("cannot read {}: {e}", common.spec.display()))?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        pool = pool.num_threads(n);
    }
    let output = pool.build()?.install(|| job(&spec))?;
    match common.out.or(spec.output.clone()) {
        Some(path) => {
            for p in output.write(&path)? {
                log::info!("wrote {}", p.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(output.main.to_csv()?.as_bytes())?;
            out.write_all(b"\n")?;
            out.write_all(output.summary.to_csv()?.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NOMA_SECRECY_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
