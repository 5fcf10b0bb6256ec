use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use korteweg::cli::{parse_config, run};
use korteweg::Error;

/// Pseudo-spectral solver and norm toolkit for the compressible Korteweg
/// system. Exit codes: 0 ok, 2 config error, 3 solver divergence or vacuum,
/// 4 I/O error.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Run configuration file (key = value lines, '#' comments).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for mode-parallel loops (0 = default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. }
        | Error::Domain(_)
        | Error::Shape(_)
        | Error::GridMismatch(_)
        | Error::Constraints { .. }
        | Error::SingularOperator { .. }
        | Error::InsufficientData(_) => 2,
        Error::Diverged { .. } | Error::Vacuum { .. } | Error::QuadratureTolerance { .. } => 3,
        Error::Io(_) | Error::Snapshot(_) => 4,
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
        {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(4);
        }
    };
    let parsed = match parse_config(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for warning in &parsed.warnings {
        eprintln!("{warning}");
    }
    let mut config = parsed.config;
    if let Some(out) = args.out {
        config.out = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
