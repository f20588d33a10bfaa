use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use doiflow_lab::{parse_config, run, Command};

/// Numerical lab for double operator integrals and spectral flow.
#[derive(Parser, Debug)]
#[command(name = "doiflow", version)]
struct Cli {
    /// One of doi, dk, flow, weightfn, verify.
    command: String,
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Report path; overrides `output` in the config. Without either the
    /// report goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

const CONFIG_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(command) = Command::parse(&cli.command) else {
        eprintln!("doiflow: unknown command {:?}; expected doi, dk, flow, weightfn or verify", cli.command);
        return ExitCode::from(CONFIG_ERROR);
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("doiflow: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let mut config = match parse_config(&text).and_then(|mut c| c.apply_seed_env().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("doiflow: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if config.command != command {
        eprintln!("doiflow: config is for `{}`, command line asks for `{command}`; running `{command}`", config.command);
        config.command = command;
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("doiflow: --workers must be positive");
            return ExitCode::from(CONFIG_ERROR);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("global pool is set once");
    }

    let report = run(&config);
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
    let text = report.render(command.name(), timestamp);
    let output = cli.output.or(config.output.as_ref().map(PathBuf::from));
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("doiflow: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("doiflow: check failed: {} measured {:e}, tolerance {:e}", c.name, c.measured, c.tolerance);
    }
    if let Some(f) = &report.failure {
        eprintln!("doiflow: numerical failure [{}]: {}", f.code, f.message);
    }
    ExitCode::from(report.exit_code() as u8)
}
