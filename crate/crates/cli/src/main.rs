use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vnm_lab::scenarios::write_error_json;
use vnm_lab::{run, validate_config, ConfigError, ScenarioConfig, SCENARIOS};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "vnm-lab", version, about = "Von Neumann measurement-model scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a config and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the available scenarios.
    ListScenarios,
}

fn config_error(errors: &[ConfigError]) -> ExitCode {
    let message = errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
    let _ = write_error_json(std::io::stderr(), "config", &message, errors);
    ExitCode::from(EXIT_CONFIG)
}

fn load(path: &Path) -> Result<ScenarioConfig, Vec<ConfigError>> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| vec![ConfigError { path: String::new(), message: format!("cannot read {}: {e}", path.display()) }])?;
    let mut config = validate_config(&raw)?;
    if let Ok(s) = std::env::var("VNM_SEED") {
        let seed = s.trim().parse().map_err(|_| {
            vec![ConfigError { path: "VNM_SEED".into(), message: format!("not an unsigned integer: {s:?}") }]
        })?;
        config.override_seed(seed);
    }
    Ok(config)
}

fn configure_threads() -> Result<(), Vec<ConfigError>> {
    let Ok(s) = std::env::var("VNM_THREADS") else {
        return Ok(());
    };
    let bad = || vec![ConfigError { path: "VNM_THREADS".into(), message: format!("must be a positive integer, got {s:?}") }];
    let n: usize = s.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| vec![ConfigError { path: "VNM_THREADS".into(), message: e.to_string() }])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, about) in SCENARIOS {
                println!("{name:<21} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{}", serde_json::to_string_pretty(&c).expect("config serializes"));
                ExitCode::SUCCESS
            }
            Err(errors) => config_error(&errors),
        },
        Command::Run { config, out } => {
            let config = match configure_threads().and_then(|_| load(&config)) {
                Ok(c) => c,
                Err(errors) => return config_error(&errors),
            };
            match run(&config, &out) {
                Ok(manifest) => {
                    println!("{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    let _ = write_error_json(std::io::stderr(), "runtime", &e.to_string(), &[]);
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}
