use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aoi_eh::config::{parse_config, ConfigError, ExperimentName};
use aoi_eh::experiment::run_experiment;

/// Energy-harvesting / age-of-information experiments for Poisson IoT downlinks.
#[derive(Debug, Parser)]
#[command(name = "aoi-eh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write CSV output.
    Run {
        config: PathBuf,
        /// Experiment name; overrides `[experiment].name`.
        #[arg(long)]
        experiment: Option<String>,
        /// Output directory; overrides `[experiment].output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo trials per point.
        #[arg(long)]
        trials: Option<u64>,
        /// Also write an SVG chart.
        #[arg(long)]
        plot: bool,
    },
    /// Parse a config file and print the resolved parameters.
    Validate { config: PathBuf },
    /// List experiment names.
    ListExperiments,
}

fn config_exit(err: &ConfigError) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        ConfigError::UnknownExperiment { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("AOI_EH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("AOI_EH_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for e in ExperimentName::ALL {
                println!("{:<18} {}", e.as_str(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match parse_config(&config) {
            Ok((cfg, spec)) => {
                let resolved = serde_json::json!({ "network": cfg, "experiment": spec });
                println!("{}", serde_json::to_string_pretty(&resolved).expect("serializable"));
                ExitCode::SUCCESS
            }
            Err(e) => config_exit(&e),
        },
        Command::Run {
            config,
            experiment,
            out,
            seed,
            trials,
            plot,
        } => {
            let (cfg, mut spec) = match parse_config(&config) {
                Ok(v) => v,
                Err(e) => return config_exit(&e),
            };
            if let Some(name) = experiment {
                match name.parse::<ExperimentName>() {
                    Ok(n) if n != spec.name => {
                        spec.name = n;
                        spec.sweep = n.default_sweep();
                    }
                    Ok(_) => {}
                    Err(e) => return config_exit(&e),
                }
            }
            if let Some(dir) = out {
                spec.output_dir = dir;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    eprintln!("error: --trials must be >= 1");
                    return ExitCode::from(1);
                }
                spec.trials = t;
            }
            spec.plot |= plot;
            if let Err(e) = configure_threads() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            match run_experiment(&cfg, &spec) {
                Ok(output) => {
                    println!("{}", output.csv.display());
                    println!("{}", output.meta.display());
                    if let Some(p) = output.plot {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
