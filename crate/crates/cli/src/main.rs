use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lossbench_cli::{bound_report_json, check_channel, fit, simulate, CliError, Model};

#[derive(Debug, Parser)]
#[command(
    name = "lossbench",
    version,
    about = "Randomized benchmarking of average loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the protocol and write decay.csv and metadata.json.
    Simulate {
        #[arg(value_name = "CONFIG", required_unless_present = "config")]
        path: Option<PathBuf>,
        #[arg(long, conflicts_with = "path")]
        config: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Fit a decay curve from a CSV and write fit.json.
    Fit {
        #[arg(value_name = "CSV")]
        csv: PathBuf,
        #[arg(long, value_enum, default_value = "loss")]
        model: Model,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Print average and worst-case loss of the configured channel.
    CheckChannel {
        #[arg(value_name = "CONFIG", required_unless_present = "config")]
        path: Option<PathBuf>,
        #[arg(long, conflicts_with = "path")]
        config: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            path,
            config,
            seed,
            out,
        } => {
            let path = path.or(config).expect("clap requires one");
            let sim = simulate(&path, seed, out.as_deref())?;
            println!(
                "wrote {} sequence lengths to {}",
                sim.dataset.points.len(),
                sim.out_dir.join("decay.csv").display()
            );
        }
        Command::Fit { csv, model, out } => {
            let report = fit(&csv, model, out.as_deref())?;
            println!("{}", report.summary);
            if let Some(flags) = report.json["flags"].as_array().filter(|f| !f.is_empty()) {
                let names: Vec<_> = flags.iter().filter_map(|f| f.as_str()).collect();
                println!("flags: {}", names.join(", "));
            }
        }
        Command::CheckChannel { path, config } => {
            let path = path.or(config).expect("clap requires one");
            print!("{}", bound_report_json(&check_channel(&path)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
