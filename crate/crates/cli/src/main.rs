use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpiston_cli::acceptance;
use qpiston_cli::error::{CliError, CliResult, EXIT_AUDIT};
use qpiston_cli::presets;
use qpiston_cli::run::run;
use qpiston_cli::scenario::Scenario;
use qpiston_cli::sweep::{parse_values, sweep};

#[derive(Parser)]
#[command(name = "qpiston", version, about = "Quantized heat machine: TLS, two baths and an oscillator piston")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file (or a preset) and write its outputs.
    Run {
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Repeat a scenario over values of one numeric field, e.g. --axis machine.g.
    Sweep {
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, short, default_value = "sweep")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the acceptance criteria.
    Validate {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long)]
        only: Option<String>,
    },
    /// List or print the built-in scenarios.
    Presets {
        #[command(subcommand)]
        cmd: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    Show { name: String },
}

fn load(scenario: Option<PathBuf>, preset: Option<String>) -> CliResult<Scenario> {
    match (scenario, preset) {
        (Some(p), None) => Scenario::load(&p),
        (None, Some(n)) => presets::preset(&n),
        _ => Err(CliError::Config("give a scenario file or --preset NAME".into())),
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Run { scenario, preset, out } => {
            let s = load(scenario, preset)?;
            let (report, files) = run(&s, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            println!("final regime: {}, spohn violations: {}", report.final_regime, report.spohn_violations);
            if report.spohn_violations > 0 {
                return Err(CliError::Audit(format!("{} records violate the second law", report.spohn_violations)));
            }
            Ok(())
        }
        Cmd::Sweep { scenario, preset, axis, values, out, workers } => {
            let s = load(scenario, preset)?;
            let values = parse_values(&values)?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let entries = sweep(&s, &axis, &values, &out, workers)?;
            let mut failed = 0;
            for e in &entries {
                match &e.outcome {
                    Ok(r) => println!("{axis}={:e}: ok ({}) -> {}", e.value, r.final_regime, e.dir.display()),
                    Err(err) => {
                        failed += 1;
                        eprintln!("{axis}={:e}: error[{}]: {err}", e.value, err.code());
                    }
                }
            }
            println!("wrote {}", out.join("index.csv").display());
            if failed > 0 {
                return Err(CliError::Audit(format!("{failed} of {} runs failed", entries.len())));
            }
            Ok(())
        }
        Cmd::Validate { only } => {
            let ids: Vec<u8> = match only {
                Some(list) => list
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| CliError::Config(format!("bad criterion {v:?}"))))
                    .collect::<CliResult<_>>()?,
                None => acceptance::ALL.to_vec(),
            };
            let mut failed = 0;
            for id in ids {
                let o = acceptance::run_criterion(id)?;
                println!("{o}");
                failed += !o.passed as usize;
            }
            if failed > 0 {
                return Err(CliError::Acceptance(failed));
            }
            Ok(())
        }
        Cmd::Presets { cmd: PresetCmd::List } => {
            for line in presets::listing() {
                println!("{line}");
            }
            Ok(())
        }
        Cmd::Presets { cmd: PresetCmd::Show { name } } => {
            print!("{}", presets::preset(&name)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            let code = e.exit_code();
            ExitCode::from(if code == 0 { EXIT_AUDIT } else { code } as u8)
        }
    }
}
