use bima_cli::config::{load, Experiment};
use bima_cli::recipes::{figure_config, ids, reproduce_table, TABLES};
use bima_cli::report::{check_pa, complexity_markdown, feasibility_markdown};
use bima_cli::sweep::{complexity_reports, run_sweep, Manifest};
use bima_cli::{CliError, EXIT_LOW_CONFIDENCE, EXIT_OK};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bima", version, about = "BIMA vs conventional NOMA sweeps and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check every conventional allocation of a config against the
    /// detectability constraint.
    CheckPa {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Receiver complexity of the config's orders.
    Complexity {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run a bundled figure or table recipe.
    Reproduce {
        /// Figure or table id, e.g. fig5 or table3.
        id: Option<String>,
        /// List the bundled ids.
        #[arg(long)]
        list: bool,
        /// Print the bundled config instead of running it.
        #[arg(long)]
        show: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Output directory; defaults to output.dir or out/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Caps the symbols simulated per SNR point.
    #[arg(long)]
    max_symbols: Option<u64>,
}

impl Overrides {
    fn apply(&self, exp: &mut Experiment) -> Result<(), CliError> {
        if let Some(n) = self.max_symbols {
            if n == 0 {
                return Err(CliError::Usage("--max-symbols must be >= 1".into()));
            }
            exp.budget.max_symbols = n;
            exp.budget.min_symbols = exp.budget.min_symbols.min(n);
        }
        Ok(())
    }

    fn out_dir(&self, exp: &Experiment) -> PathBuf {
        self.out
            .clone()
            .or_else(|| exp.out_dir.clone())
            .unwrap_or_else(|| Path::new("out").join(&exp.name))
    }
}

fn read_config(path: &Path) -> Result<Experiment, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(load(&text)?)
}

fn sweep(mut exp: Experiment, overrides: &Overrides) -> Result<i32, CliError> {
    overrides.apply(&mut exp)?;
    let out = overrides.out_dir(&exp);
    let manifest = run_sweep(&exp, &out)?;
    report(&manifest, &out);
    Ok(if manifest.low_confidence() { EXIT_LOW_CONFIDENCE } else { EXIT_OK })
}

fn report(m: &Manifest, out: &Path) {
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    for r in &m.runs {
        println!("{}: {}", r.label, r.files.join(", "));
    }
    if let Some(f) = &m.fairness_file {
        println!("fairness: {f}");
    }
    println!("wrote {}", out.join("manifest.json").display());
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Sweep { config, overrides } => sweep(read_config(&config)?, &overrides),
        Command::CheckPa { config, json } => {
            let reports = check_pa(&read_config(&config)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                for r in &reports {
                    println!("{}", feasibility_markdown(&r.label, &r.report));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Complexity { config, json } => {
            let reports = complexity_reports(&read_config(&config)?.scenario.orders)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                print!("{}", complexity_markdown(&reports));
            }
            Ok(EXIT_OK)
        }
        Command::Reproduce { id, list, show, overrides } => {
            if list {
                for id in ids() {
                    println!("{id}");
                }
                return Ok(EXIT_OK);
            }
            let id = id.ok_or_else(|| CliError::Usage("reproduce needs an id (see --list)".into()))?;
            if TABLES.contains(&id.as_str()) {
                let out = overrides.out.clone().unwrap_or_else(|| Path::new("out").join(&id));
                print!("{}", reproduce_table(&id, &out)?);
                return Ok(EXIT_OK);
            }
            let text = figure_config(&id)
                .ok_or_else(|| CliError::Usage(format!("unknown id {id:?}; known: {}", ids().join(", "))))?;
            if show {
                print!("{text}");
                return Ok(EXIT_OK);
            }
            sweep(load(text)?, &overrides)
        }
    }
}

fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run() as u8)
}
