use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use symjet::scenario::{self, RunOptions, ToleranceOverride};
use symjet::Tolerances;

#[derive(Parser)]
#[command(name = "symjet", version, about = "Parallel 2-jets in symmetric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file.
    Run {
        scenario_file: PathBuf,
        /// JSON object overriding any of rank_rel, residual_abs, feas_rel, indeterminate_band.
        #[arg(long)]
        tolerances: Option<PathBuf>,
        /// Replaces every scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Record wall time per scenario (the report is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// List the built-in models.
    Catalog,
    /// Narrate a JSON report produced by `run`.
    Explain { report: PathBuf },
}

const EXIT_PARSE: u8 = 2;
const EXIT_STRUCTURAL: u8 = 3;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), String> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(
    file: &Path,
    tolerances: Option<&Path>,
    seed: Option<u64>,
    format: Format,
    output: Option<&Path>,
    timing: bool,
) -> ExitCode {
    let parsed = read(file).and_then(|text| {
        scenario::parse_scenario_file(&text, &file.display().to_string()).map_err(|e| e.to_string())
    });
    let overrides = tolerances.map(|p| {
        read(p).and_then(|t| {
            serde_json::from_str::<ToleranceOverride>(&t).map_err(|e| {
                format!("{}:{}:{}: {e}", p.display(), e.line(), e.column())
            })
        })
    });
    let (file, overrides) = match (parsed, overrides.transpose()) {
        (Ok(f), Ok(o)) => (f, o),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("parse error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let opts = RunOptions {
        tolerances: overrides,
        seed,
        timing,
    };
    let report = match scenario::run_file(&file, &opts) {
        Ok(r) => r,
        Err(e) if e.structural => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_STRUCTURAL);
        }
        Err(e) => {
            eprintln!("parse error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let json = report.to_json();
    let text = match format {
        Format::Json => json.clone(),
        Format::Text => {
            let v: serde_json::Value = serde_json::from_str(&json).expect("own output parses");
            scenario::explain(&v)
        }
    };
    if let Err(e) = emit(&text, output) {
        eprintln!("{e}");
        return ExitCode::FAILURE;
    }
    if report.has_errors() {
        for s in &report.scenarios {
            let model = s.model_results.iter().map(|(p, o)| (None, p, o));
            let jets = s
                .jets
                .iter()
                .flat_map(|j| j.results.iter().map(move |(p, o)| (Some(j.index), p, o)));
            for (jet, pipeline, outcome) in model.chain(jets) {
                if let scenario::Outcome::Error { message, residuals, .. } = outcome {
                    let at = jet.map_or(String::new(), |i| format!(" jet {i}"));
                    eprintln!("{}{at} {pipeline}: {message}", s.id);
                    for (k, v) in residuals {
                        eprintln!("    {k} = {v:.6e}");
                    }
                }
            }
        }
        return ExitCode::from(EXIT_STRUCTURAL);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario_file,
            tolerances,
            seed,
            format,
            output,
            timing,
        } => run(
            &scenario_file,
            tolerances.as_deref(),
            seed,
            format,
            output.as_deref(),
            timing,
        ),
        Command::Catalog => match scenario::catalog_table(&Tolerances::default()) {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_STRUCTURAL)
            }
        },
        Command::Explain { report } => {
            let v = read(&report).and_then(|t| {
                serde_json::from_str::<serde_json::Value>(&t).map_err(|e| {
                    format!("{}:{}:{}: {e}", report.display(), e.line(), e.column())
                })
            });
            match v {
                Ok(v) => {
                    print!("{}", scenario::explain(&v));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("parse error: {e}");
                    ExitCode::from(EXIT_PARSE)
                }
            }
        }
    }
}
