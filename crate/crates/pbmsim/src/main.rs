use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pbmsim::config::{parse_config, parse_property_set, SimConfig, UNITS_TABLE};
use pbmsim::io;
use pbmsim::parallel::with_threads;
use pbmsim::pipeline::{run_coupled, run_sweep, sweep_csv, write_outputs, RunError, SweepSpec};
use pbmsim::validate::{format_report, run_validation, Fault};
use pbmsim_core::dosimetry::{extract_cutline, CutlineSpec};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Light and heat transport for transcranial LED illumination of layered
/// tissue phantoms.
#[derive(Parser)]
#[command(name = "pbmsim", version)]
struct Cli {
    /// Print the unit conventions and conversions, then exit.
    #[arg(long)]
    explain_units: bool,
    /// Worker threads for Monte Carlo (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Warn about unknown config keys instead of rejecting them.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled optics and heat model for a config.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monte Carlo seed (overrides optics.seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat a run over a list of irradiances or property sets.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated irradiances (mW/cm^2) or property-set files.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in analytic checks.
    Validate {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Sample a field dump along a segment and print CSV.
    Cutline {
        dump: PathBuf,
        /// Start point x,y,z in mm.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        from: Vec<f64>,
        /// End point x,y,z in mm.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        to: Vec<f64>,
        #[arg(short = 'n', long, default_value_t = 100)]
        samples: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the report of a finished run.
    Report { run_dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Irradiance,
    PropertySet,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    NegativeMuA,
}

fn load(path: &Path, lenient: bool) -> Result<SimConfig, ExitCode> {
    match parse_config(path, lenient) {
        Ok((cfg, warnings)) => {
            for w in warnings {
                eprintln!("warning: {}: {w}", path.display());
            }
            Ok(cfg)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            Err(ExitCode::from(EXIT_CONFIG))
        }
    }
}

fn run_error(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        RunError::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_SOLVER),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.explain_units {
        print!("{}\n{}", pbmsim_core::units::EXPLANATION, UNITS_TABLE);
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no command given (try --help)");
        return ExitCode::from(EXIT_CONFIG);
    };
    let lenient = cli.lenient;
    with_threads(cli.threads, move || dispatch(command, lenient))
}

fn dispatch(command: Command, lenient: bool) -> ExitCode {
    match command {
        Command::Run { config, out, seed } => {
            let mut cfg = match load(&config, lenient) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(s) = seed {
                cfg.optics.seed = s;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let result = run_coupled(&cfg).and_then(|o| write_outputs(&o, &cfg, &dir).map(|_| o));
            match result {
                Ok(o) => {
                    print!("{}", o.report.to_text());
                    println!("artifacts written to {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => run_error(&e),
            }
        }
        Command::Sweep { config, param, values, out } => {
            let cfg = match load(&config, lenient) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let spec = match param {
                SweepParam::Irradiance => {
                    let parsed: Result<Vec<f64>, _> = values.iter().map(|v| v.trim().parse::<f64>()).collect();
                    match parsed {
                        Ok(v) => SweepSpec::Irradiance(v),
                        Err(e) => {
                            eprintln!("error: --values: {e}");
                            return ExitCode::from(EXIT_CONFIG);
                        }
                    }
                }
                SweepParam::PropertySet => {
                    let mut sets = Vec::new();
                    for v in &values {
                        match parse_property_set(Path::new(v.trim())) {
                            Ok(s) => sets.push(s),
                            Err(e) => {
                                eprintln!("error: {v}: {e}");
                                return ExitCode::from(EXIT_CONFIG);
                            }
                        }
                    }
                    SweepSpec::PropertySets(sets)
                }
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let rows = run_sweep(&cfg, &spec);
            let mut code = ExitCode::SUCCESS;
            for (i, r) in rows.iter().enumerate() {
                match &r.result {
                    Ok(o) => {
                        let (_, _, row_cfg) = pbmsim::pipeline::sweep_config(&cfg, &spec, i).expect("row config built once");
                        if let Err(e) = write_outputs(o, &row_cfg, &dir.join(format!("{i:02}_{}", sanitize(&r.label)))) {
                            code = run_error(&e);
                        }
                    }
                    Err(e) => code = run_error(e),
                }
            }
            let csv = sweep_csv(&rows, values.len());
            if let Err(e) = io::ensure_dir(&dir).and_then(|_| io::write_text(&dir.join("sweep.csv"), &csv)) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_SOLVER);
            }
            print!("{csv}");
            code
        }
        Command::Validate { inject_fault } => {
            let fault = inject_fault.map(|f| match f {
                FaultArg::NegativeMuA => Fault::NegativeMuA,
            });
            let checks = run_validation(fault);
            print!("{}", format_report(&checks));
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
        Command::Cutline { dump, from, to, samples, out } => {
            let field = match io::read_field_dump(&dump) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let (Ok(from), Ok(to)) = (<[f64; 3]>::try_from(from), <[f64; 3]>::try_from(to)) else {
                eprintln!("error: --from and --to take three comma-separated coordinates");
                return ExitCode::from(EXIT_CONFIG);
            };
            let spec = CutlineSpec::from_mm(from, to, samples);
            let profile = match extract_cutline(&field, &spec) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match out {
                Some(path) => {
                    if let Err(e) = io::write_cutline_csv(&profile, &path) {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_SOLVER);
                    }
                }
                None => print!("{}", io::cutline_csv(&profile)),
            }
            ExitCode::SUCCESS
        }
        Command::Report { run_dir } => match std::fs::read_to_string(run_dir.join("report.txt")) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {}: {e}", run_dir.join("report.txt").display());
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}

fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}
