//! `scno`: classify points, enumerate M-stationary points, check the Morse
//! relation and the normal Morse data of sparsity constrained polynomial problems.
//!
//! Exit status: 0 when the analysis completed (whatever its verdicts),
//! 2 on input errors, 3 on numeric failures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scno_core::enumeration::perturb_problem;
use scno_core::report::{
    analyze, classify, level_set, render_analysis_text, render_classify_text, render_level_set_text,
    render_topology_text, AnalysisOptions, ProblemFile, ToleranceOverrides,
};
use scno_core::topology::{normal_morse_sweep, verify_normal_morse_data};
use scno_core::Error;

#[derive(Parser, Debug)]
#[command(name = "scno", version, about = "Analysis of sparsity constrained polynomial optimization problems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Entries with |x_i| at or below this count as zero
    #[arg(long, global = true, value_name = "TOL")]
    tol_zero_entry: Option<f64>,
    /// Partial derivatives at or below this count as zero
    #[arg(long, global = true, value_name = "TOL")]
    tol_grad_zero: Option<f64>,
    /// Restricted Hessian eigenvalues at or below this count as zero
    #[arg(long, global = true, value_name = "TOL")]
    tol_eig_zero: Option<f64>,
    /// Points closer than this are merged
    #[arg(long, global = true, value_name = "TOL")]
    tol_dedupe: Option<f64>,
    /// Grid points per box edge for level set components
    #[arg(long, global = true, default_value_t = 41)]
    resolution: usize,
    /// Add a seeded random linear and quadratic perturbation of this size
    #[arg(long, global = true, value_name = "EPS")]
    perturb: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a single point
    Classify {
        problem: PathBuf,
        /// Comma separated coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        /// Auxiliary variables for an extra relaxation analysis
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
    },
    /// Enumerate and classify all M-stationary points and check the Morse relation
    Analyze { problem: PathBuf },
    /// Check the normal Morse data for one (p, q) or every pair up to a bound
    Topology {
        #[arg(long, required_unless_present = "sweep", requires = "q")]
        p: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        /// Every 1 <= p <= PMAX, 0 <= q < p
        #[arg(long, value_name = "PMAX", conflicts_with_all = ["p", "q"])]
        sweep: Option<usize>,
    },
    /// Component counts of lower level sets across the critical values
    Levelset { problem: PathBuf },
    /// Write the perturbed problem file
    Perturb { problem: PathBuf },
}

enum Failure {
    Input(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn read_problem(path: &Path) -> Result<ProblemFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    ProblemFile::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// A closed pipe downstream (`scno ... | head`) is not an error.
fn write_out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit<T: serde::Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) {
    match format {
        Format::Json => write_out(&(serde_json::to_string_pretty(value).expect("reports serialize") + "\n")),
        Format::Text => write_out(&text(value)),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let opts = AnalysisOptions {
        tolerances: ToleranceOverrides {
            zero_entry: g.tol_zero_entry,
            grad_zero: g.tol_grad_zero,
            eig_zero: g.tol_eig_zero,
            dedupe_radius: g.tol_dedupe,
        },
        resolution: g.resolution,
        perturb: g.perturb,
        seed: g.seed,
        ..AnalysisOptions::default()
    };
    match &cli.command {
        Command::Classify { problem, point, y } => {
            let file = read_problem(problem)?;
            let report = classify(&file, point, y.as_deref(), &opts)?;
            emit(g.format, &report, render_classify_text);
        }
        Command::Analyze { problem } => {
            let file = read_problem(problem)?;
            let report = analyze(&file, &opts)?;
            emit(g.format, &report, render_analysis_text);
        }
        Command::Levelset { problem } => {
            let file = read_problem(problem)?;
            let report = level_set(&file, &opts)?;
            emit(g.format, &report, render_level_set_text);
        }
        Command::Topology { p, q, sweep } => {
            let rows = match (sweep, p, q) {
                (Some(pmax), _, _) => normal_morse_sweep(*pmax)?,
                (None, Some(p), Some(q)) => vec![verify_normal_morse_data(*p, *q)?],
                _ => return Err(Failure::Input("give --p and --q, or --sweep".into())),
            };
            emit(g.format, &rows, |r| render_topology_text(r));
        }
        Command::Perturb { problem } => {
            let file = read_problem(problem)?;
            let eps = g
                .perturb
                .ok_or_else(|| Failure::Input("perturb needs --perturb EPS".into()))?;
            let prob = file.to_problem(&opts.tolerances)?;
            let perturbed = perturb_problem(&prob, eps, g.seed)?;
            let mut labels = file.labels.clone();
            labels.insert("perturbation".into(), format!("epsilon {eps}, seed {}", g.seed));
            let out = ProblemFile::from_problem(&perturbed, file.tolerances, labels);
            write_out(&(out.to_json() + "\n"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
