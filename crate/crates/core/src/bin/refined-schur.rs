use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use refined_schur::bench::{run_bench, to_csv, to_json, BenchConfig, BenchKind, Recipe};
use refined_schur::driver::{assign, AssignConfig, ControllabilityGate};
use refined_schur::error::{AssignError, Result};
use refined_schur::io::{
    read_json, to_json_string, write_text, MatrixJson, ResultFile, SystemFile,
};
use refined_schur::metrics::{
    geometric_multiplicity, robustness_report, MetricsConfig, DEFAULT_GMULT_TOL,
};
use refined_schur::poles::{PoleFile, PoleOrder, PoleSpec};

#[derive(Parser)]
#[command(version, about = "Robust pole assignment with repeated poles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Ascending,
    Given,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecipeArg {
    Qr,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a feedback matrix placing the requested poles.
    Assign {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        poles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "ascending")]
        order: OrderArg,
        /// Relative rank tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Entries with |im| at most this are real.
        #[arg(long, default_value_t = 0.0)]
        imag_tol: f64,
        /// Log an uncontrollable pair instead of failing.
        #[arg(long)]
        warn_uncontrollable: bool,
    },
    /// Recompute the robustness report of a stored result.
    Metrics {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        poles: PathBuf,
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        imag_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random sweep; one row per grid point.
    Bench {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Comma list; `a..b` is an inclusive range.
        #[arg(long)]
        n: String,
        #[arg(long)]
        m: String,
        #[arg(long)]
        amax: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "qr")]
        recipe: RecipeArg,
        #[arg(long)]
        sequential: bool,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dimension of ker(A + BF − λI).
    Gmult {
        #[arg(long)]
        system: PathBuf,
        /// Matrix file or result file.
        #[arg(long)]
        feedback: PathBuf,
        /// `re,im`
        #[arg(long, allow_hyphen_values = true)]
        pole: String,
        #[arg(long, default_value_t = DEFAULT_GMULT_TOL)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Assign {
            system,
            poles,
            out,
            order,
            tol,
            imag_tol,
            warn_uncontrollable,
        } => {
            let sys = read_json::<SystemFile>(&system)?.to_system()?;
            let spec = load_poles(&poles, imag_tol, order)?;
            let mut config = AssignConfig::default();
            if let Some(t) = tol {
                config.rank_tol = t;
            }
            if warn_uncontrollable {
                config.controllability = ControllabilityGate::Warn;
            }
            let result = assign(&sys, &spec, &config)?;
            let report = robustness_report(
                sys.a(),
                sys.b(),
                &result.f,
                &spec,
                Some((&result.x, &result.t)),
                &MetricsConfig::default(),
            );
            write_text(&out, &to_json_string(&ResultFile::new(&result, report)))
        }
        Command::Metrics {
            system,
            poles,
            result,
            imag_tol,
            out,
        } => {
            let sys = read_json::<SystemFile>(&system)?.to_system()?;
            let spec = load_poles(&poles, imag_tol, OrderArg::Ascending)?;
            let stored: ResultFile = read_json(&result)?;
            let (f, x, t) = (
                stored.f.to_mat("F")?,
                stored.x.to_mat("X")?,
                stored.t.to_mat("T")?,
            );
            if f.shape() != (sys.inputs(), sys.states()) {
                return Err(AssignError::DimensionMismatch(format!(
                    "F is {}×{}, expected {}×{}",
                    f.nrows(),
                    f.ncols(),
                    sys.inputs(),
                    sys.states()
                )));
            }
            let schur = (x.shape() == (sys.states(), sys.states()) && t.shape() == x.shape())
                .then_some((&x, &t));
            let report = robustness_report(
                sys.a(),
                sys.b(),
                &f,
                &spec,
                schur,
                &MetricsConfig::default(),
            );
            emit(out.as_deref(), &to_json_string(&report))
        }
        Command::Bench {
            kind,
            n,
            m,
            amax,
            trials,
            seed,
            format,
            recipe,
            sequential,
            out,
        } => {
            let config = BenchConfig {
                kind: match kind {
                    KindArg::Real => BenchKind::Real,
                    KindArg::Complex => BenchKind::Complex,
                },
                n: parse_list(&n, "n")?,
                m: parse_list(&m, "m")?,
                a_max: parse_list(&amax, "amax")?,
                trials,
                seed,
                recipe: match recipe {
                    RecipeArg::Qr => Recipe::Qr,
                    RecipeArg::Dense => Recipe::Dense,
                },
                parallel: !sequential,
            };
            let rows = run_bench(&config)?;
            let text = match format {
                FormatArg::Csv => to_csv(&rows),
                FormatArg::Json => to_json(&rows),
            };
            emit(out.as_deref(), &text)
        }
        Command::Gmult {
            system,
            feedback,
            pole,
            tol,
        } => {
            let sys = read_json::<SystemFile>(&system)?.to_system()?;
            let f = load_feedback(&feedback)?;
            if f.shape() != (sys.inputs(), sys.states()) {
                return Err(AssignError::DimensionMismatch(
                    "feedback shape does not match the system".into(),
                ));
            }
            let lambda = parse_pole(&pole)?;
            println!(
                "{}",
                geometric_multiplicity(&sys.closed_loop(&f), lambda, tol)
            );
            Ok(())
        }
    }
}

fn load_poles(path: &Path, imag_tol: f64, order: OrderArg) -> Result<PoleSpec> {
    let order = match order {
        OrderArg::Ascending => PoleOrder::Ascending,
        OrderArg::Given => PoleOrder::AsGiven,
    };
    read_json::<PoleFile>(path)?.into_spec(imag_tol, order)
}

/// Accepts a bare matrix or anything with an `"F"` matrix field.
fn load_feedback(path: &Path) -> Result<refined_schur::linalg::Mat> {
    let value: serde_json::Value = read_json(path)?;
    let matrix = value.get("F").cloned().unwrap_or(value);
    let parsed: MatrixJson = serde_json::from_value(matrix)
        .map_err(|e| AssignError::Input(format!("{}: {e}", path.display())))?;
    parsed.to_mat("F")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_pole(s: &str) -> Result<Complex64> {
    let bad = || AssignError::Input(format!("pole {s:?} is not `re,im`"));
    let (re, im) = s.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn parse_list(s: &str, name: &str) -> Result<Vec<usize>> {
    let bad = |item: &str| AssignError::Input(format!("--{name}: cannot read {item:?}"));
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((lo, hi)) = item.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad(item))?;
            let hi: usize = hi
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad(item))?;
            if lo > hi {
                return Err(bad(item));
            }
            out.extend(lo..=hi);
        } else {
            out.push(item.parse().map_err(|_| bad(item))?);
        }
    }
    if out.is_empty() {
        return Err(bad(s));
    }
    Ok(out)
}
