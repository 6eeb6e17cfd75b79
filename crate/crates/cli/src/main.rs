//! `jsrlab`: joint spectral radius analysis from the command line.
//!
//! Reports go to stdout as JSON, a short human summary to stderr.
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 a search
//! ran out of budget (the partial report is still written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jsrlab_core::report::{add_rho_d, finiteness_section, gap_report, lift_section, rho_p_section};
use jsrlab_core::schema::{example1, example2, System, SystemSpec};
use jsrlab_core::{AnalysisConfig, AnalysisReport, NormKind};

mod summary;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "jsrlab",
    version,
    about = "Deterministic and Markovian joint spectral radius analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket the deterministic radius by brute force and branch and bound.
    Jsr(SpecArgs),
    /// Exact expectation curve and Monte Carlo estimate under the chain.
    Prob(SpecArgs),
    /// Cycle conditions, orthogonality attempt and the ratio interval.
    Equality(SpecArgs),
    /// Search for a word attaining the deterministic radius.
    Finiteness(SpecArgs),
    /// Lift a higher-order chain to an order-1 chain on tuples.
    Lift(SpecArgs),
    /// Every analysis in one report.
    Report(SpecArgs),
    /// Write the two bundled example inputs.
    Examples {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// Input document, or `-` for stdin.
    spec: PathBuf,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    One,
    Two,
    Inf,
}

impl From<Norm> for NormKind {
    fn from(n: Norm) -> Self {
        match n {
            Norm::One => NormKind::One,
            Norm::Two => NormKind::Two,
            Norm::Inf => NormKind::Inf,
        }
    }
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    #[arg(long, value_enum, default_value = "two")]
    norm: Norm,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Node budget of the branch-and-bound search.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 1000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    max_cycle_len: usize,
    #[arg(long, default_value_t = 8)]
    max_word_len: usize,
}

impl Opts {
    fn config(&self) -> Result<AnalysisConfig, String> {
        if self.horizon == 0 {
            return Err("--horizon must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err("--tol must be positive and finite".into());
        }
        if self.max_cycle_len == 0 || self.max_word_len == 0 {
            return Err("--max-cycle-len and --max-word-len must be at least 1".into());
        }
        Ok(AnalysisConfig {
            horizon: self.horizon,
            norm: self.norm.into(),
            tol: self.tol,
            budget: self.budget,
            mc_samples: self.mc_samples,
            seed: self.seed,
            max_cycle_len: self.max_cycle_len,
            max_word_len: self.max_word_len,
        })
    }
}

/// A failure before any report exists.
struct Fatal {
    code: u8,
    message: String,
}

fn invalid(message: impl Into<String>) -> Fatal {
    Fatal {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

fn load(path: &Path) -> Result<System, Fatal> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).map_err(|e| invalid(format!("stdin: {e}")))?
    } else {
        fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?
    };
    let spec = SystemSpec::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    spec.validate().map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn configure_threads() -> Result<(), Fatal> {
    let Ok(value) = std::env::var("JSRLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid(format!("JSRLAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Fatal {
            code: EXIT_FAILURE,
            message: e.to_string(),
        })
}

fn analyze(name: &str, args: &SpecArgs) -> Result<AnalysisReport, Fatal> {
    let cfg = args.opts.config().map_err(invalid)?;
    let system = load(&args.spec)?;
    let tuple = &system.tuple;
    let mut report = match name {
        "jsr" => {
            let mut r = AnalysisReport::new(name, &cfg);
            add_rho_d(&mut r, tuple);
            r
        }
        "prob" => {
            let law = system.law().ok_or_else(|| {
                invalid("prob needs a chain with an invariant probability; give chain.nu when it is not unique")
            })?;
            let mut r = AnalysisReport::new(name, &cfg);
            if let Some(p) = r.record("rho_p", rho_p_section(tuple, law, &cfg)) {
                r.budget_exhausted |= p.curve.truncated;
                r.rho_p = Some(p);
            }
            r
        }
        "equality" => gap_report(&system, &cfg),
        "finiteness" => {
            let mut r = AnalysisReport::new(name, &cfg);
            let bracket = add_rho_d(&mut r, tuple);
            r.finiteness = r.record("finiteness", finiteness_section(tuple, bracket, &cfg));
            r
        }
        "lift" => {
            if system.higher_order.is_none() {
                return Err(invalid("lift needs a higher_order chain in the input"));
            }
            let mut r = AnalysisReport::new(name, &cfg);
            r.lift = r.record("lift", lift_section(&system));
            r
        }
        "report" => {
            let mut r = gap_report(&system, &cfg);
            let bracket = r.rho_d.as_ref().expect("gap reports carry rho_d").bracket(cfg.norm);
            r.finiteness = r.record("finiteness", finiteness_section(tuple, bracket, &cfg));
            r
        }
        _ => unreachable!("unknown command {name}"),
    };
    report.command = name.to_string();
    report.input = Some(args.spec.display().to_string());
    Ok(report)
}

fn write_examples(dir: &Path) -> Result<(), Fatal> {
    let io = |e: std::io::Error| Fatal {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", dir.display()),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    for (name, spec) in [("example1.json", example1()), ("example2.json", example2())] {
        let path = dir.join(name);
        fs::write(&path, spec.to_json_pretty() + "\n").map_err(io)?;
        eprintln!("wrote {}", path.display());
        written.push(path.display().to_string());
    }
    println!("{}", serde_json::json!({ "written": written }));
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Fatal> {
    configure_threads()?;
    let (name, args) = match &cli.command {
        Command::Examples { out_dir } => {
            write_examples(out_dir)?;
            return Ok(0);
        }
        Command::Jsr(a) => ("jsr", a),
        Command::Prob(a) => ("prob", a),
        Command::Equality(a) => ("equality", a),
        Command::Finiteness(a) => ("finiteness", a),
        Command::Lift(a) => ("lift", a),
        Command::Report(a) => ("report", a),
    };
    let report = analyze(name, args)?;
    println!("{}", report.to_json_pretty());
    eprint!("{}", summary::render(&report));
    let code = if report.errors.iter().any(|e| !e.budget) {
        EXIT_FAILURE
    } else if report.budget_exhausted {
        EXIT_BUDGET
    } else {
        0
    };
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("jsrlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
