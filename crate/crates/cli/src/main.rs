mod artifact;

use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chshd_core::classical::{classical_max_with_cap, ClassicalMaxResult, DEFAULT_MAX_D};
use chshd_core::ideal::{ideal_maxent_correlation, ideal_tilted_correlation};
use chshd_core::json::BellFunctionalJson;
use chshd_core::seesaw::{seesaw, Init, SeesawConfig};
use chshd_core::selftest::{verify_selftest, DEFAULT_TOL};
use chshd_core::{evaluate, BellFunctional, Correlation, CrossDiagonalMode, Variant};

use artifact::{emit, emit_csv, emit_json, load, with_manifest, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "chshd", version, about = "Generalized CHSH Bell functionals in local dimension d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Bell functional coefficient tensor.
    Build(BuildArgs),
    /// Exact classical maximum by enumerating deterministic strategies.
    Classical(ClassicalArgs),
    /// Ideal strategy correlation and its Bell value.
    Ideal(IdealArgs),
    /// See-saw lower bound on the quantum value.
    Seesaw(SeesawArgs),
    /// Structural self-test checks on a correlation; exit code 0 iff all pass.
    Verify(VerifyArgs),
    /// Evaluate a functional on a correlation.
    Eval(EvalArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FunctionalArgs {
    /// Local dimension (number of answers).
    #[arg(long)]
    d: Option<usize>,
    /// Cross-term penalty.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Schmidt coefficients for the tilted family, comma separated; fixes d.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    coeffs: Option<Vec<f64>>,
    /// Build the tilted functional from --coeffs.
    #[arg(long)]
    tilted: bool,
    /// Whether the odd-d leftover diagonal counts as a cross term.
    #[arg(long, default_value = "exclude")]
    cross_diagonal: String,
    /// Permit epsilon = 0 (exploratory).
    #[arg(long)]
    allow_zero_epsilon: bool,
    /// Load the functional from a file written by `build` instead.
    #[arg(long)]
    bell: Option<PathBuf>,
}

impl FunctionalArgs {
    fn mode(&self) -> Result<CrossDiagonalMode> {
        Ok(self.cross_diagonal.parse()?)
    }

    fn build(&self) -> Result<BellFunctional> {
        if let Some(path) = &self.bell {
            let j: BellFunctionalJson = load(path, "functional")?;
            return Ok(BellFunctional::try_from(j)?);
        }
        self.build_with(self.d, self.epsilon)
    }

    fn build_with(&self, d: Option<usize>, epsilon: f64) -> Result<BellFunctional> {
        let mode = self.mode()?;
        if self.tilted {
            let c = normalized_coeffs(self.coeffs.as_ref().context("--tilted needs --coeffs")?)?;
            if let Some(d) = d {
                if d != c.len() {
                    bail!("--d {d} disagrees with {} coefficients", c.len());
                }
            }
            let f = if self.allow_zero_epsilon {
                BellFunctional::build_tilted_allow_zero_epsilon(&c, epsilon, mode)?
            } else {
                BellFunctional::build_tilted(&c, epsilon, mode)?
            };
            return Ok(f);
        }
        if self.coeffs.is_some() {
            bail!("--coeffs is only meaningful with --tilted");
        }
        let d = d.context("--d is required")?;
        let f = if self.allow_zero_epsilon {
            BellFunctional::build_maxent_allow_zero_epsilon(d, epsilon, mode)?
        } else {
            BellFunctional::build_maxent(d, epsilon, mode)?
        };
        Ok(f)
    }
}

/// Coefficients typed on the command line carry a few digits; rescale them to
/// unit norm when they are within this distance of it.
const COEFF_NORM_SLACK: f64 = 1e-4;

fn normalized_coeffs(c: &[f64]) -> Result<Vec<f64>> {
    let norm2: f64 = c.iter().map(|v| v * v).sum();
    if (norm2 - 1.0).abs() > COEFF_NORM_SLACK {
        bail!("coefficients have squared norm {norm2}, not 1");
    }
    if norm2 != 1.0 {
        eprintln!("rescaling coefficients by 1/{:.9} to unit norm", norm2.sqrt());
    }
    Ok(c.iter().map(|v| v / norm2.sqrt()).collect())
}

#[derive(Args, Debug, Serialize)]
struct OutputArgs {
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl OutputArgs {
    fn path(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    fn json_only(&self, command: &str) -> Result<()> {
        if self.format == Format::Csv {
            bail!("{command} has no csv output");
        }
        Ok(())
    }
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct ClassicalArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    /// Run once per listed d (one csv row each).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sweep_d: Option<Vec<usize>>,
    /// Run once per listed epsilon (one csv row each).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sweep_epsilon: Option<Vec<f64>>,
    /// Refuse to enumerate above this d.
    #[arg(long, default_value_t = DEFAULT_MAX_D)]
    max_d: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct IdealArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sweep_d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sweep_epsilon: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InitArg {
    Random,
    Perturbed,
}

#[derive(Args, Debug, Serialize)]
struct SeesawArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Maximum sweeps per restart.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Convergence threshold on the value change per sweep.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Seed for all randomness; a random one is drawn and recorded if omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    /// Rotation strength for `--init perturbed`.
    #[arg(long, default_value_t = 1e-2)]
    noise: f64,
    /// Alice's local dimension (default d).
    #[arg(long)]
    dim_a: Option<usize>,
    /// Bob's local dimension (default d).
    #[arg(long)]
    dim_b: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    /// Correlation file (as written by `ideal`, or a bare correlation).
    #[arg(long)]
    correlation: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    #[arg(long)]
    correlation: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(args) => cmd_build(&args).map(|_| true),
        Command::Classical(args) => cmd_classical(&args).map(|_| true),
        Command::Ideal(args) => cmd_ideal(&args).map(|_| true),
        Command::Seesaw(args) => cmd_seesaw(&args).map(|_| true),
        Command::Verify(args) => cmd_verify(&args),
        Command::Eval(args) => cmd_eval(&args).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    args.output.json_only("build")?;
    let f = args.functional.build()?;
    let manifest = RunManifest::new("build", args, None)?;
    let body = with_manifest(&BellFunctionalJson::from(&f), &manifest)?;
    emit_json(&body, args.output.path())
}

/// The classical bound `2(1 + 1_{d>2})` of the max-entangled family.
fn chsh_type_bound(d: usize) -> f64 {
    if d > 2 {
        4.0
    } else {
        2.0
    }
}

#[derive(Debug, Serialize)]
struct ClassicalReport {
    d: usize,
    epsilon: f64,
    mode: CrossDiagonalMode,
    variant: Variant,
    #[serde(flatten)]
    result: ClassicalMaxResult,
    chsh_type_bound: Option<f64>,
    exceeds_chsh_type_bound: Option<bool>,
    note: Option<String>,
}

#[derive(Debug, Serialize)]
struct ClassicalRow {
    d: usize,
    epsilon: f64,
    mode: CrossDiagonalMode,
    variant: Variant,
    value: f64,
    maximizers: usize,
    scanned: u128,
    chsh_type_bound: Option<f64>,
}

fn classical_report(f: &BellFunctional, max_d: usize) -> Result<ClassicalReport> {
    let start = std::time::Instant::now();
    let result = classical_max_with_cap(f, max_d)?;
    eprintln!(
        "d = {}: scanned {} deterministic strategies in {:.2?}",
        f.d(),
        result.strategies_scanned,
        start.elapsed()
    );
    let (bound, exceeds, note) = match f.variant() {
        Variant::MaxEntangled => {
            let bound = chsh_type_bound(f.d());
            let exceeds = result.value > bound + 1e-9;
            let note = exceeds.then(|| {
                format!(
                    "classical maximum {:.12} exceeds the CHSH-type classical bound {bound} \
                     (2(1 + 1_{{d>2}})); that bound is established for even d only, and for odd d \
                     the leftover bonus terms let a deterministic strategy beat it",
                    result.value
                )
            });
            (Some(bound), Some(exceeds), note)
        }
        Variant::Tilted => (None, None, None),
    };
    Ok(ClassicalReport {
        d: f.d(),
        epsilon: f.epsilon(),
        mode: f.mode(),
        variant: f.variant(),
        result,
        chsh_type_bound: bound,
        exceeds_chsh_type_bound: exceeds,
        note,
    })
}

/// Functionals for every `(d, ε)` combination requested by the sweep flags.
fn sweep_functionals(
    functional: &FunctionalArgs,
    sweep_d: &Option<Vec<usize>>,
    sweep_epsilon: &Option<Vec<f64>>,
) -> Result<Vec<BellFunctional>> {
    if functional.bell.is_some() && (sweep_d.is_some() || sweep_epsilon.is_some()) {
        bail!("sweeps cannot be combined with --bell");
    }
    if functional.tilted && sweep_d.is_some() {
        bail!("--sweep-d does not apply to the tilted family (d is fixed by --coeffs)");
    }
    if sweep_d.is_none() && sweep_epsilon.is_none() {
        return Ok(vec![functional.build()?]);
    }
    let ds: Vec<Option<usize>> = match sweep_d {
        Some(list) => list.iter().map(|&d| Some(d)).collect(),
        None => vec![functional.d],
    };
    let eps = sweep_epsilon.clone().unwrap_or_else(|| vec![functional.epsilon]);
    let mut out = Vec::new();
    for &d in &ds {
        for &e in &eps {
            out.push(functional.build_with(d, e)?);
        }
    }
    Ok(out)
}

fn cmd_classical(args: &ClassicalArgs) -> Result<()> {
    let fs = sweep_functionals(&args.functional, &args.sweep_d, &args.sweep_epsilon)?;
    let reports = fs
        .iter()
        .map(|f| classical_report(f, args.max_d))
        .collect::<Result<Vec<_>>>()?;
    for r in &reports {
        if let Some(note) = &r.note {
            eprintln!("note: {note}");
        }
    }
    match args.output.format {
        Format::Csv => {
            let rows: Vec<ClassicalRow> = reports
                .iter()
                .map(|r| ClassicalRow {
                    d: r.d,
                    epsilon: r.epsilon,
                    mode: r.mode,
                    variant: r.variant,
                    value: r.result.value,
                    maximizers: r.result.argmax.len(),
                    scanned: r.result.strategies_scanned,
                    chsh_type_bound: r.chsh_type_bound,
                })
                .collect();
            emit_csv(&rows, args.output.path())
        }
        Format::Json => {
            let manifest = RunManifest::new("classical", args, None)?;
            let body = if reports.len() == 1 {
                with_manifest(&reports[0], &manifest)?
            } else {
                with_manifest(&serde_json::json!({ "runs": reports }), &manifest)?
            };
            emit_json(&body, args.output.path())
        }
    }
}

#[derive(Debug, Serialize)]
struct IdealReport {
    d: usize,
    epsilon: f64,
    variant: Variant,
    bell_value: f64,
    bound: f64,
    #[serde(flatten)]
    correlation: Correlation,
}

#[derive(Debug, Serialize)]
struct IdealRow {
    d: usize,
    epsilon: f64,
    variant: Variant,
    bell_value: f64,
    bound: f64,
}

fn ideal_report(f: &BellFunctional) -> Result<IdealReport> {
    let p = match f.tilted_spec() {
        Some(spec) => ideal_tilted_correlation(spec)?,
        None => ideal_maxent_correlation(f.d())?,
    };
    Ok(IdealReport {
        d: f.d(),
        epsilon: f.epsilon(),
        variant: f.variant(),
        bell_value: evaluate(f, &p)?,
        bound: f.quantum_bound(),
        correlation: p,
    })
}

fn cmd_ideal(args: &IdealArgs) -> Result<()> {
    let fs = sweep_functionals(&args.functional, &args.sweep_d, &args.sweep_epsilon)?;
    let reports = fs.iter().map(ideal_report).collect::<Result<Vec<_>>>()?;
    for r in &reports {
        eprintln!("d = {}: Bell value {:.12} (bound {:.12})", r.d, r.bell_value, r.bound);
    }
    match args.output.format {
        Format::Csv => {
            let rows: Vec<IdealRow> = reports
                .iter()
                .map(|r| IdealRow {
                    d: r.d,
                    epsilon: r.epsilon,
                    variant: r.variant,
                    bell_value: r.bell_value,
                    bound: r.bound,
                })
                .collect();
            emit_csv(&rows, args.output.path())
        }
        Format::Json => {
            let manifest = RunManifest::new("ideal", args, None)?;
            let body = if reports.len() == 1 {
                with_manifest(&reports[0], &manifest)?
            } else {
                with_manifest(&serde_json::json!({ "runs": reports }), &manifest)?
            };
            emit_json(&body, args.output.path())
        }
    }
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    restart: usize,
    sweep: usize,
    value: f64,
}

fn cmd_seesaw(args: &SeesawArgs) -> Result<()> {
    let f = args.functional.build()?;
    let seed = args.seed.unwrap_or_else(rand::random);
    let cfg = SeesawConfig {
        dim_a: args.dim_a.unwrap_or(f.d()),
        dim_b: args.dim_b.unwrap_or(f.d()),
        restarts: args.restarts,
        max_iters: args.iters,
        convergence_tol: args.tol,
        seed,
        init: match args.init {
            InitArg::Random => Init::Random,
            InitArg::Perturbed => Init::IdealPerturbed { noise: args.noise },
        },
    };
    let result = seesaw(&f, &cfg)?;
    eprintln!(
        "best value {:.12} (restart {}), bound {:.12}{}",
        result.best_value,
        result.best_restart,
        result.bound,
        if result.bound_is_conjectural { " (conjectured)" } else { "" }
    );
    if result.exceeds_bound {
        eprintln!("warning: best value exceeds the bound");
    }
    match args.output.format {
        Format::Csv => {
            let rows: Vec<TrajectoryRow> = result
                .trajectory
                .iter()
                .enumerate()
                .flat_map(|(restart, t)| {
                    t.iter().enumerate().map(move |(sweep, &value)| TrajectoryRow {
                        restart,
                        sweep,
                        value,
                    })
                })
                .collect();
            emit_csv(&rows, args.output.path())
        }
        Format::Json => {
            let manifest = RunManifest::new("seesaw", args, Some(seed))?;
            let body = with_manifest(
                &serde_json::json!({
                    "d": f.d(),
                    "variant": f.variant(),
                    "epsilon": f.epsilon(),
                    "config": cfg,
                    "result": result,
                }),
                &manifest,
            )?;
            emit_json(&body, args.output.path())
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    args.output.json_only("verify")?;
    let f = args.functional.build()?;
    let p: Correlation = load(&args.correlation, "correlation")?;
    let report = verify_selftest(&p, &f, args.tol)?;
    let manifest = RunManifest::new("verify", args, None)?;
    emit_json(&with_manifest(&report, &manifest)?, args.output.path())?;
    eprintln!("verdict: {:?}", report.verdict);
    Ok(report.overall)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let f = args.functional.build()?;
    let p: Correlation = load(&args.correlation, "correlation")?;
    let value = evaluate(&f, &p)?;
    emit(&format!("{value:.17e}"), None)?;
    if f.variant() == Variant::MaxEntangled {
        eprintln!("value / 2√2 = {:.12}", value / (2.0 * SQRT_2));
    }
    Ok(())
}
