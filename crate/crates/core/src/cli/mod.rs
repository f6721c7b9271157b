//! Command-line front end. `run` does all the work and returns the exit
//! code with the text for stdout and stderr, so tests can drive it in-process.

pub mod envelope;
pub mod verify;

pub use envelope::{Check, CheckStatus, ResultEnvelope, TOOL_VERSION};
pub use verify::{run_suite, Suite};

use crate::closed::{CatStateSpec, GeneratorKind, StateFamily};
use crate::error::Error;
use crate::measures::{
    branch_dist_size, branch_dist_size_real, distillation_size, marquardt_size, mode_loss_size, rqfi_size,
    wigner_empirical_size, GeneratorFamily, MarquardtCheck, MeasureResult, RqfiOptions,
};
use crate::phase_space::{extract_features, wigner_grid, AxisSpec, FixedMode, ModeAxes, SliceSpec, WignerGrid};
use crate::simulate::{simulate_branch_collapse, simulate_distillation, simulate_mode_loss, CollapseProblem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_SIZING: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "catsize", version, about = "Cat-size measures for coherent-state superpositions")]
struct Cli {
    /// Upper bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one cat-size measure.
    Measure {
        #[arg(value_enum)]
        kind: MeasureArg,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated generator kinds: bounded-local, quadrature, number, spin-sandwich.
        #[arg(long, value_delimiter = ',', default_value = "bounded-local")]
        family: Vec<String>,
        /// Quadrature phases over half a turn from arg(alpha), for the rqfi family.
        #[arg(long, default_value_t = 16)]
        phases: usize,
        /// Fock cutoff per mode for the rqfi evaluation.
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Monte Carlo run of a measurement protocol.
    Simulate {
        #[arg(value_enum)]
        kind: SimulateArg,
        #[arg(long, default_value_t = 1)]
        modes: usize,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        alpha: Complex64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value = "cat-vs-branch")]
        problem: ProblemArg,
    },
    /// Sample the Wigner function on a grid.
    Wigner {
        #[command(flatten)]
        state: StateArgs,
        /// Fixed displacement of one mode, `gammaK=RE[,IM]` (1-based K). Repeatable.
        #[arg(long, allow_hyphen_values = true)]
        slice: Vec<String>,
        /// Axis for every varying coordinate, `min:max:steps`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_axis, default_value = "-4:4:161")]
        grid: AxisSpec,
        /// Separate imaginary axis for a single varying mode.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_axis)]
        grid_im: Option<AxisSpec>,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Add peaks, lobe separation and fringe wavelength to the envelope.
        #[arg(long)]
        features: bool,
    },
    /// Run the cross-validation battery.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct StateArgs {
    #[arg(long, value_enum, default_value = "omega")]
    state: StateArg,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    alpha: Complex64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    BranchDist,
    BranchDistReal,
    Rqfi,
    Marquardt,
    Distill,
    ModeLoss,
    WignerEmpirical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimulateArg {
    Distill,
    ModeLoss,
    Collapse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemArg {
    BranchVsBranch,
    CatVsMixed,
    CatVsBranch,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StateArg {
    Omega,
    OmegaPrime,
    Hcs,
    Hcs2,
    EvenCat,
    OddCat,
    ProductCoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

/// `RE` or `RE,IM`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| format!("'{t}' is not a number: {e}"))
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("'{t}' is not finite")) })
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected RE or RE,IM, got '{s}'")),
    }
}

/// `min:max:steps`.
pub fn parse_axis(s: &str) -> Result<AxisSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected min:max:steps, got '{s}'"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("bad min '{lo}': {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("bad max '{hi}': {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("bad steps '{n}': {e}"))?;
    AxisSpec::new(lo, hi, n).map_err(|e| e.to_string())
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Sizing { .. } | Error::Headroom { .. } | Error::Truncation { .. } => EXIT_SIZING,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_DOMAIN,
    }
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(code: i32, message: String) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: message,
        }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome::error(code, text)
            };
        }
    };
    let command = std::iter::once("catsize".to_string())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect::<Vec<_>>()
        .join(" ");
    let start = Instant::now();
    let result = match cli.threads {
        Some(0) => return Outcome::error(EXIT_USAGE, "error: --threads must be at least 1\n".into()),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, command)),
            Err(e) => return Outcome::error(EXIT_USAGE, format!("error: thread pool: {e}\n")),
        },
        None => dispatch(cli.command, command),
    };
    match result {
        Ok(mut env) => {
            env.timing_ms = start.elapsed().as_millis() as u64;
            let code = if env.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED };
            let failed: Vec<&str> = env
                .checks
                .iter()
                .filter(|c| c.status == CheckStatus::Fail)
                .map(|c| c.name.as_str())
                .collect();
            Outcome {
                code,
                stdout: env.to_json() + "\n",
                stderr: if failed.is_empty() {
                    String::new()
                } else {
                    format!("failed checks: {}\n", failed.join(", "))
                },
            }
        }
        Err(Failure::Usage(msg)) => Outcome::error(EXIT_USAGE, format!("error: {msg}\n")),
        Err(Failure::Lib(e)) => Outcome::error(exit_code(&e), format!("error: {e}\n")),
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Inputs = BTreeMap<String, Value>;

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn build_state(args: &StateArgs, inputs: &mut Inputs) -> Result<CatStateSpec, Failure> {
    let (family, default_modes) = match args.state {
        StateArg::Omega => (StateFamily::Omega, 1),
        StateArg::OmegaPrime => (StateFamily::OmegaPrime, 1),
        StateArg::Hcs => (StateFamily::Hcs, 1),
        StateArg::Hcs2 => (StateFamily::Hcs, 2),
        StateArg::EvenCat => (StateFamily::EvenCat, 1),
        StateArg::OddCat => (StateFamily::OddCat, 1),
        StateArg::ProductCoherent => (StateFamily::ProductCoherent, 1),
    };
    let modes = args.modes.unwrap_or(default_modes);
    if matches!(args.state, StateArg::Hcs2) && modes != 2 {
        return Err(Failure::Usage("hcs2 has exactly two modes".into()));
    }
    if modes == 0 {
        return Err(Failure::Usage("--modes must be at least 1".into()));
    }
    inputs.insert("state".into(), json!(family.name()));
    inputs.insert("modes".into(), json!(modes));
    inputs.insert("alpha".into(), complex_json(args.alpha));
    Ok(CatStateSpec::new(family, modes, args.alpha)?)
}

fn require(v: Option<f64>, flag: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("{flag} is required for this command")))
}

fn dispatch(cmd: Command, command: String) -> Result<ResultEnvelope, Failure> {
    let mut inputs = Inputs::new();
    match cmd {
        Command::Measure {
            kind,
            state,
            delta,
            lambda,
            family,
            phases,
            cutoff,
        } => {
            let spec = build_state(&state, &mut inputs)?;
            let (result, checks) = measure(kind, &spec, delta, lambda, &family, phases, cutoff, &mut inputs)?;
            Ok(ResultEnvelope::new(command, inputs, json!(result), checks))
        }
        Command::Simulate {
            kind,
            modes,
            alpha,
            trials,
            seed,
            lambda,
            problem,
        } => {
            if modes == 0 {
                return Err(Failure::Usage("--modes must be at least 1".into()));
            }
            inputs.insert("modes".into(), json!(modes));
            inputs.insert("alpha".into(), complex_json(alpha));
            inputs.insert("trials".into(), json!(trials));
            inputs.insert("seed".into(), json!(seed));
            let (results, checks) = simulate(kind, modes, alpha, trials, seed, lambda, problem, &mut inputs)?;
            Ok(ResultEnvelope::new(command, inputs, results, checks))
        }
        Command::Wigner {
            state,
            slice,
            grid,
            grid_im,
            out,
            format,
            features,
        } => {
            let spec = build_state(&state, &mut inputs)?;
            let slice_spec = build_slice(&spec, &slice, grid, grid_im)?;
            inputs.insert("slice".into(), json!(slice_spec));
            inputs.insert("format".into(), json!(if format == FormatArg::Csv { "csv" } else { "json" }));
            inputs.insert("features".into(), json!(features));
            let g = wigner_grid(&spec, slice_spec)?;
            g.check_invariants()?;
            let mut results = serde_json::Map::new();
            results.insert("convention".into(), json!(g.convention));
            results.insert("axes".into(), json!(g.slice_spec.axis_names()));
            results.insert("shape".into(), json!(g.slice_spec.shape()));
            results.insert("points".into(), json!(g.values.len()));
            let (lo, hi) = g
                .values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
            results.insert("min_value".into(), json!(lo));
            results.insert("max_value".into(), json!(hi));
            if let Some(path) = &out {
                inputs.insert("out".into(), json!(path.to_string_lossy()));
                write_grid(&g, path, format)?;
                results.insert("file".into(), json!(path.to_string_lossy()));
            }
            if features {
                results.insert("features".into(), json!(extract_features(&g)?));
            }
            Ok(ResultEnvelope::new(command, inputs, Value::Object(results), vec![]))
        }
        Command::Verify { suite, seed } => {
            let suite = match suite {
                SuiteArg::Fast => Suite::Fast,
                SuiteArg::Full => Suite::Full,
            };
            inputs.insert("suite".into(), json!(if suite == Suite::Fast { "fast" } else { "full" }));
            inputs.insert("seed".into(), json!(seed));
            let checks = run_suite(suite, seed);
            let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
            let results = json!({
                "passed": count(CheckStatus::Pass),
                "failed": count(CheckStatus::Fail),
                "skipped": count(CheckStatus::Skipped),
            });
            Ok(ResultEnvelope::new(command, inputs, results, checks))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn measure(
    kind: MeasureArg,
    spec: &CatStateSpec,
    delta: Option<f64>,
    lambda: Option<f64>,
    family: &[String],
    phases: usize,
    cutoff: Option<usize>,
    inputs: &mut Inputs,
) -> Result<(MeasureResult, Vec<Check>), Failure> {
    let mut checks = Vec::new();
    let r = match kind {
        MeasureArg::BranchDist => {
            let d = require(delta, "--delta")?;
            inputs.insert("delta".into(), json!(d));
            let r = branch_dist_size(spec, d)?;
            let ok = r.diagnostics.get("oracle_confirms_minimality") == Some(&json!(true));
            checks.push(Check::flag(
                "oracle_confirms_n_eff",
                ok,
                json!({
                    "success_at_n_eff": r.diagnostics["oracle_success_at_n_eff"],
                    "success_below_n_eff": r.diagnostics["oracle_success_below_n_eff"],
                }),
                json!({ "threshold": 1.0 - d }),
                None,
            ));
            r
        }
        MeasureArg::BranchDistReal => {
            let d = require(delta, "--delta")?;
            inputs.insert("delta".into(), json!(d));
            branch_dist_size_real(spec, d)?
        }
        MeasureArg::Rqfi => {
            let kinds = family
                .iter()
                .map(|s| GeneratorKind::parse(s).ok_or_else(|| Failure::Usage(format!("unknown generator kind '{s}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            if phases == 0 {
                return Err(Failure::Usage("--phases must be at least 1".into()));
            }
            let fam = GeneratorFamily::new(&kinds).with_phases(phases);
            inputs.insert("family".into(), json!(fam.kinds));
            inputs.insert("phases".into(), json!(phases));
            if let Some(c) = cutoff {
                inputs.insert("cutoff".into(), json!(c));
            }
            let opts = RqfiOptions {
                cutoff,
                ..Default::default()
            };
            let r = rqfi_size(spec, &fam, &opts)?;
            if let Some(d) = r.diagnostic_f64("oracle_abs_diff") {
                checks.push(Check::close("oracle_numerator", d, 0.0, 1e-9));
            } else {
                checks.push(Check::skipped("oracle_numerator", "joint space above the oracle budget"));
            }
            r
        }
        MeasureArg::Marquardt => {
            let r = marquardt_size(spec, Some(MarquardtCheck::default()))?;
            match r.diagnostic_f64("pmf_max_abs_diff") {
                Some(d) => checks.push(Check::close("sector_pmf_matches_poisson", d, 0.0, 1e-10)),
                None => checks.push(Check::skipped("sector_pmf_matches_poisson", "joint space too large")),
            }
            r
        }
        MeasureArg::Distill => distillation_size(spec)?,
        MeasureArg::ModeLoss => {
            let l = require(lambda, "--lambda")?;
            inputs.insert("lambda".into(), json!(l));
            mode_loss_size(spec, l)?
        }
        MeasureArg::WignerEmpirical => wigner_empirical_size(spec)?,
    };
    Ok((r, checks))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    kind: SimulateArg,
    modes: usize,
    alpha: Complex64,
    trials: u64,
    seed: u64,
    lambda: Option<f64>,
    problem: ProblemArg,
    inputs: &mut Inputs,
) -> Result<(Value, Vec<Check>), Failure> {
    let mut checks = Vec::new();
    let results = match kind {
        SimulateArg::Distill => {
            let run = simulate_distillation(modes, alpha, trials, seed)?;
            let expected = crate::closed::distill_expected_n(modes, alpha);
            checks.push(Check::close("mean_within_3_std_error", run.n.mean, expected, 3.0 * run.n.std_error));
            checks.push(Check::close(
                "trajectory_norm",
                run.max_norm_deviation,
                0.0,
                crate::simulate::NORM_TOLERANCE,
            ));
            json!(run)
        }
        SimulateArg::ModeLoss => {
            let l = require(lambda, "--lambda")?;
            inputs.insert("lambda".into(), json!(l));
            let run = simulate_mode_loss(modes, alpha, l, trials, seed)?;
            let exact = crate::closed::mode_loss_offdiag_exact(modes, l, alpha)?;
            let ghz = crate::closed::ghz_offdiag(modes, l)?;
            checks.push(Check::close(
                "omega_mean_within_3_std_error",
                run.omega.mean,
                exact,
                3.0 * run.omega.std_error,
            ));
            checks.push(Check::close(
                "ghz_mean_within_3_std_error",
                run.ghz.mean,
                ghz,
                3.0 * run.ghz.std_error,
            ));
            json!(run)
        }
        SimulateArg::Collapse => {
            let p = match problem {
                ProblemArg::BranchVsBranch => CollapseProblem::BranchVsBranch,
                ProblemArg::CatVsMixed => CollapseProblem::CatVsMixed,
                ProblemArg::CatVsBranch => CollapseProblem::CatVsBranch,
            };
            inputs.insert("problem".into(), json!(p));
            let run = simulate_branch_collapse(alpha, trials, seed, p)?;
            checks.push(Check::close(
                "reported_within_3_std_error",
                run.reported.mean,
                run.exact_probability,
                3.0 * run.reported.std_error,
            ));
            json!(run)
        }
    };
    Ok((results, checks))
}

fn build_slice(
    spec: &CatStateSpec,
    fixed_args: &[String],
    grid: AxisSpec,
    grid_im: Option<AxisSpec>,
) -> Result<SliceSpec, Failure> {
    let n = spec.modes;
    let mut fixed: Vec<FixedMode> = Vec::new();
    for s in fixed_args {
        let (key, val) = s
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("slice '{s}' is not gammaK=VALUE")))?;
        let k: usize = key
            .trim()
            .strip_prefix("gamma")
            .and_then(|t| t.parse().ok())
            .filter(|&k| k >= 1 && k <= n)
            .ok_or_else(|| Failure::Usage(format!("slice key '{key}' must be gamma1..gamma{n}")))?;
        if fixed.iter().any(|f| f.mode == k - 1) {
            return Err(Failure::Usage(format!("gamma{k} fixed twice")));
        }
        let value = parse_complex(val).map_err(Failure::Usage)?;
        fixed.push(FixedMode { mode: k - 1, value });
    }
    let free: Vec<usize> = (0..n).filter(|m| !fixed.iter().any(|f| f.mode == *m)).collect();
    let varying: Vec<ModeAxes> = match free.as_slice() {
        [] => return Err(Failure::Usage("every mode is fixed; nothing to sample".into())),
        [m] => vec![ModeAxes {
            mode: *m,
            re: grid,
            im: grid_im.unwrap_or(grid),
        }],
        many => {
            if grid_im.is_some() {
                return Err(Failure::Usage("--grid-im needs exactly one varying mode".into()));
            }
            many.iter()
                .map(|&m| ModeAxes {
                    mode: m,
                    re: grid,
                    im: AxisSpec::fixed(0.0),
                })
                .collect()
        }
    };
    fixed.sort_by_key(|f| f.mode);
    Ok(SliceSpec::new(n, varying, fixed)?)
}

fn write_grid(g: &WignerGrid, path: &std::path::Path, format: FormatArg) -> Result<(), Failure> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        FormatArg::Csv => g.write_csv(&mut w)?,
        FormatArg::Json => {
            let doc = json!({
                "slice_spec": g.slice_spec,
                "state": g.state,
                "convention": g.convention,
                "axes": g.slice_spec.axis_names(),
                "shape": g.slice_spec.shape(),
                "values": g.values,
            });
            serde_json::to_writer(&mut w, &doc).map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    use std::io::Write;
    w.flush().map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}
