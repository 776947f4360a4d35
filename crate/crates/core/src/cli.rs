//! Command-line front end. [`run`] returns the exit code and captured output
//! so commands can be driven from tests without spawning a process.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dual::{classify_regime, Classification, RegimeTag};
use crate::error::Error;
use crate::oracle::DEFAULT_SEED;
use crate::perturbation::{perturb_solve, perturbation_residual, PerturbOptions, DEFAULT_K_MAX, DEFAULT_TOL};
use crate::problem::ProblemSpec;
use crate::reduction::{solve_general, GeneralProblemSpec};
use crate::report::{
    matrix_rows, perturbation_csv, to_document, ClassifyReport, ConfigFile, PerturbReport, PlotData, PointAnalysis,
    ReduceReport, SolveReport, SweepRow, SweepTable, Timings, CLASSIFY_SCHEMA, PERTURB_SCHEMA, REDUCE_SCHEMA,
    SOLVE_SCHEMA, SWEEP_SCHEMA,
};
use crate::triality::{directional_second_derivative, hessian_eigenvalues, hessian_inertia, unit};
use crate::verify::{verify, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_WRONG_MODE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "doublewell", version, about = "Critical points of the double-well objective via its canonical dual")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the dual cubic and classify every critical point.
    Solve(SolveArgs),
    /// Solve, then report Hessian spectra and saddle curvature probes.
    Classify(ClassifyArgs),
    /// Perturbation sequence for the unforced problem.
    Perturb(PerturbArgs),
    /// Reduce the operator form (B from --config) and lift the solutions.
    Reduce(ReduceArgs),
    /// Run every independent check; exit 3 on any failure.
    Verify(VerifyArgs),
    /// Tabulate dual roots over a range of force magnitudes.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Doc,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Force vector, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Dimension; with no --f the force is zero.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PerturbFlags {
    /// Perturbation direction, comma separated.
    #[arg(long = "f-o", allow_hyphen_values = true)]
    pub f_o: Option<String>,
    #[arg(long = "k-max", default_value_t = DEFAULT_K_MAX)]
    pub k_max: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Route f = 0 through the perturbation solver instead of failing.
    #[arg(long)]
    pub perturb: bool,
    #[command(flatten)]
    pub perturb_flags: PerturbFlags,
    #[arg(long, value_enum, default_value_t = Format::Doc)]
    pub format: Format,
    #[arg(long = "emit-plot-data")]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long = "emit-plot-data")]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub perturb_flags: PerturbFlags,
    #[arg(long, value_enum, default_value_t = Format::Doc)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Check this σ as if the solver had returned it.
    #[arg(long = "inject-sigma", allow_hyphen_values = true)]
    pub inject_sigma: Option<f64>,
    #[command(flatten)]
    pub perturb_flags: PerturbFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Force direction, comma separated; normalized internally.
    #[arg(long = "f-dir", allow_hyphen_values = true)]
    pub f_dir: String,
    #[arg(long = "f-min")]
    pub f_min: f64,
    #[arg(long = "f-max")]
    pub f_max: f64,
    /// Number of rows, evenly spaced in |f| including both ends.
    #[arg(long)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Doc)]
    pub format: Format,
}

/// Exit code and captured streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroForce | Error::NonzeroForce => EXIT_WRONG_MODE,
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::invalid(format!("serialization: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(cli.command) {
        Ok((code, stdout)) => Outcome { code, stdout, stderr: String::new() },
        Err(e) => Outcome { code: e.code, stdout: String::new(), stderr: format!("error: {}\n", e.message) },
    }
}

fn dispatch(command: Command) -> CliResult<(i32, String)> {
    match command {
        Command::Solve(a) => cmd_solve(&a).map(|s| (EXIT_OK, s)),
        Command::Classify(a) => cmd_classify(&a).map(|s| (EXIT_OK, s)),
        Command::Perturb(a) => cmd_perturb(&a).map(|s| (EXIT_OK, s)),
        Command::Reduce(a) => cmd_reduce(&a).map(|s| (EXIT_OK, s)),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a).map(|s| (EXIT_OK, s)),
    }
}

pub fn parse_vector(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"))).collect()
}

fn load_config(path: &Option<PathBuf>) -> CliResult<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?;
            ConfigFile::parse(&text).map_err(CliError::invalid)
        }
    }
}

struct Resolved {
    alpha: f64,
    lambda: f64,
    f: Vec<f64>,
    config: ConfigFile,
}

fn resolve(args: &ProblemArgs) -> CliResult<Resolved> {
    let config = load_config(&args.config)?;
    let alpha = args.alpha.or(config.alpha).ok_or_else(|| CliError::invalid("missing --alpha"))?;
    let lambda = args.lambda.or(config.lambda).ok_or_else(|| CliError::invalid("missing --lambda"))?;
    let f = match &args.f {
        Some(text) => Some(parse_vector(text).map_err(CliError::invalid)?),
        None => config.f.clone(),
    };
    let n = args.n.or(config.n);
    let f = match (f, n) {
        (Some(f), Some(n)) if f.len() != n => {
            return Err(CliError::invalid(format!("--f has {} entries but --n is {n}", f.len())))
        }
        (Some(f), _) => f,
        (None, Some(n)) => vec![0.0; n],
        (None, None) => return Err(CliError::invalid("missing --f (or --n for the unforced problem)")),
    };
    Ok(Resolved { alpha, lambda, f, config })
}

fn resolve_spec(args: &ProblemArgs) -> CliResult<ProblemSpec> {
    let r = resolve(args)?;
    if r.config.b.is_some() || r.config.b_dims.is_some() {
        return Err(CliError::invalid("config carries an operator B; use the reduce command"));
    }
    Ok(ProblemSpec::new(r.alpha, r.lambda, r.f)?)
}

fn perturb_options(flags: &PerturbFlags) -> CliResult<PerturbOptions> {
    let f_o = flags.f_o.as_deref().map(parse_vector).transpose().map_err(CliError::invalid)?;
    Ok(PerturbOptions { f_o, k_max: flags.k_max, tol: flags.tol })
}

fn elapsed_us(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

pub fn build_solve_report(spec: &ProblemSpec) -> crate::Result<SolveReport> {
    let start = Instant::now();
    let sol = crate::solve(spec)?;
    let duality_gaps = sol
        .points
        .iter()
        .map(|p| spec.dual_value(p.sigma).map(|d| (p.value - d).abs()))
        .collect::<crate::Result<Vec<_>>>()?;
    let saddle_cone = sol.points.iter().find_map(|p| p.saddle_cone.clone());
    Ok(SolveReport {
        schema: SOLVE_SCHEMA.into(),
        spec: spec.clone(),
        regime: sol.dual.regime,
        roots: sol.dual.roots,
        trace: sol.dual.trace,
        critical_points: sol.points,
        saddle_cone,
        duality_gaps,
        timings: Timings { total_us: elapsed_us(start) },
    })
}

fn build_perturb_report(spec: &ProblemSpec, flags: &PerturbFlags) -> CliResult<PerturbReport> {
    let start = Instant::now();
    let trace = perturb_solve(spec, &perturb_options(flags)?)?;
    let residual_max = perturbation_residual(&trace).iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    Ok(PerturbReport {
        schema: PERTURB_SCHEMA.into(),
        spec: spec.clone(),
        trace,
        residual_max,
        timings: Timings { total_us: elapsed_us(start) },
    })
}

fn cmd_solve(args: &SolveArgs) -> CliResult<String> {
    let spec = resolve_spec(&args.problem)?;
    if classify_regime(&spec).tag == RegimeTag::ZeroForce {
        if !args.perturb {
            return Err(CliError {
                code: EXIT_WRONG_MODE,
                message: "f = 0: the dual has no interior root; use `perturb` or pass --perturb".into(),
            });
        }
        let report = build_perturb_report(&spec, &args.perturb_flags)?;
        if let Some(path) = &args.emit_plot_data {
            write_plot(path, &zero_force_plot(&spec, &report.trace.limits.x1)?)?;
        }
        return match args.format {
            Format::Doc => Ok(to_document(&report)?),
            Format::Csv => Ok(perturbation_csv(&report.trace)),
        };
    }
    let report = build_solve_report(&spec)?;
    if let Some(path) = &args.emit_plot_data {
        write_plot(path, &plot_data(&spec, &report)?)?;
    }
    match args.format {
        Format::Doc => Ok(to_document(&report)?),
        Format::Csv => Ok(points_csv(&report)),
    }
}

fn points_csv(report: &SolveReport) -> String {
    use crate::report::fmt_f64;
    let mut out = String::from("index,sigma,multiplicity,value,classification,gradient_norm,x\n");
    for (p, r) in report.critical_points.iter().zip(&report.roots) {
        let x: Vec<String> = p.x.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&format!(
            "{},{},{},{},{:?},{},\"{}\"\n",
            p.root_index,
            fmt_f64(p.sigma),
            r.multiplicity,
            fmt_f64(p.value),
            p.classification,
            fmt_f64(p.gradient_norm),
            x.join(",")
        ));
    }
    out
}

/// A unit vector orthogonal to `u` (which must be a unit vector, `n ≥ 2`).
fn orthogonal_to(u: &[f64]) -> Option<Vec<f64>> {
    let (j, _) = u.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    let mut e: Vec<f64> = u.iter().map(|v| -u[j] * v).collect();
    e[j] += 1.0;
    unit(&e)
}

fn cmd_classify(args: &ClassifyArgs) -> CliResult<String> {
    let spec = resolve_spec(&args.problem)?;
    let solve = build_solve_report(&spec)?;
    let analysis = solve
        .critical_points
        .iter()
        .map(|p| {
            Ok(PointAnalysis {
                root_index: p.root_index,
                hessian_eigenvalues: hessian_eigenvalues(&spec, p),
                inertia: hessian_inertia(&spec, p),
                dual_hessian: spec.dual_hessian(p.sigma)?,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut saddle_probes = Vec::new();
    if let Some(saddle) = solve.critical_points.iter().find(|p| p.classification == Classification::Saddle) {
        let axis = unit(spec.f()).expect("forced instance");
        saddle_probes.push(directional_second_derivative(&spec, saddle, &axis)?);
        if let Some(perp) = orthogonal_to(&axis) {
            saddle_probes.push(directional_second_derivative(&spec, saddle, &perp)?);
        }
    }
    if let Some(path) = &args.emit_plot_data {
        write_plot(path, &plot_data(&spec, &solve)?)?;
    }
    let report = ClassifyReport { schema: CLASSIFY_SCHEMA.into(), solve, analysis, saddle_probes };
    Ok(to_document(&report)?)
}

fn cmd_perturb(args: &PerturbArgs) -> CliResult<String> {
    let spec = resolve_spec(&args.problem)?;
    let report = build_perturb_report(&spec, &args.perturb_flags)?;
    match args.format {
        Format::Doc => Ok(to_document(&report)?),
        Format::Csv => Ok(perturbation_csv(&report.trace)),
    }
}

fn cmd_reduce(args: &ReduceArgs) -> CliResult<String> {
    let start = Instant::now();
    let r = resolve(&args.problem)?;
    let b = r
        .config
        .operator()
        .map_err(CliError::invalid)?
        .ok_or_else(|| CliError::invalid("reduce needs B and B_dims in --config"))?;
    let gspec = GeneralProblemSpec::new(r.alpha, r.lambda, b.clone(), r.f.clone())?;
    let solution = solve_general(&gspec)?;
    let report = ReduceReport {
        schema: REDUCE_SCHEMA.into(),
        alpha: r.alpha,
        lambda: r.lambda,
        b: matrix_rows(&b),
        f: r.f,
        solution,
        timings: Timings { total_us: elapsed_us(start) },
    };
    Ok(to_document(&report)?)
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<(i32, String)> {
    let spec = resolve_spec(&args.problem)?;
    let opts = VerifyOptions {
        seed: args.seed,
        inject_sigma: args.inject_sigma,
        perturb: perturb_options(&args.perturb_flags)?,
    };
    let report = verify(&spec, &opts)?;
    let code = if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok((code, to_document(&report)?))
}

pub fn sweep_table(
    alpha: f64,
    lambda: f64,
    dir: &[f64],
    f_min: f64,
    f_max: f64,
    steps: usize,
) -> crate::Result<SweepTable> {
    if !(f_min.is_finite() && f_max.is_finite() && f_min > 0.0 && f_max > f_min) {
        return Err(Error::InvalidParameter(format!("need 0 < f_min < f_max, got [{f_min}, {f_max}]")));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 steps, got {steps}")));
    }
    let dir = unit(dir).ok_or(Error::ZeroDirection)?;
    let base = ProblemSpec::new(alpha, lambda, dir.clone())?;
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let fnorm = f_min + (f_max - f_min) * i as f64 / (steps - 1) as f64;
        let spec = base.with_force(dir.iter().map(|d| d * fnorm).collect())?;
        let sol = crate::solve(&spec)?;
        let sigma = |k: usize| sol.dual.roots.get(k).map(|r| r.sigma);
        let (sigma2, sigma3) = match sol.dual.regime.tag {
            RegimeTag::ThreeDistinct => (sigma(1), sigma(2)),
            RegimeTag::Degenerate => (sigma(1), sigma(1)),
            _ => (None, None),
        };
        rows.push(SweepRow {
            force_norm: fnorm,
            sigma1: sol.dual.roots[0].sigma,
            sigma2,
            sigma3,
            primal_min_value: sol.points[0].value,
            regime: sol.dual.regime.tag,
        });
    }
    Ok(SweepTable {
        schema: SWEEP_SCHEMA.into(),
        alpha,
        lambda,
        direction: dir,
        threshold_force_norm: base.threshold().sqrt(),
        rows,
    })
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let config = load_config(&args.config)?;
    let alpha = args.alpha.or(config.alpha).ok_or_else(|| CliError::invalid("missing --alpha"))?;
    let lambda = args.lambda.or(config.lambda).ok_or_else(|| CliError::invalid("missing --lambda"))?;
    let dir = parse_vector(&args.f_dir).map_err(CliError::invalid)?;
    let table = sweep_table(alpha, lambda, &dir, args.f_min, args.f_max, args.steps)?;
    match args.format {
        Format::Doc => Ok(to_document(&table)?),
        Format::Csv => Ok(table.to_csv()),
    }
}

const PLOT_SAMPLES: usize = 401;

/// `(σ, Π^d(σ))` over the dual domain and `(t, Π(x_i + t z))` through each
/// critical point along `f` and, for `n ≥ 2`, orthogonal to it.
pub fn plot_data(spec: &ProblemSpec, report: &SolveReport) -> crate::Result<PlotData> {
    let mut plot = PlotData::default();
    let al = spec.alpha_lambda();
    let hi = (2.0 * report.roots[0].sigma).max(al);
    let gap = 1e-3 * al;
    for k in 0..PLOT_SAMPLES {
        let s = -al + (hi + al) * k as f64 / (PLOT_SAMPLES - 1) as f64;
        if s.abs() < gap {
            continue;
        }
        plot.push("dual", s, spec.dual_value(s)?);
    }
    let axis = unit(spec.f()).expect("forced instance");
    let perp = orthogonal_to(&axis);
    for p in &report.critical_points {
        let mut dirs = vec![("along_f", axis.clone())];
        if let Some(perp) = &perp {
            dirs.push(("orthogonal", perp.clone()));
        }
        for (label, z) in dirs {
            let name = format!("point{}_{label}", p.root_index);
            slice(spec, &mut plot, &name, &p.x, &z)?;
        }
    }
    Ok(plot)
}

fn zero_force_plot(spec: &ProblemSpec, x1: &[f64]) -> crate::Result<PlotData> {
    let mut plot = PlotData::default();
    let al = spec.alpha_lambda();
    for k in 0..PLOT_SAMPLES {
        let s = -al + 2.0 * al * k as f64 / (PLOT_SAMPLES - 1) as f64;
        if s.abs() < 1e-3 * al {
            continue;
        }
        plot.push("dual", s, spec.dual_value(s)?);
    }
    let axis = unit(x1).expect("limit lies on the sphere");
    slice(spec, &mut plot, "origin_along_f_o", &vec![0.0; spec.dim()], &axis)?;
    slice(spec, &mut plot, "limit1_along_f_o", x1, &axis)?;
    Ok(plot)
}

fn slice(spec: &ProblemSpec, plot: &mut PlotData, name: &str, x: &[f64], z: &[f64]) -> crate::Result<()> {
    let span = 1.5 * (2.0 * spec.lambda()).sqrt();
    for k in 0..PLOT_SAMPLES {
        let t = -span + 2.0 * span * k as f64 / (PLOT_SAMPLES - 1) as f64;
        let pt: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + t * b).collect();
        plot.push(name, t, spec.primal_value(&pt)?);
    }
    Ok(())
}

fn write_plot(path: &PathBuf, plot: &PlotData) -> CliResult<()> {
    std::fs::write(path, plot.to_csv()).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}
