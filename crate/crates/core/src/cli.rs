//! The `lanova` command-line interface.
//!
//! Exit codes: 0 on success, 1 for I/O, parse, numeric or model errors, and 2
//! for usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::NoiseScale;
use crate::error::{LanovaError, Result};
use crate::inference::{power_bernoulli_normal, power_laplace, test_from_estimates};
use crate::io::{logit, read_tensor, write_tensor, TensorFormat};
use crate::nuisance::{
    bernoulli_normal_kurtosis, estimate_lower_order_variances, estimate_nuisance, kurtosis_correction,
    NuisanceEstimates,
};
use crate::report::FitReport;
use crate::sim::{
    bias_study, default_estimators, misspecification_study, rejection_rate_study, risk_grid_study,
    risk_study, special_case_rate_study, test_calibration_study, EstimatorSpec, InteractionDist, RiskGrid,
    RiskTable, SimConfig,
};
use crate::solver::{fit_with_options, SolverOptions};
use crate::tensor::DenseTensor;

#[derive(Debug, Parser)]
#[command(name = "lanova", version, about = "Lasso ANOVA decompositions with empirical Bayes penalties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the nuisance parameter estimates.
    Estimate(EstimateArgs),
    /// Fit the penalized decomposition and report sparsity.
    Fit(FitArgs),
    /// Run the heavy-tail test.
    Test(TestArgs),
    /// Tabulate asymptotic power of the heavy-tail test.
    Power(PowerArgs),
    /// Run a Monte Carlo study described by a key-value config file.
    Simulate(SimulateArgs),
    /// Compare estimator risks over the exponential-power or Bernoulli-normal grid.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Tensor,
}

impl From<FormatArg> for TensorFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TensorFormat::Csv,
            FormatArg::Tensor => TensorFormat::Tensor,
        }
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input data file.
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Apply ln(x / (1 - x)) to every entry before estimation.
    #[arg(long)]
    logit: bool,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write results here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Emit JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CorrectionArgs {
    /// Assumed excess kurtosis of the interactions.
    #[arg(long, conflicts_with = "pi_c")]
    kappa: Option<f64>,
    /// Assumed share of nonzero Bernoulli-normal interactions.
    #[arg(long = "pi-c")]
    pi_c: Option<f64>,
}

impl CorrectionArgs {
    fn apply(&self, est: NuisanceEstimates) -> Result<NuisanceEstimates> {
        let kappa = match (self.kappa, self.pi_c) {
            (Some(k), _) => k,
            (None, Some(pi)) => bernoulli_normal_kurtosis(pi)?,
            (None, None) => return Ok(est),
        };
        kurtosis_correction(&est, kappa)
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    correction: CorrectionArgs,
    /// Also estimate row and column effect variances (matrices only).
    #[arg(long)]
    lower_order: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    correction: CorrectionArgs,
    /// Penalize row and column effects too (matrices only).
    #[arg(long)]
    penalize_main: bool,
    /// Include the estimated interactions in the report.
    #[arg(long)]
    dump_c: bool,
    /// Write every fitted effect block into this directory.
    #[arg(long)]
    blocks_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_sweeps: usize,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum PowerDist {
    Laplace,
    BernoulliNormal,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[arg(long, value_enum, default_value = "laplace")]
    dist: PowerDist,
    /// Variance ratios, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
    phi2: Vec<f64>,
    /// Total cell counts, comma separated.
    #[arg(long = "p", value_delimiter = ',', default_value = "100,1000")]
    cells: Vec<usize>,
    /// Nonzero probabilities for the Bernoulli-normal case, comma separated.
    #[arg(long = "pi-c", value_delimiter = ',', default_value = "0.5")]
    pi_c: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Study config in `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config replicate count.
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GridArg {
    ExpPower,
    BernoulliNormal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseArg {
    /// Median absolute deviation of the residuals.
    Mad,
    /// The true noise standard deviation.
    Known,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_enum, default_value = "bernoulli-normal")]
    grid: GridArg,
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long = "p", default_value_t = 25)]
    cols: usize,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    sigma2_z: f64,
    /// Noise scale for the minimax thresholds.
    #[arg(long, value_enum, default_value = "mad")]
    noise_scale: NoiseArg,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    if let Some(n) = std::env::var("LANOVA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Ignored if a pool already exists (e.g. when called repeatedly in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match dispatch(cli.command) {
        Ok(Emit { text, path }) => match path {
            Some(p) => match fs::write(&p, text) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
                    1
                }
            },
            None => {
                let _ = out.write_all(text.as_bytes());
                0
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

struct Emit {
    text: String,
    path: Option<PathBuf>,
}

fn emit_json<T: Serialize>(value: &T, output: &OutputArgs) -> Result<Emit> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LanovaError::InvalidArgument(e.to_string()))?;
    text.push('\n');
    Ok(Emit {
        text,
        path: output.output.clone(),
    })
}

fn emit_text(text: String, output: &OutputArgs) -> Result<Emit> {
    Ok(Emit {
        text,
        path: output.output.clone(),
    })
}

fn load(input: &InputArgs) -> Result<DenseTensor> {
    let y = read_tensor(&input.input, input.format.map(Into::into))?;
    if input.logit {
        logit(&y)
    } else {
        Ok(y)
    }
}

fn dispatch(command: Command) -> Result<Emit> {
    match command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Test(a) => cmd_test(a),
        Command::Power(a) => cmd_power(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn nuisance_lines(s: &mut String, nu: &NuisanceEstimates) {
    let _ = writeln!(s, "sigma4_c_raw: {}", nu.sigma4_c_raw);
    let _ = writeln!(s, "sigma2_c: {}", nu.sigma2_c);
    let _ = writeln!(s, "sigma2_z: {}", nu.sigma2_z);
    let _ = writeln!(s, "lambda_c: {}", nu.lambda_c);
    let _ = writeln!(s, "clipped_c: {}", nu.clipped_c);
    let _ = writeln!(s, "clipped_z: {}", nu.clipped_z);
}

fn cmd_estimate(a: EstimateArgs) -> Result<Emit> {
    let y = load(&a.input)?;
    let nu = a.correction.apply(estimate_nuisance(&y)?)?;
    let lo = if a.lower_order {
        Some(estimate_lower_order_variances(&y)?)
    } else {
        None
    };
    if a.output.json {
        #[derive(Serialize)]
        struct Out<'a> {
            dims: &'a [usize],
            nuisance: NuisanceEstimates,
            lower_order: Option<crate::nuisance::LowerOrderVariances>,
        }
        return emit_json(&Out { dims: y.dims(), nuisance: nu, lower_order: lo }, &a.output);
    }
    let mut s = String::new();
    nuisance_lines(&mut s, &nu);
    if let Some(lo) = lo {
        let _ = writeln!(s, "sigma2_a: {}", lo.sigma2_a);
        let _ = writeln!(s, "sigma2_b: {}", lo.sigma2_b);
        let _ = writeln!(s, "lambda_a: {}", lo.lambda_a);
        let _ = writeln!(s, "lambda_b: {}", lo.lambda_b);
    }
    emit_text(s, &a.output)
}

fn cmd_fit(a: FitArgs) -> Result<Emit> {
    let y = load(&a.input)?;
    let raw = estimate_nuisance(&y)?;
    let test = test_from_estimates(&raw, y.len(), a.alpha).ok();
    let nu = a.correction.apply(raw)?;
    let lo = if a.penalize_main {
        Some(estimate_lower_order_variances(&y)?)
    } else {
        None
    };
    let opts = SolverOptions {
        tol: a.tol,
        max_sweeps: a.max_sweeps,
        step_tol: None,
        penalize_lower_order: a.penalize_main,
    };
    let fit = fit_with_options(&y, &nu, lo.as_ref(), &opts)?;

    if let Some(dir) = &a.blocks_dir {
        fs::create_dir_all(dir)?;
        for (modes, block) in fit.decomposition.blocks() {
            let name = if modes.is_empty() {
                "block_mean.tensor".to_string()
            } else {
                let labels: Vec<String> = modes.labels().iter().map(|m| m.to_string()).collect();
                format!("block_{}.tensor", labels.join("_"))
            };
            // The grand mean is written as a one-entry tensor.
            let block = if block.order() == 0 {
                DenseTensor::new(vec![1], block.values().to_vec())?
            } else {
                block.clone()
            };
            write_tensor(&Path::new(dir).join(name), &block)?;
        }
    }

    let report = FitReport::new(&fit, nu, lo, test, a.dump_c);
    if a.output.json {
        return emit_json(&report, &a.output);
    }
    let mut s = String::new();
    nuisance_lines(&mut s, &nu);
    if let Some(t) = &report.test {
        let _ = writeln!(s, "test_statistic: {}", t.statistic);
        let _ = writeln!(s, "test_p_value: {}", t.p_value);
    }
    let _ = writeln!(s, "route: {:?}", report.solver.route);
    let _ = writeln!(s, "iterations: {}", report.solver.iterations);
    let _ = writeln!(s, "converged: {}", report.solver.converged);
    for b in &report.blocks {
        let _ = writeln!(
            s,
            "block {:?}: {}/{} nonzero ({:.2}%)",
            b.modes, b.nonzero, b.size, b.percent_nonzero
        );
    }
    emit_text(s, &a.output)
}

fn cmd_test(a: TestArgs) -> Result<Emit> {
    let y = load(&a.input)?;
    let est = estimate_nuisance(&y)?;
    let t = test_from_estimates(&est, y.len(), a.alpha)?;
    if a.output.json {
        return emit_json(&t, &a.output);
    }
    emit_text(
        format!(
            "statistic: {}\np_value: {}\nreject: {}\nalpha: {}\n",
            t.statistic, t.p_value, t.reject, t.alpha
        ),
        &a.output,
    )
}

#[derive(Debug, Serialize)]
struct PowerRow {
    dist: PowerDist,
    phi2: f64,
    pi_c: Option<f64>,
    p: usize,
    alpha: f64,
    power: f64,
}

fn cmd_power(a: PowerArgs) -> Result<Emit> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(LanovaError::InvalidArgument(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if let Some(bad) = a.phi2.iter().find(|&&v| !(v >= 0.0)) {
        return Err(LanovaError::InvalidArgument(format!("phi2 must be nonnegative, got {bad}")));
    }
    let mut rows = Vec::new();
    for &cells in &a.cells {
        for &phi2 in &a.phi2 {
            match a.dist {
                PowerDist::Laplace => rows.push(PowerRow {
                    dist: a.dist,
                    phi2,
                    pi_c: None,
                    p: cells,
                    alpha: a.alpha,
                    power: power_laplace(phi2, cells, a.alpha),
                }),
                PowerDist::BernoulliNormal => {
                    for &pi in &a.pi_c {
                        if !(0.0..=1.0).contains(&pi) {
                            return Err(LanovaError::InvalidArgument(format!("pi_c must lie in [0, 1], got {pi}")));
                        }
                        rows.push(PowerRow {
                            dist: a.dist,
                            phi2,
                            pi_c: Some(pi),
                            p: cells,
                            alpha: a.alpha,
                            power: power_bernoulli_normal(phi2, pi, cells, a.alpha),
                        });
                    }
                }
            }
        }
    }
    if a.output.json {
        return emit_json(&rows, &a.output);
    }
    let mut s = String::from("dist,phi2,pi_c,p,alpha,power\n");
    for r in &rows {
        let dist = match r.dist {
            PowerDist::Laplace => "laplace",
            PowerDist::BernoulliNormal => "bernoulli_normal",
        };
        let pi = r.pi_c.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{dist},{},{pi},{},{},{}", r.phi2, r.p, r.alpha, r.power);
    }
    emit_text(s, &a.output)
}

/// Study named in a simulation config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    SpecialCase,
    Calibration,
    Power,
    Bias,
    Misspecification,
    Risk,
}

/// Parses `key = value` lines (`#` starts a comment) into a study and config.
///
/// Recognized keys: `study`, `dims`, `dist` (`laplace`, `normal`, `exp_power`,
/// `bernoulli_normal`), `sigma2_c`, `q_c`, `pi_c`, `tau2_c`, `sigma2_z`, `reps`,
/// `seed`, `alpha`.
pub fn parse_study_config(text: &str) -> Result<(StudyKind, SimConfig)> {
    let mut kv = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| LanovaError::Parse {
            line: i + 1,
            message: format!("expected key = value, got {line:?}"),
        })?;
        kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let known = [
        "study", "dims", "dist", "sigma2_c", "q_c", "pi_c", "tau2_c", "sigma2_z", "reps", "seed", "alpha",
    ];
    if let Some((k, (line, _))) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(LanovaError::Parse {
            line: *line,
            message: format!("unknown key {k:?}"),
        });
    }
    let get = |k: &str| kv.get(k).map(|(l, v)| (*l, v.as_str()));
    fn num<T: std::str::FromStr>(entry: Option<(usize, &str)>, default: T, key: &str) -> Result<T> {
        match entry {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| LanovaError::Parse {
                line,
                message: format!("bad value for {key}: {v:?}"),
            }),
        }
    }

    let study = match get("study").map(|e| e.1) {
        Some("special_case") => StudyKind::SpecialCase,
        Some("calibration") => StudyKind::Calibration,
        Some("power") => StudyKind::Power,
        Some("bias") => StudyKind::Bias,
        Some("misspecification") => StudyKind::Misspecification,
        Some("risk") => StudyKind::Risk,
        other => {
            return Err(LanovaError::Parse {
                line: get("study").map_or(1, |e| e.0),
                message: format!("unknown or missing study {other:?}"),
            })
        }
    };
    let dims = match get("dims") {
        None => vec![25, 25],
        Some((line, v)) => v
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| LanovaError::Parse {
                line,
                message: format!("bad dims {v:?}"),
            })?,
    };
    let sigma2_c = num(get("sigma2_c"), 1.0, "sigma2_c")?;
    let dist = match get("dist").map(|e| e.1).unwrap_or("laplace") {
        "laplace" => InteractionDist::Laplace { sigma2_c },
        "normal" => InteractionDist::Normal { sigma2_c },
        "exp_power" => InteractionDist::ExpPower {
            sigma2_c,
            q_c: num(get("q_c"), 1.0, "q_c")?,
        },
        "bernoulli_normal" => InteractionDist::BernoulliNormal {
            pi_c: num(get("pi_c"), 0.5, "pi_c")?,
            tau2_c: num(get("tau2_c"), 1.0, "tau2_c")?,
        },
        other => {
            return Err(LanovaError::Parse {
                line: get("dist").map_or(1, |e| e.0),
                message: format!("unknown dist {other:?}"),
            })
        }
    };
    let default_reps = if study == StudyKind::Risk { 500 } else { 10_000 };
    let mut cfg = SimConfig::new(&dims, dist, num(get("reps"), default_reps, "reps")?, num(get("seed"), 1, "seed")?);
    cfg.sigma2_z = num(get("sigma2_z"), 1.0, "sigma2_z")?;
    cfg.alpha = num(get("alpha"), 0.05, "alpha")?;
    if study == StudyKind::Risk {
        cfg.estimators = default_estimators();
    }
    cfg.validate()?;
    Ok((study, cfg))
}

fn cmd_simulate(a: SimulateArgs) -> Result<Emit> {
    let text = fs::read_to_string(&a.config)?;
    let (study, mut cfg) = parse_study_config(&text)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = a.reps {
        cfg.n_reps = reps;
    }
    let value = match study {
        StudyKind::SpecialCase => serde_json::to_value(special_case_rate_study(&cfg)?),
        StudyKind::Calibration => serde_json::to_value(test_calibration_study(&cfg)?),
        StudyKind::Power => serde_json::to_value(rejection_rate_study(&cfg)?),
        StudyKind::Bias => {
            #[derive(Serialize)]
            struct Bias {
                estimate: crate::sim::MeanEstimate,
                expected: f64,
            }
            let est = bias_study(&cfg)?;
            let expected = match cfg.dist {
                InteractionDist::Laplace { sigma2_c } => {
                    sigma2_c * sigma2_c + crate::nuisance::bias_sigma4(&cfg.dims, sigma2_c, cfg.sigma2_z)
                }
                _ => f64::NAN,
            };
            serde_json::to_value(Bias { estimate: est, expected })
        }
        StudyKind::Misspecification => {
            let mut s = misspecification_study(&cfg)?;
            s.ratios.clear();
            serde_json::to_value(s)
        }
        StudyKind::Risk => serde_json::to_value(risk_study(&cfg)?),
    }
    .map_err(|e| LanovaError::InvalidArgument(e.to_string()))?;

    #[derive(Serialize)]
    struct Out {
        config: SimConfig,
        result: serde_json::Value,
    }
    let out = Out { config: cfg, result: value };
    if a.output.json {
        return emit_json(&out, &a.output);
    }
    let mut s = String::new();
    flatten_json("", &out.result, &mut s);
    emit_text(s, &a.output)
}

fn flatten_json(prefix: &str, v: &serde_json::Value, s: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, v, s);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_json(&format!("{prefix}[{i}]"), v, s);
            }
        }
        other => {
            let _ = writeln!(s, "{prefix}: {other}");
        }
    }
}

fn risk_csv(tables: &[RiskTable]) -> String {
    let mut s = String::from("dist,scale,shape,estimator,mse,se,log_relative_risk,paired_diff_se\n");
    for t in tables {
        let (dist, scale, shape) = match t.dist {
            InteractionDist::ExpPower { sigma2_c, q_c } => ("exp_power", sigma2_c, q_c),
            InteractionDist::BernoulliNormal { pi_c, tau2_c } => ("bernoulli_normal", tau2_c, pi_c),
            InteractionDist::Laplace { sigma2_c } => ("laplace", sigma2_c, 1.0),
            InteractionDist::Normal { sigma2_c } => ("normal", sigma2_c, 2.0),
        };
        for r in &t.rows {
            let _ = writeln!(
                s,
                "{dist},{scale},{shape},{},{},{},{},{}",
                r.estimator, r.mse, r.se, r.log_relative_risk, r.paired_diff_se
            );
        }
    }
    s
}

fn cmd_compare(a: CompareArgs) -> Result<Emit> {
    let grid = match a.grid {
        GridArg::ExpPower => RiskGrid::ExpPower,
        GridArg::BernoulliNormal => RiskGrid::BernoulliNormal,
    };
    let mut base = SimConfig::new(&[a.n, a.cols], InteractionDist::Laplace { sigma2_c: 1.0 }, a.reps, a.seed);
    base.sigma2_z = a.sigma2_z;
    base.estimators = default_estimators();
    if let NoiseArg::Known = a.noise_scale {
        let sigma = a.sigma2_z.sqrt();
        for e in &mut base.estimators {
            if let EstimatorSpec::Baseline(b) = e {
                b.noise_scale = NoiseScale::Known(sigma);
            }
        }
    }
    let tables = risk_grid_study(&base, grid)?;
    if a.output.json {
        return emit_json(&tables, &a.output);
    }
    emit_text(risk_csv(&tables), &a.output)
}
