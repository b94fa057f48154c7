//! Command-line entry point.
//!
//! Exit status: 0 on success (including `--help`), 1 for usage, input and
//! output-path errors, 2 for failures during computation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kshrink::hsic::{hsic_n, permutation_test_gram, PermutationTest, StatisticKind};
use kshrink::kernels::{GramPair, SampleSet};
use kshrink::shrinkage::{fcose_fit, rho_lw, rho_scose, LambdaGrid, DEFAULT_GRID_POINTS};
use kshrink::synthdata::{self, DistributionSpec};
use nalgebra::DMatrix;

use crate::config::{build_kernel, parse_pi_expression, Bandwidth, DistributionKind, ExperimentConfig, ExperimentKind, KernelKind};
use crate::error::{AppError, AppResult};
use crate::table::write_file;
use crate::{io, runners, svg};

#[derive(Parser, Debug)]
#[command(name = "kshrink", version, about = "Shrinkage estimators for kernel cross-covariance operators and HSIC tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic paired sample and write it as delimited text.
    Synth(SynthArgs),
    /// Centered gram matrices of an input sample.
    Gram(InputArgs),
    /// Shrinkage intensities (LW, SCOSE) and the FCOSE fit for an input sample.
    Shrink(ShrinkArgs),
    /// Permutation independence test on an input sample.
    HsicTest(TestArgs),
    /// Quadratic risk of plain and shrunk estimators.
    Risk(ExperimentArgs),
    /// Power of plain and shrunk HSIC tests.
    Power(ExperimentArgs),
    /// Singular value spectra of plain and LW-shrunk operators.
    Spectra(ExperimentArgs),
    /// Accuracy of leading singular functions, plain versus FCOSE.
    Singular(ExperimentArgs),
    /// Plain versus shrunk HSIC over permutations.
    Scatter(ExperimentArgs),
    /// Ratio of observed statistics to null quantiles.
    Ratio(ExperimentArgs),
    /// Monte Carlo check of the oracle shrinkage constants.
    OracleCheck(ExperimentArgs),
}

#[derive(Args, Debug)]
struct DistArgs {
    #[arg(long, value_enum)]
    distribution: DistArg,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    frequency: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Tilt angle in radians; accepts forms like `pi/16` or `3*pi/32`.
    #[arg(long, default_value = "0", value_parser = parse_real)]
    theta: f64,
    #[arg(long, default_value_t = 2.0)]
    center: f64,
    #[arg(long, default_value_t = 0.5)]
    spread: f64,
    #[arg(long, default_value_t = 4)]
    cells: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Permute y to make the pair exactly independent.
    #[arg(long)]
    independent: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum DistArg {
    HollowGaussian,
    Sinusoid,
    FourGaussians,
    Grid2d,
    GaussianNd,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Delimited text, one observation per line, x columns then y columns.
    #[arg(long)]
    input: PathBuf,
    /// Number of leading columns forming x (default: half of the columns).
    #[arg(long)]
    x_cols: Option<usize>,
    #[arg(long, value_enum, default_value = "gaussian")]
    kernel: KernelArg,
    /// Kernel on y (default: same as --kernel).
    #[arg(long, value_enum)]
    kernel_y: Option<KernelArg>,
    /// Bandwidth for gaussian/laplace kernels: a number or `median`.
    #[arg(long, default_value = "median", value_parser = parse_bandwidth)]
    bandwidth: Bandwidth,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Linear,
    Polynomial,
    Gaussian,
    Laplace,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Linear => KernelKind::Linear,
            KernelArg::Polynomial => KernelKind::Polynomial,
            KernelArg::Gaussian => KernelKind::Gaussian,
            KernelArg::Laplace => KernelKind::Laplace,
        }
    }
}

#[derive(Args, Debug)]
struct ShrinkArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    lambda_grid_points: usize,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Statistic: hsic, lw, s, f, or all.
    #[arg(long, default_value = "all")]
    kind: String,
    /// Number of permutations.
    #[arg(long = "B", default_value_t = 200)]
    permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    lambda_grid_points: usize,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set seed=3 --set n=[20,50]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for results.csv, summary.csv and config.resolved.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

fn parse_real(s: &str) -> Result<f64, String> {
    s.parse::<f64>().ok().or_else(|| parse_pi_expression(s)).ok_or_else(|| format!("not a number: {s}"))
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s == "median" {
        return Ok(Bandwidth::Median);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
        _ => Err(format!("bandwidth must be a positive number or `median`, got {s}")),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> AppResult<String> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Gram(a) => gram(a),
        Command::Shrink(a) => shrink(a),
        Command::HsicTest(a) => hsic_test(a),
        Command::Risk(a) => experiment(ExperimentKind::RiskCurve, a),
        Command::Power(a) => experiment(ExperimentKind::PowerCurve, a),
        Command::Spectra(a) => experiment(ExperimentKind::Spectra, a),
        Command::Singular(a) => experiment(ExperimentKind::SingularStudy, a),
        Command::Scatter(a) => experiment(ExperimentKind::Scatter, a),
        Command::Ratio(a) => experiment(ExperimentKind::RatioBars, a),
        Command::OracleCheck(a) => experiment(ExperimentKind::OracleCheck, a),
    }
}

fn distribution(a: &DistArgs) -> DistributionSpec {
    let kind = match a.distribution {
        DistArg::HollowGaussian => DistributionKind::HollowGaussian,
        DistArg::Sinusoid => DistributionKind::Sinusoid,
        DistArg::FourGaussians => DistributionKind::FourGaussians,
        DistArg::Grid2d => DistributionKind::Grid2d,
        DistArg::GaussianNd => DistributionKind::GaussianNd,
    };
    let base = match kind {
        DistributionKind::HollowGaussian => DistributionSpec::HollowGaussian { radius: a.radius },
        DistributionKind::Sinusoid => DistributionSpec::Sinusoid { frequency: a.frequency, amplitude: a.amplitude },
        DistributionKind::FourGaussians => DistributionSpec::FourGaussians { theta: a.theta, center: a.center, spread: a.spread },
        DistributionKind::Grid2d => DistributionSpec::Grid2d { frequency: a.frequency, cells: a.cells, spread: a.spread },
        DistributionKind::GaussianNd => DistributionSpec::GaussianNd { dim: a.dim },
    };
    if a.independent {
        DistributionSpec::IndependentProduct { base: Box::new(base) }
    } else {
        base
    }
}

fn synth(a: SynthArgs) -> AppResult<String> {
    let (x, y) = synthdata::sample(&distribution(&a.dist), a.n, a.seed)?;
    let text = io::format_samples(&x, &y);
    match &a.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| AppError::Input(format!("cannot write {}: {e}", path.display())))?;
            Ok(format!("wrote {} points to {}", a.n, path.display()))
        }
        None => {
            print!("{text}");
            Ok(String::new())
        }
    }
}

fn load_grams(a: &InputArgs) -> AppResult<(SampleSet, SampleSet, GramPair)> {
    let (x, y) = io::read_samples(&a.input, a.x_cols)?;
    let kx = build_kernel(a.kernel.into(), a.bandwidth, a.degree, a.offset, &x)?;
    let ky = build_kernel(a.kernel_y.unwrap_or(a.kernel).into(), a.bandwidth, a.degree, a.offset, &y)?;
    let g = GramPair::from_samples(&x, &y, &kx, &ky)?;
    Ok((x, y, g))
}

fn ensure_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::Input(format!("cannot create {}: {e}", dir.display())))
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn gram(a: InputArgs) -> AppResult<String> {
    let (_, _, g) = load_grams(&a)?;
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        write_file(dir, "k_centered.csv", matrix_csv(g.k_centered()).as_bytes())?;
        write_file(dir, "l_centered.csv", matrix_csv(g.l_centered()).as_bytes())?;
    }
    Ok(format!("n={} hsic={}", g.n(), hsic_n(&g)))
}

fn shrink(a: ShrinkArgs) -> AppResult<String> {
    let (_, _, g) = load_grams(&a.input)?;
    let lw = rho_lw(&g);
    let s = rho_scose(&g);
    let grid = LambdaGrid::Auto(a.lambda_grid_points).resolve(&g)?;
    let f = fcose_fit(&g, &grid)?;
    let lambda = f.lambda.expect("FCOSE carries lambda");
    if let Some(dir) = &a.input.out {
        ensure_dir(dir)?;
        let mut text = String::from("estimator,quantity,index,value\n");
        for (name, r) in [("lw", &lw), ("scose", &s)] {
            let _ = writeln!(text, "{name},rho,0,{}", r.rho.expect("rho"));
            let _ = writeln!(text, "{name},clamped,0,{}", u8::from(r.clamped));
        }
        let _ = writeln!(text, "fcose,lambda,0,{lambda}");
        for (i, b) in f.beta.as_ref().expect("beta").iter().enumerate() {
            let _ = writeln!(text, "fcose,beta,{i},{b}");
        }
        let _ = writeln!(text, "all,d2,0,{}", lw.d2);
        let _ = writeln!(text, "all,b2,0,{}", lw.b2);
        write_file(dir, "shrink.csv", text.as_bytes())?;
    }
    Ok(format!(
        "n={} d2={} b2={} rho_lw={} (clamped={}) rho_s={} (clamped={}) fcose_lambda={}",
        g.n(),
        lw.d2,
        lw.b2,
        lw.rho.expect("rho"),
        lw.clamped,
        s.rho.expect("rho"),
        s.clamped,
        lambda
    ))
}

fn hsic_test(a: TestArgs) -> AppResult<String> {
    let kinds: Vec<StatisticKind> = if a.kind.eq_ignore_ascii_case("all") {
        StatisticKind::ALL.to_vec()
    } else {
        vec![a.kind.parse::<StatisticKind>()?]
    };
    let (_, _, g) = load_grams(&a.input)?;
    let cfg = PermutationTest {
        permutations: a.permutations,
        alpha: a.alpha,
        seed: a.seed,
        lambda_grid: LambdaGrid::Auto(a.lambda_grid_points),
    };
    let outcomes = permutation_test_gram(&g, &kinds, &cfg)?;
    if let Some(dir) = &a.input.out {
        ensure_dir(dir)?;
        let mut text = String::from("statistic,observed,p_value,threshold,alpha,rejected,permutations,insufficient_permutations\n");
        for o in &outcomes {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{}",
                o.kind,
                o.observed,
                o.p_value,
                o.threshold,
                o.alpha,
                u8::from(o.rejected),
                o.null_samples.len(),
                u8::from(o.insufficient_permutations)
            );
        }
        write_file(dir, "outcome.csv", text.as_bytes())?;
    }
    let mut lines: Vec<String> = outcomes
        .iter()
        .map(|o| format!("{}: p_value={} observed={} threshold={} rejected={}", o.kind, o.p_value, o.observed, o.threshold, o.rejected))
        .collect();
    if outcomes.iter().any(|o| o.insufficient_permutations) {
        lines.push(format!("warning: B={} is too small to reject at alpha={}", a.permutations, a.alpha));
    }
    Ok(lines.join("\n"))
}

fn experiment(kind: ExperimentKind, a: ExperimentArgs) -> AppResult<String> {
    let base = match &a.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| AppError::Input(format!("cannot read config {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut overrides = a.overrides.clone();
    let from_file = ExperimentConfig::resolve(base.as_deref(), &overrides).ok().map(|c| c.experiment);
    if let Some(k) = from_file {
        if k != kind {
            return Err(AppError::Input(format!("config describes a {k} experiment, not {kind}")));
        }
    }
    overrides.push(format!("experiment={}", kind.name()));
    let cfg = ExperimentConfig::resolve(base.as_deref(), &overrides)?;
    ensure_dir(&a.out)?;
    let table = runners::run(&cfg, a.workers)?;
    write_file(&a.out, "results.csv", &table.results_csv()?)?;
    write_file(&a.out, "summary.csv", &table.summary_csv()?)?;
    write_file(&a.out, "config.resolved", cfg.resolved_text().as_bytes())?;
    if a.svg {
        for (name, text) in svg::plots(&table) {
            write_file(&a.out, &name, text.as_bytes())?;
        }
    }
    Ok(format!(
        "{}: {} rows, config sha256 {}, written to {}",
        kind,
        table.rows.len(),
        &table.config_hash[..16],
        a.out.display()
    ))
}
