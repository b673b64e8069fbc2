//! Command-line surface: CSV ingestion, test / confidence-interval runs, and
//! simulation studies driven by a TOML config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use thiserror::Error;

use crate::engine::{
    run_test, trace_confidence_interval, CalibrationMethod, EngineError, StatisticKind,
    TestResult, TraceInterval, WildWeights, DEFAULT_BOOTSTRAP_REPLICATES, DEFAULT_MC_DRAWS,
};
use crate::estimate::{EstimateError, GroupSample};
use crate::hypothesis::{
    equal_covariances, equal_diagonal, equal_traces, given_covariance, given_trace, Form,
    HypothesisError, HypothesisSpec,
};
use crate::matview::SymMatrix;
use crate::rng::ResamplingPlan;
use crate::simulate::{power_study, timing_study, type1_study, Alternative, ScenarioResult, SimConfig, SimError, TimingRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: cannot read: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a finite number")]
    ParseError {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("{path}: group column {0:?} not found in header", .column)]
    MissingGroupColumn { path: PathBuf, column: String },
    #[error("{path}: row {row} has {got} fields, expected {expected}")]
    DimensionMismatch {
        path: PathBuf,
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("group {label:?} has only {n} observation(s); at least 2 are required")]
    GroupTooSmall { label: String, n: usize },
    #[error("no data rows in {0}")]
    Empty(PathBuf),
    #[error("invalid hypothesis spec {0:?}: {1}")]
    BadHypothesis(String, String),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
}

/// Reads a headered CSV: one observation per row, one group-label column, all
/// remaining columns numeric. Groups keep their order of first appearance.
pub fn ingest(path: &Path, group_column: &str) -> Result<Vec<GroupSample>, CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(io),
            other => CliError::Usage(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        .clone();
    let group_idx = headers
        .iter()
        .position(|h| h == group_column)
        .ok_or_else(|| CliError::MissingGroupColumn {
            path: path.to_path_buf(),
            column: group_column.to_string(),
        })?;
    let expected = headers.len();
    let d = expected - 1;
    if d == 0 {
        return Err(CliError::Usage(format!(
            "{}: no numeric columns besides the group column",
            path.display()
        )));
    }

    // (label, observations), ordered by first appearance
    let mut groups: Vec<(String, Vec<DVector<f64>>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if record.len() != expected {
            return Err(CliError::DimensionMismatch {
                path: path.to_path_buf(),
                row,
                got: record.len(),
                expected,
            });
        }
        let label = record[group_idx].to_string();
        let mut values = Vec::with_capacity(d);
        for (j, field) in record.iter().enumerate() {
            if j == group_idx {
                continue;
            }
            let parsed: Option<f64> = field.trim().parse().ok().filter(|x: &f64| x.is_finite());
            match parsed {
                Some(x) => values.push(x),
                None => {
                    return Err(CliError::ParseError {
                        path: path.to_path_buf(),
                        row,
                        col: j + 1,
                        value: field.to_string(),
                    })
                }
            }
        }
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, obs)) => obs.push(DVector::from_vec(values)),
            None => groups.push((label, vec![DVector::from_vec(values)])),
        }
    }
    if groups.is_empty() {
        return Err(CliError::Empty(path.to_path_buf()));
    }
    groups
        .into_iter()
        .map(|(label, obs)| {
            if obs.len() < 2 {
                return Err(CliError::GroupTooSmall {
                    label,
                    n: obs.len(),
                });
            }
            GroupSample::new(label, obs).map_err(CliError::from)
        })
        .collect()
}

/// Writes groups back out in the layout [`ingest`] reads.
pub fn export_csv(samples: &[GroupSample], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(e.to_string()))?;
    let d = samples[0].dim();
    let mut header = vec!["group".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| CliError::Usage(e.to_string()))?;
    for g in samples {
        for obs in g.observations() {
            let mut rec = vec![g.id().to_string()];
            rec.extend(obs.iter().map(|x| format!("{x}")));
            w.write_record(&rec).map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}

/// Parses the `--hypothesis` value: either a path to a JSON file holding an
/// explicit `C`/`zeta` payload, or a catalog spec:
/// `equal_covariances`, `equal_diagonal`, `equal_traces`,
/// `given_trace=GAMMA`, `given_covariance=MATRIX.json`.
pub fn parse_hypothesis(
    value: &str,
    a: usize,
    d: usize,
    form: Form,
) -> Result<HypothesisSpec, CliError> {
    let bad = |msg: &str| CliError::BadHypothesis(value.to_string(), msg.to_string());
    if Path::new(value).is_file() {
        let text = std::fs::read_to_string(value).map_err(|source| CliError::Io {
            path: PathBuf::from(value),
            source,
        })?;
        return serde_json::from_str(&text)
            .map_err(|e| bad(&format!("JSON hypothesis: {e}")));
    }
    let (name, arg) = match value.split_once('=') {
        Some((n, v)) => (n, Some(v)),
        None => (value, None),
    };
    Ok(match (name, arg) {
        ("equal_covariances", None) => equal_covariances(a, d, form)?,
        ("equal_diagonal", None) => equal_diagonal(d, form)?,
        ("equal_traces", None) => equal_traces(a, d, form)?,
        ("given_trace", Some(g)) => {
            let gamma: f64 = g.parse().map_err(|_| bad("gamma must be a number"))?;
            given_trace(d, gamma, form)?
        }
        ("given_covariance", Some(file)) => {
            let text = std::fs::read_to_string(file).map_err(|source| CliError::Io {
                path: PathBuf::from(file),
                source,
            })?;
            let sigma: SymMatrix =
                serde_json::from_str(&text).map_err(|e| bad(&format!("matrix JSON: {e}")))?;
            given_covariance(&sigma)?
        }
        _ => {
            return Err(bad(
                "expected a JSON file path or one of equal_covariances, equal_diagonal, \
                 equal_traces, given_trace=GAMMA, given_covariance=FILE",
            ))
        }
    })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatArg {
    Ats,
    Wts,
    Mats,
}

impl From<StatArg> for StatisticKind {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Ats => StatisticKind::Ats,
            StatArg::Wts => StatisticKind::Wts,
            StatArg::Mats => StatisticKind::Mats,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    /// parametric bootstrap
    Param,
    /// wild bootstrap
    Wild,
    /// Monte-Carlo weighted chi-square
    Mc,
    /// asymptotic chi-square (WTS only)
    Chisq,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightsArg {
    Rademacher,
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormArg {
    Quadratic,
    Reduced,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Quadratic => Form::Quadratic,
            FormArg::Reduced => Form::Reduced,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
    JsonLines,
}

#[derive(Debug, Parser)]
#[command(
    name = "covtest",
    version,
    about = "Tests for linear hypotheses about covariance matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one hypothesis test on grouped CSV data
    Test(TestArgs),
    /// Run a simulation study from a TOML config
    Simulate(SimArgs),
    /// Confidence interval for tr(V) of a single group
    Ci(CiArgs),
}

#[derive(Debug, Parser)]
struct CommonRun {
    /// CSV data file (header row; one group column; numeric columns)
    #[arg(long)]
    data: PathBuf,
    /// Name of the group-label column
    #[arg(long, default_value = "group")]
    group_col: String,
    #[arg(long, value_enum, default_value = "ats")]
    statistic: StatArg,
    #[arg(long, value_enum, default_value = "param")]
    method: MethodArg,
    /// Wild-bootstrap multiplier distribution
    #[arg(long, value_enum, default_value = "rademacher")]
    wild_weights: WeightsArg,
    /// Bootstrap replicates
    #[arg(short = 'B', long = "B", default_value_t = DEFAULT_BOOTSTRAP_REPLICATES)]
    b: usize,
    /// Monte-Carlo draws for the weighted-chi-square method
    #[arg(short = 'M', long = "M", default_value_t = DEFAULT_MC_DRAWS)]
    m: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Disable replicate parallelism (results are identical either way)
    #[arg(long)]
    serial: bool,
}

impl CommonRun {
    fn method(&self) -> CalibrationMethod {
        match self.method {
            MethodArg::Param => CalibrationMethod::ParametricBootstrap { replicates: self.b },
            MethodArg::Wild => CalibrationMethod::WildBootstrap {
                replicates: self.b,
                weights: match self.wild_weights {
                    WeightsArg::Rademacher => WildWeights::Rademacher,
                    WeightsArg::Gaussian => WildWeights::Gaussian,
                },
            },
            MethodArg::Mc => CalibrationMethod::MonteCarloWeightedChiSq { draws: self.m },
            MethodArg::Chisq => CalibrationMethod::ChiSquareAsymptotic,
        }
    }

    fn plan(&self) -> ResamplingPlan {
        if self.serial {
            ResamplingPlan::serial(self.seed)
        } else {
            ResamplingPlan::new(self.seed)
        }
    }
}

#[derive(Debug, Parser)]
struct TestArgs {
    #[command(flatten)]
    run: CommonRun,
    /// Catalog name (e.g. equal_covariances, given_trace=3.5) or JSON file
    #[arg(long)]
    hypothesis: String,
    #[arg(long, value_enum, default_value = "reduced")]
    form: FormArg,
}

#[derive(Debug, Parser)]
struct CiArgs {
    #[command(flatten)]
    run: CommonRun,
}

#[derive(Debug, Parser)]
struct SimArgs {
    /// TOML file mirroring the SimConfig fields
    config: PathBuf,
    /// Compare quadratic vs. reduced hypothesis-form runtimes instead of
    /// estimating rejection rates
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

fn render_test(res: &TestResult, alpha: f64, format: FormatArg) -> String {
    match format {
        FormatArg::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "statistic:       {}", res.kind);
            let _ = writeln!(s, "value:           {:.6}", res.statistic);
            let _ = writeln!(s, "p-value:         {:.6}", res.p_value);
            let _ = writeln!(s, "method:          {}", res.method);
            let _ = writeln!(s, "replicates:      {}", res.replicates);
            if let Some(c) = res.critical_value {
                let _ = writeln!(s, "critical value:  {c:.6} (alpha = {alpha})");
            }
            let _ = writeln!(s, "seed:            {}", res.seed);
            for w in &res.warnings {
                let _ = writeln!(s, "warning:         {w}");
            }
            s
        }
        FormatArg::Csv => {
            let mut s = String::from("statistic,value,p_value,method,replicates,seed\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                res.kind, res.statistic, res.p_value, res.method, res.replicates, res.seed
            );
            s
        }
        FormatArg::JsonLines => {
            let line = serde_json::json!({
                "statistic": res.kind,
                "value": res.statistic,
                "p": res.p_value,
                "method": res.method,
                "B": res.replicates,
                "seed": res.seed,
                "warnings": res.warnings,
            });
            format!("{line}\n")
        }
    }
}

fn render_ci(ci: &TraceInterval, seed: u64, format: FormatArg) -> String {
    match format {
        FormatArg::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "point estimate tr(V): {:.6}", ci.point);
            let _ = writeln!(
                s,
                "{:.1}% confidence interval: [{:.6}, {:.6}]",
                100.0 * (1.0 - ci.alpha),
                ci.lo,
                ci.hi
            );
            let _ = writeln!(s, "seed: {seed}");
            for w in &ci.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
            s
        }
        FormatArg::Csv => format!(
            "point,lo,hi,alpha,seed\n{},{},{},{},{}\n",
            ci.point, ci.lo, ci.hi, ci.alpha, seed
        ),
        FormatArg::JsonLines => {
            let line = serde_json::json!({
                "point": ci.point,
                "lo": ci.lo,
                "hi": ci.hi,
                "alpha": ci.alpha,
                "seed": seed,
                "warnings": ci.warnings,
            });
            format!("{line}\n")
        }
    }
}

fn render_study(res: &ScenarioResult, format: FormatArg) -> String {
    match format {
        FormatArg::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "scenario: {} (alpha = {})", res.label, res.alpha);
            let _ = writeln!(
                s,
                "{:<6} {:<32} {:>6} {:>10} {:>8} {:>10}",
                "stat", "method", "delta", "rate", "se", "secs"
            );
            for c in &res.cells {
                let delta = c.delta.map_or("-".to_string(), |d| format!("{d:.2}"));
                let _ = writeln!(
                    s,
                    "{:<6} {:<32} {:>6} {:>10.4} {:>8.4} {:>10.2}",
                    c.statistic.to_string(),
                    c.method.to_string(),
                    delta,
                    c.rejection_rate,
                    c.mc_standard_error,
                    c.elapsed_secs
                );
            }
            s
        }
        FormatArg::Csv => {
            let mut s =
                String::from("statistic,method,delta,rejection_rate,mc_se,n_sim,elapsed_secs\n");
            for c in &res.cells {
                let delta = c.delta.map_or(String::new(), |d| d.to_string());
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    c.statistic,
                    c.method,
                    delta,
                    c.rejection_rate,
                    c.mc_standard_error,
                    c.n_sim,
                    c.elapsed_secs
                );
            }
            s
        }
        FormatArg::JsonLines => {
            let mut s = String::new();
            for c in &res.cells {
                let _ = writeln!(s, "{}", serde_json::to_string(c).expect("serializable"));
            }
            s
        }
    }
}

fn render_timing(rows: &[TimingRow], format: FormatArg) -> String {
    match format {
        FormatArg::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{:<4} {:<6} {:<32} {:>12} {:>12} {:>8}",
                "d", "stat", "method", "quad secs", "reduced secs", "ratio"
            );
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:<4} {:<6} {:<32} {:>12.4} {:>12.4} {:>8.3}",
                    r.dim,
                    r.statistic.to_string(),
                    r.method.to_string(),
                    r.quadratic_secs,
                    r.reduced_secs,
                    r.ratio
                );
            }
            s
        }
        FormatArg::Csv => {
            let mut s = String::from("dim,statistic,method,quadratic_secs,reduced_secs,ratio\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.dim, r.statistic, r.method, r.quadratic_secs, r.reduced_secs, r.ratio
                );
            }
            s
        }
        FormatArg::JsonLines => {
            let mut s = String::new();
            for r in rows {
                let _ = writeln!(s, "{}", serde_json::to_string(r).expect("serializable"));
            }
            s
        }
    }
}

fn cmd_test(args: &TestArgs) -> Result<String, CliError> {
    let samples = ingest(&args.run.data, &args.run.group_col)?;
    let spec = parse_hypothesis(
        &args.hypothesis,
        samples.len(),
        samples[0].dim(),
        args.form.into(),
    )?;
    let res = run_test(
        &samples,
        &spec,
        args.run.statistic.into(),
        args.run.method(),
        &args.run.plan(),
        Some(args.run.alpha),
    )?;
    Ok(render_test(&res, args.run.alpha, args.run.format))
}

fn cmd_ci(args: &CiArgs) -> Result<String, CliError> {
    let samples = ingest(&args.run.data, &args.run.group_col)?;
    if samples.len() != 1 {
        return Err(CliError::Usage(format!(
            "ci requires exactly one group, data has {}",
            samples.len()
        )));
    }
    let ci = trace_confidence_interval(
        &samples[0],
        args.run.statistic.into(),
        args.run.method(),
        args.run.alpha,
        &args.run.plan(),
    )?;
    Ok(render_ci(&ci, args.run.seed, args.run.format))
}

fn cmd_simulate(args: &SimArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let cfg: SimConfig =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    if args.timing {
        let rows = timing_study(&cfg)?;
        return Ok(render_timing(&rows, args.format));
    }
    let res = if cfg.alternative == Alternative::None {
        type1_study(&cfg)?
    } else {
        power_study(&cfg)?
    };
    Ok(render_study(&res, args.format))
}

fn execute(cli: &Cli) -> Result<(String, Option<PathBuf>), CliError> {
    match &cli.command {
        Command::Test(args) => Ok((cmd_test(args)?, args.run.out.clone())),
        Command::Ci(args) => Ok((cmd_ci(args)?, args.run.out.clone())),
        Command::Simulate(args) => Ok((cmd_simulate(args)?, args.out.clone())),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((output, out_path)) => match out_path {
            Some(path) => match std::fs::write(&path, &output) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    1
                }
            },
            None => {
                print!("{output}");
                0
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingest_two_group_toy_file() {
        let f = write_tmp("group,x1,x2\na,1.0,2.0\na,1.5,2.5\nb,0.0,1.0\nb,0.5,0.0\nb,1.0,1.0\n");
        let groups = ingest(f.path(), "group").unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].id(), "a");
        assert_eq!(groups[0].len(), 2);
        assert_eq!(groups[1].len(), 3);
        assert_eq!(groups[1].dim(), 2);
    }

    #[test]
    fn ingest_reports_parse_location() {
        let f = write_tmp("group,x1,x2\na,1.0,2.0\na,oops,2.5\n");
        match ingest(f.path(), "group").unwrap_err() {
            CliError::ParseError { row, col, value, .. } => {
                assert_eq!(row, 3);
                assert_eq!(col, 2);
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ingest_rejects_small_group_and_missing_column() {
        let f = write_tmp("group,x1\na,1.0\na,2.0\nb,3.0\n");
        assert!(matches!(
            ingest(f.path(), "group").unwrap_err(),
            CliError::GroupTooSmall { n: 1, .. }
        ));
        assert!(matches!(
            ingest(f.path(), "cohort").unwrap_err(),
            CliError::MissingGroupColumn { .. }
        ));
    }

    #[test]
    fn ingest_rejects_ragged_rows() {
        let f = write_tmp("group,x1,x2\na,1.0,2.0\na,1.0\n");
        assert!(matches!(
            ingest(f.path(), "group").unwrap_err(),
            CliError::DimensionMismatch { row: 3, .. }
        ));
    }

    #[test]
    fn export_then_ingest_round_trips() {
        let f = write_tmp("group,x1,x2\na,1.0,2.0\na,1.5,-2.5\nb,0.125,1.0\nb,0.5,0.0\n");
        let groups = ingest(f.path(), "group").unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        export_csv(&groups, out.path()).unwrap();
        let back = ingest(out.path(), "group").unwrap();
        assert_eq!(groups, back);
    }

    #[test]
    fn parse_catalog_hypotheses() {
        let h = parse_hypothesis("equal_covariances", 2, 3, Form::Reduced).unwrap();
        assert_eq!(h.label(), "equal-covariances");
        let h = parse_hypothesis("given_trace=2.5", 1, 3, Form::Reduced).unwrap();
        assert_eq!(h.label(), "given-trace");
        assert!(parse_hypothesis("nonsense", 2, 3, Form::Reduced).is_err());
        assert!(parse_hypothesis("given_trace=abc", 1, 3, Form::Reduced).is_err());
    }

    #[test]
    fn parse_hypothesis_from_json_file() {
        let spec = equal_traces(2, 2, Form::Reduced).unwrap();
        let f = write_tmp(&serde_json::to_string(&spec).unwrap());
        let h = parse_hypothesis(f.path().to_str().unwrap(), 2, 2, Form::Reduced).unwrap();
        assert_eq!(h, spec);
    }

    #[test]
    fn render_formats_contain_key_fields() {
        let res = TestResult {
            kind: StatisticKind::Ats,
            statistic: 1.25,
            p_value: 0.42,
            method: CalibrationMethod::ParametricBootstrap { replicates: 100 },
            replicates: 100,
            critical_value: Some(2.5),
            seed: 7,
            warnings: vec!["w".into()],
        };
        let text = render_test(&res, 0.05, FormatArg::Text);
        assert!(text.contains("ATS") && text.contains("0.42"));
        let csv = render_test(&res, 0.05, FormatArg::Csv);
        assert!(csv.starts_with("statistic,"));
        let jl = render_test(&res, 0.05, FormatArg::JsonLines);
        let parsed: serde_json::Value = serde_json::from_str(jl.trim()).unwrap();
        assert_eq!(parsed["p"], 0.42);
        assert_eq!(parsed["B"], 100);
    }
}
