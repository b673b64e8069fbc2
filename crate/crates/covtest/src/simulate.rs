//! Simulation harness: data generators and study runners for type-I-error
//! tables, power curves, and form-timing comparisons.
//!
//! Observations follow `X_ik = mu_i + V^{1/2} Z_ik` with i.i.d. standardized
//! marginals in `Z` and the symmetric PSD root of `V`. Under an alternative,
//! group 1's observations are additionally multiplied by a diagonal `Delta`,
//! so its covariance becomes `Delta V Delta^T`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    run_test_with_estimates, CalibrationMethod, EngineError, StatisticKind,
};
use crate::estimate::{pooled_estimates, EstimateError, GroupSample};
use crate::hypothesis::{
    equal_covariances, equal_diagonal, equal_traces, given_trace, Form, HypothesisError,
    HypothesisSpec,
};
use crate::matview::{psd_sqrt, vech, MatError, SymMatrix, PSD_CLAMP_TOL};
use crate::rng::{map_indexed, substream, tag, ChunkPolicy, ResamplingPlan};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Marginal law of the i.i.d. error components; all standardized to mean 0,
/// variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDistribution {
    StandardNormal,
    /// `t_9` scaled by `sqrt(7/9)` (`Var(t_nu) = nu/(nu-2)`).
    StandardizedT9,
    /// `Z = (G - 2)/sqrt(2)` with `G ~ Gamma(2, 1)`.
    StandardizedGamma21,
    /// Skew normal with `xi = 0`, `omega = 1`, `alpha = 4`, centered by
    /// `delta' sqrt(2/pi)` and scaled by `1/sqrt(1 - 2 delta'^2/pi)`,
    /// `delta' = alpha/sqrt(1 + alpha^2)`.
    StandardizedSkewNormal,
}

/// Population covariance used by the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovStructure {
    /// `(V)_{ij} = rho^{|i-j|}`
    Autoregressive { rho: f64 },
    /// `V = I_d + J_d`
    CompoundSymmetry,
    Explicit { matrix: SymMatrix },
}

impl CovStructure {
    pub fn matrix(&self, d: usize) -> Result<SymMatrix, SimError> {
        match self {
            CovStructure::Autoregressive { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(SimError::BadConfig(format!("AR parameter {rho} not in (-1, 1)")));
                }
                Ok(SymMatrix::from_fn(d, |r, c| {
                    rho.powi((r as i32 - c as i32).abs())
                }))
            }
            CovStructure::CompoundSymmetry => {
                Ok(SymMatrix::from_fn(d, |r, c| if r == c { 2.0 } else { 1.0 }))
            }
            CovStructure::Explicit { matrix } => {
                if matrix.dim() != d {
                    return Err(SimError::BadConfig(format!(
                        "explicit covariance is {}x{} but d = {d}",
                        matrix.dim(),
                        matrix.dim()
                    )));
                }
                Ok(matrix.clone())
            }
        }
    }
}

/// Group mean vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeanPattern {
    /// `mu_1 = (1^2, 2^2, ..., d^2)/4`, all other groups zero.
    #[default]
    QuarterSquares,
    Zero,
    Explicit { vectors: Vec<Vec<f64>> },
}

impl MeanPattern {
    pub fn means(&self, a: usize, d: usize) -> Result<Vec<DVector<f64>>, SimError> {
        match self {
            MeanPattern::QuarterSquares => {
                let mut out = vec![DVector::zeros(d); a];
                out[0] = DVector::from_fn(d, |j, _| ((j + 1) * (j + 1)) as f64 / 4.0);
                Ok(out)
            }
            MeanPattern::Zero => Ok(vec![DVector::zeros(d); a]),
            MeanPattern::Explicit { vectors } => {
                if vectors.len() != a || vectors.iter().any(|v| v.len() != d) {
                    return Err(SimError::BadConfig(format!(
                        "explicit means must be {a} vectors of length {d}"
                    )));
                }
                Ok(vectors.iter().map(|v| DVector::from_column_slice(v)).collect())
            }
        }
    }
}

/// The simulated designs. Sample-size splits follow the study layout: `A` and
/// `C` use `n_1 = 0.6 N`, `n_2 = 0.4 N`; `E` uses `0.4/0.25/0.35`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scenario {
    /// Two groups, `V_1 = V_2`.
    A { total_n: usize },
    /// One group, equal diagonal elements.
    B { n: usize },
    /// Two groups, `tr(V_1) = tr(V_2)`.
    C { total_n: usize },
    /// One group, `tr(V_1) = gamma` (`gamma` defaults to the true trace).
    D { n: usize, gamma: Option<f64> },
    /// Three groups, `V_1 = V_2 = V_3`.
    E { total_n: usize },
    Custom {
        group_sizes: Vec<usize>,
        hypothesis: HypothesisSpec,
    },
}

impl Scenario {
    pub fn group_sizes(&self) -> Vec<usize> {
        match self {
            Scenario::A { total_n } | Scenario::C { total_n } => {
                let n1 = (0.6 * *total_n as f64).round() as usize;
                vec![n1, total_n - n1]
            }
            Scenario::B { n } | Scenario::D { n, .. } => vec![*n],
            Scenario::E { total_n } => {
                let n1 = (0.4 * *total_n as f64).round() as usize;
                let n2 = (0.25 * *total_n as f64).round() as usize;
                vec![n1, n2, total_n - n1 - n2]
            }
            Scenario::Custom { group_sizes, .. } => group_sizes.clone(),
        }
    }

    /// Hypothesis for this scenario; `v` is the population covariance (used
    /// only to pick the null trace target in scenario `D`).
    pub fn hypothesis(
        &self,
        d: usize,
        form: Form,
        v: &SymMatrix,
    ) -> Result<HypothesisSpec, SimError> {
        Ok(match self {
            Scenario::A { .. } => equal_covariances(2, d, form)?,
            Scenario::B { .. } => equal_diagonal(d, form)?,
            Scenario::C { .. } => equal_traces(2, d, form)?,
            Scenario::D { gamma, .. } => given_trace(d, gamma.unwrap_or_else(|| v.trace()), form)?,
            Scenario::E { .. } => equal_covariances(3, d, form)?,
            Scenario::Custom { hypothesis, .. } => hypothesis.clone(),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Scenario::A { total_n } => format!("A (equal covariances, N={total_n})"),
            Scenario::B { n } => format!("B (equal diagonal, n={n})"),
            Scenario::C { total_n } => format!("C (equal traces, N={total_n})"),
            Scenario::D { n, .. } => format!("D (given trace, n={n})"),
            Scenario::E { total_n } => format!("E (equal covariances, 3 groups, N={total_n})"),
            Scenario::Custom { hypothesis, .. } => format!("custom ({})", hypothesis.label()),
        }
    }
}

/// Covariance alternative: group 1's observations are multiplied by the
/// diagonal `Delta`, traversing the listed `delta` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    None,
    /// `Delta = I_d + diag(1, 0, ..., 0) * delta`
    OnePoint { deltas: Vec<f64> },
    /// `Delta = I_d + diag(1, 2, ..., d)/d * delta`
    Trend { deltas: Vec<f64> },
}

/// Default `delta` grid of the power studies.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=6).map(|i| i as f64 * 0.5).collect()
}

impl Alternative {
    pub fn delta_values(&self) -> Option<&[f64]> {
        match self {
            Alternative::None => None,
            Alternative::OnePoint { deltas } | Alternative::Trend { deltas } => Some(deltas),
        }
    }

    /// The diagonal of `Delta` at a given `delta`.
    pub fn delta_matrix(&self, d: usize, delta: f64) -> Option<DVector<f64>> {
        match self {
            Alternative::None => None,
            Alternative::OnePoint { .. } => Some(DVector::from_fn(d, |j, _| {
                if j == 0 {
                    1.0 + delta
                } else {
                    1.0
                }
            })),
            Alternative::Trend { .. } => {
                Some(DVector::from_fn(d, |j, _| 1.0 + (j + 1) as f64 / d as f64 * delta))
            }
        }
    }
}

fn default_n_sim() -> usize {
    5000
}

fn default_alpha() -> f64 {
    0.05
}

fn default_form() -> Form {
    Form::Reduced
}

/// Full description of one study.
///
/// Scalar fields come first so the TOML serialization stays valid (values
/// before tables).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub master_seed: u64,
    #[serde(default = "default_n_sim")]
    pub n_sim: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_form")]
    pub form: Form,
    #[serde(default)]
    pub chunking: ChunkPolicy,
    pub distribution: ErrorDistribution,
    pub statistics: Vec<StatisticKind>,
    pub scenario: Scenario,
    pub covariance: CovStructure,
    #[serde(default)]
    pub means: MeanPattern,
    pub methods: Vec<CalibrationMethod>,
    #[serde(default)]
    pub alternative: Alternative,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_sim < 1 {
            return Err(SimError::BadConfig("n_sim must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SimError::BadConfig(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if self.statistics.is_empty() || self.methods.is_empty() {
            return Err(SimError::BadConfig(
                "at least one statistic and one method are required".into(),
            ));
        }
        if self.dim == 0 {
            return Err(SimError::BadConfig("dimension must be positive".into()));
        }
        let sizes = self.scenario.group_sizes();
        if sizes.iter().any(|&n| n < 2) {
            return Err(SimError::BadConfig(format!(
                "every group needs at least 2 observations, got {sizes:?}"
            )));
        }
        if let Some(deltas) = self.alternative.delta_values() {
            if deltas.is_empty() || deltas.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(SimError::BadConfig(
                    "delta grid must be nonempty and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    /// The `(statistic, method)` cells actually run; the asymptotic
    /// chi-square method only applies to the WTS and is skipped elsewhere.
    fn cells(&self) -> Vec<(StatisticKind, CalibrationMethod)> {
        let mut out = Vec::new();
        for &kind in &self.statistics {
            for &method in &self.methods {
                if matches!(method, CalibrationMethod::ChiSquareAsymptotic)
                    && kind != StatisticKind::Wts
                {
                    continue;
                }
                out.push((kind, method));
            }
        }
        out
    }
}

/// One table entry: rejection rate of a `(statistic, method)` pair, at one
/// `delta` when under an alternative.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub statistic: StatisticKind,
    pub method: CalibrationMethod,
    pub delta: Option<f64>,
    pub rejection_rate: f64,
    pub mc_standard_error: f64,
    pub n_sim: usize,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub label: String,
    pub alpha: f64,
    pub cells: Vec<CellResult>,
}

/// Draws `n` vectors of `d` i.i.d. standardized components.
pub fn gen_errors(
    dist: ErrorDistribution,
    d: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<DVector<f64>> {
    use std::f64::consts::PI;
    match dist {
        ErrorDistribution::StandardNormal => (0..n)
            .map(|_| DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect(),
        ErrorDistribution::StandardizedT9 => {
            let t = StudentT::new(9.0).expect("valid dof");
            let scale = (7.0f64 / 9.0).sqrt();
            (0..n)
                .map(|_| DVector::from_fn(d, |_, _| t.sample(rng) * scale))
                .collect()
        }
        ErrorDistribution::StandardizedGamma21 => {
            let g = Gamma::new(2.0, 1.0).expect("valid shape");
            (0..n)
                .map(|_| {
                    DVector::from_fn(d, |_, _| (g.sample(rng) - 2.0) / std::f64::consts::SQRT_2)
                })
                .collect()
        }
        ErrorDistribution::StandardizedSkewNormal => {
            let dp = 4.0 / 17.0f64.sqrt();
            let comp = (1.0 - dp * dp).sqrt();
            let center = dp * (2.0 / PI).sqrt();
            let scale = (1.0 - 2.0 * dp * dp / PI).sqrt();
            (0..n)
                .map(|_| {
                    DVector::from_fn(d, |_, _| {
                        let u0: f64 = rng.sample(StandardNormal);
                        let u1: f64 = rng.sample(StandardNormal);
                        let sn = dp * u0.abs() + comp * u1;
                        (sn - center) / scale
                    })
                })
                .collect()
        }
    }
}

/// `X_k = mu + V^{1/2} Z_k` with the symmetric PSD root of `V`.
pub fn apply_model(
    mu: &DVector<f64>,
    v: &SymMatrix,
    zs: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>, SimError> {
    let half = psd_sqrt(v, PSD_CLAMP_TOL)?;
    Ok(zs.iter().map(|z| mu + half.as_dense() * z).collect())
}

/// Generates one dataset: the groups at `(delta_index, sim_index)` under the
/// config's scenario, with `Delta` applied to group 1 when present.
#[allow(clippy::too_many_arguments)]
fn generate_dataset(
    cfg: &SimConfig,
    sqrt_v: &DMatrix<f64>,
    sizes: &[usize],
    means: &[DVector<f64>],
    delta_diag: Option<&DVector<f64>>,
    delta_index: u64,
    sim_index: u64,
) -> Result<Vec<GroupSample>, SimError> {
    let mut rng = substream(
        cfg.master_seed,
        &[tag::SIM_DATASET, delta_index, sim_index],
    );
    let mut groups = Vec::with_capacity(sizes.len());
    for (i, (&n, mu)) in sizes.iter().zip(means).enumerate() {
        let zs = gen_errors(cfg.distribution, cfg.dim, n, &mut rng);
        let xs: Vec<DVector<f64>> = zs
            .iter()
            .map(|z| {
                let x = mu + sqrt_v * z;
                match (i, delta_diag) {
                    (0, Some(dd)) => x.component_mul(dd),
                    _ => x,
                }
            })
            .collect();
        groups.push(GroupSample::new(format!("{}", i + 1), xs)?);
    }
    Ok(groups)
}

fn run_grid(cfg: &SimConfig) -> Result<ScenarioResult, SimError> {
    cfg.validate()?;
    let v = cfg.covariance.matrix(cfg.dim)?;
    let sqrt_v = psd_sqrt(&v, PSD_CLAMP_TOL)?.into_dense();
    let sizes = cfg.scenario.group_sizes();
    let means = cfg.means.means(sizes.len(), cfg.dim)?;
    let hyp = cfg.scenario.hypothesis(cfg.dim, cfg.form, &v)?;
    let cells = cfg.cells();

    let deltas: Vec<Option<f64>> = match cfg.alternative.delta_values() {
        None => vec![None],
        Some(ds) => ds.iter().copied().map(Some).collect(),
    };

    let mut out = Vec::new();
    for (di, &delta) in deltas.iter().enumerate() {
        let delta_diag = delta.and_then(|dl| cfg.alternative.delta_matrix(cfg.dim, dl));
        let started = Instant::now();
        let per_sim: Vec<Result<Vec<bool>, SimError>> =
            map_indexed(cfg.chunking, cfg.n_sim, |sim| {
                let samples = generate_dataset(
                    cfg,
                    &sqrt_v,
                    &sizes,
                    &means,
                    delta_diag.as_ref(),
                    di as u64,
                    sim as u64,
                )?;
                let est = pooled_estimates(&samples)?;
                let mut rejected = Vec::with_capacity(cells.len());
                for (ci, &(kind, method)) in cells.iter().enumerate() {
                    // fresh master seed per (dataset, cell); the extra path
                    // element keeps it disjoint from the dataset stream
                    let seed = substream(
                        cfg.master_seed,
                        &[tag::BOOTSTRAP, di as u64, sim as u64, ci as u64],
                    )
                    .gen::<u64>();
                    let plan = ResamplingPlan::serial(seed);
                    let res = run_test_with_estimates(
                        &samples, &est, &hyp, kind, method, &plan, None,
                    )?;
                    rejected.push(res.p_value <= cfg.alpha);
                }
                Ok(rejected)
            });
        let elapsed = started.elapsed().as_secs_f64();

        let mut counts = vec![0usize; cells.len()];
        for sim in per_sim {
            let flags = sim?;
            for (c, &flag) in counts.iter_mut().zip(&flags) {
                *c += flag as usize;
            }
        }
        for (&(kind, method), &count) in cells.iter().zip(&counts) {
            let rate = count as f64 / cfg.n_sim as f64;
            out.push(CellResult {
                statistic: kind,
                method,
                delta,
                rejection_rate: rate,
                mc_standard_error: (rate * (1.0 - rate) / cfg.n_sim as f64).sqrt(),
                n_sim: cfg.n_sim,
                elapsed_secs: elapsed,
            });
        }
    }
    Ok(ScenarioResult {
        label: cfg.scenario.label(),
        alpha: cfg.alpha,
        cells: out,
    })
}

/// Rejection rates under the null hypothesis.
pub fn type1_study(cfg: &SimConfig) -> Result<ScenarioResult, SimError> {
    if cfg.alternative != Alternative::None {
        return Err(SimError::BadConfig(
            "type-I-error study requires alternative = none".into(),
        ));
    }
    run_grid(cfg)
}

/// Rejection-rate curve over the configured `delta` grid.
pub fn power_study(cfg: &SimConfig) -> Result<ScenarioResult, SimError> {
    if cfg.alternative == Alternative::None {
        return Err(SimError::BadConfig("power study requires an alternative".into()));
    }
    // every positive delta must actually violate the hypothesis
    let v = cfg.covariance.matrix(cfg.dim)?;
    let sizes = cfg.scenario.group_sizes();
    let hyp = cfg.scenario.hypothesis(cfg.dim, cfg.form, &v)?;
    let p = crate::matview::vech_len(cfg.dim);
    for &delta in cfg.alternative.delta_values().unwrap_or(&[]) {
        if delta == 0.0 {
            continue;
        }
        let dd = cfg
            .alternative
            .delta_matrix(cfg.dim, delta)
            .expect("alternative present");
        let altered = SymMatrix::from_fn(cfg.dim, |r, c| dd[r] * v[(r, c)] * dd[c]);
        let mut stacked = DVector::zeros(sizes.len() * p);
        stacked
            .rows_mut(0, p)
            .copy_from(vech(&altered).as_vector());
        for i in 1..sizes.len() {
            stacked.rows_mut(i * p, p).copy_from(vech(&v).as_vector());
        }
        if hyp.is_member(&stacked, 1e-12) {
            return Err(SimError::BadConfig(format!(
                "delta = {delta} does not violate the hypothesis {}",
                hyp.label()
            )));
        }
    }
    run_grid(cfg)
}

/// Wall-time comparison of the quadratic vs. reduced hypothesis forms on
/// identical datasets and seeds.
#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub dim: usize,
    pub statistic: StatisticKind,
    pub method: CalibrationMethod,
    pub quadratic_secs: f64,
    pub reduced_secs: f64,
    /// `reduced_secs / quadratic_secs`
    pub ratio: f64,
}

pub fn timing_study(cfg: &SimConfig) -> Result<Vec<TimingRow>, SimError> {
    let mut quad_cfg = cfg.clone();
    quad_cfg.form = Form::Quadratic;
    let mut red_cfg = cfg.clone();
    red_cfg.form = Form::Reduced;

    let run_timed = |c: &SimConfig| -> Result<Vec<(StatisticKind, CalibrationMethod, f64)>, SimError> {
        c.validate()?;
        let v = c.covariance.matrix(c.dim)?;
        let sqrt_v = psd_sqrt(&v, PSD_CLAMP_TOL)?.into_dense();
        let sizes = c.scenario.group_sizes();
        let means = c.means.means(sizes.len(), c.dim)?;
        let hyp = c.scenario.hypothesis(c.dim, c.form, &v)?;
        let mut rows = Vec::new();
        for (ci, &(kind, method)) in c.cells().iter().enumerate() {
            let started = Instant::now();
            let results: Vec<Result<(), SimError>> = map_indexed(c.chunking, c.n_sim, |sim| {
                let samples =
                    generate_dataset(c, &sqrt_v, &sizes, &means, None, 0, sim as u64)?;
                let est = pooled_estimates(&samples)?;
                let seed = substream(
                    c.master_seed,
                    &[tag::BOOTSTRAP, 0, sim as u64, ci as u64],
                )
                .gen::<u64>();
                run_test_with_estimates(
                    &samples,
                    &est,
                    &hyp,
                    kind,
                    method,
                    &ResamplingPlan::serial(seed),
                    None,
                )?;
                Ok(())
            });
            for r in results {
                r?;
            }
            rows.push((kind, method, started.elapsed().as_secs_f64()));
        }
        Ok(rows)
    };

    let quad = run_timed(&quad_cfg)?;
    let red = run_timed(&red_cfg)?;
    Ok(quad
        .into_iter()
        .zip(red)
        .map(|((kind, method, tq), (_, _, tr))| TimingRow {
            dim: cfg.dim,
            statistic: kind,
            method,
            quadratic_secs: tq,
            reduced_secs: tr,
            ratio: tr / tq,
        })
        .collect())
}
