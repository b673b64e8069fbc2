//! Quadratic-form test statistics and their calibration.
//!
//! The general statistic is `Q^ = N [C v^ - zeta]^T E(C, Sigma^) [C v^ - zeta]`
//! with three choices of weighting:
//!
//! * ATS:  `E = I_m / tr(C Sigma^ C^T)`
//! * WTS:  `E = (C Sigma^ C^T)^+`
//! * MATS: `E = (C Sigma_0^ C^T)^+`, `Sigma_0^` the diagonal part of `Sigma^`
//!
//! Critical values come from a parametric bootstrap, a wild bootstrap, a
//! Monte-Carlo sample of the weighted-chi-square limit, or (WTS only) the
//! asymptotic `chi^2_f` law with `f = rank(C)`.
//!
//! Note the ATS and WTS coincide whenever `C` has a single row, since both
//! denominators reduce to the same scalar. The MATS does not share this
//! collapse: its denominator drops the off-diagonal entries of `Sigma^`.

mod resample;

pub use resample::{ParametricContext, WildContext};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::estimate::{pooled_estimates, CovEstimate, EstimateError, GroupSample};
use crate::hypothesis::{given_trace, Form, HypothesisError, HypothesisSpec};
use crate::matview::{matrix_rank, sym_eigen, sym_mp_inverse, MatError, SymMatrix};
use crate::rng::{map_indexed, substream, tag, ResamplingPlan};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("ATS denominator tr(C Sigma C^T) is not positive; degenerate data")]
    ZeroTrace,
    #[error("statistic evaluated to a non-finite value")]
    NonFinite,
    #[error("hypothesis matrix has rank zero")]
    RankZero,
    #[error("the chi-square calibration is only defined for the WTS")]
    MethodRequiresWts,
    #[error("trace confidence interval requires a single group, got {0}")]
    SingleGroupRequired(usize),
    #[error("confidence-interval bisection did not converge")]
    NonConvergent,
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
}

/// Which quadratic form to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Ats,
    Wts,
    Mats,
}

impl std::fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StatisticKind::Ats => write!(f, "ATS"),
            StatisticKind::Wts => write!(f, "WTS"),
            StatisticKind::Mats => write!(f, "MATS"),
        }
    }
}

/// Distribution of the wild-bootstrap multipliers (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WildWeights {
    /// Random signs.
    #[default]
    Rademacher,
    /// Standard normal.
    Gaussian,
}

/// How critical values / p-values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CalibrationMethod {
    ParametricBootstrap {
        replicates: usize,
    },
    WildBootstrap {
        replicates: usize,
        weights: WildWeights,
    },
    MonteCarloWeightedChiSq {
        draws: usize,
    },
    ChiSquareAsymptotic,
}

/// Default bootstrap replicate count.
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 1000;
/// Default Monte-Carlo draw count for the weighted-chi-square quantile.
pub const DEFAULT_MC_DRAWS: usize = 10_000;

impl std::fmt::Display for CalibrationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CalibrationMethod::ParametricBootstrap { replicates } => {
                write!(f, "parametric-bootstrap(B={replicates})")
            }
            CalibrationMethod::WildBootstrap {
                replicates,
                weights,
            } => write!(f, "wild-bootstrap(B={replicates}, {weights:?})"),
            CalibrationMethod::MonteCarloWeightedChiSq { draws } => {
                write!(f, "mc-weighted-chisq(M={draws})")
            }
            CalibrationMethod::ChiSquareAsymptotic => write!(f, "chisq-asymptotic"),
        }
    }
}

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub kind: StatisticKind,
    pub statistic: f64,
    pub p_value: f64,
    pub method: CalibrationMethod,
    pub replicates: usize,
    /// `(1 - alpha)` critical value, when an `alpha` was supplied.
    pub critical_value: Option<f64>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// `C Sigma^ C^T` assembled from the per-group blocks.
fn weighting_base(est: &CovEstimate, spec: &HypothesisSpec) -> DMatrix<f64> {
    let n = est.total_n() as f64;
    let m = spec.rows();
    let mut w = DMatrix::zeros(m, m);
    for (i, g) in est.groups().iter().enumerate() {
        let ci = spec.group_block(i);
        let prod = &ci * g.sigma_hat.as_dense() * ci.transpose();
        w += prod * (n / g.n as f64);
    }
    w
}

/// `C Sigma_0^ C^T` with `Sigma_0^` the diagonal part of `Sigma^`.
fn weighting_base_diag(est: &CovEstimate, spec: &HypothesisSpec) -> DMatrix<f64> {
    let diag = est.pooled_sigma_diagonal();
    let m = spec.rows();
    let c = spec.c();
    let mut w = DMatrix::zeros(m, m);
    for j in 0..c.ncols() {
        let col = c.column(j);
        w.ger(diag[j], &col, &col, 1.0);
    }
    SymMatrix::symmetrize(&w).into_dense()
}

/// Observed value of the chosen statistic.
pub fn statistic_value(
    kind: StatisticKind,
    est: &CovEstimate,
    spec: &HypothesisSpec,
) -> Result<f64, EngineError> {
    spec.validate(est.group_count(), est.dim())?;
    let q = spec.residual(&est.pooled_vech());
    let n = est.total_n() as f64;
    let value = match kind {
        StatisticKind::Ats => {
            let tr = weighting_base(est, spec).trace();
            if tr <= 0.0 {
                return Err(EngineError::ZeroTrace);
            }
            n * q.norm_squared() / tr
        }
        StatisticKind::Wts => {
            let w = weighting_base(est, spec);
            n * quad_form_pinv(&q, &w)
        }
        StatisticKind::Mats => {
            let w0 = weighting_base_diag(est, spec);
            n * quad_form_pinv(&q, &w0)
        }
    };
    if !value.is_finite() {
        return Err(EngineError::NonFinite);
    }
    Ok(value)
}

fn quad_form_pinv(q: &DVector<f64>, w: &DMatrix<f64>) -> f64 {
    let winv = sym_mp_inverse(w, None);
    (q.transpose() * winv * q)[0]
}

/// One parametric-bootstrap replicate value; see [`ParametricContext`] for
/// batch use.
pub fn parametric_bootstrap_replicate(
    est: &CovEstimate,
    spec: &HypothesisSpec,
    kind: StatisticKind,
    rng: &mut impl rand::Rng,
) -> Result<f64, EngineError> {
    let ctx = ParametricContext::new(est, spec)?;
    Ok(ctx.replicate(kind, rng))
}

/// One wild-bootstrap replicate value; see [`WildContext`] for batch use.
pub fn wild_bootstrap_replicate(
    samples: &[GroupSample],
    spec: &HypothesisSpec,
    kind: StatisticKind,
    weights: WildWeights,
    rng: &mut impl rand::Rng,
) -> Result<f64, EngineError> {
    let ctx = WildContext::new(samples, spec)?;
    Ok(ctx.replicate(kind, weights, rng))
}

/// Eigenvalue weights of the limiting weighted-chi-square law for the given
/// statistic, i.e. the eigenvalues of `R E(C, Sigma^) R` with
/// `R = (C Sigma^ C^T)^{1/2}`.
fn limit_weights(
    kind: StatisticKind,
    est: &CovEstimate,
    spec: &HypothesisSpec,
) -> Result<Vec<f64>, EngineError> {
    let w = weighting_base(est, spec);
    let sym = SymMatrix::symmetrize(&w);
    match kind {
        StatisticKind::Ats => {
            let tr = w.trace();
            if tr <= 0.0 {
                return Err(EngineError::ZeroTrace);
            }
            let eig = sym_eigen(&sym)?;
            Ok(eig.values.iter().map(|&l| l.max(0.0) / tr).collect())
        }
        StatisticKind::Wts => {
            // (C Sigma C^T)^+ (C Sigma C^T) has unit eigenvalues on the range
            let f = matrix_rank(&w);
            Ok(vec![1.0; f])
        }
        StatisticKind::Mats => {
            let r = crate::matview::psd_factor(&sym, crate::matview::PSD_CLAMP_TOL)?;
            let w0 = weighting_base_diag(est, spec);
            let inner = r.transpose() * sym_mp_inverse(&w0, None) * &r;
            let eig = sym_eigen(&SymMatrix::symmetrize(&inner))?;
            Ok(eig.values.iter().map(|&l| l.max(0.0)).collect())
        }
    }
}

fn weighted_chisq_draw(weights: &[f64], rng: &mut impl rand::Rng) -> f64 {
    use rand_distr::StandardNormal;
    weights
        .iter()
        .map(|&l| {
            let z: f64 = rng.sample(StandardNormal);
            l * z * z
        })
        .sum()
}

/// Empirical `(1 - alpha)` quantile of the Monte-Carlo ATS null law
/// `A_0 = sum_k lambda_k B_k / tr(C Sigma^ C^T)`, `B_k` i.i.d. chi^2_1.
pub fn mc_weighted_chisq_quantile(
    est: &CovEstimate,
    spec: &HypothesisSpec,
    alpha: f64,
    draws: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64, EngineError> {
    let weights = limit_weights(StatisticKind::Ats, est, spec)?;
    let mut sample: Vec<f64> = (0..draws).map(|_| weighted_chisq_draw(&weights, rng)).collect();
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(empirical_quantile(&sample, 1.0 - alpha))
}

/// Order-statistic quantile of a sorted sample: smallest value with at least
/// `level` mass at or below it.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let idx = ((level * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

fn bootstrap_p_value(replicates: &[f64], observed: f64) -> f64 {
    let exceed = replicates.iter().filter(|&&r| r >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Runs one hypothesis test end to end. `alpha` only controls whether a
/// critical value is reported; the p-value is always computed.
pub fn run_test(
    samples: &[GroupSample],
    spec: &HypothesisSpec,
    kind: StatisticKind,
    method: CalibrationMethod,
    plan: &ResamplingPlan,
    alpha: Option<f64>,
) -> Result<TestResult, EngineError> {
    let est = pooled_estimates(samples)?;
    run_test_with_estimates(samples, &est, spec, kind, method, plan, alpha)
}

/// As [`run_test`] but with precomputed estimates (the simulation loops reuse
/// them across statistics and methods).
pub fn run_test_with_estimates(
    samples: &[GroupSample],
    est: &CovEstimate,
    spec: &HypothesisSpec,
    kind: StatisticKind,
    method: CalibrationMethod,
    plan: &ResamplingPlan,
    alpha: Option<f64>,
) -> Result<TestResult, EngineError> {
    spec.validate(est.group_count(), est.dim())?;
    if matrix_rank(spec.c()) == 0 {
        return Err(EngineError::RankZero);
    }
    let mut warnings = Vec::new();
    if matches!(kind, StatisticKind::Wts) {
        let w = weighting_base(est, spec);
        let rank = matrix_rank(&w);
        if rank < spec.rows().min(matrix_rank(spec.c())) {
            warnings.push(format!(
                "C Sigma^ C^T is rank deficient ({rank}/{}); WTS validity requires Sigma > 0",
                spec.rows()
            ));
        }
    }
    let observed = statistic_value(kind, est, spec)?;

    let (p_value, replicates, critical_value) = match method {
        CalibrationMethod::ParametricBootstrap { replicates } => {
            let ctx = ParametricContext::new(est, spec)?;
            let values = map_indexed(plan.chunking, replicates, |r| {
                let mut rng = substream(plan.master_seed, &[tag::BOOTSTRAP, r as u64]);
                ctx.replicate(kind, &mut rng)
            });
            finish_resampled(&values, observed, alpha)
        }
        CalibrationMethod::WildBootstrap {
            replicates,
            weights,
        } => {
            let ctx = WildContext::new(samples, spec)?;
            let values = map_indexed(plan.chunking, replicates, |r| {
                let mut rng = substream(plan.master_seed, &[tag::BOOTSTRAP, r as u64]);
                ctx.replicate(kind, weights, &mut rng)
            });
            finish_resampled(&values, observed, alpha)
        }
        CalibrationMethod::MonteCarloWeightedChiSq { draws } => {
            let weights = limit_weights(kind, est, spec)?;
            let values = map_indexed(plan.chunking, draws, |r| {
                let mut rng = substream(plan.master_seed, &[tag::MC_QUANTILE, r as u64]);
                weighted_chisq_draw(&weights, &mut rng)
            });
            finish_resampled(&values, observed, alpha)
        }
        CalibrationMethod::ChiSquareAsymptotic => {
            if kind != StatisticKind::Wts {
                return Err(EngineError::MethodRequiresWts);
            }
            let f = matrix_rank(spec.c()) as f64;
            let chi = ChiSquared::new(f).expect("positive dof");
            let p = 1.0 - chi.cdf(observed);
            let crit = alpha.map(|a| chi.inverse_cdf(1.0 - a));
            (p.max(f64::MIN_POSITIVE), 0, crit)
        }
    };

    Ok(TestResult {
        kind,
        statistic: observed,
        p_value,
        method,
        replicates,
        critical_value,
        seed: plan.master_seed,
        warnings,
    })
}

fn finish_resampled(
    values: &[f64],
    observed: f64,
    alpha: Option<f64>,
) -> (f64, usize, Option<f64>) {
    let p = bootstrap_p_value(values, observed);
    let crit = alpha.map(|a| {
        let mut sorted = values.to_vec();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        empirical_quantile(&sorted, 1.0 - a)
    });
    (p, values.len(), crit)
}

/// Confidence interval for `tr(V_1)` obtained by inverting the given-trace
/// test.
#[derive(Debug, Clone, Serialize)]
pub struct TraceInterval {
    pub lo: f64,
    pub hi: f64,
    pub point: f64,
    pub alpha: f64,
    pub warnings: Vec<String>,
}

/// Inverts the one-sample given-trace test: the interval is
/// `{gamma : p-value(gamma) >= alpha}`, found by bisection outward from the
/// point estimate `tr(V^_1)`.
pub fn trace_confidence_interval(
    sample: &GroupSample,
    kind: StatisticKind,
    method: CalibrationMethod,
    alpha: f64,
    plan: &ResamplingPlan,
) -> Result<TraceInterval, EngineError> {
    let samples = std::slice::from_ref(sample);
    let est = pooled_estimates(samples)?;
    let d = est.dim();
    let point = est.groups()[0].v_hat.trace();

    // Replicate values do not depend on gamma (the bootstrap statistic
    // recenters at zero), so one replicate set serves every gamma.
    let probe = given_trace(d, point, Form::Reduced)?;
    let degenerate = weighting_base(&est, &probe).trace() <= 0.0;
    if degenerate {
        return Ok(TraceInterval {
            lo: point,
            hi: point,
            point,
            alpha,
            warnings: vec!["degenerate data: zero variance estimate; interval collapsed".into()],
        });
    }

    let p_at = |gamma: f64| -> Result<f64, EngineError> {
        let spec = given_trace(d, gamma, Form::Reduced)?;
        let result = run_test_with_estimates(samples, &est, &spec, kind, method, plan, None)?;
        Ok(result.p_value)
    };

    if p_at(point)? < alpha {
        return Err(EngineError::NonConvergent);
    }

    let scale = point.abs().max(1.0);
    let bound = |direction: f64| -> Result<f64, EngineError> {
        // expand until rejected, then bisect the boundary
        let mut step = 0.5 * scale;
        let mut outside = point;
        let mut found = false;
        for _ in 0..64 {
            outside = point + direction * step;
            if p_at(outside)? < alpha {
                found = true;
                break;
            }
            step *= 2.0;
        }
        if !found {
            return Err(EngineError::NonConvergent);
        }
        let mut inside = point;
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if p_at(mid)? >= alpha {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() <= 1e-9 * scale {
                return Ok(0.5 * (inside + outside));
            }
        }
        Err(EngineError::NonConvergent)
    };

    let lo = bound(-1.0)?;
    let hi = bound(1.0)?;
    Ok(TraceInterval {
        lo,
        hi,
        point,
        alpha,
        warnings: Vec::new(),
    })
}
