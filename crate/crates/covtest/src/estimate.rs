//! Empirical covariance and fourth-moment covariance estimators, per group
//! and pooled.
//!
//! For group `i` with centered observations `X~_ik = X_ik - mean`, the
//! estimators are
//!
//! ```text
//! V^_i     = (n_i - 1)^-1  sum_k X~_ik X~_ik^T
//! Sigma^_i = (n_i - 1)^-1  sum_k [vech(X~_ik X~_ik^T - A_i)][...]^T,
//!            A_i = n_i^-1 sum_l X~_il X~_il^T
//! Sigma^   = direct_sum_i (N / n_i) Sigma^_i
//! ```
//!
//! The `n_i - 1` denominators are used exactly as printed; no shrinkage or
//! bias correction is applied.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::matview::{direct_sum, vech, SymMatrix, VechVector};

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("group {0} has {1} observation(s); at least 2 are required")]
    TooFewObservations(String, usize),
    #[error("group {0} has dimension {1}, expected {2}")]
    DimensionMismatch(String, usize, usize),
    #[error("group {0} contains a non-finite value")]
    NonFinite(String),
    #[error("no groups supplied")]
    NoGroups,
}

/// One group's observations: `n_i` vectors of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    id: String,
    observations: Vec<DVector<f64>>,
}

impl GroupSample {
    pub fn new(
        id: impl Into<String>,
        observations: Vec<DVector<f64>>,
    ) -> Result<Self, EstimateError> {
        let id = id.into();
        if observations.len() < 2 {
            return Err(EstimateError::TooFewObservations(id, observations.len()));
        }
        let d = observations[0].len();
        for obs in &observations {
            if obs.len() != d {
                return Err(EstimateError::DimensionMismatch(id, obs.len(), d));
            }
            if obs.iter().any(|x| !x.is_finite()) {
                return Err(EstimateError::NonFinite(id));
            }
        }
        Ok(GroupSample { id, observations })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.observations[0].len()
    }

    pub fn observations(&self) -> &[DVector<f64>] {
        &self.observations
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for x in &self.observations {
            m += x;
        }
        m / self.len() as f64
    }

    /// Centered observations `X~_ik = X_ik - mean`.
    pub fn centered(&self) -> Vec<DVector<f64>> {
        let m = self.mean();
        self.observations.iter().map(|x| x - &m).collect()
    }
}

/// `V^_i` and its half-vectorization.
pub fn empirical_cov(g: &GroupSample) -> (SymMatrix, VechVector) {
    let d = g.dim();
    let n = g.len() as f64;
    let centered = g.centered();
    let mut acc = DMatrix::zeros(d, d);
    for c in &centered {
        acc += c * c.transpose();
    }
    acc /= n - 1.0;
    let v = SymMatrix::symmetrize(&acc);
    let vech_v = vech(&v);
    (v, vech_v)
}

/// Fourth-moment covariance `Sigma^_i` (p x p, symmetric PSD).
pub fn fourth_moment_cov(g: &GroupSample) -> SymMatrix {
    let products = centered_vech_products(g);
    let p = products[0].len();
    let n = products.len() as f64;
    let mut acc = DMatrix::zeros(p, p);
    for u in &products {
        acc += u * u.transpose();
    }
    acc /= n - 1.0;
    SymMatrix::symmetrize(&acc)
}

/// The centered vectorized cross products
/// `vech(X~_ik X~_ik^T) - n_i^-1 sum_l vech(X~_il X~_il^T)`,
/// shared between `Sigma^_i` and the wild bootstrap.
pub fn centered_vech_products(g: &GroupSample) -> Vec<DVector<f64>> {
    let centered = g.centered();
    let vechs: Vec<DVector<f64>> = centered
        .iter()
        .map(|c| {
            let outer = c * c.transpose();
            vech(&SymMatrix::symmetrize(&outer)).into_vector()
        })
        .collect();
    let p = vechs[0].len();
    let mut mean = DVector::zeros(p);
    for v in &vechs {
        mean += v;
    }
    mean /= vechs.len() as f64;
    vechs.into_iter().map(|v| v - &mean).collect()
}

/// Per-group estimates for group `i`.
#[derive(Debug, Clone)]
pub struct GroupEstimate {
    pub group_id: String,
    pub n: usize,
    pub v_hat: SymMatrix,
    pub vech_v: VechVector,
    pub sigma_hat: SymMatrix,
}

/// Pooled estimates across all groups.
#[derive(Debug, Clone)]
pub struct CovEstimate {
    groups: Vec<GroupEstimate>,
    d: usize,
    total_n: usize,
}

impl CovEstimate {
    pub fn groups(&self) -> &[GroupEstimate] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vech_len(&self) -> usize {
        crate::matview::vech_len(self.d)
    }

    pub fn total_n(&self) -> usize {
        self.total_n
    }

    pub fn kappa(&self, i: usize) -> f64 {
        self.groups[i].n as f64 / self.total_n as f64
    }

    /// Stacked `v^ = (v^_1, ..., v^_a)`.
    pub fn pooled_vech(&self) -> DVector<f64> {
        let p = self.vech_len();
        let mut v = DVector::zeros(self.groups.len() * p);
        for (i, g) in self.groups.iter().enumerate() {
            v.rows_mut(i * p, p).copy_from(g.vech_v.as_vector());
        }
        v
    }

    /// Block-diagonal `Sigma^ = direct_sum (N / n_i) Sigma^_i`.
    pub fn pooled_sigma(&self) -> DMatrix<f64> {
        let n = self.total_n as f64;
        let blocks: Vec<DMatrix<f64>> = self
            .groups
            .iter()
            .map(|g| g.sigma_hat.as_dense() * (n / g.n as f64))
            .collect();
        direct_sum(&blocks).expect("at least one group")
    }

    /// Diagonal of `Sigma^` as a vector of length `a * p`.
    pub fn pooled_sigma_diagonal(&self) -> DVector<f64> {
        let p = self.vech_len();
        let n = self.total_n as f64;
        let mut diag = DVector::zeros(self.groups.len() * p);
        for (i, g) in self.groups.iter().enumerate() {
            let scale = n / g.n as f64;
            for j in 0..p {
                diag[i * p + j] = scale * g.sigma_hat[(j, j)];
            }
        }
        diag
    }
}

/// Estimates every group and pools the results.
pub fn pooled_estimates(samples: &[GroupSample]) -> Result<CovEstimate, EstimateError> {
    let first = samples.first().ok_or(EstimateError::NoGroups)?;
    let d = first.dim();
    for g in samples {
        if g.dim() != d {
            return Err(EstimateError::DimensionMismatch(
                g.id().to_string(),
                g.dim(),
                d,
            ));
        }
    }
    let groups: Vec<GroupEstimate> = samples
        .iter()
        .map(|g| {
            let (v_hat, vech_v) = empirical_cov(g);
            let sigma_hat = fourth_moment_cov(g);
            GroupEstimate {
                group_id: g.id().to_string(),
                n: g.len(),
                v_hat,
                vech_v,
                sigma_hat,
            }
        })
        .collect();
    let total_n = samples.iter().map(|g| g.len()).sum();
    Ok(CovEstimate { groups, d, total_n })
}
