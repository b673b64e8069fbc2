//! Bootstrap replicate machinery.
//!
//! Both contexts precompute everything that is shared across replicates, most
//! importantly the projected group blocks: the statistic only depends on the
//! resampled vectors through `C_i y` and (for the MATS) the coordinate
//! variances, so replicates never assemble the `ap x ap` pooled matrix. With
//! a reduced-form `C` of few rows this is what makes large dimensions cheap.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::engine::{EngineError, StatisticKind, WildWeights};
use crate::estimate::{centered_vech_products, CovEstimate, GroupSample};
use crate::hypothesis::HypothesisSpec;
use crate::matview::{psd_factor, sym_mp_inverse, PSD_CLAMP_TOL};

/// Shared accumulator for one replicate: group contributions to `C ybar`,
/// to `C Sigma C^T` (or its trace / diagonal surrogate), assembled into the
/// statistic value.
struct Accum {
    kind: StatisticKind,
    n_total: f64,
    /// running `C ybar* = sum_i C_i ybar*_i`
    q: DVector<f64>,
    /// ATS: running trace of `C Sigma* C^T`
    trace: f64,
    /// WTS: running `C Sigma* C^T`
    w: DMatrix<f64>,
    /// MATS: running `C Sigma_0* C^T`
    w0: DMatrix<f64>,
}

impl Accum {
    fn new(kind: StatisticKind, m: usize, n_total: f64) -> Self {
        let square = match kind {
            StatisticKind::Ats => 0,
            StatisticKind::Wts | StatisticKind::Mats => m,
        };
        Accum {
            kind,
            n_total,
            q: DVector::zeros(m),
            trace: 0.0,
            w: DMatrix::zeros(square, if kind == StatisticKind::Wts { m } else { 0 }),
            w0: DMatrix::zeros(square, if kind == StatisticKind::Mats { m } else { 0 }),
        }
    }

    /// Folds one group's projected draws `t_k = C_i y_k`; `coords` are the
    /// raw coordinates (needed by the MATS only).
    fn push_group(&mut self, scale_n: f64, ts: &[DVector<f64>], coords: Option<GroupCoords>) {
        let n = ts.len() as f64;
        let mut tbar = DVector::zeros(self.q.len());
        for t in ts {
            tbar += t;
        }
        tbar /= n;
        self.q += &tbar;
        let weight = self.n_total / scale_n;
        match self.kind {
            StatisticKind::Ats => {
                let mut ss = 0.0;
                for t in ts {
                    ss += (t - &tbar).norm_squared();
                }
                self.trace += weight / (n - 1.0) * ss;
            }
            StatisticKind::Wts => {
                let f = weight / (n - 1.0);
                for t in ts {
                    let c = t - &tbar;
                    self.w.ger(f, &c, &c, 1.0);
                }
            }
            StatisticKind::Mats => {
                let gc = coords.expect("MATS needs coordinates");
                for (j, var) in gc.variances.iter().enumerate() {
                    let col = gc.c_block.column(j);
                    self.w0.ger(weight * var, &col, &col, 1.0);
                }
            }
        }
    }

    fn finish(self) -> f64 {
        let n = self.n_total;
        match self.kind {
            StatisticKind::Ats => {
                if self.trace <= 0.0 {
                    0.0
                } else {
                    n * self.q.norm_squared() / self.trace
                }
            }
            StatisticKind::Wts => {
                let winv = sym_mp_inverse(&self.w, None);
                n * (self.q.transpose() * winv * &self.q)[0]
            }
            StatisticKind::Mats => {
                let winv = sym_mp_inverse(&self.w0, None);
                n * (self.q.transpose() * winv * &self.q)[0]
            }
        }
    }
}

/// Per-group coordinate variances for the diagonal surrogate.
struct GroupCoords<'a> {
    variances: Vec<f64>,
    c_block: &'a DMatrix<f64>,
}

/// Coordinate-wise sample variances (denominator `n - 1`).
fn coord_variances(ys: &[DVector<f64>]) -> Vec<f64> {
    let n = ys.len() as f64;
    let p = ys[0].len();
    let mut sum = vec![0.0; p];
    let mut sum2 = vec![0.0; p];
    for y in ys {
        for j in 0..p {
            sum[j] += y[j];
            sum2[j] += y[j] * y[j];
        }
    }
    (0..p)
        .map(|j| ((sum2[j] - sum[j] * sum[j] / n) / (n - 1.0)).max(0.0))
        .collect()
}

struct ParametricGroup {
    n: usize,
    /// `C_i L_i` so that `C_i y = proj z` for `y = L_i z`
    proj: DMatrix<f64>,
    /// `M` with `M M^T = C_i Sigma^_i C_i^T`, kept when the hypothesis has
    /// fewer rows than the vech dimension: the ATS/WTS replicate depends on
    /// the draws only through `t = C_i y ~ N_m(0, C_i Sigma^_i C_i^T)`, so
    /// drawing `t = M u` with `m` normals per observation is equal in law and
    /// much cheaper than `proj z` with `p` normals
    row_factor: Option<DMatrix<f64>>,
    /// `L_i` with `L_i L_i^T = Sigma^_i`
    factor: DMatrix<f64>,
    c_block: DMatrix<f64>,
}

/// Parametric bootstrap: groups of `n_i` i.i.d. `N_p(0, Sigma^_i)` draws,
/// statistic recentered at zero and reweighted by the resampled `Sigma*`.
pub struct ParametricContext {
    groups: Vec<ParametricGroup>,
    m: usize,
    n_total: f64,
}

impl ParametricContext {
    pub fn new(est: &CovEstimate, spec: &HypothesisSpec) -> Result<Self, EngineError> {
        spec.validate(est.group_count(), est.dim())?;
        let groups = est
            .groups()
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let factor = psd_factor(&g.sigma_hat, PSD_CLAMP_TOL)?;
                let c_block = spec.group_block(i);
                let proj = &c_block * &factor;
                let row_factor = if proj.nrows() < proj.ncols() {
                    let gram = crate::matview::SymMatrix::symmetrize(&(&proj * proj.transpose()));
                    Some(psd_factor(&gram, PSD_CLAMP_TOL)?)
                } else {
                    None
                };
                Ok(ParametricGroup {
                    n: g.n,
                    proj,
                    row_factor,
                    factor,
                    c_block,
                })
            })
            .collect::<Result<Vec<_>, EngineError>>()?;
        Ok(ParametricContext {
            groups,
            m: spec.rows(),
            n_total: est.total_n() as f64,
        })
    }

    pub fn replicate(&self, kind: StatisticKind, rng: &mut impl Rng) -> f64 {
        let mut acc = Accum::new(kind, self.m, self.n_total);
        let needs_coords = kind == StatisticKind::Mats;
        for g in &self.groups {
            let p = g.factor.ncols();
            let mut ts = Vec::with_capacity(g.n);
            let mut ys = Vec::with_capacity(if needs_coords { g.n } else { 0 });
            let row_factor = (!needs_coords).then_some(()).and(g.row_factor.as_ref());
            for _ in 0..g.n {
                if let Some(rf) = row_factor {
                    let u =
                        DVector::from_fn(rf.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                    ts.push(rf * u);
                } else {
                    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
                    if needs_coords {
                        let y = &g.factor * &z;
                        ts.push(&g.c_block * &y);
                        ys.push(y);
                    } else {
                        ts.push(&g.proj * &z);
                    }
                }
            }
            let coords = needs_coords.then(|| GroupCoords {
                variances: coord_variances(&ys),
                c_block: &g.c_block,
            });
            acc.push_group(g.n as f64, &ts, coords);
        }
        acc.finish()
    }
}

struct WildGroup {
    n: usize,
    /// centered vech cross products `u_ik`
    us: Vec<DVector<f64>>,
    /// projections `t_ik = C_i u_ik`
    ts: Vec<DVector<f64>>,
    c_block: DMatrix<f64>,
}

/// Wild bootstrap: the centered vech cross products are reweighted by i.i.d.
/// mean-zero unit-variance multipliers.
pub struct WildContext {
    groups: Vec<WildGroup>,
    m: usize,
    n_total: f64,
}

impl WildContext {
    pub fn new(samples: &[GroupSample], spec: &HypothesisSpec) -> Result<Self, EngineError> {
        let est_dims = samples.first().ok_or(crate::estimate::EstimateError::NoGroups)?;
        spec.validate(samples.len(), est_dims.dim())?;
        let n_total: usize = samples.iter().map(|s| s.len()).sum();
        let groups = samples
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let c_block = spec.group_block(i);
                let us = centered_vech_products(g);
                let ts = us.iter().map(|u| &c_block * u).collect();
                WildGroup {
                    n: g.len(),
                    us,
                    ts,
                    c_block,
                }
            })
            .collect();
        Ok(WildContext {
            groups,
            m: spec.rows(),
            n_total: n_total as f64,
        })
    }

    pub fn replicate(&self, kind: StatisticKind, weights: WildWeights, rng: &mut impl Rng) -> f64 {
        let mut acc = Accum::new(kind, self.m, self.n_total);
        let needs_coords = kind == StatisticKind::Mats;
        for g in &self.groups {
            let ws: Vec<f64> = (0..g.n)
                .map(|_| match weights {
                    WildWeights::Rademacher => {
                        if rng.gen::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    WildWeights::Gaussian => rng.sample(StandardNormal),
                })
                .collect();
            let ts: Vec<DVector<f64>> =
                g.ts.iter().zip(&ws).map(|(t, &w)| t * w).collect();
            let ys: Vec<DVector<f64>>;
            let coords = if needs_coords {
                ys = g.us.iter().zip(&ws).map(|(u, &w)| u * w).collect();
                Some(GroupCoords {
                    variances: coord_variances(&ys),
                    c_block: &g.c_block,
                })
            } else {
                None
            };
            acc.push_group(g.n as f64, &ts, coords);
        }
        acc.finish()
    }
}
