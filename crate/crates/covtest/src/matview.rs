//! Half-vectorization and the small dense linear-algebra kernel the rest of
//! the crate builds on.
//!
//! The vech order used throughout is row-wise over the upper triangle:
//! `(v11, v12, ..., v1d, v22, ..., v2d, ..., vdd)`. For a symmetric matrix
//! this coincides with the column-major lower-triangular order used by most
//! other libraries; it differs from the column-major *upper*-triangular
//! order (`v11, v12, v22, v13, ...`), for which [`VechVector::to_col_major_upper`]
//! is provided as a conversion helper.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatError {
    #[error("vector of length {0} is not a triangular number d(d+1)/2")]
    NonTriangularLength(usize),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("direct sum of an empty block list")]
    EmptyList,
    #[error("symmetric eigendecomposition did not converge")]
    NoConvergence,
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
}

/// Symmetric `d x d` matrix. Entries are exactly symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds from `f(r, s)` evaluated once per unordered pair, so the result
    /// is exactly symmetric even if `f` is not.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for s in r..d {
                let x = f(r, s);
                m[(r, s)] = x;
                m[(s, r)] = x;
            }
        }
        SymMatrix { m }
    }

    pub fn from_dense(m: DMatrix<f64>) -> Result<Self, MatError> {
        if m.nrows() != m.ncols() {
            return Err(MatError::NotSymmetric);
        }
        for r in 0..m.nrows() {
            for s in (r + 1)..m.ncols() {
                if m[(r, s)] != m[(s, r)] {
                    return Err(MatError::NotSymmetric);
                }
            }
        }
        Ok(SymMatrix { m })
    }

    /// Symmetrizes `(m + m^T)/2`; for matrices symmetric up to rounding.
    pub fn symmetrize(m: &DMatrix<f64>) -> Self {
        SymMatrix::from_fn(m.nrows().min(m.ncols()), |r, s| {
            0.5 * (m[(r, s)] + m[(s, r)])
        })
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(d, d),
        }
    }

    pub fn from_diagonal(diag: &DVector<f64>) -> Self {
        SymMatrix {
            m: DMatrix::from_diagonal(diag),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_dense(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_dense(self) -> DMatrix<f64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { m: &self.m * s }
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.m[idx]
    }
}

impl serde::Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.m[(r, c)]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        let d = rows.len();
        let mut m = DMatrix::zeros(d, d);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(serde::de::Error::custom(format!(
                    "row {r} has {} entries in a {d}-row matrix",
                    row.len()
                )));
            }
            for (c, &x) in row.iter().enumerate() {
                m[(r, c)] = x;
            }
        }
        SymMatrix::from_dense(m).map_err(serde::de::Error::custom)
    }
}

/// Half-vectorized symmetric matrix: `p = d(d+1)/2` values in row-wise
/// upper-triangular order.
#[derive(Debug, Clone, PartialEq)]
pub struct VechVector {
    dim_source: usize,
    values: DVector<f64>,
}

/// Number of vech entries for dimension `d`.
pub fn vech_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Position of entry `(r, s)` (`r <= s`, zero-based) in vech order.
pub fn vech_index(d: usize, r: usize, s: usize) -> usize {
    debug_assert!(r <= s && s < d);
    r * (2 * d - r + 1) / 2 + (s - r)
}

/// Inverts `p = d(d+1)/2`; `None` when `p` is not triangular.
fn triangular_dim(p: usize) -> Option<usize> {
    let d = ((2.0 * p as f64 + 0.25).sqrt() - 0.5).round() as usize;
    (vech_len(d) == p).then_some(d)
}

impl VechVector {
    pub fn from_vector(values: DVector<f64>) -> Result<Self, MatError> {
        match triangular_dim(values.len()) {
            Some(d) => Ok(VechVector {
                dim_source: d,
                values,
            }),
            None => Err(MatError::NonTriangularLength(values.len())),
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, MatError> {
        Self::from_vector(DVector::from_column_slice(values))
    }

    /// `h_d`: indicator of the diagonal positions, so that
    /// `h_d^T vech(S) == tr(S)` exactly.
    pub fn diagonal_indicator(d: usize) -> Self {
        let mut v = DVector::zeros(vech_len(d));
        for r in 0..d {
            v[vech_index(d, r, r)] = 1.0;
        }
        VechVector {
            dim_source: d,
            values: v,
        }
    }

    pub fn dim_source(&self) -> usize {
        self.dim_source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }

    /// Reorders into column-major upper-triangular order
    /// `(v11, v12, v22, v13, v23, v33, ...)`.
    pub fn to_col_major_upper(&self) -> DVector<f64> {
        let d = self.dim_source;
        let mut out = DVector::zeros(self.len());
        let mut k = 0;
        for s in 0..d {
            for r in 0..=s {
                out[k] = self.values[vech_index(d, r, s)];
                k += 1;
            }
        }
        out
    }
}

/// Row-wise upper-triangular half-vectorization.
pub fn vech(s: &SymMatrix) -> VechVector {
    let d = s.dim();
    let mut v = DVector::zeros(vech_len(d));
    let mut k = 0;
    for r in 0..d {
        for c in r..d {
            v[k] = s[(r, c)];
            k += 1;
        }
    }
    VechVector {
        dim_source: d,
        values: v,
    }
}

/// Inverse of [`vech`]; exact round-trip.
pub fn unvech(v: &VechVector) -> SymMatrix {
    let d = v.dim_source;
    SymMatrix::from_fn(d, |r, s| v.values[vech_index(d, r, s)])
}

/// Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Block-diagonal assembly; off-blocks exactly zero.
pub fn direct_sum(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>, MatError> {
    if blocks.is_empty() {
        return Err(MatError::EmptyList);
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    Ok(out)
}

/// Default Moore-Penrose cutoff: `max(m, k) * eps`, relative to the largest
/// singular value. Rank deficiency of the estimated covariance is expected at
/// small sample sizes, so the cutoff is overridable.
pub fn default_mp_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Moore-Penrose pseudo-inverse. Singular values `<= rel_tol * sigma_max` are
/// treated as zero; `rel_tol = None` uses [`default_mp_tol`]. For square
/// symmetric input prefer [`sym_mp_inverse`]: the SVD can mispair left and
/// right singular vectors (and even misreport singular values) on exactly
/// rank-deficient matrices.
pub fn mp_inverse(a: &DMatrix<f64>, rel_tol: Option<f64>) -> DMatrix<f64> {
    let rel = rel_tol.unwrap_or_else(|| default_mp_tol(a.nrows(), a.ncols()));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel * smax;
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            let vi = vt.row(i).transpose();
            let ui = u.column(i);
            out += vi * ui.transpose() / s;
        }
    }
    out
}

/// Moore-Penrose pseudo-inverse of a (numerically) symmetric square matrix,
/// built from the symmetric eigendecomposition of `(A + A^T) / 2`.
/// Eigenvalues with `|lambda| <= rel_tol * |lambda|_max` are treated as zero;
/// `rel_tol = None` uses [`default_mp_tol`]. Unlike the SVD route this keeps
/// `A A^+ A = A` to machine precision even for exactly rank-deficient input.
pub fn sym_mp_inverse(a: &DMatrix<f64>, rel_tol: Option<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "sym_mp_inverse needs a square matrix");
    let rel = rel_tol.unwrap_or_else(|| default_mp_tol(a.nrows(), a.ncols()));
    let sym = (a + a.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let cut = rel * lmax;
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > cut && l != 0.0 {
            let vi = eig.eigenvectors.column(i);
            out.ger(1.0 / l, &vi, &vi, 1.0);
        }
    }
    out
}

/// Numerical rank via SVD at the default cutoff.
pub fn matrix_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = default_mp_tol(a.nrows(), a.ncols()) * smax;
    sv.iter().filter(|&&s| s > cut && s > 0.0).count()
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Descending eigenvalues.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(s: &SymMatrix) -> Result<SymEigen, MatError> {
    let eig = nalgebra::SymmetricEigen::try_new(s.m.clone(), f64::EPSILON, 10_000)
        .ok_or(MatError::NoConvergence)?;
    let d = s.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    Ok(SymEigen { values, vectors })
}

/// Factor `L` with `L L^T == S` for a numerically PSD symmetric matrix,
/// computed from the eigendecomposition so rank-deficient inputs are fine.
/// Eigenvalues in `[-clamp_tol * ||S||, 0)` are clamped to zero; anything
/// below that range signals a broken estimator upstream and errors.
pub fn psd_factor(s: &SymMatrix, clamp_tol: f64) -> Result<DMatrix<f64>, MatError> {
    let eig = sym_eigen(s)?;
    let scale = s.norm();
    let floor = -clamp_tol * scale.max(1.0 * f64::MIN_POSITIVE);
    let d = s.dim();
    let mut l = eig.vectors;
    for j in 0..d {
        let lam = eig.values[j];
        if lam < floor {
            return Err(MatError::NotPsd { min_eig: lam });
        }
        let sq = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(sq);
    }
    Ok(l)
}

/// Default eigenvalue clamp for [`psd_factor`].
pub const PSD_CLAMP_TOL: f64 = 1e-10;

/// Symmetric PSD square root `S^{1/2} = U sqrt(Lambda) U^T`, the canonical
/// `V^{1/2}` of the observation model. Same clamping policy as [`psd_factor`].
pub fn psd_sqrt(s: &SymMatrix, clamp_tol: f64) -> Result<SymMatrix, MatError> {
    let eig = sym_eigen(s)?;
    let scale = s.norm();
    let floor = -clamp_tol * scale.max(1.0 * f64::MIN_POSITIVE);
    let d = s.dim();
    let mut half = eig.vectors.clone();
    for j in 0..d {
        let lam = eig.values[j];
        if lam < floor {
            return Err(MatError::NotPsd { min_eig: lam });
        }
        half.column_mut(j).scale_mut(lam.max(0.0).sqrt());
    }
    Ok(SymMatrix::symmetrize(&(half * eig.vectors.transpose())))
}

/// Centering matrix `P_a = I_a - J_a / a`.
pub fn centering_matrix(a: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a, a, |r, s| {
        (if r == s { 1.0 } else { 0.0 }) - 1.0 / a as f64
    })
}

/// Matrix of ones `J_d`.
pub fn ones_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_element(d, d, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_sym(d: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn vech_identity_2() {
        let v = vech(&SymMatrix::identity(2));
        assert_eq!(v.as_vector().as_slice(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn vech_ar_2() {
        // (V)_{ij} = 0.6^{|i-j|} at d = 2
        let s = SymMatrix::from_fn(2, |r, c| 0.6f64.powi((r as i32 - c as i32).abs()));
        let v = vech(&s);
        assert_eq!(v.as_vector().as_slice(), &[1.0, 0.6, 1.0]);
    }

    #[test]
    fn vech_roundtrip_4() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let s = random_sym(4, &mut rng);
        assert_eq!(unvech(&vech(&s)), s);
    }

    #[test]
    fn unvech_trivial() {
        let v = VechVector::from_slice(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(unvech(&v), SymMatrix::identity(2));
        let v = VechVector::from_slice(&[1.0, 0.6, 1.0]).unwrap();
        let s = unvech(&v);
        assert_eq!(s[(0, 1)], 0.6);
        assert_eq!(s[(1, 0)], 0.6);
    }

    #[test]
    fn unvech_non_triangular_length() {
        assert_eq!(
            VechVector::from_slice(&[1.0; 5]).unwrap_err(),
            MatError::NonTriangularLength(5)
        );
    }

    #[test]
    fn kron_identities() {
        let i2 = DMatrix::identity(2, 2);
        let i3 = DMatrix::identity(3, 3);
        assert_eq!(kron(&i2, &i3), DMatrix::identity(6, 6));

        let row = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let k = kron(&row, &i2);
        let expected =
            DMatrix::from_row_slice(2, 4, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_elementwise_oracle() {
        // brute-force definition: (A (x) B)[i*mB + k, j*nB + l] = A[i,j] B[k,l]
        let p2 = centering_matrix(2);
        let j2 = ones_matrix(2);
        let k = kron(&p2, &j2);
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        assert_eq!(k[(2 * i + r, 2 * j + s)], p2[(i, j)] * j2[(r, s)]);
                    }
                }
            }
        }
    }

    #[test]
    fn direct_sum_cases() {
        assert_eq!(
            direct_sum(&[DMatrix::identity(1, 1)]).unwrap(),
            DMatrix::identity(1, 1)
        );
        let d = direct_sum(&[
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 3.0),
        ])
        .unwrap();
        assert_eq!(d, DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 3.0])));
        assert_eq!(direct_sum(&[]).unwrap_err(), MatError::EmptyList);
    }

    #[test]
    fn direct_sum_elementwise_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let d = direct_sum(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(d.nrows(), 6);
        for r in 0..6 {
            for c in 0..6 {
                let expected = match (r < 3, c < 3) {
                    (true, true) => a[(r, c)],
                    (false, false) => b[(r - 3, c - 3)],
                    _ => 0.0,
                };
                assert_eq!(d[(r, c)], expected);
            }
        }
    }

    fn penrose_residual(a: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
        let r1 = (a * g * a - a).norm();
        let r2 = (g * a * g - g).norm();
        let aga = a * g;
        let r3 = (&aga - aga.transpose()).norm();
        let gag = g * a;
        let r4 = (&gag - gag.transpose()).norm();
        r1.max(r2).max(r3).max(r4)
    }

    #[test]
    fn mp_inverse_trivial() {
        let i3 = DMatrix::identity(3, 3);
        assert_relative_eq!(mp_inverse(&i3, None), i3, epsilon = 1e-12);

        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 0.0]));
        let g = mp_inverse(&d, None);
        assert_relative_eq!(g[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mp_inverse_rank2_psd() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let b = DMatrix::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
        let a = &b * b.transpose(); // rank-2 PSD 4x4
        let g = mp_inverse(&a, None);
        assert!(penrose_residual(&a, &g) < 1e-10);
    }

    #[test]
    fn sym_eigen_trivial() {
        let s = SymMatrix::from_diagonal(&DVector::from_column_slice(&[3.0, 1.0]));
        let e = sym_eigen(&s).unwrap();
        assert_relative_eq!(e.values[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 1.0, epsilon = 1e-12);

        let j2 = SymMatrix::from_fn(2, |_, _| 1.0);
        let e = sym_eigen(&j2).unwrap();
        assert_relative_eq!(e.values[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sym_eigen_reconstruction() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let s = random_sym(5, &mut rng);
        let e = sym_eigen(&s).unwrap();
        let lam = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * lam * e.vectors.transpose();
        assert!((rec - s.as_dense()).norm() < 1e-10 * s.norm().max(1.0));
        // eigenvalue sum equals trace
        let sum: f64 = e.values.iter().sum();
        assert!((sum - s.trace()).abs() < 1e-10 * s.norm().max(1.0));
    }

    #[test]
    fn sym_mp_inverse_exact_rank_one() {
        // u1^T Sigma u1 / 1 times u1 u1^T: an exactly rank-1 PSD matrix of the
        // kind the weighting step produces; the SVD route misreports both the
        // top singular value and the vector pairing here, the symmetric route
        // must satisfy all Penrose properties and have trace 1 / lambda_1
        let p = 15;
        let mut h = DVector::zeros(p);
        for &i in &[0usize, 5, 9, 12, 14] {
            h[i] = 1.0;
        }
        let sigma =
            DMatrix::from_fn(p, p, |r, c| {
                0.3f64.powi((r as i32 - c as i32).abs()) + f64::from(r == c)
            });
        let c = &h * h.transpose() / 5.0;
        let w = &c * &sigma * c.transpose();
        let g = sym_mp_inverse(&w, None);
        assert!((&w * &g * &w - &w).norm() < 1e-12 * w.norm());
        assert!((&g * &w * &g - &g).norm() < 1e-12 * g.norm());
        assert!((&g - g.transpose()).norm() == 0.0);
        // lambda_1 = h^T Sigma h / 5 since w = (h^T Sigma h / 25) h h^T
        let lambda1 = (h.transpose() * &sigma * &h)[0] / 5.0;
        assert_relative_eq!(g.trace(), 1.0 / lambda1, epsilon = 1e-12);
    }

    #[test]
    fn sym_mp_inverse_matches_true_inverse_when_full_rank() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let s = random_sym(6, &mut rng);
        let a = s.as_dense() + DMatrix::identity(6, 6) * 10.0;
        let g = sym_mp_inverse(&a, None);
        assert_relative_eq!(&a * &g, DMatrix::identity(6, 6), epsilon = 1e-10);
    }

    #[test]
    fn psd_factor_cases() {
        let l = psd_factor(&SymMatrix::identity(3), PSD_CLAMP_TOL).unwrap();
        assert_relative_eq!(&l * l.transpose(), DMatrix::identity(3, 3), epsilon = 1e-12);

        let s = SymMatrix::from_diagonal(&DVector::from_column_slice(&[4.0, 0.0]));
        let l = psd_factor(&s, PSD_CLAMP_TOL).unwrap();
        assert_relative_eq!(&l * l.transpose(), s.as_dense().clone(), epsilon = 1e-12);
    }

    #[test]
    fn psd_factor_empirical_cov() {
        // empirical covariance of 10 random observations at d = 3
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let obs: Vec<DVector<f64>> = (0..10)
            .map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let mean = obs.iter().sum::<DVector<f64>>() / 10.0;
        let mut s = DMatrix::zeros(3, 3);
        for x in &obs {
            let c = x - &mean;
            s += &c * c.transpose();
        }
        s /= 9.0;
        let s = SymMatrix::symmetrize(&s);
        let l = psd_factor(&s, PSD_CLAMP_TOL).unwrap();
        assert!((&l * l.transpose() - s.as_dense()).norm() < 1e-8);
    }

    #[test]
    fn psd_sqrt_squares_back_and_is_symmetric() {
        let v = SymMatrix::from_fn(4, |r, c| 0.6f64.powi((r as i32 - c as i32).abs()));
        let half = psd_sqrt(&v, PSD_CLAMP_TOL).unwrap();
        let sq = half.as_dense() * half.as_dense();
        assert!((sq - v.as_dense()).norm() < 1e-12);
        assert!(matches!(
            psd_sqrt(
                &SymMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0])),
                PSD_CLAMP_TOL
            ),
            Err(MatError::NotPsd { .. })
        ));
    }

    #[test]
    fn symmatrix_serde_roundtrip() {
        let v = SymMatrix::from_fn(3, |r, c| (r + c) as f64);
        let json = serde_json::to_string(&v).unwrap();
        let back: SymMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(v, back);
        assert!(serde_json::from_str::<SymMatrix>("[[1.0,2.0],[3.0,4.0]]").is_err());
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let s = SymMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -0.5]));
        assert!(matches!(
            psd_factor(&s, PSD_CLAMP_TOL),
            Err(MatError::NotPsd { .. })
        ));
    }

    #[test]
    fn diagonal_indicator_contracts_to_trace() {
        for d in 1..6 {
            let h = VechVector::diagonal_indicator(d);
            let ones: f64 = h.as_vector().iter().sum();
            assert_eq!(ones, d as f64);
            let mut rng = ChaCha12Rng::seed_from_u64(d as u64);
            let s = random_sym(d, &mut rng);
            let tr = h.as_vector().dot(vech(&s).as_vector());
            assert_eq!(tr, (0..d).map(|i| s[(i, i)]).sum::<f64>());
        }
    }

    #[test]
    fn centering_matrix_idempotent() {
        for a in 2..6 {
            let p = centering_matrix(a);
            assert!((&p * &p - &p).norm() < 1e-12);
            assert!((&p - p.transpose()).norm() == 0.0);
        }
    }

    #[test]
    fn mp_inverse_penrose_large_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for &n in &[8usize, 20, 40] {
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let g = mp_inverse(&a, None);
            assert!(penrose_residual(&a, &g) < 1e-10 * a.norm().max(1.0) * n as f64);
        }
    }

    proptest! {
        #[test]
        fn prop_vech_roundtrip(d in 1usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let s = random_sym(d, &mut rng);
            prop_assert_eq!(unvech(&vech(&s)), s);
        }

        #[test]
        fn prop_vech_unvech_roundtrip(d in 1usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let v = VechVector::from_vector(
                DVector::from_fn(vech_len(d), |_, _| rng.gen_range(-1.0..1.0))).unwrap();
            prop_assert_eq!(&vech(&unvech(&v)), &v);
        }
    }
}
