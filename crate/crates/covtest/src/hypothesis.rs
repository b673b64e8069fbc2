//! Catalog of hypothesis matrices `(C, zeta)` for linear covariance
//! hypotheses `H0: C v = zeta` on the stacked half-vectorized covariances.
//!
//! Each cataloged hypothesis comes in two forms describing the same null set:
//! a `Quadratic` projection-style matrix and a `Reduced` matrix with as few
//! rows as possible. The reduced forms can be dramatically cheaper for the
//! bootstrap procedures, since the statistic only ever needs `C`-projected
//! quantities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matview::{
    centering_matrix, kron, ones_matrix, vech, vech_index, vech_len, SymMatrix, VechVector,
};

#[derive(Debug, Error, PartialEq)]
pub enum HypothesisError {
    #[error("at least {0} groups are required, got {1}")]
    BadGroupCount(usize, usize),
    #[error("dimension must be at least {0}, got {1}")]
    BadDimension(usize, usize),
    #[error("hypothesis matrix has {0} columns, expected a*p = {1}")]
    DimensionMismatch(usize, usize),
    #[error("hypothesis has {0} rows, more than a*p = {1}")]
    TooManyRows(usize, usize),
    #[error("hypothesis matrix or target contains a non-finite value")]
    NonFinite,
}

/// Shape of the cataloged hypothesis matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Quadratic,
    Reduced,
}

/// Hypothesis matrix `C` (m x a*p) together with the target vector `zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSpec {
    c: DMatrix<f64>,
    zeta: DVector<f64>,
    a: usize,
    d: usize,
    form: Form,
    label: String,
}

impl HypothesisSpec {
    pub fn new(
        c: DMatrix<f64>,
        zeta: DVector<f64>,
        a: usize,
        d: usize,
        form: Form,
        label: impl Into<String>,
    ) -> Result<Self, HypothesisError> {
        let spec = HypothesisSpec {
            c,
            zeta,
            a,
            d,
            form,
            label: label.into(),
        };
        spec.validate(a, d)?;
        Ok(spec)
    }

    /// Shape and finiteness checks against a design with `a` groups of
    /// dimension `d`.
    pub fn validate(&self, a: usize, d: usize) -> Result<(), HypothesisError> {
        let ap = a * vech_len(d);
        if self.c.ncols() != ap {
            return Err(HypothesisError::DimensionMismatch(self.c.ncols(), ap));
        }
        if self.c.nrows() > ap {
            return Err(HypothesisError::TooManyRows(self.c.nrows(), ap));
        }
        if self.c.nrows() != self.zeta.len() {
            return Err(HypothesisError::DimensionMismatch(
                self.zeta.len(),
                self.c.nrows(),
            ));
        }
        if self.c.iter().any(|x| !x.is_finite()) || self.zeta.iter().any(|x| !x.is_finite()) {
            return Err(HypothesisError::NonFinite);
        }
        Ok(())
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn zeta(&self) -> &DVector<f64> {
        &self.zeta
    }

    pub fn rows(&self) -> usize {
        self.c.nrows()
    }

    pub fn group_count(&self) -> usize {
        self.a
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The `m x p` column block of `C` belonging to group `i`.
    pub fn group_block(&self, i: usize) -> DMatrix<f64> {
        let p = vech_len(self.d);
        self.c.columns(i * p, p).into()
    }

    /// Residual `C v - zeta`.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.c * v - &self.zeta
    }

    /// Whether `v` satisfies `C v = zeta` within `tol`.
    pub fn is_member(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.residual(v).amax() <= tol
    }
}

/// `h_d` as a dense column vector.
fn h_vec(d: usize) -> DVector<f64> {
    VechVector::diagonal_indicator(d).into_vector()
}

/// Homogeneity of covariance matrices: `V_1 = ... = V_a`.
///
/// Quadratic: `C = P_a (x) I_p`. Reduced: successive-difference contrast rows
/// `(e_i - e_{i+1})^T (x) I_p`, which for `a = 2` is `(1, -1) (x) I_p`.
pub fn equal_covariances(a: usize, d: usize, form: Form) -> Result<HypothesisSpec, HypothesisError> {
    if a < 2 {
        return Err(HypothesisError::BadGroupCount(2, a));
    }
    let p = vech_len(d);
    let ip = DMatrix::identity(p, p);
    let c = match form {
        Form::Quadratic => kron(&centering_matrix(a), &ip),
        Form::Reduced => {
            let mut contrasts = DMatrix::zeros(a - 1, a);
            for i in 0..a - 1 {
                contrasts[(i, i)] = 1.0;
                contrasts[(i, i + 1)] = -1.0;
            }
            kron(&contrasts, &ip)
        }
    };
    let m = c.nrows();
    HypothesisSpec::new(c, DVector::zeros(m), a, d, form, "equal-covariances")
}

/// One-sample test for a given covariance matrix: `V_1 = Sigma_0`.
pub fn given_covariance(sigma0: &SymMatrix) -> Result<HypothesisSpec, HypothesisError> {
    let d = sigma0.dim();
    let p = vech_len(d);
    HypothesisSpec::new(
        DMatrix::identity(p, p),
        vech(sigma0).into_vector(),
        1,
        d,
        Form::Quadratic,
        "given-covariance",
    )
}

/// Equal diagonal elements in one sample: `V_11 = ... = V_dd`.
///
/// Quadratic: `diag(h_d) - h_d h_d^T / d`. Reduced: `d - 1` rows encoding
/// `v_11 - v_jj = 0`.
pub fn equal_diagonal(d: usize, form: Form) -> Result<HypothesisSpec, HypothesisError> {
    if d < 2 {
        return Err(HypothesisError::BadDimension(2, d));
    }
    let p = vech_len(d);
    let h = h_vec(d);
    let c = match form {
        Form::Quadratic => {
            DMatrix::from_diagonal(&h) - &h * h.transpose() / d as f64
        }
        Form::Reduced => {
            let mut c = DMatrix::zeros(d - 1, p);
            for j in 1..d {
                c[(j - 1, vech_index(d, 0, 0))] = 1.0;
                c[(j - 1, vech_index(d, j, j))] = -1.0;
            }
            c
        }
    };
    let m = c.nrows();
    HypothesisSpec::new(c, DVector::zeros(m), 1, d, form, "equal-diagonal")
}

/// Equality of traces across groups: `tr(V_1) = ... = tr(V_a)`.
///
/// Quadratic: `P_a (x) h_d h_d^T / d`. Reduced: contrast rows
/// `(e_i - e_{i+1})^T (x) h_d^T / d`.
pub fn equal_traces(a: usize, d: usize, form: Form) -> Result<HypothesisSpec, HypothesisError> {
    if a < 2 {
        return Err(HypothesisError::BadGroupCount(2, a));
    }
    let h = h_vec(d);
    let c = match form {
        Form::Quadratic => {
            let hh = &h * h.transpose() / d as f64;
            kron(&centering_matrix(a), &hh)
        }
        Form::Reduced => {
            let mut contrasts = DMatrix::zeros(a - 1, a);
            for i in 0..a - 1 {
                contrasts[(i, i)] = 1.0;
                contrasts[(i, i + 1)] = -1.0;
            }
            let hrow = DMatrix::from_row_slice(1, h.len(), h.as_slice()) / d as f64;
            kron(&contrasts, &hrow)
        }
    };
    let m = c.nrows();
    HypothesisSpec::new(c, DVector::zeros(m), a, d, form, "equal-traces")
}

/// One-sample test for a given trace value: `tr(V_1) = gamma`.
///
/// Reduced (default): single row `h_d^T / d` with target `gamma / d`.
/// Quadratic: `h_d h_d^T / d` with target `h_d * gamma / d`.
/// See also [`given_trace_embedded`] for the `e_1 h_d^T` variant.
pub fn given_trace(d: usize, gamma: f64, form: Form) -> Result<HypothesisSpec, HypothesisError> {
    let h = h_vec(d);
    let df = d as f64;
    let (c, zeta) = match form {
        Form::Reduced => (
            DMatrix::from_row_slice(1, h.len(), h.as_slice()) / df,
            DVector::from_element(1, gamma / df),
        ),
        Form::Quadratic => (&h * h.transpose() / df, &h * (gamma / df)),
    };
    HypothesisSpec::new(c, zeta, 1, d, form, "given-trace")
}

/// The `p`-row embedding `C = e_1 h_d^T`, `zeta = e_1 gamma`: same null set
/// as [`given_trace`], kept for completeness.
pub fn given_trace_embedded(d: usize, gamma: f64) -> Result<HypothesisSpec, HypothesisError> {
    let p = vech_len(d);
    let h = h_vec(d);
    let mut c = DMatrix::zeros(p, p);
    c.row_mut(0).copy_from(&h.transpose());
    let mut zeta = DVector::zeros(p);
    zeta[0] = gamma;
    HypothesisSpec::new(c, zeta, 1, d, Form::Quadratic, "given-trace-embedded")
}

/// Trace effect tested in a two-way layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEffect {
    /// No main effect of the first factor.
    MainA,
    /// No interaction between the two factors.
    Interaction,
}

/// Two-way crossed layout with `a x b` groups ordered lexicographically
/// (first factor outer, second factor inner), testing trace effects.
pub fn twoway_trace_effects(
    a: usize,
    b: usize,
    d: usize,
    effect: TraceEffect,
) -> Result<HypothesisSpec, HypothesisError> {
    if a < 2 {
        return Err(HypothesisError::BadGroupCount(2, a));
    }
    if b < 2 {
        return Err(HypothesisError::BadGroupCount(2, b));
    }
    let h = h_vec(d);
    let hh = &h * h.transpose() / d as f64;
    let factor = match effect {
        TraceEffect::MainA => kron(&centering_matrix(a), &(ones_matrix(b) / b as f64)),
        TraceEffect::Interaction => kron(&centering_matrix(a), &centering_matrix(b)),
    };
    let c = kron(&factor, &hh);
    let m = c.nrows();
    let label = match effect {
        TraceEffect::MainA => "twoway-trace-main-a",
        TraceEffect::Interaction => "twoway-trace-interaction",
    };
    HypothesisSpec::new(c, DVector::zeros(m), a * b, d, Form::Quadratic, label)
}

/// Serialization mirror so explicit matrices can be supplied in JSON.
#[derive(Serialize, Deserialize)]
struct SpecWire {
    rows: Vec<Vec<f64>>,
    zeta: Vec<f64>,
    groups: usize,
    dim: usize,
    form: Form,
    label: String,
}

impl Serialize for HypothesisSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows = self
            .c
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect();
        SpecWire {
            rows,
            zeta: self.zeta.iter().cloned().collect(),
            groups: self.a,
            dim: self.d,
            form: self.form,
            label: self.label.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HypothesisSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let wire = SpecWire::deserialize(de)?;
        let m = wire.rows.len();
        let ap = wire.groups * vech_len(wire.dim);
        let mut c = DMatrix::zeros(m, ap);
        for (i, row) in wire.rows.iter().enumerate() {
            if row.len() != ap {
                return Err(serde::de::Error::custom(format!(
                    "row {i} has {} entries, expected {ap}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                c[(i, j)] = x;
            }
        }
        HypothesisSpec::new(
            c,
            DVector::from_vec(wire.zeta),
            wire.groups,
            wire.dim,
            wire.form,
            wire.label,
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matview::matrix_rank;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_v(len: usize, rng: &mut impl Rng) -> DVector<f64> {
        DVector::from_fn(len, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn equal_cov_reduced_a2_d2() {
        let s = equal_covariances(2, 2, Form::Reduced).unwrap();
        // C~ = [I_3 | -I_3], zeta = 0_3
        assert_eq!(s.rows(), 3);
        let expected = kron(
            &DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            &DMatrix::identity(3, 3),
        );
        assert_eq!(s.c(), &expected);
        assert_eq!(s.zeta().amax(), 0.0);
    }

    #[test]
    fn equal_cov_quadratic_a2_d2() {
        let s = equal_covariances(2, 2, Form::Quadratic).unwrap();
        assert_eq!(s.c().nrows(), 6);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 0.5 } else { 0.0 };
                assert_relative_eq!(s.c()[(r, c)], want);
                assert_relative_eq!(s.c()[(r, 3 + c)], -want);
                assert_relative_eq!(s.c()[(3 + r, c)], -want);
                assert_relative_eq!(s.c()[(3 + r, 3 + c)], want);
            }
        }
    }

    #[test]
    fn equal_cov_annihilates_common_v() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let v0 = random_v(3, &mut rng);
        let mut v = DVector::zeros(6);
        v.rows_mut(0, 3).copy_from(&v0);
        v.rows_mut(3, 3).copy_from(&v0);
        for form in [Form::Quadratic, Form::Reduced] {
            let s = equal_covariances(2, 2, form).unwrap();
            assert!(s.is_member(&v, 1e-12));
        }
        assert_eq!(
            equal_covariances(1, 2, Form::Reduced).unwrap_err(),
            HypothesisError::BadGroupCount(2, 1)
        );
    }

    #[test]
    fn given_covariance_examples() {
        let s = given_covariance(&SymMatrix::identity(2)).unwrap();
        assert_eq!(s.c(), &DMatrix::identity(3, 3));
        assert_eq!(s.zeta().as_slice(), &[1.0, 0.0, 1.0]);

        let ar = SymMatrix::from_fn(2, |r, c| 0.6f64.powi((r as i32 - c as i32).abs()));
        let s = given_covariance(&ar).unwrap();
        assert_eq!(s.zeta().as_slice(), &[1.0, 0.6, 1.0]);
        assert!(s.is_member(s.zeta(), 0.0));
    }

    #[test]
    fn equal_diagonal_forms_d2() {
        let s = equal_diagonal(2, Form::Reduced).unwrap();
        assert_eq!(s.rows(), 1);
        assert_eq!(s.c().row(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 0.0, -1.0]);

        let q = equal_diagonal(2, Form::Quadratic).unwrap();
        // diag(1,0,1) - (1,0,1)^T (1,0,1) / 2
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[0.5, 0.0, -0.5, 0.0, 0.0, 0.0, -0.5, 0.0, 0.5],
        );
        assert_relative_eq!(q.c(), &expected, epsilon = 1e-14);

        let v = vech(&SymMatrix::identity(2)).into_vector();
        assert!(s.is_member(&v, 1e-14));
        assert!(q.is_member(&v, 1e-14));
        assert_eq!(
            equal_diagonal(1, Form::Reduced).unwrap_err(),
            HypothesisError::BadDimension(2, 1)
        );
    }

    #[test]
    fn equal_traces_examples() {
        let s = equal_traces(2, 2, Form::Reduced).unwrap();
        assert_eq!(
            s.c().row(0).iter().cloned().collect::<Vec<_>>(),
            vec![0.5, 0.0, 0.5, -0.5, 0.0, -0.5]
        );

        // v with tr(V1) = tr(V2) = 2
        let v = DVector::from_column_slice(&[1.5, 0.3, 0.5, 0.25, -0.7, 1.75]);
        assert!(s.is_member(&v, 1e-14));
        let q = equal_traces(2, 2, Form::Quadratic).unwrap();
        assert!(q.is_member(&v, 1e-14));
    }

    #[test]
    fn equal_traces_quadratic_matches_kron_oracle() {
        let q = equal_traces(2, 5, Form::Quadratic).unwrap();
        let h = h_vec(5);
        let expected = kron(&centering_matrix(2), &(&h * h.transpose() / 5.0));
        assert_relative_eq!(q.c(), &expected, epsilon = 1e-14);
    }

    #[test]
    fn given_trace_examples() {
        let s = given_trace(2, 2.0, Form::Reduced).unwrap();
        let v = DVector::from_column_slice(&[1.0, 0.0, 1.0]);
        assert_relative_eq!((s.c() * &v)[0], 1.0);
        assert!(s.is_member(&v, 1e-14));

        let v5 = vech(&SymMatrix::identity(5)).into_vector();
        for spec in [
            given_trace(5, 5.0, Form::Reduced).unwrap(),
            given_trace(5, 5.0, Form::Quadratic).unwrap(),
            given_trace_embedded(5, 5.0).unwrap(),
        ] {
            assert!(spec.is_member(&v5, 1e-14));
        }
    }

    #[test]
    fn given_trace_forms_same_null_set() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let red = given_trace(3, 2.5, Form::Reduced).unwrap();
        let quad = given_trace(3, 2.5, Form::Quadratic).unwrap();
        let emb = given_trace_embedded(3, 2.5).unwrap();
        for _ in 0..100 {
            let v = random_v(6, &mut rng);
            let in_red = red.is_member(&v, 1e-10);
            assert_eq!(in_red, quad.is_member(&v, 1e-10));
            assert_eq!(in_red, emb.is_member(&v, 1e-10));
        }
    }

    #[test]
    fn twoway_trace_membership() {
        // a = b = 2, d = 1: v holds the 4 variances, lexicographic order.
        let main = twoway_trace_effects(2, 2, 1, TraceEffect::MainA).unwrap();
        // equal row-averaged traces: rows (i1) average to the same value
        let v = DVector::from_column_slice(&[1.0, 3.0, 2.5, 1.5]);
        assert!(main.is_member(&v, 1e-12));

        // additive trace pattern t + alpha_i + beta_j has no interaction
        let inter = twoway_trace_effects(2, 2, 1, TraceEffect::Interaction).unwrap();
        let (t, a1, b1) = (2.0, 0.7, -0.3);
        let v = DVector::from_column_slice(&[t + a1 + b1, t + a1 - b1, t - a1 + b1, t - a1 - b1]);
        assert!(inter.is_member(&v, 1e-12));
    }

    #[test]
    fn twoway_trace_matches_kron_oracle() {
        let main = twoway_trace_effects(2, 3, 2, TraceEffect::MainA).unwrap();
        let h = h_vec(2);
        let expected = kron(
            &kron(&centering_matrix(2), &(ones_matrix(3) / 3.0)),
            &(&h * h.transpose() / 2.0),
        );
        assert_relative_eq!(main.c(), &expected, epsilon = 1e-14);
    }

    #[test]
    fn validate_shape_errors() {
        let s = equal_covariances(2, 2, Form::Reduced).unwrap();
        assert!(s.validate(2, 2).is_ok());
        assert!(matches!(
            s.validate(3, 2),
            Err(HypothesisError::DimensionMismatch(6, 9))
        ));
        assert!(matches!(
            s.validate(2, 3),
            Err(HypothesisError::DimensionMismatch(6, 12))
        ));
        let bad = HypothesisSpec::new(
            DMatrix::from_element(1, 3, f64::NAN),
            DVector::zeros(1),
            1,
            2,
            Form::Reduced,
            "bad",
        );
        assert_eq!(bad.unwrap_err(), HypothesisError::NonFinite);
    }

    /// Quadratic and reduced forms must describe identical null sets and have
    /// equal row spaces (checked on the homogeneous parts).
    #[test]
    fn catalog_forms_identical_null_sets() {
        let pairs: Vec<(HypothesisSpec, HypothesisSpec)> = vec![
            (
                equal_covariances(2, 3, Form::Quadratic).unwrap(),
                equal_covariances(2, 3, Form::Reduced).unwrap(),
            ),
            (
                equal_covariances(3, 2, Form::Quadratic).unwrap(),
                equal_covariances(3, 2, Form::Reduced).unwrap(),
            ),
            (
                equal_diagonal(4, Form::Quadratic).unwrap(),
                equal_diagonal(4, Form::Reduced).unwrap(),
            ),
            (
                equal_traces(2, 3, Form::Quadratic).unwrap(),
                equal_traces(2, 3, Form::Reduced).unwrap(),
            ),
            (
                given_trace(3, 1.5, Form::Quadratic).unwrap(),
                given_trace(3, 1.5, Form::Reduced).unwrap(),
            ),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for (quad, red) in &pairs {
            let rank_q = matrix_rank(quad.c());
            let rank_r = matrix_rank(red.c());
            assert_eq!(rank_q, rank_r, "{}", quad.label());
            let mut stacked = DMatrix::zeros(quad.rows() + red.rows(), quad.c().ncols());
            stacked
                .rows_mut(0, quad.rows())
                .copy_from(quad.c());
            stacked.rows_mut(quad.rows(), red.rows()).copy_from(red.c());
            assert_eq!(matrix_rank(&stacked), rank_q, "{}", quad.label());

            for _ in 0..1000 {
                let v = random_v(quad.c().ncols(), &mut rng);
                // project residuals to comparable scale-free membership
                let in_q = quad.residual(&v).amax() < 1e-10;
                let in_r = red.residual(&v).amax() < 1e-10;
                assert_eq!(in_q, in_r, "{}", quad.label());
            }
        }
    }

    /// For the factorizable scenarios, quadratic C equals M * C~ with
    /// M^T M = c I; this underpins the statistic invariance in the engine.
    #[test]
    fn factorization_property() {
        struct Case {
            quad: HypothesisSpec,
            red: HypothesisSpec,
            c: f64,
        }
        let cases = vec![
            Case {
                quad: equal_covariances(2, 2, Form::Quadratic).unwrap(),
                red: equal_covariances(2, 2, Form::Reduced).unwrap(),
                c: 0.5,
            },
            Case {
                // M = (1,-1)^T (x) h_d / 2, so M^T M = (2 d / 4) I = d/2 I
                quad: equal_traces(2, 3, Form::Quadratic).unwrap(),
                red: equal_traces(2, 3, Form::Reduced).unwrap(),
                c: 1.5,
            },
            Case {
                quad: given_trace(3, 2.0, Form::Quadratic).unwrap(),
                red: given_trace(3, 2.0, Form::Reduced).unwrap(),
                c: 3.0,
            },
        ];
        for case in &cases {
            // M = quad.C * pinv(red.C) by construction of the factorization
            let m = case.quad.c() * crate::matview::mp_inverse(case.red.c(), None);
            let mtm = m.transpose() * &m;
            let expected = DMatrix::identity(mtm.nrows(), mtm.ncols()) * case.c;
            assert!(
                (&mtm - &expected).amax() < 1e-12,
                "{}: M^T M != cI",
                case.quad.label()
            );
            let rec = &m * case.red.c();
            assert!((&rec - case.quad.c()).amax() < 1e-12, "{}", case.quad.label());
            // zeta factors the same way
            let zr = &m * case.red.zeta();
            assert!((&zr - case.quad.zeta()).amax() < 1e-12);
        }
    }

    #[test]
    fn serde_roundtrip() {
        let s = equal_traces(2, 2, Form::Reduced).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: HypothesisSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
