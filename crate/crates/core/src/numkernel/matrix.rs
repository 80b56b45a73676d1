use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::limits::check_dim;
use crate::error::{validation, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored in double precision.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

/// Real and imaginary parts, spelled out for readability in tests and constructors.
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: DMatrix::identity(n, n) }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: DMatrix::from_fn(rows, cols, f) }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(validation("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(validation(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("matrix entries must be finite"));
        }
        Ok(Self { inner: DMatrix::from_row_slice(rows, cols, entries) })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let data: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &data)
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self { inner: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        Self { inner: DMatrix::from_column_slice(v.len(), 1, v) }
    }

    pub fn from_nalgebra(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.inner
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<C64> {
        faer::Mat::from_fn(self.rows(), self.cols(), |i, j| self.inner[(i, j)])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.inner[(i, j)] = value;
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        self.inner.column(j).iter().copied().collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.inner.diagonal().iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { inner: self.inner.map(|z| z * s) }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self { inner: self.inner.map(|z| z * s) }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        match self.to_faer().singular_values() {
            Ok(sv) => sv,
            Err(_) => vec![f64::NAN; self.rows().min(self.cols())],
        }
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Schatten 1-norm (trace norm).
    pub fn schatten1(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// Frobenius norm of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.inner - self.inner.adjoint()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Frobenius norm of `U†U - I`, an upper bound on the operator-norm defect.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let g = self.inner.adjoint() * &self.inner;
        (g - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self { inner: (&self.inner + self.inner.adjoint()) * c(0.5, 0.0) }
    }

    /// Top-left `rows x cols` sub-block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Self {
        Self { inner: self.inner.view((0, 0), (rows, cols)).into_owned() }
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self { inner: self.inner.view((row, col), (rows, cols)).into_owned() }
    }

    pub fn set_block(&mut self, row: usize, col: usize, m: &ComplexMatrix) {
        self.inner.view_mut((row, col), (m.rows(), m.cols())).copy_from(&m.inner);
    }

    /// Kronecker product, subject to the qubit cap on both dimensions.
    pub fn kron(&self, other: &ComplexMatrix) -> Result<Self> {
        let rows = self.rows().checked_mul(other.rows());
        let cols = self.cols().checked_mul(other.cols());
        match (rows, cols) {
            (Some(r), Some(c)) => {
                check_dim(r, "kron")?;
                check_dim(c, "kron")?;
            }
            _ => return Err(crate::Error::Resource("kron dimension overflow".into())),
        }
        Ok(Self { inner: self.inner.kronecker(&other.inner) })
    }

    /// Multiplies with a column vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        (&self.inner * x).iter().copied().collect()
    }

    /// `⟨v|M|w⟩`.
    pub fn sandwich(&self, v: &[C64], w: &[C64]) -> C64 {
        let mw = self.apply(w);
        v.iter().zip(&mw).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        Self { inner: &self.inner * &other.inner }
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Maximum absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        (&self.inner - &other.inner).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.inner[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -&self.inner }
    }
}

/// JSON layout: `{"dim": n, "re": [...], "im": [...]}` row-major for square
/// matrices, `{"rows": r, "cols": c, "re": [...], "im": [...]}` otherwise.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self.to_row_major();
        let (dim, rows, cols) = if self.is_square() {
            (Some(self.rows()), None, None)
        } else {
            (None, Some(self.rows()), Some(self.cols()))
        };
        MatrixRepr {
            dim,
            rows,
            cols,
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = MatrixRepr::deserialize(deserializer)?;
        let (rows, cols) = match (repr.dim, repr.rows, repr.cols) {
            (Some(n), None, None) => (n, n),
            (None, Some(r), Some(c)) => (r, c),
            _ => return Err(D::Error::custom("matrix needs either `dim` or both `rows` and `cols`")),
        };
        if repr.re.len() != repr.im.len() {
            return Err(D::Error::custom("`re` and `im` lengths differ"));
        }
        let entries: Vec<C64> = repr.re.iter().zip(&repr.im).map(|(&a, &b)| c(a, b)).collect();
        ComplexMatrix::from_row_major(rows, cols, &entries).map_err(D::Error::custom)
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨v|w⟩`.
pub fn inner(v: &[C64], w: &[C64]) -> C64 {
    v.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// Single-qubit Pauli matrices and a few fixed gates.
pub mod gates {
    use super::{c, ComplexMatrix, ONE, ZERO};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, 2, &[ZERO, ONE, ONE, ZERO]).expect("static")
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]).expect("static")
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).expect("static")
    }

    /// `S† = diag(1, -i)`.
    pub fn s_dagger() -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&[ONE, c(0.0, -1.0)])
    }

    pub fn swap() -> ComplexMatrix {
        ComplexMatrix::from_real(4, 4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.])
            .expect("static")
    }
}

/// `M = U diag(σ) V†` with nonnegative `σ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Thin SVD with a recomposition check.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let dec = m
        .to_faer()
        .thin_svd()
        .map_err(|e| crate::Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let singular_values: Vec<f64> = dec.S().column_vector().iter().map(|z| z.re).collect();
    let out = Svd { u: ComplexMatrix::from_faer(dec.U()), singular_values, v: ComplexMatrix::from_faer(dec.V()) };
    let recomposed = ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        (0..out.singular_values.len()).map(|k| out.u.get(i, k) * out.singular_values[k] * out.v.get(j, k).conj()).sum()
    });
    let defect = (&recomposed - m).frobenius_norm();
    if defect > 1e-10 * m.frobenius_norm().max(1.0) {
        return Err(crate::Error::Numerical(format!("SVD recomposition defect {defect:.3e}")));
    }
    Ok(out)
}
