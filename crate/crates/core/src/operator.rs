//! Dense complex matrices and the handful of spectral utilities the rest of
//! the crate is built on.
//!
//! Every operator in this crate is a square [`ComplexMatrix`]. Tensor
//! products use lexicographic basis order: the first factor is the most
//! significant index, so `|a⟩ ⊗ |b⟩` lands at position `a * dim_b + b`.

use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest matrix dimension any constructor will produce unless a caller
/// passes its own limit.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Numeric tolerances used for every approximate comparison.
///
/// `abs_tol` bounds entrywise (max-norm) defects; `eig_tol` bounds spectral
/// quantities, which are less accurate than matrix entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub eig_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-10, eig_tol: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, eig_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(Error::InvalidTolerance(format!("abs_tol = {abs_tol}")));
        }
        if !(eig_tol > 0.0 && eig_tol.is_finite()) {
            return Err(Error::InvalidTolerance(format!("eig_tol = {eig_tol}")));
        }
        Ok(Self { abs_tol, eig_tol })
    }

    /// Same tolerance with a different `abs_tol`.
    pub fn with_abs(self, abs_tol: f64) -> Result<Self> {
        Self::new(abs_tol, self.eig_tol)
    }
}

/// A square matrix of complex doubles with dim ≥ 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    /// Wraps an nalgebra matrix, rejecting non-square, empty or non-finite input.
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = inner.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        for j in 0..cols {
            for i in 0..rows {
                let z = inner[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { inner })
    }

    /// Internal constructor for results of arithmetic on valid matrices.
    pub(crate) fn wrap(inner: DMatrix<C64>) -> Self {
        debug_assert!(inner.is_square() && inner.nrows() > 0);
        Self { inner }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::new(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from real and imaginary row-major parts.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let dim = re.len();
        if im.len() != dim || re.iter().chain(im).any(|row| row.len() != dim) {
            return Err(Error::NotSquare {
                rows: dim,
                cols: re.first().map_or(0, Vec::len),
            });
        }
        Self::from_fn(dim, |i, j| C64::new(re[i][j], im[i][j]))
    }

    /// Real matrix from row-major rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let zeros: Vec<Vec<f64>> = rows.iter().map(|r| vec![0.0; r.len()]).collect();
        Self::from_parts(rows, &zeros)
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(DMatrix::zeros(dim, dim))
    }

    pub fn diag_real(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::wrap(DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO }))
    }

    /// Rank-one projector `|v⟩⟨v|` onto the normalized direction of `v`.
    pub fn projector_onto(v: &DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput("cannot project onto a zero or non-finite vector".into()));
        }
        let u = v.unscale(norm);
        Self::new(&u * u.adjoint())
    }

    /// Orthogonal projector `V V*` onto the span of orthonormal columns.
    pub fn from_orthonormal_columns(v: &DMatrix<C64>) -> Result<Self> {
        Self::new(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.inner.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::wrap(self.inner.scale(s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self::wrap(&self.inner * s)
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    /// `trace(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "trace_product dimension mismatch");
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.inner[(i, k)] * other.inner[(k, i)];
            }
        }
        acc
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance `‖self − other‖_max`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff dimension mismatch");
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm of `self − self*`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: &Tolerance) -> bool {
        self.hermitian_defect() <= tol.abs_tol
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        let n = self.dim();
        MatrixLiteral {
            dim: n,
            re: (0..n).map(|i| (0..n).map(|j| self.inner[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.inner[(i, j)].im).collect()).collect(),
        }
    }

    pub fn from_literal(lit: &MatrixLiteral) -> Result<Self> {
        if lit.re.len() != lit.dim {
            return Err(Error::MatrixFile(format!(
                "declared dim {} but {} rows of real parts",
                lit.dim,
                lit.re.len()
            )));
        }
        Self::from_parts(&lit.re, &lit.im).map_err(|e| Error::MatrixFile(e.to_string()))
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on dimension mismatch; use [`mat_mul`] for a checked product.
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(&self.inner * &rhs.inner)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(&self.inner + &rhs.inner)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(&self.inner - &rhs.inner)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(self.inner - rhs.inner)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(self.inner + rhs.inner)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        ComplexMatrix::wrap(-&self.inner)
    }
}

/// JSON matrix literal: `{"dim": n, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Reads a matrix literal file.
pub fn load_matrix_file(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MatrixFile(format!("{}: {e}", path.display())))?;
    let lit: MatrixLiteral = serde_json::from_str(&text)
        .map_err(|e| Error::MatrixFile(format!("{}: {e}", path.display())))?;
    ComplexMatrix::from_literal(&lit)
}

fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// Checked matrix product.
pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_same_dim(a, b)?;
    Ok(a * b)
}

/// Kronecker product `a ⊗ b` limited to [`DEFAULT_MAX_DIM`].
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_with_limit(a, b, DEFAULT_MAX_DIM)
}

/// Kronecker product; block `(i, j)` of the result is `a[i, j] · b`.
pub fn tensor_with_limit(a: &ComplexMatrix, b: &ComplexMatrix, max_dim: usize) -> Result<ComplexMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .filter(|&d| d <= max_dim)
        .ok_or(Error::DimensionOverflow {
            dim: a.dim().saturating_mul(b.dim()),
            max: max_dim,
        })?;
    let out = a.inner.kronecker(&b.inner);
    debug_assert_eq!(out.nrows(), dim);
    Ok(ComplexMatrix::wrap(out))
}

/// Left-folded Kronecker product of several factors.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidInput("tensor_all needs at least one factor".into()))?;
    rest.iter().try_fold((*first).clone(), |acc, f| tensor(&acc, f))
}

/// Reorders tensor factors of an operator.
///
/// `m` acts on `H_{dims[0]} ⊗ … ⊗ H_{dims[k-1]}`. The result acts on the
/// space whose `i`-th factor is the old factor `perm[i]`.
pub fn permute_factors(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch { left: m.dim(), right: total });
    }
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len()
        || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true))
    {
        return Err(Error::InvalidInput(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // old flat index for every new flat index
    let old_strides = strides(dims);
    let map: Vec<usize> = (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut old = 0;
            for (i, &d) in new_dims.iter().enumerate().rev() {
                let digit = rem % d;
                rem /= d;
                old += digit * old_strides[perm[i]];
            }
            old
        })
        .collect();
    Ok(ComplexMatrix::wrap(DMatrix::from_fn(total, total, |i, j| m.inner[(map[i], map[j])])))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// `V diag(λ) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = self.vectors.as_matrix();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| C64::new(l, 0.0)),
        ));
        ComplexMatrix::wrap(v * d * v.adjoint())
    }
}

pub fn hermitian_eig(m: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEig> {
    let defect = m.hermitian_defect();
    if defect > tol.abs_tol {
        return Err(Error::NotHermitian { defect });
    }
    // symmetrize so the solver sees an exactly Hermitian input
    let sym = (&m.inner + m.inner.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEig { values, vectors: ComplexMatrix::wrap(vectors) })
}

/// Hermitian and idempotent, both in max-norm within `abs_tol`.
pub fn is_projection(m: &ComplexMatrix, tol: &Tolerance) -> bool {
    let (herm, idem) = projection_defects(m);
    herm <= tol.abs_tol && idem <= tol.abs_tol
}

/// `(‖m − m*‖_max, ‖m² − m‖_max)`.
pub fn projection_defects(m: &ComplexMatrix) -> (f64, f64) {
    (m.hermitian_defect(), (m * m).max_abs_diff(m))
}
