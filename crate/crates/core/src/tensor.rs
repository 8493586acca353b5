//! Dense complex linear algebra and multipartite index bookkeeping.
//!
//! Composite indices are row-major with subsystem 0 most significant:
//! `index = sum_k i_k * prod_{j>k} d_j`. Every file format and every
//! Kronecker product in the crate follows this ordering.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues in `[-EIG_CLAMP, 0)` are treated as numerical drift and clamped to zero.
pub const EIG_CLAMP: f64 = 1e-10;
/// Relative Hermiticity residual accepted for density operators.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows, rejecting ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(n, m, rows.iter().flatten().copied().collect())
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { diag[r] } else { ZERO })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |r, c| if r == c { C64::new(diag[r], 0.0) } else { ZERO },
        )
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Result<Self> {
        let m = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        Ok(Self::from_fn(n, m, |r, c| cols[c][r]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |r, c| self[(r, c)])
    }

    pub(crate) fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Re Tr(self^dag other)`, the real Frobenius inner product.
    pub fn real_inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.matmul_unchecked(other))
    }

    fn matmul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `(self + self^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    /// `||m - m^dag||_F / ||m||_F` (0 for the zero matrix).
    pub fn hermiticity_residual(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let diff: f64 = (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| (self[(r, c)] - self[(c, r)].conj()).norm_sqr())
            .sum();
        diff.sqrt() / norm
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        self.matmul_unchecked(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    ComplexMatrix::from_fn(rows, cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Determinant by LU elimination with partial pivoting.
pub fn det(m: &ComplexMatrix) -> Result<C64> {
    let n = m.ensure_square()?;
    let mut a = m.data.clone();
    let mut result = ONE;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
            .unwrap_or(col);
        let p = a[pivot * n + col];
        if p == ZERO {
            return Ok(ZERO);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            result = -result;
        }
        result *= p;
        for r in col + 1..n {
            let factor = a[r * n + col] / p;
            if factor == ZERO {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= factor * v;
            }
        }
    }
    Ok(result)
}

/// Adjugate (transposed cofactor matrix), so that `m * adj(m) = det(m) I`.
/// Well defined for singular matrices, unlike `det * inverse`.
pub fn adjugate(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.ensure_square()?;
    match n {
        1 => return Ok(ComplexMatrix::identity(1)),
        2 => {
            return ComplexMatrix::new(2, 2, vec![m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]]);
        }
        _ => {}
    }
    let mut adj = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let minor = ComplexMatrix::from_fn(n - 1, n - 1, |i, j| {
                let ii = if i < r { i } else { i + 1 };
                let jj = if j < c { j } else { j + 1 };
                m[(ii, jj)]
            });
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(c, r)] = det(&minor)? * sign;
        }
    }
    Ok(adj)
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// `(m + m^dag)/2` first. Eigenvalues come back in descending order and the
/// eigenvectors are the matching columns of the returned matrix.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = m.ensure_square()?;
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    let h = m.hermitian_part();
    let eig = SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the solver's order among ties
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eig(m)?;
    let n = vals.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let fl = f(lam);
        if fl == 0.0 {
            continue;
        }
        for r in 0..n {
            let vr = vecs[(r, k)] * fl;
            for c in 0..n {
                out[(r, c)] += vr * vecs[(c, k)].conj();
            }
        }
    }
    Ok(out)
}

/// `exp(t * x)` for a skew-Hermitian generator `x`; the result is unitary.
pub fn expm_skew_hermitian(x: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    // i x is Hermitian: i x = W diag(l) W^dag, so exp(t x) = W diag(exp(-i t l)) W^dag
    let h = x.scale(C64::new(0.0, 1.0));
    let (vals, vecs) = hermitian_eig(&h)?;
    Ok(exp_from_eig(&vals, &vecs, t))
}

/// Reuses a cached eigendecomposition of `i x` to form `exp(t x)`.
pub(crate) fn exp_from_eig(vals: &[f64], vecs: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = vals.len();
    let phases: Vec<C64> = vals.iter().map(|&l| C64::from_polar(1.0, -t * l)).collect();
    ComplexMatrix::from_fn(n, n, |r, c| {
        (0..n)
            .map(|k| vecs[(r, k)] * phases[k] * vecs[(c, k)].conj())
            .sum()
    })
}

/// Per-subsystem dimensions of a multipartite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Dims(Vec<usize>);

impl Dims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDims("at least one subsystem required".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDims(format!("subsystem dimension {d} < 2")));
        }
        Ok(Self(dims))
    }

    pub fn qubits(n: usize) -> Self {
        Self(vec![2; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn get(&self, k: usize) -> Result<usize> {
        self.0.get(k).copied().ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.0.len(),
        })
    }

    /// Stride of subsystem `k` in the composite index.
    pub fn stride(&self, k: usize) -> usize {
        self.0[k + 1..].iter().product()
    }

    pub fn split_index(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.0.len()];
        for k in (0..self.0.len()).rev() {
            digits[k] = index % self.0[k];
            index /= self.0[k];
        }
        digits
    }

    pub fn join_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.0)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }
}

impl TryFrom<Vec<usize>> for Dims {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Dims> for Vec<usize> {
    fn from(d: Dims) -> Self {
        d.0
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Trace over every subsystem not listed in `keep`. `keep` is
/// interpreted as a set; the kept subsystems retain their original order.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dims: &Dims,
    keep: &[usize],
) -> Result<(ComplexMatrix, Dims)> {
    let n = m.ensure_square()?;
    if n != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "operator side {n} but dims {dims} give {}",
            dims.total()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: dims.len(),
        });
    }
    if kept.is_empty() {
        return Err(Error::InvalidDims(
            "must keep at least one subsystem".into(),
        ));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims = Dims(kept.iter().map(|&k| dims.0[k]).collect());
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims.0[k]).collect();
    let traced_total: usize = traced_dims.iter().product();
    let out_n = kept_dims.total();

    // composite index from (kept digits, traced digits)
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let kd = kept_dims.split_index(kept_idx);
        let mut t = traced_idx;
        let mut td = vec![0; traced.len()];
        for i in (0..traced.len()).rev() {
            td[i] = t % traced_dims[i];
            t /= traced_dims[i];
        }
        let mut digits = vec![0; dims.len()];
        for (i, &k) in kept.iter().enumerate() {
            digits[k] = kd[i];
        }
        for (i, &k) in traced.iter().enumerate() {
            digits[k] = td[i];
        }
        dims.join_index(&digits)
    };

    let table: Vec<Vec<usize>> = (0..out_n)
        .map(|a| (0..traced_total).map(|t| compose(a, t)).collect())
        .collect();
    let out = ComplexMatrix::from_fn(out_n, out_n, |a, b| {
        (0..traced_total)
            .map(|t| m[(table[a][t], table[b][t])])
            .sum()
    });
    Ok((out, kept_dims))
}

/// Reduced density matrix of a single subsystem of a (possibly
/// unnormalized) pure state, computed straight from the amplitudes.
pub fn reduced_from_vector(amps: &[C64], dims: &Dims, k: usize) -> Result<ComplexMatrix> {
    let dk = dims.get(k)?;
    if amps.len() != dims.total() {
        return Err(Error::DimensionMismatch("amplitude length".into()));
    }
    let stride = dims.stride(k);
    let outer = dims.total() / (dk * stride);
    let mut rho = ComplexMatrix::zeros(dk, dk);
    for hi in 0..outer {
        for lo in 0..stride {
            let base = hi * dk * stride + lo;
            for a in 0..dk {
                let va = amps[base + a * stride];
                for b in 0..dk {
                    rho[(a, b)] += va * amps[base + b * stride].conj();
                }
            }
        }
    }
    Ok(rho)
}

/// Applies a `d_k x d_k` matrix to subsystem `k` of a state vector.
pub fn apply_local_to_vector(
    amps: &[C64],
    dims: &Dims,
    k: usize,
    op: &ComplexMatrix,
) -> Result<Vec<C64>> {
    let dk = dims.get(k)?;
    if op.rows() != dk || op.cols() != dk {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on subsystem of dimension {dk}",
            op.rows(),
            op.cols()
        )));
    }
    if amps.len() != dims.total() {
        return Err(Error::DimensionMismatch("amplitude length".into()));
    }
    let stride = dims.stride(k);
    let outer = dims.total() / (dk * stride);
    let mut out = vec![ZERO; amps.len()];
    for hi in 0..outer {
        for lo in 0..stride {
            let base = hi * dk * stride + lo;
            for a in 0..dk {
                let mut acc = ZERO;
                for b in 0..dk {
                    acc += op[(a, b)] * amps[base + b * stride];
                }
                out[base + a * stride] = acc;
            }
        }
    }
    Ok(out)
}

/// `I ⊗ ... ⊗ op ⊗ ... ⊗ I` with `op` in slot `k`.
pub fn embed_local(op: &ComplexMatrix, dims: &Dims, k: usize) -> Result<ComplexMatrix> {
    let dk = dims.get(k)?;
    if op.rows() != dk || op.cols() != dk {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on subsystem of dimension {dk}",
            op.rows(),
            op.cols()
        )));
    }
    let factors: Vec<ComplexMatrix> = dims
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if i == k {
                op.clone()
            } else {
                ComplexMatrix::identity(d)
            }
        })
        .collect();
    Ok(kron_all(&factors))
}

/// A permutation of subsystems. `images[k]` is the slot that receives the
/// content of subsystem `k` (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation(format!(
                    "{images:?} is not a bijection"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    /// Transposition of two slots.
    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        if a >= n || b >= n {
            return Err(Error::InvalidPermutation(format!(
                "swap({a},{b}) on {n} slots"
            )));
        }
        images.swap(a, b);
        Ok(Self { images })
    }

    /// Parses the 1-based comma-separated image list used on the command line,
    /// e.g. `"2,3,1"`.
    pub fn parse_one_based(s: &str) -> Result<Self> {
        let images = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .ok()
                    .and_then(|v| v.checked_sub(1))
                    .ok_or_else(|| Error::InvalidPermutation(format!("bad entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(images)
    }

    /// Every permutation of `n` slots, in lexicographic order of images.
    pub fn all(n: usize) -> Vec<Self> {
        fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
            let n = used.len();
            if prefix.len() == n {
                out.push(Permutation {
                    images: prefix.clone(),
                });
                return;
            }
            for i in 0..n {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(k, &i)| k == i)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (k, &i) in self.images.iter().enumerate() {
            inv[i] = k;
        }
        Self { images: inv }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Self {
        Self {
            images: first.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    /// Only permutations that map every slot onto a slot of equal dimension are admitted.
    pub fn check_dims(&self, dims: &Dims) -> Result<()> {
        if self.images.len() != dims.len() {
            return Err(Error::InvalidPermutation(format!(
                "permutation of {} slots applied to {} subsystems",
                self.images.len(),
                dims.len()
            )));
        }
        for (k, &i) in self.images.iter().enumerate() {
            if dims.0[k] != dims.0[i] {
                return Err(Error::InvalidPermutation(format!(
                    "slot {k} (dim {}) cannot move to slot {i} (dim {})",
                    dims.0[k], dims.0[i]
                )));
            }
        }
        Ok(())
    }

    /// Image of each composite basis index.
    fn index_map(&self, dims: &Dims) -> Vec<usize> {
        (0..dims.total())
            .map(|idx| {
                let digits = dims.split_index(idx);
                let mut out = vec![0; digits.len()];
                for (k, &i) in self.images.iter().enumerate() {
                    out[i] = digits[k];
                }
                dims.join_index(&out)
            })
            .collect()
    }

    /// `V_P |v>`.
    pub fn apply_vector(&self, amps: &[C64], dims: &Dims) -> Result<Vec<C64>> {
        self.check_dims(dims)?;
        if amps.len() != dims.total() {
            return Err(Error::DimensionMismatch("amplitude length".into()));
        }
        let map = self.index_map(dims);
        let mut out = vec![ZERO; amps.len()];
        for (i, &a) in amps.iter().enumerate() {
            out[map[i]] = a;
        }
        Ok(out)
    }

    /// `V_P m V_P^dag`.
    pub fn apply_matrix(&self, m: &ComplexMatrix, dims: &Dims) -> Result<ComplexMatrix> {
        self.check_dims(dims)?;
        if m.rows() != dims.total() || m.cols() != dims.total() {
            return Err(Error::DimensionMismatch("operator side".into()));
        }
        let map = self.index_map(dims);
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                out[(map[r], map[c])] = m[(r, c)];
            }
        }
        Ok(out)
    }

    /// The unitary `V_P` as an explicit permutation matrix.
    pub fn matrix(&self, dims: &Dims) -> Result<ComplexMatrix> {
        self.check_dims(dims)?;
        let map = self.index_map(dims);
        let mut out = ComplexMatrix::zeros(dims.total(), dims.total());
        for (i, &j) in map.iter().enumerate() {
            out[(j, i)] = ONE;
        }
        Ok(out)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.images.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
