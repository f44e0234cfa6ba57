//! Small dense matrices and the matrix exponential.
//!
//! Everything here is sized for desk-scale systems (state dimension up to a
//! few dozen). Storage is row-major and dense; sparsity only matters to the
//! operation counters, which ask for [`Matrix::nnz`].

use std::ops::{Add, Deref, Index, IndexMut, Mul, Sub};

use crate::error::{dim_err, invalid, Error, Result};
use crate::Scalar;

/// Dense row-major matrix with finite entries and nonzero dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return dim_err(format!("matrix dimensions must be positive, got {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return dim_err(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested row vectors.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return dim_err("ragged rows");
        }
        Self::new(nrows, ncols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// `n x 1` matrix holding `v`.
    pub fn column(v: &[T]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    /// `1 x n` matrix holding `v`.
    pub fn row(v: &[T]) -> Result<Self> {
        Self::new(1, v.len(), v.to_vec())
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row_slice(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, k: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * k).collect() }
    }

    /// Number of structurally nonzero entries (exact zero test).
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> T {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>()).fold(T::zero(), T::max)
    }

    pub fn norm_inf(&self) -> T {
        (0..self.rows).map(|i| self.row_slice(i).iter().map(|x| x.abs()).sum::<T>()).fold(T::zero(), T::max)
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|x| x.abs()).fold(T::zero(), T::max)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return dim_err(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, rhs.rows, rhs.cols));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// `self · v` for a column vector given as a slice.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        self.data.chunks(self.cols).map(|row| row.iter().zip(v).map(|(&a, &x)| a * x).sum()).collect()
    }

    /// `vᵀ · self` for a row vector given as a slice.
    pub fn vec_mul(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "vector-matrix dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (row, &x) in self.data.chunks(self.cols).zip(v) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += x * a;
            }
        }
        out
    }

    /// Sub-block of `nr x nc` entries starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        let mut out = Self::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    /// Dense `A⁻¹` by Gaussian elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return dim_err("inverse of a non-square matrix");
        }
        solve(self, &Self::identity(self.rows))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "matrix sum dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "matrix difference dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }
}

/// Column vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return dim_err("vector must have positive dimension");
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return invalid("vector entries must be finite");
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn dot(&self, other: &[T]) -> T {
        self.0.iter().zip(other).map(|(&a, &b)| a * b).sum()
    }
}

impl<T> Deref for Vector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Solves `A X = B` with partial pivoting.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() || a.rows != b.rows {
        return dim_err(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.rows, a.cols, b.rows, b.cols
        ));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let pivot = (k..n).max_by(|&i, &j| lu[(i, k)].abs().partial_cmp(&lu[(j, k)].abs()).unwrap()).unwrap();
        if lu[(pivot, k)].is_zero() {
            return Err(Error::Numerical("singular matrix".into()));
        }
        if pivot != k {
            for j in 0..n {
                lu.data.swap(k * n + j, pivot * n + j);
            }
            for j in 0..x.cols {
                x.data.swap(k * x.cols + j, pivot * x.cols + j);
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..x.cols {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..x.cols {
            let mut acc = x[(k, j)];
            for m in k + 1..n {
                acc -= lu[(k, m)] * x[(m, j)];
            }
            x[(k, j)] = acc / lu[(k, k)];
        }
    }
    Ok(x)
}

/// Least-squares solution of an overdetermined system via Householder QR.
///
/// Returns the solution together with the 1-norm condition number of the
/// triangular factor, which equals that of `a` up to a small constant.
pub fn least_squares<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(Matrix<T>, T)> {
    let (m, n) = (a.rows, a.cols);
    if m < n || b.rows != m {
        return dim_err(format!("least squares needs rows >= cols, got {m}x{n}"));
    }
    let mut r = a.clone();
    let mut qtb = b.clone();
    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<T>().sqrt();
        if norm.is_zero() {
            return Err(Error::Numerical("rank-deficient least-squares system".into()));
        }
        let alpha = if r[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2.is_zero() {
            continue;
        }
        let two = T::one() + T::one();
        for j in k..n {
            let s: T = v.iter().enumerate().map(|(t, &vi)| vi * r[(k + t, j)]).sum();
            let f = two * s / vnorm2;
            for (t, &vi) in v.iter().enumerate() {
                r[(k + t, j)] -= f * vi;
            }
        }
        for j in 0..qtb.cols {
            let s: T = v.iter().enumerate().map(|(t, &vi)| vi * qtb[(k + t, j)]).sum();
            let f = two * s / vnorm2;
            for (t, &vi) in v.iter().enumerate() {
                qtb[(k + t, j)] -= f * vi;
            }
        }
    }
    let upper = r.block(0, 0, n, n);
    let x = solve(&upper, &qtb.block(0, 0, n, qtb.cols))?;
    let cond = upper.norm_one() * upper.inverse()?.norm_one();
    Ok((x, cond))
}

// Diagonal Padé degree; with the scaled norm at most 1/2 the truncation
// error sits far below double-precision roundoff.
const PADE_DEGREE: usize = 8;
const SCALED_NORM_TARGET: f64 = 0.5;

fn pade_coefficients<T: Scalar>() -> Vec<T> {
    let q = PADE_DEGREE;
    let mut c = vec![T::one(); q + 1];
    for k in 1..=q {
        // c_k = c_{k-1} (q - k + 1) / ((2q - k + 1) k)
        c[k] = c[k - 1] * T::of_usize(q - k + 1) / (T::of_usize(2 * q - k + 1) * T::of_usize(k));
    }
    c
}

/// Matrix exponential by scaling and squaring with a diagonal Padé kernel.
pub fn expm<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return dim_err(format!("expm needs a square matrix, got {}x{}", a.rows, a.cols));
    }
    if !a.is_finite() {
        return invalid("expm input has non-finite entries");
    }
    let n = a.rows;
    let norm = a.norm_one().to_f64().unwrap_or(f64::INFINITY);
    let squarings = if norm > SCALED_NORM_TARGET { (norm / SCALED_NORM_TARGET).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale(T::of(0.5f64.powi(squarings)));

    let c = pade_coefficients::<T>();
    let mut num = Matrix::identity(n).scale(c[0]);
    let mut den = num.clone();
    let mut power = Matrix::identity(n);
    for (k, &ck) in c.iter().enumerate().skip(1) {
        power = &power * &scaled;
        let term = power.scale(ck);
        num = &num + &term;
        den = if k % 2 == 0 { &den + &term } else { &den - &term };
    }
    let mut result = solve(&den, &num)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if !result.is_finite() {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(result)
}

/// State map across a Dirac impulse of weight `w` applied to the bilinear
/// input term `(G x + b) u`.
///
/// The pair `(J, d)` is read off `exp(w M)` with `M = [[G, b], [0, 0]]`, so
/// that `x⁺ = J x⁻ + d`.
pub fn impulse_jump<T: Scalar>(g: &Matrix<T>, b: &[T], w: T) -> Result<(Matrix<T>, Vec<T>)> {
    let n = g.rows;
    if !g.is_square() || b.len() != n {
        return dim_err(format!(
            "impulse jump needs square G and matching b, got {}x{} and {}",
            g.rows,
            g.cols,
            b.len()
        ));
    }
    if !w.is_finite() || b.iter().any(|x| !x.is_finite()) {
        return invalid("impulse weight and b must be finite");
    }
    let mut aug = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = g[(i, j)] * w;
        }
        aug[(i, n)] = b[i] * w;
    }
    let e = expm(&aug)?;
    let jump = e.block(0, 0, n, n);
    let offset = (0..n).map(|i| e[(i, n)]).collect();
    Ok((jump, offset))
}
