//! Dense matrix functions for the small real matrices that carry the
//! coefficients: symmetric eigendecomposition (cyclic Jacobi), SPD square
//! roots, determinants, the matrix exponential and the spectral norm.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{dimension, Error, Result};

/// Largest order accepted by [`sym_eigen`].
pub const MAX_EIGEN_ORDER: usize = 64;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order, order);
        for i in 0..order {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Build from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(dimension("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(nrows, ncols, data)
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(v, &mut out);
        out
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `selfᵀ v` without forming the transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.data[i * self.cols + j] * vi;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scaled(-1.0))
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.cols.max(1)).collect();
        write!(f, "Matrix{rows:?}")
    }
}

/// Symmetric matrix; entries are symmetrized on construction so that
/// `m[(i, j)] == m[(j, i)]` holds bit for bit.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(dimension(format!("symmetric matrix must be square, got {}x{}", m.rows, m.cols)));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("symmetric matrix entries".into()));
        }
        let n = m.rows;
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn identity(order: usize) -> Self {
        SymMatrix(Matrix::identity(order))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diag(diag))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn order(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scaled(s))
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.0.matvec(v)
    }

    /// `V diag(f(λ)) Vᵀ` from an existing decomposition.
    fn from_eigen_map(eig: &SymEigen, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = eig.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &lam) in eig.values.iter().enumerate() {
            let fl = f(lam);
            for i in 0..n {
                let vik = eig.vectors[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += vik * eig.vectors[(j, k)];
                }
            }
        }
        SymMatrix::new(out).expect("square by construction")
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.0)
    }
}

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(m: &SymMatrix) -> Result<SymEigen> {
    let n = m.order();
    if n == 0 || n > MAX_EIGEN_ORDER {
        return Err(dimension(format!("eigen order {n} outside 1..={MAX_EIGEN_ORDER}")));
    }
    let mut a = m.0.clone();
    let mut v = Matrix::identity(n);
    let scale = a.norm_frobenius();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let target = f64::EPSILON * scale;
    let mut sweeps = 0;
    while off(&a) > target && scale > 0.0 {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: off(&a) });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Entries below rounding of the diagonal are dropped outright.
                if apq.abs() <= 0.5 * f64::EPSILON * (app.abs() * aqq.abs()).sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = v[(i, old)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Eigenvalue floor below which SPD operations refuse to proceed.
pub fn spd_floor(norm: f64) -> f64 {
    1e-12 * norm.max(1.0)
}

/// Square root, inverse square root, inverse and determinant data of an SPD
/// matrix, all sharing one eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpdFactors {
    pub eigen: SymEigen,
    pub sqrt: SymMatrix,
    pub inv_sqrt: SymMatrix,
    pub inverse: SymMatrix,
    /// `ln det M^{1/2}`.
    pub log_det_sqrt: f64,
}

impl SpdFactors {
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let eigen = sym_eigen(m)?;
        let floor = spd_floor(eigen.max_abs_eigenvalue());
        let min = *eigen.values.last().expect("order >= 1");
        if !(min > floor) {
            return Err(Error::NotPositiveDefinite { eigenvalue: min, floor });
        }
        let sqrt = SymMatrix::from_eigen_map(&eigen, f64::sqrt);
        let inv_sqrt = SymMatrix::from_eigen_map(&eigen, |l| 1.0 / l.sqrt());
        let inverse = SymMatrix::from_eigen_map(&eigen, |l| 1.0 / l);
        let log_det_sqrt = 0.5 * eigen.values.iter().map(|l| l.ln()).sum::<f64>();
        Ok(Self { eigen, sqrt, inv_sqrt, inverse, log_det_sqrt })
    }

    /// Factors of `s·M` for `s > 0`, without refactoring. Valid below the
    /// SPD floor, which is how degenerate windows are handled.
    pub fn scaled(&self, s: f64) -> Self {
        let rs = s.sqrt();
        let mut eigen = self.eigen.clone();
        eigen.values.iter_mut().for_each(|l| *l *= s);
        Self {
            eigen,
            sqrt: self.sqrt.scaled(rs),
            inv_sqrt: self.inv_sqrt.scaled(1.0 / rs),
            inverse: self.inverse.scaled(1.0 / s),
            log_det_sqrt: self.log_det_sqrt + 0.5 * self.eigen.values.len() as f64 * s.ln(),
        }
    }

    pub fn det_sqrt(&self) -> f64 {
        self.log_det_sqrt.exp()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigen.values.last().expect("order >= 1")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen.values[0]
    }
}

pub fn spd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(SpdFactors::new(m)?.sqrt)
}

pub fn spd_inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(SpdFactors::new(m)?.inv_sqrt)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(dimension("determinant of a non-square matrix"));
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .expect("nonempty range");
        if a[(pivot, col)] == 0.0 {
            return Ok(0.0);
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot, k)];
                a[(pivot, k)] = tmp;
            }
            det = -det;
        }
        let d = a[(col, col)];
        det *= d;
        for i in (col + 1)..n {
            let f = a[(i, col)] / d;
            for k in col..n {
                a[(i, k)] -= f * a[(col, k)];
            }
        }
    }
    Ok(det)
}

/// Flip `v` to the lexicographically smaller of `{v, -v}`: the first entry
/// that is not negligible ends up negative.
pub fn canonical_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        if *first > 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Spectral norm `max_{|z|=1} |Bz|` with a maximizing unit vector.
pub fn spectral_norm(b: &Matrix) -> Result<(f64, Vec<f64>)> {
    if !b.is_finite() {
        return Err(Error::NonFinite("spectral_norm input".into()));
    }
    let gram = SymMatrix::new(b.transpose().matmul(b))?;
    let eig = sym_eigen(&gram)?;
    let mut z = eig.column(0);
    canonical_sign(&mut z);
    Ok((eig.values[0].max(0.0).sqrt(), z))
}

/// `e^B` by scaling and squaring around a truncated Taylor series.
pub fn matrix_exp(b: &Matrix) -> Result<Matrix> {
    if !b.is_square() {
        return Err(dimension("matrix_exp of a non-square matrix"));
    }
    if !b.is_finite() {
        return Err(Error::NonFinite("matrix_exp input".into()));
    }
    let n = b.rows;
    let norm = b.norm_1();
    // Scale until the 1-norm is at most 1/2.
    let squarings = if norm > 0.5 { ((norm / 0.5).log2().ceil()) as i32 } else { 0 };
    let scaled = b.scaled(0.5_f64.powi(squarings));

    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&scaled).scaled(1.0 / k as f64);
        result = result.add(&term);
        if term.max_abs() <= f64::EPSILON * 1e-3 * result.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}
