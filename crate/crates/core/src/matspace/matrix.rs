use std::fmt;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::scalar::Field;

/// A dense row-major matrix over a scalar backend.
///
/// Spaces of `D×D` matrices are the main use, but rectangular shapes appear
/// for block selectors and projected blocks.
#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("matrix has no rows")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = F::one();
        }
        m
    }

    /// The unit matrix `E_{ij}` (zero-based indices) of size `d×d`.
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(d, d);
        m.data[i * d + j] = F::one();
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(rows * cols, data.len(), "flat data does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self, ShapeError> {
        let cols = rows.first().ok_or(ShapeError::Empty)?.len();
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(ShapeError::Ragged { row, len: r.len(), expected: cols });
            }
            data.extend(r);
        }
        Ok(Matrix { rows: n, cols, data })
    }

    /// Square matrix from integer entries; test and generator convenience.
    pub fn from_i64_rows<const N: usize>(rows: [[i64; N]; N]) -> Self {
        Self::from_fn(N, N, |i, j| F::from_i64(rows[i][j]))
    }

    /// Column vector from a slice.
    pub fn column(v: &[F]) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v.to_vec() }
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

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major flattening, the coordinate vector used by matrix spaces.
    pub fn as_flat(&self) -> &[F] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<F> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<F>]) -> Self {
        let n = cols.first().map_or(0, Vec::len);
        Self::from_fn(n, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    o.add_mul_assign(a, b);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for (a, x) in self.row(i).iter().zip(v) {
                    acc.add_mul_assign(a, x);
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.plus(b)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.minus(b)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &F) -> Self {
        let data = self.data.iter().map(|a| a.times(c)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// `self += c * rhs`
    pub fn add_scaled(&mut self, c: &F, rhs: &Self) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            a.add_mul_assign(c, b);
        }
    }

    /// `self^k`, with `self^0 = I`.
    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::identity(self.dim());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn trace(&self) -> F {
        let mut t = F::zero();
        for i in 0..self.rows.min(self.cols) {
            t.add_assign_ref(self.get(i, i));
        }
        t
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows.start + i, cols.start + j).clone())
    }

    /// Largest entry modulus; the scale for float zero tests.
    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(Field::magnitude).fold(0.0, f64::max)
    }

    /// Exact zero test for the rational backend, tolerance-relative to
    /// `scale` for floats.
    pub fn is_negligible(&self, scale: f64) -> bool {
        self.data.iter().all(|x| x.is_negligible(scale))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    /// Entry-wise equality: exact, or within the float tolerance relative to
    /// the larger operand.
    pub fn approx_eq(&self, other: &Self) -> bool {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return false;
        }
        let scale = self.max_magnitude().max(other.max_magnitude()).max(1.0);
        self.data.iter().zip(&other.data).all(|(a, b)| a.minus(b).is_negligible(scale))
    }

    pub fn rank(&self) -> usize {
        F::rank_of(self)
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_c64(&self) -> Matrix<Complex64> {
        self.map(Field::to_c64)
    }
}

impl<F: fmt::Debug> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}

impl<F: Field + Serialize> Serialize for Matrix<F> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de, F: Field + Deserialize<'de>> Deserialize<'de> for Matrix<F> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<F>>::deserialize(deserializer)?;
        Matrix::from_rows(rows).map_err(D::Error::custom)
    }
}
