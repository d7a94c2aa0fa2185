//! Scalar backends.
//!
//! Two fields are supported: exact Gaussian rationals `a + b·i` with
//! arbitrary-precision rational parts, and IEEE complex doubles. Linear
//! algebra throughout the crate is generic over [`Field`]; the spectral
//! hooks (rank, kernel, eigenvalues) have an elimination-based default that
//! the float backend overrides with SVD/Schur routines from `nalgebra`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::linalg;
use super::matrix::Matrix;

/// Which scalar field a value lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => f.write_str("exact"),
            Backend::Float => f.write_str("float"),
        }
    }
}

/// Default relative tolerance of the float backend.
pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-9;

static FLOAT_TOLERANCE: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Relative tolerance used by every float-backend zero test and numerical rank.
pub fn float_tolerance() -> f64 {
    f64::from_bits(FLOAT_TOLERANCE.load(Ordering::Relaxed))
}

/// Overrides the float tolerance process-wide. Non-positive or non-finite
/// values are ignored.
pub fn set_float_tolerance(tol: f64) {
    if tol.is_finite() && tol > 0.0 {
        FLOAT_TOLERANCE.store(tol.to_bits(), Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EigenError {
    /// No nonzero eigenvalue of the matrix is representable exactly.
    #[error("no nonzero eigenvalue is a Gaussian rational")]
    IrrationalEigenvalue,
    #[error("eigen-decomposition did not converge")]
    NoConvergence,
}

/// Bases of the invertible part and the nilpotent part of a square matrix.
pub type FittingSplit<F> = (Vec<Vec<F>>, Vec<Vec<F>>);

/// Arithmetic and spectral primitives shared by both backends.
pub trait Field: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_c64(z: Complex64) -> Option<Self>;
    fn to_c64(&self) -> Complex64;

    /// Structural zero: exact equality with zero.
    fn is_zero(&self) -> bool;
    /// Zero test relative to `scale`. Exact for the rational backend.
    fn is_negligible(&self, scale: f64) -> bool;
    fn magnitude(&self) -> f64;

    fn plus(&self, rhs: &Self) -> Self;
    fn minus(&self, rhs: &Self) -> Self;
    fn times(&self, rhs: &Self) -> Self;
    fn negated(&self) -> Self;
    fn conjugate(&self) -> Self;
    /// Multiplicative inverse. Panics on zero.
    fn recip(&self) -> Self;

    fn add_assign_ref(&mut self, rhs: &Self) {
        *self = self.plus(rhs);
    }
    /// `self -= a * b`
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.minus(&a.times(b));
    }
    /// `self += a * b`
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.plus(&a.times(b));
    }
    fn div(&self, rhs: &Self) -> Self {
        self.times(&rhs.recip())
    }

    /// Rank of a (possibly rectangular) matrix.
    fn rank_of(m: &Matrix<Self>) -> usize {
        linalg::elimination_rank(m)
    }
    /// Basis of the right kernel `{x : m x = 0}`.
    fn kernel_of(m: &Matrix<Self>) -> Vec<Vec<Self>> {
        linalg::elimination_kernel(m)
    }
    /// Basis of the column space.
    fn image_of(m: &Matrix<Self>) -> Vec<Vec<Self>> {
        linalg::elimination_image(m)
    }
    /// The distinct nonzero eigenvalues the backend can represent.
    fn nonzero_eigenvalues(m: &Matrix<Self>) -> Result<Vec<Self>, EigenError>;
    /// Number of nonzero eigenvalues of a square matrix, with multiplicity.
    fn invertible_part_dim(m: &Matrix<Self>) -> usize {
        Self::rank_of(&m.pow(m.dim()))
    }
    /// One solution of `m x = b`, or `None` when inconsistent.
    fn solve_in(m: &Matrix<Self>, b: &[Self]) -> Option<Vec<Self>> {
        linalg::solve(m, b)
    }
    /// Bases of the invertible part `Im m^n` and the nilpotent part `Ker m^n`
    /// of a square matrix.
    fn fitting_split(m: &Matrix<Self>) -> Result<FittingSplit<Self>, EigenError> {
        let p = m.pow(m.dim());
        Ok((Self::image_of(&p), Self::kernel_of(&p)))
    }
}

/// An exact Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussRational {
    re: BigRational,
    im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRational { re, im: BigRational::zero() }
    }

    pub fn from_integers(re: i64, im: i64) -> Self {
        GaussRational {
            re: BigRational::from_integer(re.into()),
            im: BigRational::from_integer(im.into()),
        }
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// `|z|²` as an exact rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Least common multiple of the denominators of both parts.
    pub fn denominator_lcm(&self) -> BigInt {
        self.re.denom().lcm(self.im.denom())
    }
}

impl fmt::Debug for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            return write!(f, "{} i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "{}-{} i", self.re, -&self.im)
        } else {
            write!(f, "{}+{} i", self.re, self.im)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseScalarError(pub String);

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.strip_prefix('+').unwrap_or(num).parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

impl FromStr for GaussRational {
    type Err = ParseScalarError;

    /// Accepts `p`, `p/q`, `p/q+r/s i`, `p/q-r/s i`, `r/s i` and `i`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScalarError(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err());
        }
        let Some(body) = compact.strip_suffix('i') else {
            return parse_rational(&compact).map(GaussRational::real).ok_or_else(err);
        };
        // Split at the last sign that is not leading.
        let split = body
            .char_indices()
            .filter(|&(i, c)| i > 0 && (c == '+' || c == '-') && !body[..i].ends_with('/'))
            .map(|(i, _)| i)
            .next_back();
        let (re_txt, im_txt) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("", body),
        };
        let re = if re_txt.is_empty() {
            BigRational::zero()
        } else {
            parse_rational(re_txt).ok_or_else(err)?
        };
        let im = match im_txt {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            t => parse_rational(t).ok_or_else(err)?,
        };
        Ok(GaussRational { re, im })
    }
}

impl Serialize for GaussRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GaussRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Field for GaussRational {
    const BACKEND: Backend = Backend::Exact;

    fn zero() -> Self {
        GaussRational::default()
    }
    fn one() -> Self {
        GaussRational::real(BigRational::one())
    }
    fn from_i64(v: i64) -> Self {
        GaussRational::from_integers(v, 0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        GaussRational::real(BigRational::new(num.into(), den.into()))
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(GaussRational {
            re: BigRational::from_float(z.re)?,
            im: BigRational::from_float(z.im)?,
        })
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    fn plus(&self, rhs: &Self) -> Self {
        GaussRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
    fn minus(&self, rhs: &Self) -> Self {
        GaussRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
    fn times(&self, rhs: &Self) -> Self {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussRational::real(&self.re * &rhs.re);
        }
        GaussRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
    fn negated(&self) -> Self {
        GaussRational { re: -&self.re, im: -&self.im }
    }
    fn conjugate(&self) -> Self {
        GaussRational { re: self.re.clone(), im: -&self.im }
    }
    fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        if self.im.is_zero() {
            return GaussRational::real(self.re.recip());
        }
        let n = self.norm_sqr();
        GaussRational { re: &self.re / &n, im: -&self.im / &n }
    }

    fn add_assign_ref(&mut self, rhs: &Self) {
        self.re += &rhs.re;
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        if a.im.is_zero() && b.im.is_zero() {
            self.re -= &a.re * &b.re;
            return;
        }
        let p = a.times(b);
        self.re -= p.re;
        self.im -= p.im;
    }
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        if a.im.is_zero() && b.im.is_zero() {
            self.re += &a.re * &b.re;
            return;
        }
        let p = a.times(b);
        self.re += p.re;
        self.im += p.im;
    }

    fn nonzero_eigenvalues(m: &Matrix<Self>) -> Result<Vec<Self>, EigenError> {
        linalg::exact_nonzero_eigenvalues(m)
    }
}

impl Field for Complex64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        (z.re.is_finite() && z.im.is_finite()).then_some(z)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.norm() <= float_tolerance() * scale
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn negated(&self) -> Self {
        -self
    }
    fn conjugate(&self) -> Self {
        self.conj()
    }
    fn recip(&self) -> Self {
        assert!(!Field::is_zero(self), "reciprocal of zero");
        self.inv()
    }

    fn rank_of(m: &Matrix<Self>) -> usize {
        linalg::svd_rank(m)
    }
    fn kernel_of(m: &Matrix<Self>) -> Vec<Vec<Self>> {
        linalg::svd_kernel(m)
    }
    fn image_of(m: &Matrix<Self>) -> Vec<Vec<Self>> {
        linalg::svd_image(m)
    }
    fn nonzero_eigenvalues(m: &Matrix<Self>) -> Result<Vec<Self>, EigenError> {
        linalg::float_nonzero_eigenvalues(m)
    }
    fn invertible_part_dim(m: &Matrix<Self>) -> usize {
        linalg::float_nonzero_eigenvalues(m).map_or_else(|_| linalg::svd_rank(&m.pow(m.dim())), |e| e.len())
    }
    fn solve_in(m: &Matrix<Self>, b: &[Self]) -> Option<Vec<Self>> {
        linalg::svd_solve(m, b)
    }
    fn fitting_split(m: &Matrix<Self>) -> Result<FittingSplit<Self>, EigenError> {
        linalg::float_fitting_split(m)
    }
}
