//! Dense linear algebra helpers shared by the backends.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::matrix::Matrix;
use super::scalar::{float_tolerance, Backend, EigenError, Field, FittingSplit, GaussRational};

/// Row-reduces a copy of `m` to reduced row-echelon form and returns it with
/// its pivot columns. Exact matrices pivot on the first nonzero entry; float
/// matrices use partial pivoting and a tolerance relative to the largest
/// entry.
pub fn rref<F: Field>(m: &Matrix<F>) -> (Matrix<F>, Vec<usize>) {
    let (rows, cols) = (m.rows(), m.cols());
    let scale = m.max_magnitude();
    let mut a = m.to_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let candidate = match F::BACKEND {
            Backend::Exact => (r..rows).find(|&i| !a[i][c].is_zero()),
            Backend::Float => (r..rows)
                .filter(|&i| !a[i][c].is_negligible(scale))
                .max_by(|&x, &y| a[x][c].magnitude().total_cmp(&a[y][c].magnitude())),
        };
        let Some(p) = candidate else {
            for row in a.iter_mut().skip(r) {
                row[c] = F::zero();
            }
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = x.times(&inv);
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                x.sub_mul_assign(&f, p);
            }
            row[c] = F::zero();
        }
        pivots.push(c);
        r += 1;
    }
    let flat = a.into_iter().flatten().collect();
    (Matrix::from_flat(rows, cols, flat), pivots)
}

pub fn elimination_rank<F: Field>(m: &Matrix<F>) -> usize {
    rref(m).1.len()
}

pub fn elimination_kernel<F: Field>(m: &Matrix<F>) -> Vec<Vec<F>> {
    let (r, pivots) = rref(m);
    let cols = m.cols();
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![F::zero(); cols];
        v[free] = F::one();
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = r.get(row, free).negated();
        }
        basis.push(v);
    }
    basis
}

pub fn elimination_image<F: Field>(m: &Matrix<F>) -> Vec<Vec<F>> {
    rref(m).1.into_iter().map(|c| m.col(c)).collect()
}

/// Inverse of a square matrix, or `None` when singular.
pub fn inverse<F: Field>(m: &Matrix<F>) -> Option<Matrix<F>> {
    let n = m.rows();
    assert!(m.is_square());
    let aug = Matrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            m.get(i, j).clone()
        } else if j - n == i {
            F::one()
        } else {
            F::zero()
        }
    });
    let (r, pivots) = rref(&aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(r.submatrix(0..n, n..2 * n))
}

/// Solves `m x = b` for one solution, or `None` when inconsistent.
pub fn solve<F: Field>(m: &Matrix<F>, b: &[F]) -> Option<Vec<F>> {
    let (rows, cols) = (m.rows(), m.cols());
    assert_eq!(rows, b.len());
    let aug = Matrix::from_fn(rows, cols + 1, |i, j| if j < cols { m.get(i, j).clone() } else { b[i].clone() });
    let (r, pivots) = rref(&aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![F::zero(); cols];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = r.get(row, cols).clone();
    }
    Some(x)
}

/// Characteristic polynomial coefficients `c_0..c_n` (monic, `c_n = 1`) by
/// the Faddeev–LeVerrier recurrence.
pub fn char_poly<F: Field>(a: &Matrix<F>) -> Vec<F> {
    let n = a.dim();
    let mut coeffs = vec![F::zero(); n + 1];
    coeffs[n] = F::one();
    let mut m = Matrix::<F>::zeros(n, n);
    for k in 1..=n {
        let mut next = a.mul(&m);
        let c = coeffs[n - k + 1].clone();
        for i in 0..n {
            let d = next.get(i, i).plus(&c);
            next.set(i, i, d);
        }
        let t = a.mul(&next).trace();
        coeffs[n - k] = t.times(&F::from_i64(k as i64).recip()).negated();
        m = next;
    }
    coeffs
}

pub fn eval_poly<F: Field>(coeffs: &[F], x: &F) -> F {
    let mut acc = F::zero();
    for c in coeffs.iter().rev() {
        acc = acc.times(x).plus(c);
    }
    acc
}

fn to_nalgebra(m: &Matrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| *m.get(i, j))
}

/// Pads with zero rows so the thin SVD exposes the full right kernel.
fn padded_svd(m: &Matrix<Complex64>) -> nalgebra::SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn> {
    let rows = m.rows().max(m.cols());
    let dm = DMatrix::from_fn(rows, m.cols(), |i, j| {
        if i < m.rows() {
            *m.get(i, j)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    dm.svd(true, true)
}

fn svd_threshold(singular: &[f64], size: usize) -> f64 {
    let smax = singular.iter().copied().fold(0.0, f64::max);
    float_tolerance() * smax * size.max(1) as f64
}

pub fn svd_rank(m: &Matrix<Complex64>) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let sv: Vec<f64> = to_nalgebra(m).singular_values().iter().copied().collect();
    let thr = svd_threshold(&sv, m.rows().max(m.cols()));
    sv.iter().filter(|&&s| s > thr && s > 0.0).count()
}

pub fn svd_kernel(m: &Matrix<Complex64>) -> Vec<Vec<Complex64>> {
    let svd = padded_svd(m);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let thr = svd_threshold(&sv, m.rows().max(m.cols()));
    let v_t = svd.v_t.expect("v_t requested");
    sv.iter()
        .enumerate()
        .filter(|&(_, &s)| s <= thr || s == 0.0)
        .map(|(k, _)| (0..m.cols()).map(|j| v_t[(k, j)].conj()).collect())
        .collect()
}

pub fn svd_image(m: &Matrix<Complex64>) -> Vec<Vec<Complex64>> {
    let svd = to_nalgebra(m).svd(true, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let thr = svd_threshold(&sv, m.rows().max(m.cols()));
    let u = svd.u.expect("u requested");
    sv.iter()
        .enumerate()
        .filter(|&(_, &s)| s > thr && s > 0.0)
        .map(|(k, _)| (0..m.rows()).map(|i| u[(i, k)]).collect())
        .collect()
}

/// Solution of `m x = b` through the SVD of the column-equilibrated
/// matrix, or `None` when the residual is not negligible.
pub fn svd_solve(m: &Matrix<Complex64>, b: &[Complex64]) -> Option<Vec<Complex64>> {
    let norms: Vec<f64> = (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .map(|n| if n > 0.0 { n } else { 1.0 })
        .collect();
    let scaled = Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) / norms[j]);
    let svd = padded_svd(&scaled);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    // Only numerically zero directions are dropped; the residual check
    // below decides whether the solution is acceptable.
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let thr = f64::EPSILON * smax * m.rows().max(m.cols()) as f64;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut x = vec![Complex64::new(0.0, 0.0); m.cols()];
    for (k, &s) in sv.iter().enumerate() {
        if s <= thr || s == 0.0 {
            continue;
        }
        let proj: Complex64 = (0..scaled.rows()).map(|i| u[(i, k)].conj() * b[i]).sum::<Complex64>() / s;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += v_t[(k, j)].conj() * proj;
        }
    }
    for (xj, n) in x.iter_mut().zip(&norms) {
        *xj /= *n;
    }
    let r = m.mul_vec(&x);
    let spread = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| (m.get(i, j) * x[j]).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let scale = vec_scale(b).max(spread).max(1.0);
    r.iter().zip(b).all(|(a, c)| (a - c).is_negligible(scale)).then_some(x)
}

/// Column space and right kernel of `m` with the rank forced to `rank`.
pub fn svd_split(m: &Matrix<Complex64>, rank: usize) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let svd = padded_svd(m);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let n = m.cols();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let image = order[..rank].iter().map(|&k| (0..m.rows()).map(|i| u[(i, k)]).collect()).collect();
    let kernel = order[rank..n].iter().map(|&k| (0..n).map(|j| v_t[(k, j)].conj()).collect()).collect();
    (image, kernel)
}

/// Invertible and nilpotent parts of a square float matrix: bases of
/// `Im m^t` and `Ker m^t` where `t` is the size of the nilpotent part, with
/// the number of nonzero eigenvalues read off the Schur form.
pub fn float_fitting_split(m: &Matrix<Complex64>) -> Result<FittingSplit<Complex64>, EigenError> {
    let n = m.dim();
    let s = float_nonzero_eigenvalues(m)?.len();
    if s == n {
        let unit = |j| (0..n).map(|i| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect();
        return Ok(((0..n).map(unit).collect(), Vec::new()));
    }
    Ok(svd_split(&m.pow(n - s), s))
}

/// All eigenvalues from a complex Schur decomposition.
pub fn float_eigenvalues(m: &Matrix<Complex64>) -> Result<Vec<Complex64>, EigenError> {
    let n = m.dim();
    let scale = m.max_magnitude();
    if scale == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    // The unshifted QR iteration stalls on spectra symmetric about the
    // origin (common for integer matrices), so a generic complex shift is
    // tried first.
    let shifts = [Complex64::new(0.37, 0.61), Complex64::new(-0.53, 0.29), Complex64::new(0.0, 0.0)];
    for sigma in shifts.map(|s| s * scale) {
        let mut a = to_nalgebra(m);
        for i in 0..n {
            a[(i, i)] += sigma;
        }
        if let Some(schur) = nalgebra::linalg::Schur::try_new(a, 1e-14, 10_000) {
            let (_, t) = schur.unpack();
            return Ok((0..n).map(|i| t[(i, i)] - sigma).collect());
        }
    }
    Err(EigenError::NoConvergence)
}

/// Eigenvalues clearly separated from zero, largest modulus first.
pub fn float_nonzero_eigenvalues(m: &Matrix<Complex64>) -> Result<Vec<Complex64>, EigenError> {
    let mut eig = float_eigenvalues(m)?;
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cutoff = float_tolerance().sqrt() * scale.max(f64::MIN_POSITIVE);
    eig.retain(|z| z.norm() > cutoff);
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

fn round_to_bigint(x: f64) -> Option<BigInt> {
    let r = x.round();
    if !r.is_finite() {
        return None;
    }
    BigRational::from_float(r).map(|q| q.to_integer())
}

/// Nonzero Gaussian-rational eigenvalues of an exact matrix, largest
/// modulus first.
///
/// Candidates come from rounding float Schur eigenvalues onto the lattice
/// `Z[i]/c`, where `c` clears the denominators of the characteristic
/// polynomial; every candidate is then confirmed exactly as a root.
pub fn exact_nonzero_eigenvalues(m: &Matrix<GaussRational>) -> Result<Vec<GaussRational>, EigenError> {
    let poly = char_poly(m);
    let c = poly.iter().fold(BigInt::one(), |acc, x| acc.lcm(&x.denominator_lcm()));
    let c_f = c.to_f64().unwrap_or(f64::INFINITY);
    let approx = float_eigenvalues(&m.to_c64())?;
    let mut found: Vec<GaussRational> = Vec::new();
    for z in approx {
        let (Some(re), Some(im)) = (round_to_bigint(z.re * c_f), round_to_bigint(z.im * c_f)) else {
            continue;
        };
        let cand = GaussRational::new(BigRational::new(re, c.clone()), BigRational::new(im, c.clone()));
        if cand.is_zero() || found.contains(&cand) {
            continue;
        }
        if eval_poly(&poly, &cand).is_zero() {
            found.push(cand);
        }
    }
    if found.is_empty() {
        return Err(EigenError::IrrationalEigenvalue);
    }
    found.sort_by(|a, b| {
        b.norm_sqr()
            .cmp(&a.norm_sqr())
            .then_with(|| b.re().cmp(a.re()))
            .then_with(|| b.im().cmp(a.im()))
    });
    Ok(found)
}

/// Dimension of the span of `vectors`. Floats use the SVD rank after every
/// vector is scaled to unit length, so that short and long vectors count
/// alike.
pub fn span_rank<F: Field>(vectors: &[Vec<F>]) -> usize {
    let Some(len) = vectors.first().map(Vec::len) else {
        return 0;
    };
    match F::BACKEND {
        Backend::Exact => {
            let mut e = super::echelon::Echelon::new(len);
            for v in vectors {
                e.insert(v);
                if e.is_full() {
                    break;
                }
            }
            e.rank()
        }
        Backend::Float => {
            let cols: Vec<Vec<F>> = vectors
                .iter()
                .filter_map(|v| {
                    let n = v.iter().map(|x| x.magnitude().powi(2)).sum::<f64>().sqrt();
                    let inv = F::from_c64(Complex64::new(1.0 / n, 0.0)).filter(|_| n > 0.0)?;
                    Some(v.iter().map(|x| x.times(&inv)).collect())
                })
                .collect();
            if cols.is_empty() {
                return 0;
            }
            F::rank_of(&Matrix::from_columns(&cols))
        }
    }
}

/// Largest entry modulus of a vector.
pub fn vec_scale<F: Field>(v: &[F]) -> f64 {
    v.iter().map(Field::magnitude).fold(0.0, f64::max)
}

pub fn is_zero_vec<F: Field>(v: &[F], scale: f64) -> bool {
    v.iter().all(|x| x.is_negligible(scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = GaussRational;

    #[test]
    fn kernel_and_image_dimensions() {
        let m = Matrix::<Q>::from_i64_rows([[1, 2, 3], [2, 4, 6], [0, 1, 1]]);
        assert_eq!(elimination_kernel(&m).len(), 1);
        assert_eq!(elimination_image(&m).len(), 2);
        for v in elimination_kernel(&m) {
            assert!(m.mul_vec(&v).iter().all(Field::is_zero));
        }
        let f = m.to_c64();
        assert_eq!(svd_kernel(&f).len(), 1);
        assert_eq!(svd_image(&f).len(), 2);
    }

    #[test]
    fn wide_matrix_kernel() {
        let m = Matrix::<Complex64>::from_fn(1, 3, |_, j| Complex64::new(j as f64 + 1.0, 0.0));
        let k = svd_kernel(&m);
        assert_eq!(k.len(), 2);
        for v in k {
            let r = m.mul_vec(&v);
            assert!(r[0].norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = Matrix::<Q>::from_i64_rows([[2, 1, 0], [1, 1, 0], [0, 3, 1]]);
        let inv = inverse(&m).unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(3));
        assert!(inverse(&Matrix::<Q>::from_i64_rows([[1, 2], [2, 4]])).is_none());
    }

    #[test]
    fn eigenvalues_symmetric_about_zero() {
        // Spectrum {0, ±√6}: plain complex QR stalls here.
        let m = Matrix::<Q>::from_i64_rows([[0, 1, 0], [3, 0, 1], [0, 3, 0]]).to_c64();
        let mut eig: Vec<f64> = float_eigenvalues(&m).unwrap().iter().map(|z| z.re).collect();
        eig.sort_by(f64::total_cmp);
        let r6 = 6f64.sqrt();
        assert!(eig.iter().zip([-r6, 0.0, r6]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(float_eigenvalues(&Matrix::<Complex64>::zeros(2, 2)).unwrap().len(), 2);
    }

    #[test]
    fn char_poly_of_companion() {
        // x^2 - 3x + 2 = (x-1)(x-2)
        let m = Matrix::<Q>::from_i64_rows([[0, -2], [1, 3]]);
        let p = char_poly(&m);
        assert_eq!(p, vec![Q::from_i64(2), Q::from_i64(-3), Q::one()]);
    }

    #[test]
    fn exact_eigenvalues_found_or_rejected() {
        let m = Matrix::<Q>::from_i64_rows([[2, 1, 0], [0, 2, 0], [0, 0, -3]]);
        let eig = exact_nonzero_eigenvalues(&m).unwrap();
        assert_eq!(eig, vec![Q::from_i64(-3), Q::from_i64(2)]);
        // Rotation by 90 degrees has eigenvalues ±i.
        let rot = Matrix::<Q>::from_i64_rows([[0, -1], [1, 0]]);
        let eig = exact_nonzero_eigenvalues(&rot).unwrap();
        assert_eq!(eig.len(), 2);
        assert!(eig.contains(&Q::from_integers(0, 1)));
        // x^2 - 2 has no rational roots.
        let irr = Matrix::<Q>::from_i64_rows([[0, 2], [1, 0]]);
        assert_eq!(exact_nonzero_eigenvalues(&irr), Err(EigenError::IrrationalEigenvalue));
        // Rational but non-integral: 1/2.
        let half = Matrix::<Q>::from_fn(1, 1, |_, _| Q::from_ratio(1, 2));
        assert_eq!(exact_nonzero_eigenvalues(&half).unwrap(), vec![Q::from_ratio(1, 2)]);
    }

    #[test]
    fn solve_consistent_and_not() {
        let m = Matrix::<Q>::from_i64_rows([[1, 1], [1, 1]]);
        assert!(solve(&m, &[Q::from_i64(1), Q::from_i64(2)]).is_none());
        let x = solve(&m, &[Q::from_i64(3), Q::from_i64(3)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![Q::from_i64(3), Q::from_i64(3)]);
    }
}
