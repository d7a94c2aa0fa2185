use rayon::prelude::*;

use super::echelon::Echelon;
use super::matrix::Matrix;
use super::scalar::Field;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("matrices mix scalar backends")]
    MixedBackend,
    #[error("matrices mix dimensions {0} and {1}")]
    MixedDimension(usize, usize),
    #[error("expected square matrices, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,
}

/// A linear subspace of `D×D` matrices, stored as the reduced row-echelon
/// basis of the row-major flattenings. Two spaces are equal exactly when
/// their canonical bases agree entry-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpace<F> {
    d: usize,
    basis: Vec<Vec<F>>,
}

/// Products per parallel batch when multiplying spaces.
const PRODUCT_BATCH: usize = 64;

impl<F: Field> MatrixSpace<F> {
    pub fn zero(d: usize) -> Self {
        MatrixSpace { d, basis: Vec::new() }
    }

    /// All of `End(C^D)`: the unit matrices in row-major order.
    pub fn full(d: usize) -> Self {
        let basis = (0..d * d)
            .map(|k| {
                let mut v = vec![F::zero(); d * d];
                v[k] = F::one();
                v
            })
            .collect();
        MatrixSpace { d, basis }
    }

    /// Canonical basis of the span of `vectors` in dimension `d`.
    pub fn span(d: usize, vectors: &[Matrix<F>]) -> Result<Self, SpaceError> {
        if d == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        let mut acc = Echelon::new(d * d);
        for m in vectors {
            if !m.is_square() {
                return Err(SpaceError::NotSquare { rows: m.rows(), cols: m.cols() });
            }
            if m.dim() != d {
                return Err(SpaceError::MixedDimension(d, m.dim()));
            }
            acc.insert(m.as_flat());
        }
        Ok(MatrixSpace { d, basis: acc.into_basis() })
    }

    /// Canonical basis of a nonempty list of matrices sharing one dimension.
    pub fn canonical_basis(vectors: &[Matrix<F>]) -> Result<Self, SpaceError> {
        let first = vectors.first().ok_or(SpaceError::ZeroDimension)?;
        if !first.is_square() {
            return Err(SpaceError::NotSquare { rows: first.rows(), cols: first.cols() });
        }
        Self::span(first.dim(), vectors)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.d * self.d
    }

    /// Canonical basis vectors (flattened, row-major).
    pub fn basis_vectors(&self) -> &[Vec<F>] {
        &self.basis
    }

    pub fn basis(&self) -> Vec<Matrix<F>> {
        self.basis.iter().map(|v| Matrix::from_flat(self.d, self.d, v.clone())).collect()
    }

    fn check_dim(&self, other: &Self) -> Result<(), SpaceError> {
        if self.d != other.d {
            return Err(SpaceError::MixedDimension(self.d, other.d));
        }
        Ok(())
    }

    fn echelon(&self) -> Echelon<F> {
        let mut e = Echelon::new(self.d * self.d);
        for v in &self.basis {
            e.insert(v);
        }
        e
    }

    /// Span of `{s·t}` over the two bases.
    pub fn product(&self, other: &Self) -> Result<Self, SpaceError> {
        self.check_dim(other)?;
        Ok(self.product_unchecked(other))
    }

    pub(crate) fn product_unchecked(&self, other: &Self) -> Self {
        let d = self.d;
        if self.is_zero() || other.is_zero() {
            return Self::zero(d);
        }
        let lhs = self.basis();
        let rhs = other.basis();
        let pairs: Vec<(usize, usize)> =
            (0..lhs.len()).flat_map(|i| (0..rhs.len()).map(move |j| (i, j))).collect();
        let mut acc = Echelon::new(d * d);
        for chunk in pairs.chunks(PRODUCT_BATCH) {
            let products: Vec<Matrix<F>> = if chunk.len() * d > 32 {
                chunk.par_iter().map(|&(i, j)| lhs[i].mul(&rhs[j])).collect()
            } else {
                chunk.iter().map(|&(i, j)| lhs[i].mul(&rhs[j])).collect()
            };
            for p in &products {
                if !p.is_zero() {
                    acc.insert(p.as_flat());
                }
                if acc.is_full() {
                    return Self::full(d);
                }
            }
        }
        MatrixSpace { d, basis: acc.into_basis() }
    }

    /// `S^k` by binary composition, `S^(a+b) = S^a · S^b`.
    pub fn power(&self, k: usize) -> Self {
        self.power_with_peak(k).0
    }

    /// `S^k` together with the largest intermediate basis size seen.
    pub fn power_with_peak(&self, k: usize) -> (Self, usize) {
        assert!(k >= 1, "power exponent must be positive");
        let mut peak = self.dim();
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut e = k;
        loop {
            if e & 1 == 1 {
                let next = match result {
                    None => base.clone(),
                    Some(r) => r.product_unchecked(&base),
                };
                peak = peak.max(next.dim());
                if next.is_zero() {
                    return (next, peak);
                }
                result = Some(next);
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.product_unchecked(&base);
            peak = peak.max(base.dim());
            if base.is_zero() {
                return (base, peak);
            }
        }
        (result.expect("k >= 1"), peak)
    }

    pub fn sum(&self, other: &Self) -> Result<Self, SpaceError> {
        self.check_dim(other)?;
        Ok(self.sum_unchecked(other))
    }

    pub(crate) fn sum_unchecked(&self, other: &Self) -> Self {
        let mut acc = self.echelon();
        for v in &other.basis {
            if acc.is_full() {
                break;
            }
            acc.insert(v);
        }
        MatrixSpace { d: self.d, basis: acc.into_basis() }
    }

    /// `S^{≤t} = S¹ + … + S^t`. Stops early once two consecutive partial sums
    /// agree, since the sum is then stable forever.
    pub fn cumulative(&self, t: usize) -> Self {
        assert!(t >= 1, "cumulative length must be positive");
        let mut power = self.clone();
        let mut acc = self.clone();
        for _ in 2..=t {
            power = power.product_unchecked(self);
            let next = acc.sum_unchecked(&power);
            if next.dim() == acc.dim() {
                return acc;
            }
            acc = next;
        }
        acc
    }

    pub fn contains(&self, m: &Matrix<F>) -> Result<bool, SpaceError> {
        if !m.is_square() {
            return Err(SpaceError::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        if m.dim() != self.d {
            return Err(SpaceError::MixedDimension(self.d, m.dim()));
        }
        Ok(self.echelon().contains(m.as_flat()))
    }

    /// Entry-wise comparison of canonical bases within the float tolerance;
    /// identical to `==` on the exact backend.
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.d != other.d || self.dim() != other.dim() {
            return false;
        }
        self.basis()
            .iter()
            .zip(other.basis())
            .all(|(a, b)| a.approx_eq(&b))
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> MatrixSpace<G> {
        let gens: Vec<Matrix<G>> = self.basis().iter().map(|m| m.map(&f)).collect();
        MatrixSpace::<G>::span(self.d, &gens).expect("same dimension")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matspace::GaussRational as Q;

    fn e(d: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(d, i - 1, j - 1)
    }

    fn span(ms: &[Matrix<Q>]) -> MatrixSpace<Q> {
        MatrixSpace::canonical_basis(ms).unwrap()
    }

    #[test]
    fn canonical_basis_examples() {
        let i2 = Matrix::<Q>::identity(2);
        assert_eq!(span(&[i2.clone(), i2.scale(&Q::from_i64(2))]).dim(), 1);
        assert_eq!(span(&[e(2, 1, 2), e(2, 2, 1)]).dim(), 2);
        let a = e(2, 1, 1).add(&e(2, 1, 2));
        let b = e(2, 1, 1).sub(&e(2, 1, 2));
        assert_eq!(span(&[a, b, e(2, 1, 1)]).dim(), 2);
    }

    #[test]
    fn mixed_dimension_rejected() {
        let err = MatrixSpace::canonical_basis(&[e(2, 1, 1), e(3, 1, 1)]);
        assert_eq!(err, Err(SpaceError::MixedDimension(2, 3)));
        let s = span(&[e(2, 1, 1)]);
        assert!(s.product(&span(&[e(3, 1, 1)])).is_err());
        assert!(s.sum(&span(&[e(3, 1, 1)])).is_err());
        assert!(s.contains(&e(3, 1, 1)).is_err());
        assert_eq!(
            MatrixSpace::canonical_basis(&[Matrix::<Q>::zeros(2, 3)]),
            Err(SpaceError::NotSquare { rows: 2, cols: 3 })
        );
    }

    #[test]
    fn product_examples() {
        let s = span(&[e(2, 1, 2), e(2, 2, 1)]);
        assert_eq!(s.product(&s).unwrap(), span(&[e(2, 1, 1), e(2, 2, 2)]));
        let full = MatrixSpace::<Q>::full(3);
        assert_eq!(full.product(&full).unwrap(), full);
        let id = span(&[Matrix::identity(2)]);
        assert_eq!(id.product(&s).unwrap(), s);
    }

    #[test]
    fn power_examples() {
        let s = span(&[e(2, 1, 2), e(2, 2, 1)]);
        assert_eq!(s.power(3), s);
        assert_eq!(s.power(1), s);
        let upper = span(&[e(3, 1, 2), e(3, 1, 3), e(3, 2, 3)]);
        assert!(upper.power(3).is_zero());
        assert_eq!(upper.power(2), span(&[e(3, 1, 3)]));
    }

    #[test]
    fn sum_examples() {
        let s = span(&[e(2, 1, 2), e(2, 2, 1)]);
        assert_eq!(s.sum(&s).unwrap(), s);
        assert_eq!(span(&[e(2, 1, 1)]).sum(&span(&[e(2, 2, 2)])).unwrap().dim(), 2);
        assert!(s.sum(&span(&[e(2, 1, 1), e(2, 2, 2)])).unwrap().is_full());
    }

    #[test]
    fn cumulative_examples() {
        let id = span(&[Matrix::identity(2)]);
        assert_eq!(id.cumulative(5), id);
        let s = span(&[e(2, 1, 2), e(2, 2, 1)]);
        assert!(s.cumulative(2).is_full());
        assert_eq!(s.cumulative(1), s);
    }

    #[test]
    fn contains_examples() {
        assert!(span(&[e(2, 1, 1), e(2, 2, 2)]).contains(&Matrix::identity(2)).unwrap());
        assert!(!span(&[e(2, 1, 2)]).contains(&e(2, 2, 1)).unwrap());
        let l = span(&[e(2, 1, 1), e(2, 1, 2), e(2, 2, 1)]);
        assert!(l.power(2).contains(&e(2, 2, 2)).unwrap());
    }

    #[test]
    fn peak_tracks_largest_intermediate() {
        let l = span(&[e(2, 1, 1), e(2, 1, 2), e(2, 2, 1)]);
        let (p, peak) = l.power_with_peak(56);
        assert!(p.is_full());
        assert_eq!(peak, 4);
    }
}
