//! Backend-tagged wrappers for callers that choose the field at runtime
//! (the CLI and instance files).

use num_complex::Complex64;

use super::matrix::Matrix;
use super::scalar::{Backend, GaussRational};
use super::space::{MatrixSpace, SpaceError};

#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Exact(Matrix<GaussRational>),
    Float(Matrix<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnySpace {
    Exact(MatrixSpace<GaussRational>),
    Float(MatrixSpace<Complex64>),
}

impl AnyMatrix {
    pub fn backend(&self) -> Backend {
        match self {
            AnyMatrix::Exact(_) => Backend::Exact,
            AnyMatrix::Float(_) => Backend::Float,
        }
    }
}

impl AnySpace {
    pub fn backend(&self) -> Backend {
        match self {
            AnySpace::Exact(_) => Backend::Exact,
            AnySpace::Float(_) => Backend::Float,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            AnySpace::Exact(s) => s.d(),
            AnySpace::Float(s) => s.d(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnySpace::Exact(s) => s.dim(),
            AnySpace::Float(s) => s.dim(),
        }
    }

    /// Canonical basis of matrices that must all share one backend.
    pub fn canonical_basis(vectors: &[AnyMatrix]) -> Result<Self, SpaceError> {
        match vectors.first() {
            None => Err(SpaceError::ZeroDimension),
            Some(AnyMatrix::Exact(_)) => {
                let ms = vectors
                    .iter()
                    .map(|m| match m {
                        AnyMatrix::Exact(m) => Ok(m.clone()),
                        AnyMatrix::Float(_) => Err(SpaceError::MixedBackend),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                MatrixSpace::canonical_basis(&ms).map(AnySpace::Exact)
            }
            Some(AnyMatrix::Float(_)) => {
                let ms = vectors
                    .iter()
                    .map(|m| match m {
                        AnyMatrix::Float(m) => Ok(m.clone()),
                        AnyMatrix::Exact(_) => Err(SpaceError::MixedBackend),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                MatrixSpace::canonical_basis(&ms).map(AnySpace::Float)
            }
        }
    }

    pub fn product(&self, other: &Self) -> Result<Self, SpaceError> {
        match (self, other) {
            (AnySpace::Exact(a), AnySpace::Exact(b)) => a.product(b).map(AnySpace::Exact),
            (AnySpace::Float(a), AnySpace::Float(b)) => a.product(b).map(AnySpace::Float),
            _ => Err(SpaceError::MixedBackend),
        }
    }

    pub fn sum(&self, other: &Self) -> Result<Self, SpaceError> {
        match (self, other) {
            (AnySpace::Exact(a), AnySpace::Exact(b)) => a.sum(b).map(AnySpace::Exact),
            (AnySpace::Float(a), AnySpace::Float(b)) => a.sum(b).map(AnySpace::Float),
            _ => Err(SpaceError::MixedBackend),
        }
    }

    pub fn contains(&self, m: &AnyMatrix) -> Result<bool, SpaceError> {
        match (self, m) {
            (AnySpace::Exact(s), AnyMatrix::Exact(m)) => s.contains(m),
            (AnySpace::Float(s), AnyMatrix::Float(m)) => s.contains(m),
            _ => Err(SpaceError::MixedBackend),
        }
    }

    /// Converts to the float backend (identity on float spaces).
    pub fn to_float(&self) -> MatrixSpace<Complex64> {
        match self {
            AnySpace::Exact(s) => s.map(crate::matspace::Field::to_c64),
            AnySpace::Float(s) => s.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_backends_rejected() {
        let a = AnyMatrix::Exact(Matrix::identity(2));
        let b = AnyMatrix::Float(Matrix::identity(2));
        assert_eq!(AnySpace::canonical_basis(&[a.clone(), b.clone()]), Err(SpaceError::MixedBackend));
        let sa = AnySpace::canonical_basis(std::slice::from_ref(&a)).unwrap();
        let sb = AnySpace::canonical_basis(std::slice::from_ref(&b)).unwrap();
        assert_eq!(sa.product(&sb), Err(SpaceError::MixedBackend));
        assert_eq!(sa.sum(&sb), Err(SpaceError::MixedBackend));
        assert_eq!(sa.contains(&b), Err(SpaceError::MixedBackend));
        assert!(sa.contains(&a).unwrap());
    }
}
