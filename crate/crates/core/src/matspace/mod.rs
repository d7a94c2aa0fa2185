//! Scalars, matrices, and span arithmetic on subspaces of `D×D` matrices.

mod dynamic;
mod echelon;
pub mod linalg;
mod matrix;
mod scalar;
mod space;

pub use dynamic::{AnyMatrix, AnySpace};
pub use echelon::{Echelon, Reduction};
pub use matrix::{Matrix, ShapeError};
pub use scalar::{
    float_tolerance, set_float_tolerance, Backend, EigenError, Field, FittingSplit, GaussRational, ParseScalarError,
    DEFAULT_FLOAT_TOLERANCE,
};
pub use space::{MatrixSpace, SpaceError};

pub use num_complex::Complex64;
