//! Span powers of linear spaces of `D×D` matrices, the quantum Wielandt
//! index, and independently checkable primitivity certificates.

pub mod bounds;
pub mod certify;
pub mod gen;
pub mod index;
pub mod io;
pub mod matspace;
pub mod oracle;

pub use matspace::{Complex64, Field, GaussRational, Matrix, MatrixSpace};
