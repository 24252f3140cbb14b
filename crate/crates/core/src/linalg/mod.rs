//! Exact integer linear algebra: sparse matrices, Smith normal form, kernels and
//! subquotients of lattices.

mod lattice;
mod matrix;
mod smith;

pub use lattice::{
    kernel_lattice, rank, reduce_mod, reduce_rows, subquotient_invariants, AbelianInvariants,
    Subquotient,
};
pub use matrix::{primitive, IntMatrix};
pub use smith::{smith_normal_form, SmithDecomposition};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("denominator column {column} is not in the span of the numerator")]
    ContainmentViolation { column: usize },
}
