//! Dense linear algebra: matrix storage and file formats, SPD factorization
//! with single-index updates, sequential least squares, and explicit inverses
//! maintained under rank-1 edits.
//!
//! A QR-based variant of the factorization machinery would work equally well
//! here; Cholesky on the Gram submatrices was chosen because the homotopy
//! solvers only ever touch Gram systems.

mod chol;
mod crossgram;
mod dense;
pub mod io;
mod rls;

pub use chol::{
    factor_add_index, factor_of_gram_columns, factor_rank1, factor_remove_index, spd_factor,
    SpdFactor,
};
pub use crossgram::SquareInverse;
pub use dense::{
    axpy, dot, invert_dense, norm2, norm_inf, solve_dense, sub, DenseMatrix,
};
pub use rls::{inv_gram_append_row, ls_init, rls_append, LsState};
