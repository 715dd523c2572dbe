//! Dynamic l1-minimization solvers.
//!
//! This crate implements homotopy-continuation algorithms that *update* the
//! solutions of several l1 programs instead of re-solving them from scratch:
//!
//! * [`bpdn`] — basis pursuit denoising (the Lagrangian LASSO) and its
//!   optimality certificate;
//! * [`dantzig`] — the primal-dual Dantzig-selector homotopy;
//! * [`dynamic_x`] — warm-start updates when the measured signal changes
//!   between snapshots;
//! * [`dynamic_seq`] — warm-start updates when measurements are appended to
//!   (or removed from) the system one row at a time;
//! * [`decode`] — l1 decoding of a message from a codeword corrupted by
//!   sparse gross errors, with incremental codeword growth;
//! * [`robust_decode`] — the same in the presence of small dense noise,
//!   via a null-space projector;
//! * [`problems`] — reproducible experiment instance generators;
//! * [`oracle`] — independent brute-force reference solvers for tiny
//!   instances;
//! * [`mod@bench`] — the experiment runner with exact operation accounting.
//!
//! Every update is a sequence of linear steps; each step costs a low-rank
//! factorization update plus a handful of matrix-vector products, very much
//! like recursive least squares ([`linalg::rls_append`]).

pub mod bench;
pub mod bpdn;
pub mod dantzig;
pub mod decode;
pub mod dynamic_seq;
pub mod dynamic_x;
mod error;
pub mod homotopy;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod robust_decode;

pub use error::{Result, SolverError};
