//! Problem library: the reaction-network steady-state mapping, analytic test
//! problems, file formats and a finite-difference Jacobian check.

pub mod bio;
pub mod builtin;
pub mod fd;
pub mod io;
pub mod stoich;

pub use bio::{chain_network, BioNetwork, MoietyTotals, SparseIntMatrix};
pub use builtin::{builtin_problem, builtin_suite, BUILTIN_NAMES};
pub use fd::{fd_jacobian, jacobian_error, max_jacobian_error};
pub use io::{load_network, save_network, ProblemManifest};
pub use stoich::{left_nullspace, reduce_rows, RowBasis};
