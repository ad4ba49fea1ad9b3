//! Exact machinery for removal problems on linear systems over finite
//! abelian groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`intmat`]: arbitrary-precision integer matrices: determinants,
//!   adjugates, Smith normal form, determinantal divisors, unimodular
//!   completion and `n`-good padding.
//! * [`abelian`]: finite abelian groups given as products of cyclic groups.
//! * [`system`]: restricted systems `{A, b, X}`, solution enumeration,
//!   homogenization and extension checking.
//! * [`pipeline`]: the reduction of a restricted system to a homogeneous
//!   system with a standard `n`-circular matrix.
//! * [`hypergraph`]: the colored hypergraph encoding of a circular system
//!   and checks of the solution/copy correspondence.
//! * [`removal`]: minimum removal sets computed as exact hitting sets.

pub mod abelian;
pub mod error;
pub mod hypergraph;
pub mod intmat;
pub mod pipeline;
pub mod removal;
pub mod system;

pub use abelian::{AbelianGroup, ElementSet, GroupElement};
pub use error::{Error, Result};
pub use intmat::{IntMatrix, SnfResult};
pub use system::{Budget, Extension, RestrictedSystem, Solution};
