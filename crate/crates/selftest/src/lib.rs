//! Acceptance checks for the `schrodinger` crate.
//!
//! [`criteria::run_all`] runs every check and returns one [`criteria::Outcome`]
//! per criterion. The reference values come from [`oracles`], which avoids
//! the library's own solvers wherever an independent computation exists.

pub mod criteria;
pub mod oracles;

pub use criteria::{run_all, Outcome};
