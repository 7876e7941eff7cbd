//! Schrödinger bridges on finite state spaces.
//!
//! The crate solves entropy minimization problems against reversible
//! continuous-time Markov references on finite graphs, builds the resulting
//! entropic interpolations, and tracks their convergence to optimal transport
//! as the reference is slowed down.
//!
//! * [`entropy`]: relative entropy, its variational bound and disintegration.
//! * [`markov`]: rate graphs, reversible chains, uniformized kernels, endpoint kernels.
//! * [`schrodinger`]: the static problem solved by log-domain iterative proportional fitting.
//! * [`interpolation`]: time marginals, potentials, jump intensities and their PDE checks.
//! * [`transport`]: exact Monge–Kantorovich solvers and slowing-down sweeps.
//! * [`particles`]: conditioned particle systems and their large-deviation rate.

pub mod entropy;
pub mod error;
pub mod ext;
pub mod graph_file;
pub mod interpolation;
pub mod marginal_file;
pub mod markov;
pub mod measure;
pub mod numeric;
pub mod particles;
pub mod schrodinger;
pub mod transport;

pub use error::{Error, Result};
pub use ext::ExtendedReal;
pub use measure::{Measure, ProbabilityMeasure};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
    #[doc = include_str!("../../../book/src/static-problem.md")]
    mod static_problem {}
    #[doc = include_str!("../../../book/src/interpolation.md")]
    mod interpolation {}
    #[doc = include_str!("../../../book/src/slowing-down.md")]
    mod slowing_down {}
    #[doc = include_str!("../../../book/src/particles.md")]
    mod particles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
