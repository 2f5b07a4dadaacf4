//! Determinantal Markov dynamics of nonintersecting random walks with
//! q-geometric speeds, and PushASEP with particle-dependent jump rates.
//!
//! The crate has three layers:
//!
//! * combinatorial substrate: [`sig`] (signatures, point configurations,
//!   interlacing), [`schur`] (rational Schur functions at geometric
//!   specializations) and [`laurent`] (admissible one-step functions `g(x)`
//!   and their Laurent coefficient windows);
//! * the processes themselves: [`transitions`] (N-dimensional transition
//!   kernels, stochastic links, exact chain distributions, samplers),
//!   [`kernel`] (space-time correlation kernels by contour quadrature, both
//!   at finite N and in the N→∞ limit), [`pushasep`] (event-driven
//!   simulation, the exact determinantal transition probability, and the
//!   large-time rescaling pipeline) and [`gue`] (GUE corner minima and the
//!   closed-form limit density);
//! * a verification harness: [`stats`] (KS and chi-square tests),
//!   [`experiment`] (reproducible, seeded experiment runs emitting CSV) and
//!   [`acceptance`] (the named acceptance criteria run by `qwalk verify`
//!   and by the `acceptance` integration test).
//!
//! The mdBook under `book/` walks through the same material chapter by
//! chapter; its code snippets compile against this crate as doc-tests.

pub mod acceptance;
pub mod contour;
mod det;
pub mod error;
pub mod experiment;
pub mod gue;
pub mod kernel;
pub mod laurent;
pub mod pushasep;
pub mod schur;
pub mod sig;
pub mod stats;
pub mod transitions;

pub use error::Error;
pub use laurent::{AdmissibleFunction, ElementaryFactor, LaurentWindow};
pub use schur::GeometricSpec;
pub use sig::{ExtendedSignature, PointConfig, Signature};

/// Book chapters double as doc-tests so the guide cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signatures.md")]
    mod signatures {}
    #[doc = include_str!("../../../book/src/admissible-functions.md")]
    mod admissible_functions {}
    #[doc = include_str!("../../../book/src/transitions.md")]
    mod transitions {}
    #[doc = include_str!("../../../book/src/correlation-kernels.md")]
    mod correlation_kernels {}
    #[doc = include_str!("../../../book/src/pushasep.md")]
    mod pushasep {}
    #[doc = include_str!("../../../book/src/gue-minors.md")]
    mod gue_minors {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
