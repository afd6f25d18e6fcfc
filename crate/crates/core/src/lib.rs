//! Transport of `k`-currents in `R^d` along flows of vector fields that are
//! Lipschitz in space and integrable in time.
//!
//! The crate is organized bottom-up:
//!
//! * [`exterior`]: multivectors, covectors, wedge, pairing, `Λ^k A`.
//! * [`testforms`]: smooth compactly supported test forms with exact
//!   exterior and Lie derivatives.
//! * [`flows`]: time-dependent fields, their flow maps and mollification.
//! * [`acreg`]: maximal functions and Lipschitz approximation of AC functions.
//! * [`currents`]: Dirac and simplicial currents.
//! * [`transport`]: pushforward, the transport solver, weak residuals and the
//!   finite-mass non-uniqueness demonstration.
//! * [`scenario`]: JSON scenario files driving the `gte` command line tool.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acreg;
pub mod currents;
pub mod exterior;
pub mod flows;
pub mod quadrature;
pub mod scenario;
pub mod testforms;
pub mod transport;
