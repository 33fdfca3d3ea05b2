//! Tail probabilities of a discrete many-sources bulk-service queue, three
//! ways: an exact stationary-distribution oracle by Lindley iteration, a
//! dominant-pole asymptotic with optional conjugate-pair corrections built
//! on the roots of `z^s = A(z)`, and the Gaussian-random-walk limit that
//! the scaled system approaches.
//!
//! The modules mirror that pipeline:
//!
//! * [`distkit`] — per-source distributions, their PGFs and derivatives;
//! * [`scaling`] — drift/variance scalings and asymptotic root landmarks;
//! * [`roots`] — interior and exterior zeros, saddle point, winding checks;
//! * [`exact`] — aggregate PMFs, stationary queue, exact tails, product
//!   form of the queue PGF;
//! * [`dpa`] — front factors, contour identities, corrected tail series;
//! * [`grw`] — zeta-series and Spitzer evaluations of the limiting walk.

pub mod distkit;
pub mod dpa;
pub mod exact;
pub mod grw;
mod numerics;
pub mod roots;
pub mod scaling;
