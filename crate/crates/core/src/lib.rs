//! Numerical certification of the Poisson-kernel calibration for compact
//! quotients of products of hyperbolic planes.
//!
//! The crate is organised bottom-up:
//!
//! * [`hyperbolic`]: Poincaré-disk points, Poisson kernels, Busemann functions
//!   and disk automorphisms acting on the boundary circle.
//! * [`cocycle`]: the Euler class of the circle and the alternated cocycle on
//!   tuples of torus points, evaluated in exact rational arithmetic.
//! * [`circle`]: closed-form one-factor integrals, seeded Monte-Carlo and
//!   tensor quadrature on tori.
//! * [`omega`]: trigonometric polynomials, frames, the calibrating form at the
//!   constant function, the integrated cochain and its Fourier coefficients.
//! * [`embedding`]: the Poisson embedding into the unit sphere of `L²(𝕋ⁿ)`,
//!   its pullback metric and equivariance.
//! * [`comass`]: derivative-free search over orthonormal frames.
//! * [`bounds`] and [`suite`]: corollary calculators, verification suites and
//!   report serialisation used by the `calibra` binary.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod circle;
pub mod cocycle;
pub mod comass;
pub mod embedding;
mod error;
pub mod hyperbolic;
pub mod omega;
pub mod suite;

pub use error::{Error, Result};
