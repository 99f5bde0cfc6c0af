//! Numerical laboratory for wave maps from 1+1 dimensional Minkowski space.
//!
//! The crate is organised around a characteristic-lattice solver in null
//! coordinates `u = x + t`, `v = x - t`:
//!
//! - [`geometry`]: target manifolds, Christoffel contractions, metrics.
//! - [`nullsolver`]: Cauchy data, the lattice, the marching scheme, the free
//!   propagator, the inverse d'Alembertian and Picard iteration.
//! - [`conservation`]: energy-momentum tensor, Pohlmeyer and rotation-identity
//!   diagnostics.
//! - [`norms`]: spectral Sobolev-type norms and empirical estimate checks.
//! - [`oracles`]: closed-form solutions and counterexample constructions.
//! - [`scattering`]: compactification, asymptotic states and defects.

pub mod conservation;
pub mod error;
pub mod geometry;
pub mod norms;
pub mod nullsolver;
pub mod oracles;
pub mod quadrature;
pub mod scattering;

pub use error::{Error, Result};
