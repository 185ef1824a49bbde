//! Exact kernels for local resolution of singularities of hypersurfaces:
//! Newton polyhedra, unimodular refinement of their vertex cones, monomial
//! transformations with canonical reduction, Weierstrass preparation and a
//! singularity-height-decreasing resolution driver for curves and surfaces,
//! together with the adjoint-sector covering certificate.
//!
//! The crate is `no_std` (alloc required); everything IO-shaped lives in the
//! companion `singres` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arith;
pub mod canonical;
pub mod fan;
pub mod poly;
pub mod polyhedron;
pub mod resolve;
pub mod weierstrass;

pub use arith::{IntMat, Rat, RatMat};
pub use poly::{Coeff, SparsePoly};
