//! Exact and numerical tools for finite abelian groups: Bohr sets, coset
//! progressions, Freiman homomorphisms, integer lattices, bilinear varieties
//! and bipartite quasirandomness.

pub mod bilinear;
pub mod bohr;
pub mod coset_prog;
pub mod error;
pub mod fourier;
pub mod group;
pub mod lattice;
pub mod quasirandom;
pub mod seed;
pub mod suites;

pub use error::{Error, Result};
