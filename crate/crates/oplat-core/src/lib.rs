//! Finite-dimensional, desk-scale computational library for lattice
//! completions over ordered vector spaces, Jordan squaring operations,
//! projection-lattice algorithms and projection-determined maps, together
//! with certified numerical checks of the identities these constructions
//! satisfy at finite scale.

pub mod algebra;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod jordan;
pub mod lattice;
pub mod pmap;
pub mod poset;
pub mod projection;

pub use error::{Error, Result};
