//! Exact arithmetic for p-typical and shifted Witt vectors, the lateral
//! Frobenius, free δ-polynomial rings, kernels of arithmetic jet spaces and
//! δ-characters of elliptic curves over the p-adic integers.

pub mod corpus;
pub mod deltapoly;
pub mod dpoly;
pub mod elliptic;
pub mod error;
pub mod jetspace;
pub mod isocrystal;
pub mod json;
pub mod qp;
pub mod ringcore;
pub mod series;
pub mod shiftedwitt;
pub mod witt;

pub use error::{Error, Result};
