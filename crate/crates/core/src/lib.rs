//! Exact finite-algebra toolkit.
//!
//! Everything is computed over prime fields F_p or finite rings presented by
//! structure constants, with no floating point anywhere.

pub mod combinat;
pub mod error;
pub mod fixtures;
pub mod fp;
pub mod groups;
pub mod linalg;
pub mod localcond;
pub mod localring;
pub mod modrep;
pub mod par;

pub use error::{Error, Result};
