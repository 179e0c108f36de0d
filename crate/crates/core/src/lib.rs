//! Perturbed traceless SU(2) character varieties of the earring and bypass
//! tangles, their restriction maps to the pillowcase, and the composition of
//! immersed curves with the resulting correspondence.

pub mod compose;
pub mod curves;
pub mod error;
pub mod newton;
pub mod pillowcase;
pub mod quat;
pub mod scene;
pub mod suite;
pub mod variety;
pub mod words;

pub use error::{Error, Result};
