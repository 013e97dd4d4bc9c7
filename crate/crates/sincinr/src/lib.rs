//! Sampling-theory tools for implicit neural representations: basis
//! diagnostics, constructive shift networks, sinc embeddings, dynamical
//! systems and sparse model recovery.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod network;
pub mod numeric;
pub mod signals;
pub mod sindy;

pub use error::{Error, Result};
pub use nalgebra;
