// `!(x > 0.0)` guards are deliberate: they reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod entangle;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod photon;
pub mod qmatrix;
pub mod spin_half;
pub mod wavepacket;

#[cfg(test)]
mod test_util;

pub use error::{Error, Result};
