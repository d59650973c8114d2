//! Adaptive matching pursuit over periodic wavelet dictionaries, used as an
//! online NARX identifier inside a certainty-equivalence control loop.
//!
//! The pieces compose bottom-up: [`wavelet`] tabulates scaling functions and
//! wavelets, [`dictionary`] turns them into periodic atoms over a scalarized
//! regressor, [`matching_pursuit`] and [`identifier`] fit them, [`control`]
//! and [`plants`] close the loop, and [`simulation`] runs it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod control;
pub mod dictionary;
pub mod error;
pub mod identifier;
pub mod lattice;
pub mod matching_pursuit;
pub mod plants;
pub mod simulation;
pub mod svg;
pub mod trace;
pub mod wavelet;

pub use error::{Error, Result};
