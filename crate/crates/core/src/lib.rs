//! Particle-in-a-box quantum mechanics alongside its diffusion-wave analogue.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod box_quantum;
pub mod cli;
pub mod diff;
pub mod diffusion_wave;
pub mod error;
pub mod grid;
pub mod quadrature;
pub mod thermo_field;
pub mod time_of_flight;
pub mod vft_walls;

pub use error::{Error, Result};
