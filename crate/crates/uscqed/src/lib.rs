//! Ultrastrong-coupling circuit QED toolkit.
//!
//! The crate follows one pipeline: reduce a capacitively shunted
//! Cooper-pair-box circuit to effective parameters ([`circuit`]), build the
//! corresponding Hamiltonians ([`models`]), diagonalize and project them
//! onto a dressed basis ([`spectrum`]), search circuit space for strong,
//! spectrally clean couplers ([`optimize`]), and integrate open-system state
//! transfer through the dressed mediator ([`dynamics`]).
//!
//! Internally everything is SI: farads, henries, joules, rad/s. Unit
//! conversion happens only at the boundaries (config parsing, CSV output).

pub mod circuit;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod models;
pub mod optimize;
pub mod plot;
pub mod spectrum;

pub use error::{Error, Result};
