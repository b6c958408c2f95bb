//! Exact simulation of stimulated emission into polarization-entangled
//! photon-pair modes.
//!
//! - [`fock`]: sparse states on the four-mode Fock space, measurement, loss
//!   and entanglement witnesses.
//! - [`pdc`]: the down-conversion state in closed form and through the
//!   numerically exponentiated interaction.
//! - [`interference`]: two-pass and n-pass interference of pair amplitudes.
//! - [`polarization`]: polarizer coincidences and visibility.
//! - [`cavity`]: round-trip simulation of the ring resonator and its
//!   moment model.

pub mod cavity;
pub mod error;
pub mod fock;
pub mod interference;
pub mod pdc;
pub mod polarization;

pub use error::{Error, Result};
pub use fock::{FockState, Mode, ModeGroup, Occupation, StateEnsemble};
pub use pdc::{build_pdc_state, PdcParams};
