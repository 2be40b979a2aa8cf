//! Analysis toolkit for zero-field ODMR of boron-vacancy spin defects in
//! hexagonal boron nitride.
//!
//! The crate covers the chain from raw spectra to thermometry:
//!
//! * [`spin`]: the spin-1 zero-field Hamiltonian and the mapping between
//!   (D, E) and the two resonance frequencies.
//! * [`lineshape`]: the two-Lorentzian dip model, synthetic spectra and
//!   doublet fitting.
//! * [`optim`]: the Levenberg-Marquardt engine used by every fit.
//! * [`thermal`]: temperature calibration laws for D(T) and E(T), their
//!   diagnostics and inversion.
//! * [`lattice`]: hexagonal cell volume and the D versus 1/V regression.
//! * [`ensemble`]: sample-to-sample statistics.
//! * [`io`] and [`cli`]: file formats and the command-line front end.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod lattice;
pub mod lineshape;
pub mod optim;
pub mod spin;
pub mod thermal;

pub use error::{Error, Result};
