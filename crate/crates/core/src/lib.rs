//! Simulation core for two weakly coupled, damped classical oscillators
//! treated as a driven two-level system.
//!
//! The crate covers the whole reduction chain: physical oscillator
//! parameters ([`model`]), bias waveforms ([`drive`]), the three dynamical
//! descriptions integrated numerically ([`dynamics`]), closed-form results
//! ([`analytic`]) and the conversion of trajectories into time-averaged
//! mode occupations and interferogram cells ([`observables`], [`sweep`]).
//!
//! Everything here is `no_std` with `alloc`. File formats, worker pools
//! and the command line live in the `twinosc` companion crate.
#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod analytic;
pub mod drive;
pub mod dynamics;
mod error;
pub mod model;
pub mod observables;
pub mod ode;
pub mod rng;
pub mod sweep;

pub use error::{Error, Result};

/// Complex number type used for envelope amplitudes.
pub type Complex = num_complex::Complex64;
