//! Simulation and spectral analysis of two flux-tunable Kerr-nonlinear oscillators
//! coupled through a parametrically modulated SQUID.

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod operator;
pub mod spectroscopy;
pub mod validation;

pub use error::{Error, Result};
