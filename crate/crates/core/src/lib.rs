//! Numerical laboratory for the degree-m Ginzburg–Landau vortex on the
//! hyperbolic plane and its Chern–Simons–Schrödinger perturbation theory.

pub mod acceptance;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod gaugefields;
pub mod hgrid;
pub mod io;
pub mod lemmalab;
pub mod linops;
pub mod spectra;
pub mod tridiag;
pub mod vortex;

pub use error::{Error, Result};
