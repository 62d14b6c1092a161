//! Numerical kernels for the collapse laboratory: rescaling maps, semi-flat and
//! Ooguri–Vafa metrics, Bohr–Sommerfeld holonomy, model spectra of the limit
//! spaces, reduced magnetic Schrödinger operators, and Gromov–Hausdorff
//! distortion measurements. Everything here is alloc-only; file formats and the
//! command line live in the companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod eigen;
pub mod geometry;
pub mod ghlab;
pub mod graph;
pub mod holonomy;
pub mod limit;
pub mod magnetic;
pub mod ov;
pub mod real;
pub mod semiflat;
pub mod sparse;

use core::fmt;

/// Error type shared by every numerical routine in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Error {
    /// Input outside the mathematical domain of the map (bad radius, bad range...).
    Domain(&'static str),
    /// Evaluation at (or too close to) a singular point of the model.
    Singular(&'static str),
    /// An iterative solve did not reach its tolerance within its budget.
    NonConvergence(&'static str),
    /// Inconsistent discretization request (empty grid, disconnected graph...).
    Grid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Singular(m) => write!(f, "singular point: {m}"),
            Error::NonConvergence(m) => write!(f, "no convergence: {m}"),
            Error::Grid(m) => write!(f, "grid error: {m}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
