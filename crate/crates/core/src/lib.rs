//! Hong-Ou-Mandel delay metrology: spectral states, the `μ = 0` Wigner cut,
//! Fisher information under imperfect visibility and Monte Carlo checks of
//! the Cramér-Rao bound.

pub mod commands;
pub mod config;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod io;
pub mod metrology;
pub mod optimize;
pub mod special;
pub mod spectra;
pub mod wigner;

pub use error::{Error, Result};
