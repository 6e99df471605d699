//! Discrete elastic rods with fully implicit penalty frictional contact and
//! regularized Stokeslet hydrodynamics.

pub mod analysis;
pub mod config;
pub mod contact;
pub mod dense;
pub mod driver;
pub mod error;
pub mod hydro;
pub mod io;
pub mod jet;
pub mod friction;
pub mod geometry;
pub mod rod;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use rod::{Frame, MaterialParams, RestShape, RodState};
