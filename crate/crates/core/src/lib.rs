//! Steady incompressible Navier-Stokes flow around obstacles in a channel,
//! solved either on the fluid domain only ("real obstacle") or on the whole
//! channel with the obstacle replaced by a volume (Brinkman) penalty, a
//! viscosity penalty, or both.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
