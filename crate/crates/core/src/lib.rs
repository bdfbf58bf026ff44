//! Spectral-Galerkin simulation and verification toolkit for the 2D
//! stochastic Navier-Stokes equations with transport-and-stretching noise,
//! on the torus and on the unit disk with free-boundary Navier conditions.
//!
//! The crate is organized around a single currency: [`field::SpectralField`],
//! a coefficient vector in a Stokes eigenbasis ([`torus::TorusBasis`] or
//! [`disk::DiskBasis`]). On top of that sit the differential operators of the
//! model ([`ops`]), the noise machinery ([`noise`]), the Galerkin SDE driver
//! ([`sde`]) and a certification harness ([`verify`]).

pub mod error;
pub mod field;
pub mod io;
pub mod disk;
pub mod noise;
pub mod ops;
pub mod rng;
pub mod sde;
pub mod torus;
pub mod verify;

pub use error::{CoreError, Result};
