//! Pseudospectral laboratory for a gauge-covariant Schroedinger system in
//! the Coulomb gauge on a periodic 2-D box.
//!
//! The matter field evolves by
//!
//! ```text
//! d/dt phi - i Lap phi = -i A0 phi - 2 A_l d_l phi - i A_l A_l phi + i g |phi|^2 phi
//! ```
//!
//! with elliptically determined potentials: `Lap A1 = (1/2) d2 |phi|^2`,
//! `Lap A2 = -(1/2) d1 |phi|^2`, and `A0` sourced by the covariant current.
//! The crate provides the spectral toolbox (`grid`, `field`), the gauge
//! solvers (`gauge`), covariant operators and their identity checks
//! (`covariant`), the interaction-picture RK4 integrator (`evolution`),
//! the trilinear Fourier oracle for the gauge cubic term (`nullform`),
//! scalar observables and reports (`diagnostics`), initial-data families
//! and checkpoint I/O (`datum`, `checkpoint`), and the batch front end
//! (`config`, `cli`).

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod covariant;
pub mod datum;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod gauge;
pub mod grid;
pub mod nullform;
pub mod rng;
pub mod threads;
pub mod tolerances;

pub use error::{Error, Result};
pub use field::{ComplexField, Direction, RealField, Space};
pub use grid::{Axis, SpectralGrid};
