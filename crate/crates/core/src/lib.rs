//! Desk-scale reimplementations of a family of NWP mini-app kernels
//! ("dwarfs"): global spherical-harmonics and limited-area bi-Fourier
//! spectral transforms, a preconditioned GCR elliptic solver with a
//! terrain-following potential-flow target problem, the 32-point
//! quasi-tri-cubic semi-Lagrangian interpolation kernel, a passive
//! semi-Lagrangian tracer advection scheme on the sphere, and a
//! column-wise cloud/precipitation microphysics solver.
//!
//! Every kernel is runnable and verifiable in isolation through the
//! [`harness`] module and the `nwp-dwarfs` CLI; all kernels are
//! bit-reproducible across reruns and thread counts.

// stencil kernels index several arrays per iteration; iterator rewrites
// would obscure the point numbering the schemes are defined by
#![allow(clippy::needless_range_loop)]

pub mod bifourier;
pub mod cloudsc;
pub mod error;
pub mod fft;
pub mod gcr;
pub mod grids;
pub mod harness;
pub mod interp;
pub mod legendre;
pub mod sht;
pub mod sladv;
pub mod util;

pub use error::{DwarfError, Result};
