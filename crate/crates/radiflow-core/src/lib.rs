//! Numerical toolkit for a compressible viscous flow coupled to a two-moment
//! radiative relaxation model.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! threads or the command line lives in the companion `radiflow` crate.
//!
//! Layout:
//!
//! * [`params`]: physical parameters, stability margin, regime classification.
//! * [`linear_modes`]: the 4x4 mode matrix, spectra, Routh-Hurwitz test,
//!   exact mode propagation and Lyapunov functionals.
//! * [`toy_ode`]: the abstract four-equation class, its change of unknowns and
//!   the 2x2 damped model.
//! * [`dyadic_norms`]: Littlewood-Paley blocks and Besov norms on the torus.
//! * [`spectral_solver`]: pseudo-spectral IMEX solver on the periodic box.
//! * [`limit_systems`]: the limiting models obtained as the relaxation
//!   parameter vanishes.
//! * [`stats`]: log-log slope fits used by convergence studies.

#![no_std]

extern crate alloc;

pub mod dyadic_norms;
pub mod eigen;
pub mod error;
pub mod expm;
pub mod fft;
pub mod limit_systems;
pub mod linalg;
pub mod linear_modes;
pub mod ode;
pub mod params;
pub mod spectral_solver;
pub mod stats;
pub mod toy_ode;

pub use error::{Error, Result};
pub use num_complex::Complex64;
