//! Spectral Galerkin simulator for the stochastic Navier-Stokes equations
//! driven by finite-dimensional symmetric beta-stable Levy noise, with an
//! empirical invariant-measure lab and executable checks of the energy
//! estimates.
//!
//! The state `u` is split as `u = v + z` where `z` is an exactly sampled
//! Ornstein-Uhlenbeck process on the noise modes and `v` solves a random
//! PDE integrated by semi-implicit Euler.

pub mod config;
pub mod energy;
pub mod error;
pub mod integrator;
pub mod measure;
pub mod ou;
pub mod output;
pub mod rng;
pub mod spectral;
pub mod stable;
pub mod stats;
pub mod tolerances;
pub mod verify;

pub use config::{Config, Setup};
pub use energy::{LedgerConstants, LedgerRow};
pub use error::{Error, Result};
pub use integrator::{simulate, simulate_on_path, IntegratorConfig, RunSpec, Scheme, TrajectoryRecord};
pub use measure::{EmpiricalMeasure, ObservableSchema, TightnessReport};
pub use ou::{AlphaCalibration, OUState, OuTrajectory};
pub use rng::RngStream;
pub use spectral::{Bilinear, Field, SpectralBasis, SpectralModel};
pub use stable::StableParams;
pub use verify::{CheckReport, VerifyContext};
