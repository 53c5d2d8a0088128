//! Propagator-first treatment of finite-level quantum systems whose
//! interaction may carry memory in time.
//!
//! Instead of integrating a state vector, the crate follows the full
//! transition operator T(z) across the complex energy plane: T obeys the
//! closed flow dT/dz = -T g0(z)^2 T with the free resolvent g0, is seeded
//! far from the spectrum where the interaction kernel's transform dominates,
//! and yields the dressed Green operator G = g0 + g0 T g0. Bound states are
//! poles of G; their energies, widths and normalized states come out of the
//! same object that drives the dynamics.
//!
//! Modules:
//! - [`linalg`], [`quad`], [`ode`]: dense complex matrices, adaptive
//!   quadrature, and an embedded Runge-Kutta path integrator.
//! - [`basis`]: the free level structure and its resolvents.
//! - [`interaction`]: instantaneous and exponential-memory couplings.
//! - [`energy`]: contours, the T flow, continuation, spectral lines and the
//!   evolution operator reconstructed from them.
//! - [`time_domain`]: the equivalent time-local kernel, its causal march
//!   and the Laplace crosscheck against the energy side.
//! - [`bound_states`]: channel functions, pole search, residues and
//!   normalization.
//! - [`shift`]: asymptotic self-energy corrections, window divergence and
//!   the contour-measured dynamical shift.

pub mod basis;
pub mod bound_states;
pub mod energy;
pub mod error;
pub mod interaction;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod rng;
pub mod shift;
pub mod time_domain;

pub use basis::FreeBasis;
pub use bound_states::{ChannelFunctions, ChannelProvenance, PoleResult};
pub use energy::{ContourDirection, GreenLine, TSolution, ZContour};
pub use error::{GdeError, Result};
pub use interaction::InteractionModel;
pub use linalg::CMatrix;
pub use ode::OdeSettings;
pub use rng::SplitMix64;
pub use shift::{DivergenceRecord, SelfEnergyFamily, SelfEnergyModel, ShiftReport};
pub use time_domain::{EvolutionResult, TimeGrid, TimeKernel};

pub type ComplexVector = Vec<num_complex::Complex64>;
pub type ComplexOperator = CMatrix;
