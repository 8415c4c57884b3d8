//! Simulation and optimization toolkit for photon-number QND measurement with
//! an actively correlated atom-light hybrid interferometer.
//!
//! - [`algebra`]: linear bosonic network engine (squeezers, beam splitters,
//!   phase shifts, loss channels) with analytic first and second moments.
//! - [`interferometer`]: the three-stage interferometer, both composed on the
//!   engine and in closed form, with and without losses.
//! - [`metrics`]: SNR, Poisson-averaged moments and the QND correlation
//!   coefficient.
//! - [`sweep`]: transmission sweeps, readout-gain optimization and contour
//!   extraction.
//! - [`fock`]: truncated Fock-space simulator used as an independent check of
//!   the engine.

pub mod algebra;
pub mod fock;
pub mod interferometer;
pub mod metrics;
pub mod sweep;

pub use algebra::{BosonicNetwork, CoefficientRow, InputState, ModeSpec, NetworkError, QuadratureMoments};
pub use interferometer::{InterferometerParams, ParamError, SignalSpec};
pub use metrics::{Correlation, LossModel, Method, MetricsError, MomentSet};
