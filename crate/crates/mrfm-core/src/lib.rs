//! Simulation and design-feasibility toolkit for a scanned-probe nuclear-spin
//! computing testbed.
//!
//! A spherical ferromagnetic particle on a soft cantilever sits above a chain
//! of paramagnetic atoms. The probe's dipole field shifts electron- and
//! nuclear-spin resonances site by site, so frequency-selective rf pulses can
//! address single spins; spin-synchronized pulse trains drive the cantilever
//! so a single nuclear spin can be read out mechanically.
//!
//! The crate is organized around that pipeline:
//!
//! - [`magnetostatics`] — probe dipole field, gradients, forces, chain dipole sums
//! - [`spectroscopy`] — hyperfine transition tables and shifted resonance frequencies
//! - [`cantilever`] — driven damped oscillator: closed forms and ODE traces
//! - [`chain`] — state vector of the nuclear chain plus classical electron register
//! - [`protocol`] — measurement, polarization, and conditional-gate procedures
//! - [`compiler`] — circuits to probe-move/pulse schedules, with selectivity checks
//! - [`executor`] — runs compiled schedules against a chain state
//! - [`validator`] — operating-window report and the published-number regression table
//! - [`config`] — TOML run configuration with unit-suffixed lengths

// negated comparisons are deliberate: `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cantilever;
pub mod chain;
pub mod compiler;
pub mod config;
pub mod consts;
pub mod error;
pub mod executor;
pub mod magnetostatics;
pub mod protocol;
pub mod spectroscopy;
pub mod validator;

pub use cantilever::{CantileverParams, ResponseTrace, SquareDrive, ThermalNoise};
pub use chain::{ChainState, ProbePosition, PulseKind, PulseMode, PulseSpec};
pub use compiler::{Circuit, CompileMode, Gate, Schedule, ScheduleStep};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use magnetostatics::{DeviceGeometry, FieldVector};
pub use protocol::{Device, EnsembleReadout, MeasurementEngine, MeasurementRecord, PulseDefaults};
pub use spectroscopy::{IsingChainSpec, SpinSpecies, TransitionTable};
pub use validator::{DesignReport, RabiSelections};
