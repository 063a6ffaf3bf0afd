//! Physical constants used across the crate, in strict SI units.
//!
//! Gyromagnetic ratios are stored as `γ/2π` in Hz/T so every frequency in the
//! crate is an ordinary (non-angular) frequency; factors of 2π reappear only
//! inside time-evolution phases.

/// Vacuum permeability over 4π, H/m.
pub const MU0_OVER_4PI: f64 = 1.0e-7;

/// Vacuum permeability μ₀, H/m.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274e-24;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.381e-23;

/// Electron gyromagnetic ratio γ_e/2π, Hz/T.
pub const GAMMA_E_HZ_PER_T: f64 = 2.8e10;

/// Proton gyromagnetic ratio γ_n/2π, Hz/T.
pub const GAMMA_N_HZ_PER_T: f64 = 4.3e7;

/// One ångström in meters.
pub const ANGSTROM: f64 = 1.0e-10;
