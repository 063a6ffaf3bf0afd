//! Resonance-frequency bookkeeping: hyperfine transition tables, probe and
//! dipole shifts, neighbor-conditioned Ising resonances, and thermal
//! polarization.
//!
//! Level conventions for a spin-1/2 electron coupled to a spin-1/2 nucleus in
//! a strong field: `f_e` and `f_n` are the bare ESR/NMR frequencies at the
//! local field, `f_hf` is the hyperfine frequency (half the ESR hyperfine
//! splitting), and the four observable transitions are
//! `f_e0 = f_e + f_hf`, `f_e1 = f_e − f_hf`, `f_n0 = f_n + f_hf`,
//! `f_n1 = f_hf − f_n`, where the trailing index is the state of the other
//! spin (0 = ground).

use serde::{Deserialize, Serialize};

use crate::consts::{K_B, MU_B};
use crate::error::{Error, Result};
use crate::magnetostatics::{self, DeviceGeometry};

/// Gyromagnetic ratios (γ/2π, Hz/T) and hyperfine frequency for one
/// paramagnetic species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSpecies {
    pub gamma_e_hz_per_t: f64,
    pub gamma_n_hz_per_t: f64,
    pub hyperfine_hz: f64,
}

impl SpinSpecies {
    pub fn new(gamma_e_hz_per_t: f64, gamma_n_hz_per_t: f64, hyperfine_hz: f64) -> Result<Self> {
        let species = Self {
            gamma_e_hz_per_t,
            gamma_n_hz_per_t,
            hyperfine_hz,
        };
        species.validate()?;
        Ok(species)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_e_hz_per_t > 0.0) {
            return Err(Error::InvalidSpecies(
                "electron gyromagnetic ratio must be positive".into(),
            ));
        }
        if !(self.gamma_n_hz_per_t > 0.0) {
            return Err(Error::InvalidSpecies(
                "nuclear gyromagnetic ratio must be positive".into(),
            ));
        }
        if !(self.hyperfine_hz >= 0.0) {
            return Err(Error::InvalidSpecies(
                "hyperfine frequency must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Hydrogen-like defaults: textbook electron and proton ratios with a
    /// 710 MHz hyperfine frequency (half of the 1.42 GHz splitting).
    pub fn hydrogen_like() -> Self {
        Self {
            gamma_e_hz_per_t: crate::consts::GAMMA_E_HZ_PER_T,
            gamma_n_hz_per_t: crate::consts::GAMMA_N_HZ_PER_T,
            hyperfine_hz: 7.1e8,
        }
    }
}

/// The four hyperfine-split transitions plus the bare frequencies at one
/// local field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub f_e_hz: f64,
    pub f_n_hz: f64,
    pub f_e0_hz: f64,
    pub f_e1_hz: f64,
    pub f_n0_hz: f64,
    pub f_n1_hz: f64,
}

/// Transition table at local field `b_local_t`.
pub fn transition_table(species: &SpinSpecies, b_local_t: f64) -> Result<TransitionTable> {
    if !(b_local_t > 0.0) {
        return Err(Error::NonPositiveField(b_local_t));
    }
    let f_e = species.gamma_e_hz_per_t * b_local_t;
    let f_n = species.gamma_n_hz_per_t * b_local_t;
    let f_hf = species.hyperfine_hz;
    Ok(TransitionTable {
        f_e_hz: f_e,
        f_n_hz: f_n,
        f_e0_hz: f_e + f_hf,
        f_e1_hz: f_e - f_hf,
        f_n0_hz: f_n + f_hf,
        f_n1_hz: f_hf - f_n,
    })
}

/// Carrier used for both single-spin measurement trains and the electron leg
/// of the conditional gate: f_e0 at the external field plus the probe shift
/// at the target site. With the probe parked over its target this is the
/// highest (and unique) ESR frequency in the chain.
pub fn esr_measurement_frequency(species: &SpinSpecies, geom: &DeviceGeometry) -> Result<f64> {
    let table = transition_table(species, geom.external_field_t)?;
    let shift = species.gamma_e_hz_per_t * magnetostatics::probe_field_at_target(geom);
    Ok(table.f_e0_hz + shift)
}

/// The two NMR frequencies of a gate target conditioned on whether the
/// control-site electron was flipped. `b_dz_t` is the nearest-neighbor
/// electron dipole field at the target, `b_far_t` the contribution of all
/// farther atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmrTargetFrequencies {
    /// Control electron flipped (control nucleus was in the ground state):
    /// the nearest-neighbor dipole term cancels.
    pub control_on_hz: f64,
    /// Control electron untouched: the full neighbor dipole term remains.
    pub control_off_hz: f64,
}

impl NmrTargetFrequencies {
    /// Conditional addressing gap, equal to the nuclear shift of the
    /// nearest-neighbor dipole term.
    pub fn gap_hz(&self) -> f64 {
        (self.control_on_hz - self.control_off_hz).abs()
    }
}

pub fn nmr_target_frequencies(
    species: &SpinSpecies,
    geom: &DeviceGeometry,
    b_dz_t: f64,
    b_far_t: f64,
) -> Result<NmrTargetFrequencies> {
    let table = transition_table(species, geom.external_field_t)?;
    let b_fz = magnetostatics::probe_field_at_target(geom);
    let gamma_n = species.gamma_n_hz_per_t;
    Ok(NmrTargetFrequencies {
        control_on_hz: table.f_n0_hz + gamma_n * (b_fz + b_far_t),
        control_off_hz: table.f_n0_hz + gamma_n * (b_fz + b_dz_t + b_far_t),
    })
}

/// Field tilt that nulls the static z-component of the intra-chain dipole
/// coupling: cos θ₀ = 1/√3.
pub fn magic_tilt_rad() -> f64 {
    (1.0 / 3.0_f64.sqrt()).acos()
}

/// An Ising chain: per-site base frequencies, nearest-neighbor couplings in
/// frequency units, and the field tilt angle (stored for documentation and
/// validation; the simulator takes the static dipole suppression as exact).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingChainSpec {
    pub site_frequencies_hz: Vec<f64>,
    pub couplings_hz: Vec<f64>,
    pub tilt_angle_rad: f64,
}

impl IsingChainSpec {
    pub fn new(
        site_frequencies_hz: Vec<f64>,
        couplings_hz: Vec<f64>,
        tilt_angle_rad: f64,
    ) -> Result<Self> {
        if couplings_hz.len() + 1 != site_frequencies_hz.len() {
            return Err(Error::IsingLengthMismatch {
                couplings: couplings_hz.len(),
                sites: site_frequencies_hz.len(),
            });
        }
        Ok(Self {
            site_frequencies_hz,
            couplings_hz,
            tilt_angle_rad,
        })
    }

    pub fn len(&self) -> usize {
        self.site_frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_frequencies_hz.is_empty()
    }

    /// Coupling between `site` and `site + 1`, if that bond exists.
    pub fn coupling_right(&self, site: usize) -> Option<f64> {
        self.couplings_hz.get(site).copied()
    }

    /// Copy of the chain with `delta_hz` added to one site frequency (used
    /// to park the probe over a column).
    pub fn shifted(&self, site: usize, delta_hz: f64) -> Result<Self> {
        if site >= self.len() {
            return Err(Error::SiteOutOfRange {
                site,
                chain_length: self.len(),
            });
        }
        let mut copy = self.clone();
        copy.site_frequencies_hz[site] += delta_hz;
        Ok(copy)
    }

    pub fn is_magic_tilt(&self) -> bool {
        (self.tilt_angle_rad - magic_tilt_rad()).abs() < 1e-9
    }
}

/// Resonance frequency of `site` conditioned on its neighbors' states
/// (`true` = excited): f = f_k ± J_left ± J_right, with + for a ground-state
/// neighbor. End sites take only the existing neighbor's term; `None` marks a
/// missing neighbor.
pub fn ising_resonance(
    spec: &IsingChainSpec,
    site: usize,
    left_excited: Option<bool>,
    right_excited: Option<bool>,
) -> Result<f64> {
    if site >= spec.len() {
        return Err(Error::SiteOutOfRange {
            site,
            chain_length: spec.len(),
        });
    }
    let mut f = spec.site_frequencies_hz[site];
    if let Some(excited) = left_excited {
        let j = spec.couplings_hz[site - 1];
        f += if excited { -j } else { j };
    }
    if let Some(excited) = right_excited {
        let j = spec.couplings_hz[site];
        f += if excited { -j } else { j };
    }
    Ok(f)
}

/// Boltzmann probability for an electron spin to occupy its upper level:
/// exp(−2 μ_B B₀ / k_B T).
pub fn thermal_excited_probability(external_field_t: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(Error::InvalidGeometry("temperature must be positive".into()));
    }
    Ok((-2.0 * MU_B * external_field_t / (K_B * temperature_k)).exp())
}
