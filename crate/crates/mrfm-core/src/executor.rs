//! Executes compiled schedules against a chain state.
//!
//! Execution is purely physical: every pulse is applied to every site through
//! the transition frequencies of the current device configuration (probe
//! position, electron register, Ising couplings). The compiler's addressing
//! annotations are reporting metadata only — selectivity emerges, or fails,
//! from the detunings themselves.

use rand_chacha::ChaCha8Rng;

use crate::chain::{ChainState, NuclearResonanceModel, ProbePosition, PulseKind, PulseMode};
use crate::compiler::{ising_probe_shift_hz, CompileMode, Schedule, ScheduleStep};
use crate::error::{Error, Result};
use crate::protocol::Device;
use crate::spectroscopy::{self, IsingChainSpec};

/// Neighbor-conditioned resonance map for an Ising chain with the probe
/// parked over one column.
pub struct IsingResonances {
    spec: IsingChainSpec,
}

impl IsingResonances {
    pub fn new(device: &Device, spec: &IsingChainSpec, probe: ProbePosition) -> Result<Self> {
        let spec = match probe {
            ProbePosition::Parked => spec.clone(),
            ProbePosition::AtSite(site) => {
                spec.shifted(site, ising_probe_shift_hz(device, spec, site))?
            }
        };
        Ok(Self { spec })
    }
}

impl NuclearResonanceModel for IsingResonances {
    fn frequency_hz(&self, site: usize, left: Option<bool>, right: Option<bool>) -> f64 {
        spectroscopy::ising_resonance(&self.spec, site, left, right)
            .expect("site index checked by the chain")
    }

    fn rotating_energy_hz(&self, basis_index: usize, carrier_hz: f64) -> Option<f64> {
        let sign = |site: usize| {
            if basis_index & (1 << site) == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut energy = 0.0;
        for (site, f0) in self.spec.site_frequencies_hz.iter().enumerate() {
            energy += (carrier_hz - f0) * sign(site) / 2.0;
        }
        for (bond, j) in self.spec.couplings_hz.iter().enumerate() {
            energy -= j / 2.0 * sign(bond) * sign(bond + 1);
        }
        Some(energy)
    }
}

/// Per-site resonance map for a chain in a definite computational basis
/// state (each site's neighbors resolved from the state itself).
pub fn ising_site_frequencies(
    state: &ChainState,
    device: &Device,
    spec: &IsingChainSpec,
) -> Result<Vec<f64>> {
    if spec.len() != state.qubit_count() {
        return Err(Error::IsingLengthMismatch {
            couplings: spec.couplings_hz.len(),
            sites: state.qubit_count(),
        });
    }
    let model = IsingResonances::new(device, spec, state.probe())?;
    let mut bits = Vec::with_capacity(state.qubit_count());
    for site in 0..state.qubit_count() {
        bits.push(state.definite_bit(site)?.ok_or(Error::ModeMismatch(
            "per-site frequency map needs a definite basis state".into(),
        ))?);
    }
    let n = state.qubit_count();
    Ok((0..n)
        .map(|site| {
            let left = (site > 0).then(|| bits[site - 1]);
            let right = (site + 1 < n).then(|| bits[site + 1]);
            model.frequency_hz(site, left, right)
        })
        .collect())
}

/// Runs every step of `schedule` in order. `rng` is required for stochastic
/// execution; `ising` is required for ising-array schedules.
pub fn execute_schedule(
    device: &Device,
    schedule: &Schedule,
    ising: Option<&IsingChainSpec>,
    state: &mut ChainState,
    mode: PulseMode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<()> {
    for step in &schedule.steps {
        match step {
            ScheduleStep::MoveProbe { site } => {
                let position = match site {
                    Some(s) => ProbePosition::AtSite(*s),
                    None => ProbePosition::Parked,
                };
                state.move_probe(position)?;
            }
            ScheduleStep::Pulse { pulse, .. } => match (schedule.mode, pulse.kind) {
                (CompileMode::SingleSpin, PulseKind::Nuclear) => {
                    let model = device.nuclear_model(state.electrons().to_vec(), state.probe());
                    state.apply_nuclear_pulse(pulse, &model, mode)?;
                }
                (CompileMode::SingleSpin, PulseKind::Electron) => {
                    let model = device.electron_model(state.electrons().to_vec(), state.probe());
                    state.apply_electron_pulse(pulse, &model, mode, rng.as_deref_mut())?;
                }
                (CompileMode::IsingArray, PulseKind::Nuclear) => {
                    let spec = ising.ok_or(Error::IsingSpecRequired)?;
                    let model = IsingResonances::new(device, spec, state.probe())?;
                    state.apply_nuclear_pulse(pulse, &model, mode)?;
                }
                (CompileMode::IsingArray, PulseKind::Electron) => {
                    return Err(Error::ModeMismatch(
                        "ising-array schedules have no electron pulses".into(),
                    ))
                }
            },
        }
    }
    Ok(())
}
