//! End-to-end procedures: single-nuclear-spin measurement through the
//! electron π-pulse train, chain polarization, the three-step conditional
//! gate, and column-averaged ensemble readout.
//!
//! Approximations, all deliberate and local to this module:
//!
//! - Probe moves are instantaneous and noiseless (`move_latency_s` exists for
//!   schedule accounting and defaults to zero).
//! - During a measurement the cantilever trace is simulated only when the
//!   collapsed outcome is the ground state; an excited outcome detunes the
//!   π-pulse train by twice the hyperfine frequency, which transfers
//!   negligible power, so those runs reuse a thermal-only trace.
//! - The π-pulse train itself is not simulated spin-by-spin; its off-target
//!   effect is bounded separately by the schedule verifier.
//! - Electron lifetime is a feasibility input checked by the validator, not a
//!   decay channel.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cantilever::{
    self, fit_saturating_amplitude, lockin_inphase, CantileverParams, SquareDrive, ThermalNoise,
};
use crate::chain::{
    ChainState, ElectronResonanceModel, ElectronState, NuclearResonanceModel, ProbePosition,
    PulseKind, PulseMode, PulseSpec,
};
use crate::compiler;
use crate::consts::{MU0_OVER_4PI, MU_B};
use crate::error::{Error, Result};
use crate::magnetostatics::{self, DeviceGeometry};
use crate::spectroscopy::{self, SpinSpecies};

/// Default Rabi frequencies and probe-move latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseDefaults {
    pub electron_rabi_hz: f64,
    pub nuclear_rabi_hz: f64,
    /// Rabi frequency for the conditional nuclear pulse; when absent it is
    /// chosen by the 2πk rule (k = 1) from the computed conditional gap.
    pub cn_rabi_hz: Option<f64>,
    /// Rabi frequency for one-qubit rotations in ising-array mode; when
    /// absent it is the geometric mean of the coupling scale and the probe
    /// shift.
    pub ising_rotation_rabi_hz: Option<f64>,
    pub move_latency_s: f64,
}

impl Default for PulseDefaults {
    fn default() -> Self {
        Self {
            electron_rabi_hz: 1.0e8,
            nuclear_rabi_hz: 1.0e5,
            cn_rabi_hz: None,
            ising_rotation_rabi_hz: None,
            move_latency_s: 0.0,
        }
    }
}

/// A complete single-spin device: geometry, species, cantilever, and pulse
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub geometry: DeviceGeometry,
    pub species: SpinSpecies,
    pub cantilever: CantileverParams,
    pub pulses: PulseDefaults,
}

impl Device {
    /// The reference design: 50 Å iron sphere 100 Å above a 50 Å-pitch chain
    /// in 10 T at 1 K, with the soft published cantilever.
    pub fn reference() -> Self {
        Self {
            geometry: DeviceGeometry::new(
                50.0 * crate::consts::ANGSTROM,
                100.0 * crate::consts::ANGSTROM,
                50.0 * crate::consts::ANGSTROM,
                2.2,
                10.0,
                1.0,
                1000,
            )
            .expect("reference geometry is valid"),
            species: SpinSpecies::hydrogen_like(),
            cantilever: CantileverParams::new(
                1.0e-3,
                1.4e3,
                1.0e3,
                5.0 * crate::consts::ANGSTROM,
                300.0,
            )
            .expect("reference cantilever is valid"),
            pulses: PulseDefaults::default(),
        }
    }

    /// Probe z-field at `site` for a given probe position.
    pub fn probe_bz(&self, probe: ProbePosition, site: usize) -> f64 {
        match probe {
            ProbePosition::Parked => 0.0,
            ProbePosition::AtSite(p) => {
                magnetostatics::probe_field(&self.geometry, self.geometry.site_offset_m(p, site))
                    .map(|f| f.bz_t)
                    .unwrap_or(0.0)
            }
        }
    }

    /// Carrier for measurement trains and the electron legs of the
    /// conditional gate: the probe-shifted nuclear-ground ESR line.
    pub fn esr_carrier_hz(&self) -> f64 {
        spectroscopy::esr_measurement_frequency(&self.species, &self.geometry)
            .expect("reference field is positive")
    }

    /// Carrier for polarization and one-qubit rotations: the probe-shifted
    /// electron-ground NMR line.
    pub fn nmr_carrier_hz(&self) -> f64 {
        let table = spectroscopy::transition_table(&self.species, self.geometry.external_field_t)
            .expect("external field is positive");
        table.f_n0_hz
            + self.species.gamma_n_hz_per_t * magnetostatics::probe_field_at_target(&self.geometry)
    }

    pub fn nuclear_model(
        &self,
        electrons: Vec<ElectronState>,
        probe: ProbePosition,
    ) -> SingleSpinNuclearModel<'_> {
        SingleSpinNuclearModel {
            device: self,
            electrons,
            probe,
        }
    }

    pub fn electron_model(
        &self,
        electrons: Vec<ElectronState>,
        probe: ProbePosition,
    ) -> SingleSpinElectronModel<'_> {
        SingleSpinElectronModel {
            device: self,
            electrons,
            probe,
        }
    }

    /// Carrier, Rabi frequency, and addressing gap for the conditional
    /// nuclear pulse of a gate on `(control, target)` over a chain of
    /// `qubits` sites. The carrier is the target line with the control
    /// electron flipped; the gap separates it from the unflipped line.
    pub fn cn_pulse_parameters(
        &self,
        control: usize,
        target: usize,
        qubits: usize,
    ) -> Result<CnPulseParameters> {
        if control >= qubits || target >= qubits {
            return Err(Error::SiteOutOfRange {
                site: control.max(target),
                chain_length: qubits,
            });
        }
        if control.abs_diff(target) != 1 {
            return Err(Error::NonAdjacentGate { control, target });
        }
        let mut flipped = vec![ElectronState::ground(); qubits];
        flipped[control] = ElectronState::Definite(true);
        let ground = vec![ElectronState::ground(); qubits];
        let probe = ProbePosition::AtSite(target);
        let on = self
            .nuclear_model(flipped, probe)
            .frequency_hz(target, Some(false), Some(false));
        let off = self
            .nuclear_model(ground, probe)
            .frequency_hz(target, Some(false), Some(false));
        let gap = (on - off).abs();
        let rabi = match self.pulses.cn_rabi_hz {
            Some(r) => r,
            None => compiler::rabi_2pik(gap, 1)?,
        };
        Ok(CnPulseParameters {
            carrier_hz: on,
            rabi_hz: rabi,
            gap_hz: gap,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnPulseParameters {
    pub carrier_hz: f64,
    pub rabi_hz: f64,
    pub gap_hz: f64,
}

/// Nuclear transition frequencies for the single-spin device: external field
/// plus probe field plus the dipole field of every other electron, with the
/// hyperfine offset set by the site's own electron.
pub struct SingleSpinNuclearModel<'a> {
    device: &'a Device,
    electrons: Vec<ElectronState>,
    probe: ProbePosition,
}

impl SingleSpinNuclearModel<'_> {
    fn local_field(&self, site: usize, left: Option<bool>, right: Option<bool>) -> f64 {
        let geom = &self.device.geometry;
        let mut b = geom.external_field_t + self.device.probe_bz(self.probe, site);
        for (j, &electron) in self.electrons.iter().enumerate() {
            if j == site {
                continue;
            }
            let excited = match electron {
                ElectronState::Definite(e) => e,
                ElectronState::Conditional {
                    base_excited,
                    flipped_when_excited,
                } => {
                    // Resolve via the neighbor's nuclear bit when the sector
                    // exposes it; farther conditional electrons are frozen to
                    // their base value (a sub-hundred-hertz effect on sites
                    // that are hundreds of kilohertz off resonance).
                    let bit = if j + 1 == site {
                        left
                    } else if j == site + 1 {
                        right
                    } else {
                        None
                    };
                    match bit {
                        Some(nuclear_excited) => {
                            base_excited ^ (nuclear_excited == flipped_when_excited)
                        }
                        None => base_excited,
                    }
                }
            };
            let distance = (j.abs_diff(site) as f64) * geom.atom_spacing_m;
            let magnitude = MU0_OVER_4PI * MU_B / (distance * distance * distance);
            b += if excited { magnitude } else { -magnitude };
        }
        b
    }
}

impl NuclearResonanceModel for SingleSpinNuclearModel<'_> {
    fn frequency_hz(&self, site: usize, left: Option<bool>, right: Option<bool>) -> f64 {
        let b = self.local_field(site, left, right);
        let own_excited = match self.electrons[site] {
            ElectronState::Definite(e) => e,
            ElectronState::Conditional { base_excited, .. } => base_excited,
        };
        let zeeman = self.device.species.gamma_n_hz_per_t * b;
        let hyperfine = self.device.species.hyperfine_hz;
        if own_excited {
            hyperfine - zeeman
        } else {
            zeeman + hyperfine
        }
    }

    /// With every electron definite the nuclear diagonal is one-local, so
    /// the absolute rotating-frame energies are well defined; a conditional
    /// electron makes them sector-dependent and the per-site gauge applies.
    fn rotating_energy_hz(&self, basis_index: usize, carrier_hz: f64) -> Option<f64> {
        if self
            .electrons
            .iter()
            .any(|e| matches!(e, ElectronState::Conditional { .. }))
        {
            return None;
        }
        let mut energy = 0.0;
        for site in 0..self.electrons.len() {
            let f = self.frequency_hz(site, Some(false), Some(false));
            let sign = if basis_index & (1 << site) == 0 { 1.0 } else { -1.0 };
            energy += (carrier_hz - f) * sign / 2.0;
        }
        Some(energy)
    }
}

/// Electron transition frequencies for the single-spin device.
pub struct SingleSpinElectronModel<'a> {
    device: &'a Device,
    electrons: Vec<ElectronState>,
    probe: ProbePosition,
}

impl ElectronResonanceModel for SingleSpinElectronModel<'_> {
    fn frequency_hz(&self, site: usize, nuclear_excited: bool) -> f64 {
        let geom = &self.device.geometry;
        let mut b = geom.external_field_t + self.device.probe_bz(self.probe, site);
        for (j, &electron) in self.electrons.iter().enumerate() {
            if j == site {
                continue;
            }
            let excited = match electron {
                ElectronState::Definite(e) => e,
                ElectronState::Conditional { base_excited, .. } => base_excited,
            };
            let distance = (j.abs_diff(site) as f64) * geom.atom_spacing_m;
            let magnitude = MU0_OVER_4PI * MU_B / (distance * distance * distance);
            b += if excited { magnitude } else { -magnitude };
        }
        let zeeman = self.device.species.gamma_e_hz_per_t * b;
        if nuclear_excited {
            zeeman - self.device.species.hyperfine_hz
        } else {
            zeeman + self.device.species.hyperfine_hz
        }
    }
}

/// Result of one single-spin measurement.
///
/// With the analytic backend `detected` equals "collapsed to the ground
/// state" exactly; with simulated traces the noise model can misclassify, and
/// that misclassification rate is precisely what the discrimination tests
/// bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub site: usize,
    pub detected: bool,
    pub elapsed_s: f64,
    pub final_amplitude_m: f64,
    pub pulse_count: u64,
    pub collapsed_outcome: u8,
}

/// Column-averaged readout over an ensemble of identically driven chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReadout {
    pub column: usize,
    pub average_z_polarization: f64,
    pub chain_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionBackend {
    /// Closed-form detection: outcome decides, elapsed time from the ring-up
    /// law. Used by protocol logic tests and schedule execution.
    Analytic,
    /// Integrate the driven/thermal cantilever ODE and run the lock-in
    /// discriminator on the trace.
    Simulated,
}

/// Detection configuration.
///
/// `threshold_factor · z_rms(T)` is the target amplitude whose crossing time
/// defines the reported measurement duration. The detected/undetected
/// decision itself compares the fitted asymptotic drive amplitude against the
/// midpoint of that threshold and the predicted driven amplitude — the
/// likelihood-ratio midpoint for the two nearly-equal-variance hypotheses —
/// because the thermal quadrature barely averages over a few ring-up times
/// and a bare threshold at the target amplitude would misfire at the
/// percent level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSettings {
    /// Detection-time target in units of z_rms(T).
    pub threshold_factor: f64,
    /// Observation window in units of the ring-up time.
    pub window_tau_factor: f64,
    pub noise: bool,
    pub steps_per_period: u32,
    /// Reuse a fixed pool of noise traces instead of integrating one per run.
    pub trace_pool: Option<u32>,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        Self {
            threshold_factor: std::f64::consts::SQRT_2,
            window_tau_factor: 6.0,
            noise: true,
            steps_per_period: 200,
            trace_pool: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct TraceDecision {
    detected: bool,
    amplitude_m: f64,
    elapsed_s: f64,
}

/// Owns the device and detection configuration and caches pooled traces.
pub struct MeasurementEngine {
    pub device: Device,
    pub backend: DetectionBackend,
    pub settings: DetectionSettings,
    pub pulse_mode: PulseMode,
    pool_cache: HashMap<(bool, u64), TraceDecision>,
}

impl MeasurementEngine {
    pub fn new(device: Device, backend: DetectionBackend) -> Self {
        Self {
            device,
            backend,
            settings: DetectionSettings::default(),
            pulse_mode: PulseMode::Ideal,
            pool_cache: HashMap::new(),
        }
    }

    fn drive_force_n(&self) -> f64 {
        magnetostatics::target_force_magnitude(&self.device.geometry)
    }

    fn window_s(&self) -> f64 {
        self.settings.window_tau_factor * cantilever::ring_up_time(&self.device.cantilever)
    }

    fn threshold_m(&self) -> f64 {
        self.settings.threshold_factor
            * cantilever::thermal_rms(&self.device.cantilever, self.device.geometry.temperature_k)
    }

    /// Measure the nuclear spin at `site`: Born-rule collapse, then a
    /// π-pulse train at the probe-shifted ESR line that drives the cantilever
    /// only for a ground-state outcome. An even pulse count returns the
    /// electron to its initial state.
    pub fn measure(
        &mut self,
        state: &mut ChainState,
        site: usize,
        seed: u64,
    ) -> Result<MeasurementRecord> {
        if state.probe() != ProbePosition::AtSite(site) {
            return Err(Error::ProbeNotAtSite { expected: site });
        }
        if !state.electrons()[site].is_definite_ground() {
            return Err(Error::ElectronNotGround { site });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let measurement = state.project_measure(site, &mut rng)?;
        let driven = measurement.outcome == 0;

        let decision = match self.backend {
            DetectionBackend::Analytic => {
                let elapsed = cantilever::detection_time(
                    &self.device.cantilever,
                    self.drive_force_n(),
                    self.device.geometry.temperature_k,
                    self.settings.threshold_factor,
                )?;
                if driven {
                    TraceDecision {
                        detected: true,
                        amplitude_m: self.threshold_m(),
                        elapsed_s: elapsed,
                    }
                } else {
                    TraceDecision {
                        detected: false,
                        amplitude_m: cantilever::thermal_rms(
                            &self.device.cantilever,
                            self.device.geometry.temperature_k,
                        ),
                        elapsed_s: self.window_s(),
                    }
                }
            }
            DetectionBackend::Simulated => self.simulated_decision(driven, seed)?,
        };

        let pulse_count =
            2 * ((self.device.cantilever.resonance_hz * decision.elapsed_s).round() as u64).max(1);
        Ok(MeasurementRecord {
            site,
            detected: decision.detected,
            elapsed_s: decision.elapsed_s,
            final_amplitude_m: decision.amplitude_m,
            pulse_count,
            collapsed_outcome: measurement.outcome,
        })
    }

    /// Regenerate the trace a simulated decision for (`driven`, `seed`) would
    /// analyze — same pool mapping, same noise seed. Used to export traces.
    pub fn reference_trace(&self, driven: bool, seed: u64) -> Result<crate::cantilever::ResponseTrace> {
        let trace_seed = match self.settings.trace_pool {
            Some(pool) => splitmix64(driven as u64 ^ ((seed % pool.max(1) as u64) << 1)),
            None => splitmix64(seed ^ ((driven as u64) << 63)),
        };
        let params = &self.device.cantilever;
        let drive = driven.then(|| SquareDrive::resonant(self.drive_force_n(), params));
        let noise = self.settings.noise.then_some(ThermalNoise {
            temperature_k: self.device.geometry.temperature_k,
            seed: trace_seed,
        });
        let dt = params.period_s() / self.settings.steps_per_period as f64;
        cantilever::simulate_response(params, drive, noise, self.window_s(), dt)
    }

    fn simulated_decision(&mut self, driven: bool, seed: u64) -> Result<TraceDecision> {
        let (key, trace_seed) = match self.settings.trace_pool {
            Some(pool) => {
                let index = seed % pool.max(1) as u64;
                ((driven, index), splitmix64(driven as u64 ^ (index << 1)))
            }
            None => ((driven, seed), splitmix64(seed ^ ((driven as u64) << 63))),
        };
        if self.settings.trace_pool.is_some() {
            if let Some(decision) = self.pool_cache.get(&key) {
                return Ok(*decision);
            }
        }

        let device = &self.device;
        let params = &device.cantilever;
        let drive = driven.then(|| SquareDrive::resonant(self.drive_force_n(), params));
        let noise = self.settings.noise.then_some(ThermalNoise {
            temperature_k: device.geometry.temperature_k,
            seed: trace_seed,
        });
        let dt = params.period_s() / self.settings.steps_per_period as f64;
        let window = self.window_s();
        let trace = cantilever::simulate_response(params, drive, noise, window, dt)?;

        let tau = cantilever::ring_up_time(params);
        let series = lockin_inphase(&trace, params.resonance_hz);
        let amplitude = fit_saturating_amplitude(&series, tau);
        let threshold = self.threshold_m();
        let predicted = cantilever::stationary_amplitude(self.drive_force_n(), params);
        let decision_level = 0.5 * (threshold + predicted.max(threshold));
        let detected = amplitude > decision_level;
        let elapsed = if detected {
            -tau * (1.0 - threshold / amplitude).ln()
        } else {
            window
        };
        let decision = TraceDecision {
            detected,
            amplitude_m: amplitude,
            elapsed_s: elapsed,
        };
        if self.settings.trace_pool.is_some() {
            self.pool_cache.insert(key, decision);
        }
        Ok(decision)
    }

    /// Visit every site, measure it, and flip excited outcomes back to the
    /// ground state with a resonant nuclear π-pulse. Terminates with the
    /// chain in |0…0⟩ and all electrons ground.
    pub fn polarize_chain(
        &mut self,
        state: &mut ChainState,
        seed: u64,
    ) -> Result<Vec<MeasurementRecord>> {
        for (site, electron) in state.electrons().iter().enumerate() {
            if !electron.is_definite_ground() {
                return Err(Error::ElectronNotGround { site });
            }
        }
        let mut seeder = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::with_capacity(state.qubit_count());
        let carrier = self.device.nmr_carrier_hz();
        for site in 0..state.qubit_count() {
            state.move_probe(ProbePosition::AtSite(site))?;
            let record = self.measure(state, site, seeder.random())?;
            if record.collapsed_outcome == 1 {
                let pulse = PulseSpec::pi_pulse(
                    carrier,
                    self.device.pulses.nuclear_rabi_hz,
                    PulseKind::Nuclear,
                )?;
                let model = self
                    .device
                    .nuclear_model(state.electrons().to_vec(), state.probe());
                state.apply_nuclear_pulse(&pulse, &model, self.pulse_mode)?;
            }
            records.push(record);
        }
        state.move_probe(ProbePosition::Parked)?;
        Ok(records)
    }
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Three-step conditional gate on neighboring nuclear qubits: the target
/// flips exactly when the control is in its ground state.
///
/// 1. Probe at the control; an electron π-pulse at the probe-shifted
///    nuclear-ground ESR line flips the control electron iff the control
///    qubit is |0⟩.
/// 2. Probe at the target; a nuclear π-pulse at the flipped-branch target
///    line flips the target iff the neighbor electron was flipped (the
///    nearest-neighbor dipole term cancels on that branch).
/// 3. Probe back at the control; the same electron π-pulse restores the
///    electron.
///
/// `rng` is required in stochastic mode, where electron leaks are sampled.
pub fn inverse_cn_gate(
    device: &Device,
    state: &mut ChainState,
    control: usize,
    target: usize,
    mode: PulseMode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<()> {
    let qubits = state.qubit_count();
    if control.abs_diff(target) != 1 {
        return Err(Error::NonAdjacentGate { control, target });
    }
    for (site, electron) in state.electrons().iter().enumerate() {
        if !electron.is_definite_ground() {
            return Err(Error::ElectronNotGround { site });
        }
    }
    let cn = device.cn_pulse_parameters(control, target, qubits)?;
    let electron_pulse = PulseSpec::pi_pulse(
        device.esr_carrier_hz(),
        device.pulses.electron_rabi_hz,
        PulseKind::Electron,
    )?;
    let nuclear_pulse = PulseSpec::pi_pulse(cn.carrier_hz, cn.rabi_hz, PulseKind::Nuclear)?;

    state.move_probe(ProbePosition::AtSite(control))?;
    let model = device.electron_model(state.electrons().to_vec(), state.probe());
    state.apply_electron_pulse(&electron_pulse, &model, mode, rng.as_deref_mut())?;

    state.move_probe(ProbePosition::AtSite(target))?;
    let model = device.nuclear_model(state.electrons().to_vec(), state.probe());
    state.apply_nuclear_pulse(&nuclear_pulse, &model, mode)?;

    state.move_probe(ProbePosition::AtSite(control))?;
    let model = device.electron_model(state.electrons().to_vec(), state.probe());
    state.apply_electron_pulse(&electron_pulse, &model, mode, rng)?;

    Ok(())
}

/// Mean z-polarization (2⟨I^z⟩ ∈ [−1, 1]) of `column` across an ensemble of
/// chains evolved under the same schedule.
pub fn ensemble_column_readout(chains: &[ChainState], column: usize) -> Result<EnsembleReadout> {
    if chains.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut total = 0.0;
    for chain in chains {
        total += chain.z_polarization(column)?;
    }
    Ok(EnsembleReadout {
        column,
        average_z_polarization: total / chains.len() as f64,
        chain_count: chains.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn small_device() -> Device {
        let mut device = Device::reference();
        device.geometry.chain_length = 4;
        device
    }

    fn analytic_engine(qubits: usize) -> MeasurementEngine {
        let mut device = Device::reference();
        device.geometry.chain_length = qubits;
        MeasurementEngine::new(device, DetectionBackend::Analytic)
    }

    #[test]
    fn ground_state_measurement_is_detected_in_about_90_ms() {
        let mut engine = analytic_engine(2);
        let mut state = ChainState::new_ground(2).unwrap();
        state.move_probe(ProbePosition::AtSite(0)).unwrap();
        let record = engine.measure(&mut state, 0, 17).unwrap();
        assert!(record.detected);
        assert_eq!(record.collapsed_outcome, 0);
        assert!(
            record.elapsed_s > 0.080 && record.elapsed_s < 0.092,
            "elapsed = {}",
            record.elapsed_s
        );
        assert_eq!(record.pulse_count % 2, 0);
        assert!(state.electrons()[0].is_definite_ground());
    }

    #[test]
    fn excited_state_measurement_stays_at_the_thermal_floor() {
        let mut engine = analytic_engine(1);
        let mut state = ChainState::from_basis(&[true]).unwrap();
        state.move_probe(ProbePosition::AtSite(0)).unwrap();
        let record = engine.measure(&mut state, 0, 3).unwrap();
        assert!(!record.detected);
        assert_eq!(record.collapsed_outcome, 1);
        let floor = cantilever::thermal_rms(&engine.device.cantilever, 1.0);
        assert!(record.final_amplitude_m <= 1.5 * floor);
    }

    #[test]
    fn measurement_preconditions_are_enforced() {
        let mut engine = analytic_engine(2);
        let mut state = ChainState::new_ground(2).unwrap();
        assert!(matches!(
            engine.measure(&mut state, 0, 1),
            Err(Error::ProbeNotAtSite { expected: 0 })
        ));
        state.move_probe(ProbePosition::AtSite(1)).unwrap();
        state
            .set_electron(1, ElectronState::Definite(true))
            .unwrap();
        assert!(matches!(
            engine.measure(&mut state, 1, 1),
            Err(Error::ElectronNotGround { site: 1 })
        ));
    }

    #[test]
    fn superposition_detects_half_the_time() {
        let mut engine = analytic_engine(1);
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let trials = 10_000;
        let mut detected = 0usize;
        for seed in 0..trials {
            let mut state = ChainState::from_amplitudes(vec![half, half]).unwrap();
            state.move_probe(ProbePosition::AtSite(0)).unwrap();
            let record = engine.measure(&mut state, 0, seed).unwrap();
            if record.detected {
                detected += 1;
            }
        }
        let fraction = detected as f64 / trials as f64;
        assert!((fraction - 0.5).abs() < 0.02, "fraction = {fraction}");
    }

    #[test]
    fn polarizing_an_already_ground_chain_is_a_no_op() {
        let mut engine = analytic_engine(3);
        let mut state = ChainState::new_ground(3).unwrap();
        let records = engine.polarize_chain(&mut state, 5).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.collapsed_outcome == 0));
        assert_relative_eq!(state.amplitude(0).norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn polarizing_011_needs_exactly_two_corrective_pulses() {
        let mut engine = analytic_engine(3);
        // sites 1 and 2 excited
        let mut state = ChainState::from_basis(&[false, true, true]).unwrap();
        let records = engine.polarize_chain(&mut state, 5).unwrap();
        let corrections = records.iter().filter(|r| r.collapsed_outcome == 1).count();
        assert_eq!(corrections, 2);
        assert_relative_eq!(state.amplitude(0).norm(), 1.0, max_relative = 1e-12);
        assert!(state.electrons().iter().all(|e| e.is_definite_ground()));
    }

    #[test]
    fn polarize_is_idempotent() {
        let mut engine = analytic_engine(4);
        let mut state = ChainState::from_basis(&[true, false, true, false]).unwrap();
        engine.polarize_chain(&mut state, 1).unwrap();
        let snapshot = state.amplitudes().to_vec();
        let records = engine.polarize_chain(&mut state, 2).unwrap();
        assert!(records.iter().all(|r| r.collapsed_outcome == 0));
        for (a, b) in state.amplitudes().iter().zip(snapshot.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cn_truth_table_on_basis_states() {
        let device = small_device();
        // |control=0, target=0> -> target flips
        let mut state = ChainState::new_ground(2).unwrap();
        inverse_cn_gate(&device, &mut state, 0, 1, PulseMode::Ideal, None).unwrap();
        assert_relative_eq!(state.amplitude(0b10).norm(), 1.0, max_relative = 1e-12);
        // |control=1, target=0> -> unchanged
        let mut state = ChainState::from_basis(&[true, false]).unwrap();
        inverse_cn_gate(&device, &mut state, 0, 1, PulseMode::Ideal, None).unwrap();
        assert_relative_eq!(state.amplitude(0b01).norm(), 1.0, max_relative = 1e-12);
        assert!(state.electrons().iter().all(|e| e.is_definite_ground()));
    }

    #[test]
    fn cn_on_superposed_control_builds_the_correlated_pair() {
        let device = small_device();
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut state = ChainState::from_amplitudes(vec![half, half, zero, zero]).unwrap();
        inverse_cn_gate(&device, &mut state, 0, 1, PulseMode::Ideal, None).unwrap();
        // (|01> + |10>)/sqrt2 in (control, target) ordering: basis index
        // control = bit 0, target = bit 1.
        assert!((state.amplitude(0b10) - half).norm() < 1e-10);
        assert!((state.amplitude(0b01) - half).norm() < 1e-10);
        assert!(state.amplitude(0b00).norm() < 1e-12);
        assert!(state.amplitude(0b11).norm() < 1e-12);
    }

    #[test]
    fn cn_applied_twice_is_the_identity() {
        let device = small_device();
        let amps = vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, -0.5),
        ];
        let mut state = ChainState::from_amplitudes(amps.clone()).unwrap();
        inverse_cn_gate(&device, &mut state, 0, 1, PulseMode::Ideal, None).unwrap();
        inverse_cn_gate(&device, &mut state, 0, 1, PulseMode::Ideal, None).unwrap();
        for (a, b) in state.amplitudes().iter().zip(amps.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn cn_leaves_spectator_sites_alone() {
        let device = small_device();
        // 4 qubits, gate on (1, 2); spectators 0 (excited) and 3 (ground)
        let mut state = ChainState::from_basis(&[true, false, false, false]).unwrap();
        inverse_cn_gate(&device, &mut state, 1, 2, PulseMode::Ideal, None).unwrap();
        // control (site 1) ground -> target (site 2) flips; site 0 untouched
        assert_relative_eq!(state.amplitude(0b0101).norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cn_rejects_non_neighbors_and_hot_electrons() {
        let device = small_device();
        let mut state = ChainState::new_ground(3).unwrap();
        assert!(matches!(
            inverse_cn_gate(&device, &mut state, 0, 2, PulseMode::Ideal, None),
            Err(Error::NonAdjacentGate { .. })
        ));
        state
            .set_electron(1, ElectronState::Definite(true))
            .unwrap();
        assert!(matches!(
            inverse_cn_gate(&device, &mut state, 0, 1, PulseMode::Ideal, None),
            Err(Error::ElectronNotGround { site: 1 })
        ));
    }

    #[test]
    fn conditional_gap_matches_the_two_neighbor_formula() {
        let device = small_device();
        let cn = device.cn_pulse_parameters(1, 2, 4).unwrap();
        let a = device.geometry.atom_spacing_m;
        let expected = device.species.gamma_n_hz_per_t * 2.0 * MU0_OVER_4PI * MU_B / a.powi(3);
        assert_relative_eq!(cn.gap_hz, expected, max_relative = 1e-9);
        // 2-pi-k default sits below the gap
        assert!(cn.rabi_hz < cn.gap_hz);
    }

    #[test]
    fn end_site_target_keeps_the_same_gap() {
        let device = small_device();
        let inner = device.cn_pulse_parameters(1, 2, 4).unwrap();
        let end = device.cn_pulse_parameters(1, 0, 4).unwrap();
        assert_relative_eq!(end.gap_hz, inner.gap_hz, max_relative = 1e-9);
    }

    #[test]
    fn moving_the_probe_reassigns_the_shifted_site() {
        let device = small_device();
        let electrons = vec![ElectronState::ground(); 4];
        let at_1 = device.nuclear_model(electrons.clone(), ProbePosition::AtSite(1));
        let at_2 = device.nuclear_model(electrons.clone(), ProbePosition::AtSite(2));
        let parked = device.nuclear_model(electrons, ProbePosition::Parked);
        let f_under_probe = at_1.frequency_hz(1, Some(false), Some(false));
        let f_beside_probe = at_2.frequency_hz(1, Some(false), Some(false));
        let f_bare = parked.frequency_hz(1, Some(false), Some(false));
        // the full shift follows the probe; the neighbor keeps the off-axis
        // fraction; parking removes it entirely
        let gamma_n = device.species.gamma_n_hz_per_t;
        let full = gamma_n * magnetostatics::probe_field_at_target(&device.geometry);
        let lateral = gamma_n * magnetostatics::probe_field_at_neighbor(&device.geometry);
        assert_relative_eq!(f_under_probe - f_bare, full, max_relative = 1e-9);
        assert_relative_eq!(f_beside_probe - f_bare, lateral, max_relative = 1e-9);
    }

    #[test]
    fn ensemble_readout_examples() {
        let ground = ChainState::new_ground(2).unwrap();
        let excited = ChainState::from_basis(&[true, false]).unwrap();
        let all_ground = vec![ground.clone(), ground.clone(), ground.clone()];
        let readout = ensemble_column_readout(&all_ground, 0).unwrap();
        assert_relative_eq!(readout.average_z_polarization, 1.0);
        assert_eq!(readout.chain_count, 3);

        let mixed = vec![ground, excited];
        let readout = ensemble_column_readout(&mixed, 0).unwrap();
        assert_relative_eq!(readout.average_z_polarization, 0.0);

        assert!(matches!(
            ensemble_column_readout(&[], 0),
            Err(Error::EmptyEnsemble)
        ));
    }
}
