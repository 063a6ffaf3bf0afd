//! Compiles abstract circuits (x-rotations and nearest-neighbor conditional
//! gates) into timed schedules of probe moves and pulses, and verifies every
//! pulse against its frequency-selectivity window.
//!
//! Two compilation targets:
//!
//! - `SingleSpin`: the scanned-probe chain. `icn` becomes the three-step
//!   electron/nuclear/electron sequence and flips the target when the control
//!   is in its **ground** state (the probe-shifted ESR line is unique, so the
//!   ground branch is the addressable one).
//! - `IsingArray`: columns of non-interacting Ising chains under an elongated
//!   probe. `icn` becomes the native two-pulse conditional gate, which flips
//!   the target when the control is **excited**; the two conventions differ
//!   by an X on the control, which circuits can absorb. `rotx` is a single
//!   pulse at the probe-shifted column line, fast compared with the couplings
//!   so it acts independently of neighbor states.

use serde::{Deserialize, Serialize};

use crate::chain::{PulseKind, PulseSpec};
use crate::error::{Error, Result};
use crate::protocol::Device;
use crate::spectroscopy::IsingChainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    RotX { site: usize, angle_rad: f64 },
    InverseCn { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubit_count: usize, gates: Vec<Gate>) -> Result<Self> {
        let circuit = Self { qubit_count, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<()> {
        for gate in &self.gates {
            match *gate {
                Gate::RotX { site, .. } => {
                    if site >= self.qubit_count {
                        return Err(Error::SiteOutOfRange {
                            site,
                            chain_length: self.qubit_count,
                        });
                    }
                }
                Gate::InverseCn { control, target } => {
                    if control >= self.qubit_count || target >= self.qubit_count {
                        return Err(Error::SiteOutOfRange {
                            site: control.max(target),
                            chain_length: self.qubit_count,
                        });
                    }
                    if control.abs_diff(target) != 1 {
                        return Err(Error::NonAdjacentGate { control, target });
                    }
                }
            }
        }
        Ok(())
    }

    /// Line-oriented text format:
    ///
    /// ```text
    /// rotx <site> <angle_rad>
    /// icn <control> <target>
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, qubit_count: usize) -> Result<Self> {
        let mut gates = Vec::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let op = tokens.next().unwrap_or("");
            let parse_err = |message: String| Error::CircuitParse {
                line: number + 1,
                message,
            };
            match op {
                "rotx" => {
                    let site: usize = tokens
                        .next()
                        .ok_or_else(|| parse_err("rotx needs a site".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad site: {e}")))?;
                    let angle: f64 = tokens
                        .next()
                        .ok_or_else(|| parse_err("rotx needs an angle in radians".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad angle: {e}")))?;
                    gates.push(Gate::RotX {
                        site,
                        angle_rad: angle,
                    });
                }
                "icn" => {
                    let control: usize = tokens
                        .next()
                        .ok_or_else(|| parse_err("icn needs a control site".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad control: {e}")))?;
                    let target: usize = tokens
                        .next()
                        .ok_or_else(|| parse_err("icn needs a target site".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad target: {e}")))?;
                    gates.push(Gate::InverseCn { control, target });
                }
                other => {
                    return Err(parse_err(format!(
                        "unknown gate '{other}' (expected rotx or icn)"
                    )))
                }
            }
            if tokens.next().is_some() {
                return Err(parse_err("trailing tokens".into()));
            }
        }
        Circuit::new(qubit_count, gates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileMode {
    SingleSpin,
    IsingArray,
}

/// What a pulse is meant to address; carried for verification and reporting,
/// never trusted by the executor (which recomputes detunings from physics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseRole {
    ElectronConditional,
    NuclearRotation,
    NuclearConditional,
    IsingRotation,
    IsingConditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleStep {
    MoveProbe {
        site: Option<usize>,
    },
    Pulse {
        #[serde(flatten)]
        pulse: PulseSpec,
        site: usize,
        role: PulseRole,
        transition: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: CompileMode,
    pub qubit_count: usize,
    pub steps: Vec<ScheduleStep>,
    pub total_duration_s: f64,
}

impl Schedule {
    pub fn pulse_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, ScheduleStep::Pulse { .. }))
            .count()
    }

    pub fn move_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, ScheduleStep::MoveProbe { .. }))
            .count()
    }
}

/// 2πk rule: the Rabi frequency for which a nominal π-pulse is a complete
/// set of k full rotations at detuning δ, i.e. f_R = δ/√(4k²−1). Off-target
/// spins at that detuning end exactly where they started.
pub fn rabi_2pik(detuning_hz: f64, k: u32) -> Result<f64> {
    if detuning_hz == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if k < 1 {
        return Err(Error::InvalidRotationIndex);
    }
    let k = k as f64;
    Ok(detuning_hz.abs() / (4.0 * k * k - 1.0).sqrt())
}

/// Compile a circuit for the chosen target. Probe moves are emitted before
/// every pulse whose frequency assignment assumes them; electron pulses come
/// in matched restoring pairs.
pub fn compile(
    circuit: &Circuit,
    mode: CompileMode,
    device: &Device,
    ising: Option<&IsingChainSpec>,
) -> Result<Schedule> {
    circuit.validate()?;
    let mut steps = Vec::new();
    match mode {
        CompileMode::SingleSpin => compile_single_spin(circuit, device, &mut steps)?,
        CompileMode::IsingArray => {
            let spec = ising.ok_or(Error::IsingSpecRequired)?;
            if spec.len() != circuit.qubit_count {
                return Err(Error::IsingLengthMismatch {
                    couplings: spec.couplings_hz.len(),
                    sites: circuit.qubit_count,
                });
            }
            compile_ising(circuit, device, spec, &mut steps)?;
        }
    }
    let mut total = 0.0;
    for step in &steps {
        match step {
            ScheduleStep::MoveProbe { .. } => total += device.pulses.move_latency_s,
            ScheduleStep::Pulse { pulse, .. } => total += pulse.duration_s,
        }
    }
    Ok(Schedule {
        mode,
        qubit_count: circuit.qubit_count,
        steps,
        total_duration_s: total,
    })
}

fn compile_single_spin(
    circuit: &Circuit,
    device: &Device,
    steps: &mut Vec<ScheduleStep>,
) -> Result<()> {
    for gate in &circuit.gates {
        match *gate {
            Gate::RotX { site, angle_rad } => {
                steps.push(ScheduleStep::MoveProbe { site: Some(site) });
                let pulse = PulseSpec::rotation(
                    device.nmr_carrier_hz(),
                    device.pulses.nuclear_rabi_hz,
                    angle_rad,
                    PulseKind::Nuclear,
                )?;
                steps.push(ScheduleStep::Pulse {
                    pulse,
                    site,
                    role: PulseRole::NuclearRotation,
                    transition: format!("probe-shifted electron-ground NMR line of site {site}"),
                });
            }
            Gate::InverseCn { control, target } => {
                let cn = device.cn_pulse_parameters(control, target, circuit.qubit_count)?;
                let electron_pulse = PulseSpec::pi_pulse(
                    device.esr_carrier_hz(),
                    device.pulses.electron_rabi_hz,
                    PulseKind::Electron,
                )?;
                let electron_step = |which: &str| ScheduleStep::Pulse {
                    pulse: electron_pulse,
                    site: control,
                    role: PulseRole::ElectronConditional,
                    transition: format!(
                        "{which} electron flip at control {control}, conditioned on its nuclear ground state"
                    ),
                };
                steps.push(ScheduleStep::MoveProbe {
                    site: Some(control),
                });
                steps.push(electron_step("conditional"));
                steps.push(ScheduleStep::MoveProbe { site: Some(target) });
                steps.push(ScheduleStep::Pulse {
                    pulse: PulseSpec::pi_pulse(cn.carrier_hz, cn.rabi_hz, PulseKind::Nuclear)?,
                    site: target,
                    role: PulseRole::NuclearConditional,
                    transition: format!(
                        "target {target} NMR line with the control electron flipped (gap {:.0} Hz)",
                        cn.gap_hz
                    ),
                });
                steps.push(ScheduleStep::MoveProbe {
                    site: Some(control),
                });
                steps.push(electron_step("restoring"));
            }
        }
    }
    Ok(())
}

/// Probe shift of an Ising column: the column's gyromagnetic ratio is its
/// base frequency over the external field.
pub fn ising_probe_shift_hz(device: &Device, spec: &IsingChainSpec, site: usize) -> f64 {
    let gamma = spec.site_frequencies_hz[site] / device.geometry.external_field_t;
    gamma * crate::magnetostatics::probe_field_at_target(&device.geometry)
}

fn ising_rotation_rabi(device: &Device, spec: &IsingChainSpec, site: usize) -> f64 {
    if let Some(r) = device.pulses.ising_rotation_rabi_hz {
        return r;
    }
    let mut coupling_scale = 0.0f64;
    if site > 0 {
        coupling_scale += spec.couplings_hz[site - 1].abs();
    }
    if site + 1 < spec.len() {
        coupling_scale += spec.couplings_hz[site].abs();
    }
    let shift = ising_probe_shift_hz(device, spec, site).abs();
    (coupling_scale.max(1.0) * shift).sqrt()
}

fn compile_ising(
    circuit: &Circuit,
    device: &Device,
    spec: &IsingChainSpec,
    steps: &mut Vec<ScheduleStep>,
) -> Result<()> {
    for gate in &circuit.gates {
        match *gate {
            Gate::RotX { site, angle_rad } => {
                steps.push(ScheduleStep::MoveProbe { site: Some(site) });
                let carrier = spec.site_frequencies_hz[site] + ising_probe_shift_hz(device, spec, site);
                let rabi = ising_rotation_rabi(device, spec, site);
                steps.push(ScheduleStep::Pulse {
                    pulse: PulseSpec::rotation(carrier, rabi, angle_rad, PulseKind::Nuclear)?,
                    site,
                    role: PulseRole::IsingRotation,
                    transition: format!("probe-shifted column {site} line, neighbor-independent"),
                });
            }
            Gate::InverseCn { control, target } => {
                steps.push(ScheduleStep::MoveProbe { site: Some(target) });
                let shifted = spec.shifted(target, ising_probe_shift_hz(device, spec, target))?;
                // Resonant sector: control excited; the missing-neighbor term
                // is simply absent for an end-site target.
                let control_excited = Some(true);
                let other_states: &[Option<bool>] = if target_has_two_neighbors(spec, target, control)
                {
                    &[Some(false), Some(true)]
                } else {
                    &[None]
                };
                let carriers: Vec<f64> = other_states
                    .iter()
                    .map(|&other| {
                        let (left, right) = if control < target {
                            (control_excited, other)
                        } else {
                            (other, control_excited)
                        };
                        spectroscopy::ising_resonance(&shifted, target, left, right)
                    })
                    .collect::<Result<_>>()?;
                let rabi = ising_cn_rabi(device, &shifted, target, &carriers)?;
                for (index, carrier) in carriers.iter().enumerate() {
                    steps.push(ScheduleStep::Pulse {
                        pulse: PulseSpec::pi_pulse(*carrier, rabi, PulseKind::Nuclear)?,
                        site: target,
                        role: PulseRole::IsingConditional,
                        transition: format!(
                            "column {target} line, control {control} excited, sector {index}"
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

fn target_has_two_neighbors(spec: &IsingChainSpec, target: usize, control: usize) -> bool {
    let other = if control < target {
        target + 1 < spec.len()
    } else {
        target > 0
    };
    let _ = control;
    other
}

use crate::spectroscopy;

/// Pick the conditional-pulse Rabi frequency: either the configured value or
/// the 2πk rule applied to the smallest off-sector detuning; it must sit
/// strictly below the relevant couplings.
fn ising_cn_rabi(
    device: &Device,
    shifted: &IsingChainSpec,
    target: usize,
    carriers: &[f64],
) -> Result<f64> {
    let mut min_gap = f64::INFINITY;
    for carrier in carriers {
        for left in neighbor_states(shifted, target, true) {
            for right in neighbor_states(shifted, target, false) {
                let f = spectroscopy::ising_resonance(shifted, target, left, right)?;
                let gap = (f - carrier).abs();
                if gap > 1e-9 {
                    min_gap = min_gap.min(gap);
                }
            }
        }
    }
    if !min_gap.is_finite() {
        return Err(Error::NoFeasibleRabi(
            "all neighbor sectors are degenerate; conditional addressing impossible".into(),
        ));
    }
    let rabi = match device.pulses.cn_rabi_hz {
        Some(r) => r,
        None => rabi_2pik(min_gap, 1)?,
    };
    let mut coupling_bound = f64::INFINITY;
    if target > 0 {
        coupling_bound = coupling_bound.min(shifted.couplings_hz[target - 1].abs());
    }
    if target + 1 < shifted.len() {
        coupling_bound = coupling_bound.min(shifted.couplings_hz[target].abs());
    }
    if rabi >= coupling_bound {
        return Err(Error::NoFeasibleRabi(format!(
            "conditional Rabi frequency {rabi} Hz is not below the coupling bound {coupling_bound} Hz"
        )));
    }
    Ok(rabi)
}

fn neighbor_states(
    spec: &IsingChainSpec,
    site: usize,
    left: bool,
) -> std::vec::IntoIter<Option<bool>> {
    let exists = if left { site > 0 } else { site + 1 < spec.len() };
    if exists {
        vec![Some(false), Some(true)].into_iter()
    } else {
        vec![None].into_iter()
    }
}

/// One verification entry: a ratio requirement on a single pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseCheck {
    pub pulse_index: usize,
    pub name: String,
    /// How many times over the requirement the pulse sits (>= 1 passes).
    pub margin_ratio: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub checks: Vec<PulseCheck>,
    pub all_pass: bool,
}

/// Check every pulse against its selectivity window and compute the
/// worst-case off-target flip probability from the Rabi formula. Violations
/// are report entries, not errors.
pub fn verify_schedule(
    schedule: &Schedule,
    device: &Device,
    ising: Option<&IsingChainSpec>,
    margin: f64,
) -> Result<ScheduleReport> {
    let mut checks = Vec::new();
    let geometry = &device.geometry;
    let species = &device.species;
    let b_fz = crate::magnetostatics::probe_field_at_target(geometry);
    let b_neighbor = crate::magnetostatics::probe_field_at_neighbor(geometry);
    let neighbor_split_e = species.gamma_e_hz_per_t * (b_fz - b_neighbor);
    let neighbor_split_n = species.gamma_n_hz_per_t * (b_fz - b_neighbor);
    let jitter_amplitude = device.cantilever.thermal_amplitude_m
        * (geometry.temperature_k / device.cantilever.thermal_reference_k).sqrt()
        * std::f64::consts::SQRT_2;
    let jitter = crate::cantilever::field_jitter(geometry, species, jitter_amplitude)?;

    // the Ising model's vanishing static dipole z-terms assume the magic tilt
    if let Some(spec) = ising {
        if schedule.mode == CompileMode::IsingArray {
            checks.push(PulseCheck {
                pulse_index: 0,
                name: "ising_tilt_is_magic".to_string(),
                margin_ratio: if spec.is_magic_tilt() { 1.0 } else { 0.0 },
                pass: spec.is_magic_tilt(),
                detail: format!(
                    "tilt {} rad vs acos(1/sqrt(3)) = {} rad",
                    spec.tilt_angle_rad,
                    crate::spectroscopy::magic_tilt_rad()
                ),
            });
        }
    }

    let mut pulse_index = 0usize;
    for step in &schedule.steps {
        let ScheduleStep::Pulse { pulse, site, role, .. } = step else {
            continue;
        };
        let mut push = |name: &str, margin_ratio: f64, detail: String| {
            checks.push(PulseCheck {
                pulse_index,
                name: name.to_string(),
                margin_ratio,
                pass: margin_ratio >= 1.0,
                detail,
            });
        };
        match role {
            PulseRole::ElectronConditional => {
                push(
                    "electron_rabi_above_jitter",
                    pulse.rabi_hz / (jitter.dfe_hz * margin),
                    format!("f_eR = {} Hz vs jitter {} Hz", pulse.rabi_hz, jitter.dfe_hz),
                );
                push(
                    "electron_rabi_below_neighbor_split",
                    neighbor_split_e / (pulse.rabi_hz * margin),
                    format!(
                        "f_eR = {} Hz vs neighbor split {} Hz",
                        pulse.rabi_hz, neighbor_split_e
                    ),
                );
                push(
                    "electron_rabi_below_hyperfine_splitting",
                    2.0 * species.hyperfine_hz / pulse.rabi_hz,
                    format!(
                        "f_eR = {} Hz vs hyperfine splitting {} Hz",
                        pulse.rabi_hz,
                        2.0 * species.hyperfine_hz
                    ),
                );
                let p = crate::chain::rabi_flip_probability(
                    neighbor_split_e,
                    pulse.rabi_hz,
                    pulse.duration_s,
                );
                push(
                    "electron_off_target_flip",
                    0.05 / p.max(1e-300),
                    format!("worst neighbor flip probability {p:.3e}"),
                );
            }
            PulseRole::NuclearRotation => {
                push(
                    "nuclear_rabi_below_neighbor_split",
                    neighbor_split_n / pulse.rabi_hz,
                    format!(
                        "f_nR = {} Hz vs neighbor split {} Hz",
                        pulse.rabi_hz, neighbor_split_n
                    ),
                );
                let p = crate::chain::rabi_flip_probability(
                    neighbor_split_n,
                    pulse.rabi_hz,
                    pulse.duration_s,
                );
                push(
                    "nuclear_off_target_flip",
                    0.05 / p.max(1e-300),
                    format!("worst neighbor flip probability {p:.3e}"),
                );
            }
            PulseRole::NuclearConditional => {
                let gap = device
                    .cn_pulse_parameters(
                        if *site > 0 { site - 1 } else { site + 1 },
                        *site,
                        schedule.qubit_count,
                    )
                    .map(|cn| cn.gap_hz)
                    .unwrap_or(f64::NAN);
                push(
                    "cn_rabi_below_conditional_gap",
                    gap / pulse.rabi_hz,
                    format!("f_nR = {} Hz vs conditional gap {} Hz", pulse.rabi_hz, gap),
                );
                let p = crate::chain::rabi_flip_probability(gap, pulse.rabi_hz, pulse.duration_s);
                push(
                    "cn_off_branch_flip",
                    0.05 / p.max(1e-300),
                    format!("off-branch flip probability {p:.3e}"),
                );
            }
            PulseRole::IsingRotation => {
                let spec = ising.ok_or(Error::IsingSpecRequired)?;
                let mut coupling = 0.0f64;
                if *site > 0 {
                    coupling += spec.couplings_hz[site - 1].abs();
                }
                if site + 1 < spec.len() {
                    coupling += spec.couplings_hz[*site].abs();
                }
                push(
                    "ising_rotation_rabi_above_couplings",
                    pulse.rabi_hz / (coupling.max(1e-300) * margin),
                    format!("f_R = {} Hz vs coupling sum {} Hz", pulse.rabi_hz, coupling),
                );
                let shift = ising_probe_shift_hz(device, spec, *site);
                push(
                    "ising_rotation_rabi_below_probe_shift",
                    shift / (pulse.rabi_hz * margin),
                    format!("f_R = {} Hz vs probe shift {} Hz", pulse.rabi_hz, shift),
                );
            }
            PulseRole::IsingConditional => {
                let spec = ising.ok_or(Error::IsingSpecRequired)?;
                let mut coupling = f64::INFINITY;
                if *site > 0 {
                    coupling = coupling.min(spec.couplings_hz[site - 1].abs());
                }
                if site + 1 < spec.len() {
                    coupling = coupling.min(spec.couplings_hz[*site].abs());
                }
                push(
                    "ising_cn_rabi_below_coupling",
                    coupling / pulse.rabi_hz,
                    format!("f_R = {} Hz vs coupling bound {} Hz", pulse.rabi_hz, coupling),
                );
            }
        }
        pulse_index += 1;
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(ScheduleReport { checks, all_pass })
}
