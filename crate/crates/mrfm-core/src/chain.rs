//! Quantum state of the nuclear-spin chain under frequency-selective pulses,
//! plus the per-site classical electron register and the probe position.
//!
//! Conventions, fixed for reproducibility:
//!
//! - Basis index bit k (least significant = site 0) is the nuclear state of
//!   site k; 0 = ground |0⟩, 1 = excited |1⟩.
//! - Electron spins are a classical register, not amplitudes: every protocol
//!   here only flips electrons between definite states, so tracking them
//!   classically keeps the state 2^N instead of 4^N. The one quantum wrinkle
//!   — an electron flip conditioned on its own superposed nucleus — is
//!   tracked symbolically (see [`ElectronState`]).
//! - Pulses rotate about the rotating-frame x-axis. In `Stochastic` mode the
//!   rotation is the full generalized Rabi unitary
//!   `exp(−i π τ (f_R σ_x − δ σ_z))` with detuning δ = f_site − f_carrier; in
//!   `Ideal` mode a site rotates by exactly the nominal angle when |δ| < f_R
//!   and is untouched otherwise, with the global phase chosen so a π rotation
//!   is exactly the Pauli X and a 2π rotation the identity (clean truth
//!   tables for conditional gates).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Desk-scale cap on the chain length.
pub const MAX_QUBITS: usize = 24;

/// Norm tolerance maintained after every operation.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbePosition {
    Parked,
    AtSite(usize),
}

/// Classical electron state of one site. `Conditional` records an electron
/// flip that was conditioned on the site's own (superposed) nuclear spin: the
/// electron is `base` flipped exactly on the nuclear branch equal to
/// `flipped_when_excited`. A second conditional pulse resolves it back to a
/// definite state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElectronState {
    Definite(bool),
    Conditional {
        base_excited: bool,
        flipped_when_excited: bool,
    },
}

impl ElectronState {
    pub fn ground() -> Self {
        ElectronState::Definite(false)
    }

    /// Electron value on the nuclear branch `nuclear_excited`.
    pub fn resolve(self, nuclear_excited: bool) -> bool {
        match self {
            ElectronState::Definite(e) => e,
            ElectronState::Conditional {
                base_excited,
                flipped_when_excited,
            } => base_excited ^ (nuclear_excited == flipped_when_excited),
        }
    }

    pub fn is_definite_ground(self) -> bool {
        self == ElectronState::Definite(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseKind {
    Electron,
    Nuclear,
}

/// One rectangular pulse. A nominal π-pulse has duration 1/(2 f_R); a general
/// rotation by θ lasts θ/(2π f_R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub carrier_hz: f64,
    pub rabi_hz: f64,
    pub duration_s: f64,
    pub kind: PulseKind,
    pub nominal_angle_rad: f64,
}

impl PulseSpec {
    pub fn pi_pulse(carrier_hz: f64, rabi_hz: f64, kind: PulseKind) -> Result<Self> {
        Self::rotation(carrier_hz, rabi_hz, std::f64::consts::PI, kind)
    }

    pub fn rotation(carrier_hz: f64, rabi_hz: f64, angle_rad: f64, kind: PulseKind) -> Result<Self> {
        if !(rabi_hz > 0.0) {
            return Err(Error::InvalidPulse("Rabi frequency must be positive".into()));
        }
        if !(angle_rad > 0.0) {
            return Err(Error::InvalidPulse("rotation angle must be positive".into()));
        }
        Ok(Self {
            carrier_hz,
            rabi_hz,
            duration_s: angle_rad / (2.0 * std::f64::consts::PI * rabi_hz),
            kind,
            nominal_angle_rad: angle_rad,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_hz > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::InvalidPulse(
                "Rabi frequency and duration must be positive".into(),
            ));
        }
        let implied = 2.0 * std::f64::consts::PI * self.rabi_hz * self.duration_s;
        if (implied - self.nominal_angle_rad).abs() > 1e-6 * self.nominal_angle_rad.max(1.0) {
            return Err(Error::InvalidPulse(format!(
                "duration implies a rotation of {implied} rad, not the nominal {} rad",
                self.nominal_angle_rad
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseMode {
    /// Threshold semantics: sites with |δ| < f_R get the exact nominal
    /// rotation, everything else is untouched.
    Ideal,
    /// Full generalized-Rabi unitaries on the amplitudes; electron flips are
    /// sampled from the off-resonant flip probability.
    Stochastic,
}

/// Transition frequency of a nuclear spin given the z-basis values of its
/// nuclear neighbors (`true` = excited, `None` = no neighbor). Implementors
/// fold in probe shifts, electron dipole fields, and Ising couplings.
pub trait NuclearResonanceModel {
    fn frequency_hz(&self, site: usize, left_excited: Option<bool>, right_excited: Option<bool>)
        -> f64;

    /// Absolute rotating-frame diagonal energy of a basis state at the given
    /// carrier, when the model can supply it. Models that do make stochastic
    /// pulse sequences compose with exact inter-sector phases: the diagonal
    /// is applied once per pulse and the per-site rotations are stripped of
    /// their free-precession part. Models that return `None` fall back to
    /// per-site phases, which fixes a per-site rotating-frame gauge.
    fn rotating_energy_hz(&self, _basis_index: usize, _carrier_hz: f64) -> Option<f64> {
        None
    }
}

/// Per-site table that ignores neighbor state.
pub struct UniformResonances(pub Vec<f64>);

impl NuclearResonanceModel for UniformResonances {
    fn frequency_hz(&self, site: usize, _left: Option<bool>, _right: Option<bool>) -> f64 {
        self.0[site]
    }

    fn rotating_energy_hz(&self, basis_index: usize, carrier_hz: f64) -> Option<f64> {
        Some(
            self.0
                .iter()
                .enumerate()
                .map(|(site, f)| {
                    let sign = if basis_index & (1 << site) == 0 { 1.0 } else { -1.0 };
                    (carrier_hz - f) * sign / 2.0
                })
                .sum(),
        )
    }
}

impl<F> NuclearResonanceModel for F
where
    F: Fn(usize, Option<bool>, Option<bool>) -> f64,
{
    fn frequency_hz(&self, site: usize, left: Option<bool>, right: Option<bool>) -> f64 {
        self(site, left, right)
    }
}

/// Electron transition frequency of a site given its own nuclear state.
pub trait ElectronResonanceModel {
    fn frequency_hz(&self, site: usize, nuclear_excited: bool) -> f64;
}

impl<F> ElectronResonanceModel for F
where
    F: Fn(usize, bool) -> f64,
{
    fn frequency_hz(&self, site: usize, nuclear_excited: bool) -> f64 {
        self(site, nuclear_excited)
    }
}

/// Off-resonant flip probability of the generalized Rabi rotation:
/// P(δ) = f_R²/(f_R²+δ²) · sin²(π √(f_R²+δ²) τ).
pub fn rabi_flip_probability(detuning_hz: f64, rabi_hz: f64, duration_s: f64) -> f64 {
    let omega_sq = rabi_hz * rabi_hz + detuning_hz * detuning_hz;
    if omega_sq == 0.0 {
        return 0.0;
    }
    let omega = omega_sq.sqrt();
    rabi_hz * rabi_hz / omega_sq * (std::f64::consts::PI * omega * duration_s).sin().powi(2)
}

/// Generalized Rabi unitary exp(−i π τ (f_R σ_x − δ σ_z)) as
/// [u00, u01, u10, u11]. The −δσ_z sign reflects that a transition above the
/// carrier leaves |1⟩ the higher rotating-frame level.
pub fn rabi_unitary(detuning_hz: f64, rabi_hz: f64, duration_s: f64) -> [Complex64; 4] {
    let omega = (rabi_hz * rabi_hz + detuning_hz * detuning_hz).sqrt();
    if omega == 0.0 {
        return [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
    }
    let half_angle = std::f64::consts::PI * omega * duration_s;
    let (sin, cos) = half_angle.sin_cos();
    let nx = rabi_hz / omega;
    let nz = -detuning_hz / omega;
    [
        Complex64::new(cos, -sin * nz),
        Complex64::new(0.0, -sin * nx),
        Complex64::new(0.0, -sin * nx),
        Complex64::new(cos, sin * nz),
    ]
}

/// Ideal-mode rotation about x by `angle`, with the projective phase
/// convention e^{iθ/2}·exp(−iθσ_x/2): a π rotation is exactly X and a 2π
/// rotation the identity.
pub fn ideal_rotation(angle_rad: f64) -> [Complex64; 4] {
    let half = angle_rad / 2.0;
    let phase = Complex64::from_polar(1.0, half);
    let (sin, cos) = half.sin_cos();
    let diag = phase * cos;
    let off = phase * Complex64::new(0.0, -sin);
    [diag, off, off, diag]
}

/// Outcome of a projective single-site measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// 0 = ground, 1 = excited.
    pub outcome: u8,
    /// Born probability of the outcome that was realized.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    amplitudes: Vec<Complex64>,
    electrons: Vec<ElectronState>,
    probe: ProbePosition,
}

impl ChainState {
    /// All nuclear spins in |0⟩, all electrons ground, probe parked away.
    pub fn new_ground(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::ChainTooLong {
                requested: qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            electrons: vec![ElectronState::ground(); qubits],
            probe: ProbePosition::Parked,
        })
    }

    /// Build from explicit amplitudes (must be 2^N long and unit norm).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let qubits = amplitudes.len().trailing_zeros() as usize;
        if amplitudes.len() != 1 << qubits || qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::ChainTooLong {
                requested: qubits,
                max: MAX_QUBITS,
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            amplitudes,
            electrons: vec![ElectronState::ground(); qubits],
            probe: ProbePosition::Parked,
        })
    }

    /// Basis product state from a bit slice (`true` = excited).
    pub fn from_basis(bits: &[bool]) -> Result<Self> {
        let mut state = Self::new_ground(bits.len())?;
        let mut index = 0usize;
        for (site, &bit) in bits.iter().enumerate() {
            if bit {
                index |= 1 << site;
            }
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn qubit_count(&self) -> usize {
        self.electrons.len()
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, basis_index: usize) -> Complex64 {
        self.amplitudes[basis_index]
    }

    pub fn electrons(&self) -> &[ElectronState] {
        &self.electrons
    }

    pub fn set_electron(&mut self, site: usize, state: ElectronState) -> Result<()> {
        self.check_site(site)?;
        self.electrons[site] = state;
        Ok(())
    }

    pub fn probe(&self) -> ProbePosition {
        self.probe
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.qubit_count() {
            return Err(Error::SiteOutOfRange {
                site,
                chain_length: self.qubit_count(),
            });
        }
        Ok(())
    }

    /// Probability that `site` is in its excited nuclear state.
    pub fn excited_probability(&self, site: usize) -> Result<f64> {
        self.check_site(site)?;
        let mask = 1usize << site;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Expectation value of 2·I^z at `site`, in [−1, 1] (+1 for |0⟩).
    pub fn z_polarization(&self, site: usize) -> Result<f64> {
        Ok(1.0 - 2.0 * self.excited_probability(site)?)
    }

    /// Definite nuclear value if the site is (numerically) in a basis state.
    pub fn definite_bit(&self, site: usize) -> Result<Option<bool>> {
        let p = self.excited_probability(site)?;
        if p < 1e-9 {
            Ok(Some(false))
        } else if p > 1.0 - 1e-9 {
            Ok(Some(true))
        } else {
            Ok(None)
        }
    }

    /// Updates the probe position. Quantum amplitudes are untouched; callers
    /// rebuild resonance maps against the new position.
    pub fn move_probe(&mut self, position: ProbePosition) -> Result<()> {
        if let ProbePosition::AtSite(site) = position {
            self.check_site(site)?;
        }
        self.probe = position;
        Ok(())
    }

    /// Applies a pulse. Nuclear pulses act on the amplitudes through
    /// `nuclear` (per neighbor-state sector, since the chain Hamiltonian is
    /// diagonal); electron pulses act on the classical register through
    /// `electron`. Exactly one model matching the pulse kind must be given.
    pub fn apply_pulse(
        &mut self,
        pulse: &PulseSpec,
        nuclear: Option<&dyn NuclearResonanceModel>,
        electron: Option<&dyn ElectronResonanceModel>,
        mode: PulseMode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<()> {
        pulse.validate()?;
        match (pulse.kind, nuclear, electron) {
            (PulseKind::Nuclear, Some(model), None) => self.apply_nuclear_pulse(pulse, model, mode),
            (PulseKind::Electron, None, Some(model)) => {
                self.apply_electron_pulse(pulse, model, mode, rng)
            }
            _ => Err(Error::PulseKindMismatch),
        }
    }

    /// Rotates every nuclear two-level pair whose sector detuning the model
    /// supplies. The chain Hamiltonian is diagonal, so neighbor-state sectors
    /// are well defined and pairs on distinct sites commute for exact sector
    /// addressing.
    ///
    /// In stochastic mode, when the model exposes absolute rotating-frame
    /// energies, the pulse is applied as one exact diagonal phase pass plus
    /// per-site mixing unitaries with the free-precession part removed;
    /// sequences of pulses then carry the correct relative phases between
    /// neighbor sectors (shared coupling energies are counted once, not once
    /// per site).
    pub fn apply_nuclear_pulse(
        &mut self,
        pulse: &PulseSpec,
        model: &dyn NuclearResonanceModel,
        mode: PulseMode,
    ) -> Result<()> {
        pulse.validate()?;
        if pulse.kind != PulseKind::Nuclear {
            return Err(Error::PulseKindMismatch);
        }
        let n = self.qubit_count();

        let exact_phases = mode == PulseMode::Stochastic
            && model.rotating_energy_hz(0, pulse.carrier_hz).is_some();

        for site in 0..n {
            if matches!(self.electrons[site], ElectronState::Conditional { .. }) {
                // A nuclear drive cannot coherently flip a nucleus whose
                // electron is correlated with it: the two branches belong to
                // different electron manifolds.
                let probably_resonant = {
                    let f = model.frequency_hz(site, Some(false), Some(false));
                    (f - pulse.carrier_hz).abs() < 100.0 * pulse.rabi_hz
                };
                if probably_resonant {
                    return Err(Error::ConditionedElectronAtSite { site });
                }
                continue;
            }
            let mask = 1usize << site;
            for lower in 0..self.dimension() {
                if lower & mask != 0 {
                    continue;
                }
                let upper = lower | mask;
                let left = if site > 0 {
                    Some(lower & (1 << (site - 1)) != 0)
                } else {
                    None
                };
                let right = if site + 1 < n {
                    Some(lower & (1 << (site + 1)) != 0)
                } else {
                    None
                };
                let detuning = model.frequency_hz(site, left, right) - pulse.carrier_hz;
                let u = match mode {
                    PulseMode::Ideal => {
                        if detuning.abs() < pulse.rabi_hz {
                            ideal_rotation(pulse.nominal_angle_rad)
                        } else {
                            continue;
                        }
                    }
                    PulseMode::Stochastic => {
                        let mut u = rabi_unitary(detuning, pulse.rabi_hz, pulse.duration_s);
                        if exact_phases {
                            // strip the pair's free precession: the diagonal
                            // pass above already carries it
                            let half = std::f64::consts::PI * detuning * pulse.duration_s;
                            let unwind_lower = Complex64::from_polar(1.0, -half);
                            let unwind_upper = Complex64::from_polar(1.0, half);
                            u[0] *= unwind_lower;
                            u[1] *= unwind_lower;
                            u[2] *= unwind_upper;
                            u[3] *= unwind_upper;
                        }
                        u
                    }
                };
                let a = self.amplitudes[lower];
                let b = self.amplitudes[upper];
                self.amplitudes[lower] = u[0] * a + u[1] * b;
                self.amplitudes[upper] = u[2] * a + u[3] * b;
            }
        }
        if exact_phases {
            // the exact diagonal evolution, applied once, after the mixing
            for (index, amplitude) in self.amplitudes.iter_mut().enumerate() {
                let energy = model
                    .rotating_energy_hz(index, pulse.carrier_hz)
                    .expect("model supplied an energy for index 0");
                *amplitude *= Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * energy * pulse.duration_s,
                );
            }
        }
        debug_assert!((self.norm_sqr() - 1.0).abs() < 1e-9);
        Ok(())
    }

    /// Flips classical electron bits. In `Ideal` mode a site flips on the
    /// nuclear branches for which |δ| < f_R — if the nucleus is superposed
    /// and only one branch is resonant, the electron becomes conditional. In
    /// `Stochastic` mode flips are sampled from the Rabi probability; for a
    /// superposed nucleus the branch probabilities are averaged, which
    /// treats the rare off-resonant leak as a classical (decohering) event.
    pub fn apply_electron_pulse(
        &mut self,
        pulse: &PulseSpec,
        model: &dyn ElectronResonanceModel,
        mode: PulseMode,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<()> {
        pulse.validate()?;
        if pulse.kind != PulseKind::Electron {
            return Err(Error::PulseKindMismatch);
        }
        for site in 0..self.qubit_count() {
            let delta_ground = model.frequency_hz(site, false) - pulse.carrier_hz;
            let delta_excited = model.frequency_hz(site, true) - pulse.carrier_hz;
            match mode {
                PulseMode::Ideal => {
                    let flips_ground = delta_ground.abs() < pulse.rabi_hz;
                    let flips_excited = delta_excited.abs() < pulse.rabi_hz;
                    self.ideal_electron_update(site, flips_ground, flips_excited)?;
                }
                PulseMode::Stochastic => {
                    let p_ground =
                        rabi_flip_probability(delta_ground, pulse.rabi_hz, pulse.duration_s);
                    let p_excited =
                        rabi_flip_probability(delta_excited, pulse.rabi_hz, pulse.duration_s);
                    let probability = match self.definite_bit(site)? {
                        Some(false) => p_ground,
                        Some(true) => p_excited,
                        None => {
                            if matches!(self.electrons[site], ElectronState::Conditional { .. }) {
                                return Err(Error::SuperposedElectronTarget { site });
                            }
                            let p1 = self.excited_probability(site)?;
                            (1.0 - p1) * p_ground + p1 * p_excited
                        }
                    };
                    let rng = rng.as_deref_mut().ok_or(Error::ElectronPulseNeedsRng)?;
                    if rng.random::<f64>() < probability {
                        match self.electrons[site] {
                            ElectronState::Definite(e) => {
                                self.electrons[site] = ElectronState::Definite(!e)
                            }
                            ElectronState::Conditional { .. } => {
                                return Err(Error::SuperposedElectronTarget { site })
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn ideal_electron_update(
        &mut self,
        site: usize,
        flips_ground: bool,
        flips_excited: bool,
    ) -> Result<()> {
        if !flips_ground && !flips_excited {
            return Ok(());
        }
        let nuclear = self.definite_bit(site)?;
        self.electrons[site] = match (self.electrons[site], flips_ground, flips_excited) {
            (ElectronState::Definite(e), true, true) => ElectronState::Definite(!e),
            (ElectronState::Definite(e), fg, _) => match nuclear {
                Some(bit) => {
                    let flips = if bit { flips_excited } else { fg };
                    ElectronState::Definite(e ^ flips)
                }
                None => ElectronState::Conditional {
                    base_excited: e,
                    flipped_when_excited: flips_excited,
                },
            },
            (
                ElectronState::Conditional {
                    base_excited,
                    flipped_when_excited,
                },
                true,
                true,
            ) => ElectronState::Conditional {
                base_excited: !base_excited,
                flipped_when_excited,
            },
            (
                ElectronState::Conditional {
                    base_excited,
                    flipped_when_excited,
                },
                _,
                fe,
            ) => {
                // A second single-branch flip always resolves the electron:
                // same branch restores the base, the opposite branch
                // completes the flip on both branches.
                if fe == flipped_when_excited {
                    ElectronState::Definite(base_excited)
                } else {
                    ElectronState::Definite(!base_excited)
                }
            }
        };
        Ok(())
    }

    /// Born-rule projective measurement of one site's nuclear spin.
    pub fn project_measure(&mut self, site: usize, rng: &mut ChaCha8Rng) -> Result<Measurement> {
        self.check_site(site)?;
        let mask = 1usize << site;
        let p_excited = self.excited_probability(site)?;
        let draw: f64 = rng.random();
        let outcome_excited = draw < p_excited;
        let probability = if outcome_excited {
            p_excited
        } else {
            1.0 - p_excited
        };
        let scale = 1.0 / probability.sqrt();
        for (index, amp) in self.amplitudes.iter_mut().enumerate() {
            if (index & mask != 0) == outcome_excited {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        // a conditional electron collapses along with its nucleus
        if let ElectronState::Conditional {
            base_excited,
            flipped_when_excited,
        } = self.electrons[site]
        {
            self.electrons[site] =
                ElectronState::Definite(base_excited ^ (outcome_excited == flipped_when_excited));
        }
        Ok(Measurement {
            outcome: outcome_excited as u8,
            probability,
        })
    }

    /// One snapshot line per basis state with |amplitude| > 1e-12, then a
    /// summary line with the electron register and probe position.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for (index, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm() > 1e-12 {
                writeln!(
                    out,
                    "{}",
                    serde_json::json!({ "basis": index, "re": amp.re, "im": amp.im })
                )?;
            }
        }
        let electrons: Vec<u8> = self
            .electrons
            .iter()
            .map(|e| match e {
                ElectronState::Definite(false) => 0,
                ElectronState::Definite(true) => 1,
                ElectronState::Conditional { .. } => 2,
            })
            .collect();
        let probe = match self.probe {
            ProbePosition::Parked => serde_json::Value::Null,
            ProbePosition::AtSite(s) => serde_json::json!(s),
        };
        writeln!(
            out,
            "{}",
            serde_json::json!({ "electrons": electrons, "probe": probe })
        )?;
        Ok(())
    }
}
