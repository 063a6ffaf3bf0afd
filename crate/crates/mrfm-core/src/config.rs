//! TOML run configuration. Sections mirror the library types; lengths accept
//! a unit suffix ("50 A", "10 nm", "1.5e-8 m") or a bare number in meters.
//! Unknown keys are rejected.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::cantilever::CantileverParams;
use crate::consts::ANGSTROM;
use crate::error::{Error, Result};
use crate::magnetostatics::DeviceGeometry;
use crate::protocol::{DetectionSettings, Device, PulseDefaults};
use crate::spectroscopy::{IsingChainSpec, SpinSpecies};
use crate::validator::ValidatorSettings;

/// A length in meters, deserialized from `"50 A"` / `"10 nm"` / `"1e-8 m"`
/// or a bare number in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Length(pub f64);

pub fn parse_length(text: &str) -> Result<f64> {
    let trimmed = text.trim();
    // 'e'/'E' belong to exponents, every other letter starts the unit
    let split = trimmed.find(|c: char| c.is_alphabetic() && c != 'e' && c != 'E');
    let (number, unit) = match split {
        Some(at) => trimmed.split_at(at),
        None => (trimmed, "m"),
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("bad length '{text}': {e}")))?;
    let scale = match unit.trim() {
        "m" | "" => 1.0,
        "nm" => 1.0e-9,
        "um" => 1.0e-6,
        "A" | "angstrom" | "Å" => ANGSTROM,
        other => return Err(Error::Config(format!("unknown length unit '{other}'"))),
    };
    Ok(value * scale)
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(m) => Ok(Length(m)),
            Raw::Text(s) => parse_length(&s).map(Length).map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub probe_radius: Length,
    pub probe_gap: Length,
    pub atom_spacing: Length,
    pub probe_magnetization_t: f64,
    pub external_field_t: f64,
    pub temperature_k: f64,
    pub chain_length: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub gamma_e_hz_per_t: f64,
    pub gamma_n_hz_per_t: f64,
    pub hyperfine_hz: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CantileverSection {
    pub spring_constant_n_per_m: f64,
    pub resonance_hz: f64,
    pub quality_factor: f64,
    pub thermal_amplitude: Length,
    pub thermal_reference_k: f64,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub electron_rabi_hz: Option<f64>,
    pub nuclear_rabi_hz: Option<f64>,
    pub cn_rabi_hz: Option<f64>,
    pub ising_rotation_rabi_hz: Option<f64>,
    pub move_latency_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorSection {
    pub electron_lifetime_s: Option<f64>,
    pub margin: Option<f64>,
    pub thermal_excitation_bound: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub noise: Option<bool>,
    pub threshold_factor: Option<f64>,
    pub window_tau_factor: Option<f64>,
    pub steps_per_period: Option<u32>,
    pub trace_pool: Option<u32>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    pub site_frequencies_hz: Vec<f64>,
    pub couplings_hz: Vec<f64>,
    /// Defaults to the magic tilt acos(1/sqrt(3)).
    pub tilt_angle_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub chains: Option<usize>,
    /// Per-site excitation probability of the initial statistical mixture;
    /// a single value applies to every site.
    pub excitation_probability: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    SingleSpin,
    IsingArray,
    StatisticalEnsemble,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: RunMode,
    pub seed: u64,
    /// Pulse semantics: threshold-exact ("ideal") or sampled physical
    /// ("stochastic").
    pub pulse_mode: Option<String>,
    /// Initial nuclear register as a bit string, site 0 leftmost.
    pub initial_nuclear: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceSection,
    pub species: SpeciesSection,
    pub cantilever: CantileverSection,
    #[serde(default)]
    pub pulses: PulseSection,
    #[serde(default)]
    pub validator: ValidatorSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    pub ising: Option<IsingSection>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // validate every owned section eagerly so failures surface at load
        config.device()?;
        config.species()?;
        config.cantilever()?;
        config.ising_spec()?;
        if let Some(probabilities) = &config.ensemble.excitation_probability {
            if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Config(
                    "ensemble.excitation_probability values must lie in [0, 1]".into(),
                ));
            }
        }
        config.pulse_mode()?;
        config.initial_bits()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn device(&self) -> Result<DeviceGeometry> {
        DeviceGeometry::new(
            self.device.probe_radius.0,
            self.device.probe_gap.0,
            self.device.atom_spacing.0,
            self.device.probe_magnetization_t,
            self.device.external_field_t,
            self.device.temperature_k,
            self.device.chain_length,
        )
    }

    pub fn species(&self) -> Result<SpinSpecies> {
        SpinSpecies::new(
            self.species.gamma_e_hz_per_t,
            self.species.gamma_n_hz_per_t,
            self.species.hyperfine_hz,
        )
    }

    pub fn cantilever(&self) -> Result<CantileverParams> {
        CantileverParams::new(
            self.cantilever.spring_constant_n_per_m,
            self.cantilever.resonance_hz,
            self.cantilever.quality_factor,
            self.cantilever.thermal_amplitude.0,
            self.cantilever.thermal_reference_k,
        )
    }

    pub fn pulse_defaults(&self) -> PulseDefaults {
        let defaults = PulseDefaults::default();
        PulseDefaults {
            electron_rabi_hz: self
                .pulses
                .electron_rabi_hz
                .unwrap_or(defaults.electron_rabi_hz),
            nuclear_rabi_hz: self
                .pulses
                .nuclear_rabi_hz
                .unwrap_or(defaults.nuclear_rabi_hz),
            cn_rabi_hz: self.pulses.cn_rabi_hz,
            ising_rotation_rabi_hz: self.pulses.ising_rotation_rabi_hz,
            move_latency_s: self.pulses.move_latency_s.unwrap_or(0.0),
        }
    }

    pub fn build_device(&self) -> Result<Device> {
        Ok(Device {
            geometry: self.device()?,
            species: self.species()?,
            cantilever: self.cantilever()?,
            pulses: self.pulse_defaults(),
        })
    }

    pub fn validator_settings(&self) -> ValidatorSettings {
        let defaults = ValidatorSettings::default();
        ValidatorSettings {
            electron_lifetime_s: self
                .validator
                .electron_lifetime_s
                .unwrap_or(defaults.electron_lifetime_s),
            margin: self.validator.margin.unwrap_or(defaults.margin),
            thermal_excitation_bound: self
                .validator
                .thermal_excitation_bound
                .unwrap_or(defaults.thermal_excitation_bound),
        }
    }

    pub fn detection_settings(&self) -> DetectionSettings {
        let defaults = DetectionSettings::default();
        DetectionSettings {
            threshold_factor: self
                .measurement
                .threshold_factor
                .unwrap_or(defaults.threshold_factor),
            window_tau_factor: self
                .measurement
                .window_tau_factor
                .unwrap_or(defaults.window_tau_factor),
            noise: self.measurement.noise.unwrap_or(defaults.noise),
            steps_per_period: self
                .measurement
                .steps_per_period
                .unwrap_or(defaults.steps_per_period),
            trace_pool: self.measurement.trace_pool,
        }
    }

    pub fn ising_spec(&self) -> Result<Option<IsingChainSpec>> {
        match &self.ising {
            None => Ok(None),
            Some(section) => {
                let tilt = section
                    .tilt_angle_rad
                    .unwrap_or_else(crate::spectroscopy::magic_tilt_rad);
                Ok(Some(IsingChainSpec::new(
                    section.site_frequencies_hz.clone(),
                    section.couplings_hz.clone(),
                    tilt,
                )?))
            }
        }
    }

    pub fn pulse_mode(&self) -> Result<crate::chain::PulseMode> {
        match self.run.pulse_mode.as_deref() {
            None | Some("ideal") => Ok(crate::chain::PulseMode::Ideal),
            Some("stochastic") => Ok(crate::chain::PulseMode::Stochastic),
            Some(other) => Err(Error::Config(format!(
                "run.pulse_mode must be 'ideal' or 'stochastic', got '{other}'"
            ))),
        }
    }

    /// Initial nuclear register; defaults to all ground.
    pub fn initial_bits(&self) -> Result<Vec<bool>> {
        match &self.run.initial_nuclear {
            None => Ok(vec![false; self.device.chain_length]),
            Some(text) => {
                if text.len() != self.device.chain_length {
                    return Err(Error::Config(format!(
                        "run.initial_nuclear has {} bits but the chain has {} sites",
                        text.len(),
                        self.device.chain_length
                    )));
                }
                text.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Config(format!(
                            "run.initial_nuclear may only contain 0/1, got '{other}'"
                        ))),
                    })
                    .collect()
            }
        }
    }

    pub fn ensemble_chains(&self) -> usize {
        self.ensemble.chains.unwrap_or(1000)
    }

    pub fn excitation_probabilities(&self) -> Vec<f64> {
        match &self.ensemble.excitation_probability {
            Some(list) if list.len() == 1 => vec![list[0]; self.device.chain_length],
            Some(list) => list.clone(),
            None => vec![0.0; self.device.chain_length],
        }
    }
}
