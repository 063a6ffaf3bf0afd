//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid spin species: {0}")]
    InvalidSpecies(String),

    #[error("invalid cantilever parameters: {0}")]
    InvalidCantilever(String),

    #[error("field point at r = {distance_m} m lies inside the probe sphere (R = {radius_m} m)")]
    PointInsideProbe { distance_m: f64, radius_m: f64 },

    #[error("local field must be positive, got {0} T")]
    NonPositiveField(f64),

    #[error(
        "detection threshold {target_m} m is not below the stationary amplitude {stationary_m} m"
    )]
    UnreachableThreshold { target_m: f64, stationary_m: f64 },

    #[error("time step {dt_s} s too coarse; need at most {max_dt_s} s")]
    StepTooCoarse { dt_s: f64, max_dt_s: f64 },

    #[error("site {site} out of range for chain of length {chain_length}")]
    SiteOutOfRange { site: usize, chain_length: usize },

    #[error("chain of {requested} qubits exceeds the {max}-qubit cap")]
    ChainTooLong { requested: usize, max: usize },

    #[error("state vector norm {0} is not 1")]
    NotNormalized(f64),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("pulse kind does not match the supplied resonance model")]
    PulseKindMismatch,

    #[error("stochastic electron pulse needs a random-number generator")]
    ElectronPulseNeedsRng,

    #[error("stochastic electron pulse on site {site} whose nuclear spin is in superposition")]
    SuperposedElectronTarget { site: usize },

    #[error("nuclear pulse on site {site} whose electron is correlated with its nucleus")]
    ConditionedElectronAtSite { site: usize },

    #[error("electron register at site {site} must be in the ground state")]
    ElectronNotGround { site: usize },

    #[error("probe must be parked at site {expected} for this step")]
    ProbeNotAtSite { expected: usize },

    #[error("detuning must be nonzero for the 2\u{3c0}k construction")]
    ZeroDetuning,

    #[error("rotation index k must be at least 1")]
    InvalidRotationIndex,

    #[error("two-qubit gate operands {control} and {target} are not nearest neighbors")]
    NonAdjacentGate { control: usize, target: usize },

    #[error("circuit parse error at line {line}: {message}")]
    CircuitParse { line: usize, message: String },

    #[error("Ising chain specification required for ising-array mode")]
    IsingSpecRequired,

    #[error("Ising couplings list has length {couplings} but the chain has {sites} sites")]
    IsingLengthMismatch { couplings: usize, sites: usize },

    #[error("operation not available in {0} mode")]
    ModeMismatch(String),

    #[error("no feasible Rabi frequency: {0}")]
    NoFeasibleRabi(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
