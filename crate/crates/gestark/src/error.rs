use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Miller indices must not all be zero")]
    ZeroDirection,

    #[error("vector has norm {norm}, expected unit length")]
    NotUnitLength { norm: f64 },

    #[error("valley weights must lie in [0, 1] and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("g-tensor must be symmetric (max asymmetry {asymmetry:e})")]
    AsymmetricTensor { asymmetry: f64 },

    #[error(
        "invalid valley g values: g_perp = {g_perp}, g_par = {g_par} (need g_perp >= g_par > 0)"
    )]
    InvalidGValues { g_perp: f64, g_par: f64 },

    #[error("invalid donor definition: {0}")]
    InvalidDonor(String),

    #[error("nuclear projection {m_i} is not an allowed line for spin {spin}")]
    InvalidProjection { m_i: f64, spin: f64 },

    #[error("spin-orbit parameter eta_g is absent; it cannot be treated as zero")]
    MissingSpinOrbitParameter,

    #[error("hyperfine parameter eta_A is absent; per-line shifts require it (use the line-averaged mode)")]
    MissingHyperfineParameter,

    #[error("donor hyperfine constant A is not set; it is a required input with no default")]
    MissingHyperfineConstant,

    #[error("no Stark entry for donor {donor}, E {e_direction} {geometry} B {b_direction}")]
    UnknownOrientation {
        donor: String,
        e_direction: String,
        geometry: String,
        b_direction: String,
    },

    #[error("Stark entry for donor {donor}, E {e_direction} {geometry} B {b_direction} has no {requested} values; absence is not zero")]
    AbsentParameter {
        donor: String,
        e_direction: String,
        geometry: String,
        b_direction: String,
        requested: String,
    },

    #[error("invalid field configuration: {0}")]
    InvalidFieldConfiguration(String),

    #[error("invalid pulse sequence: {0}")]
    InvalidPulseSequence(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("field sweep is empty")]
    EmptySweep,

    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error(
        "row {row} has non-positive uncertainty; inverse-variance weighting requires sigma > 0"
    )]
    NonPositiveSigma { row: usize },

    #[error("{rows} rows leave no degrees of freedom for {params} parameters")]
    InsufficientDegreesOfFreedom { rows: usize, params: usize },

    #[error("line m_i = {m_i} at E = {e_field} V/cm has no opposite-sign partner")]
    UnpairedLines { e_field: f64, m_i: f64 },

    #[error("duplicate row for m_i = {m_i} at E = {e_field} V/cm")]
    DuplicateRow { e_field: f64, m_i: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("linewidth must be positive (got {value})")]
    InvalidLinewidth { value: f64 },

    #[error("repopulation calibration failed: {0}")]
    CalibrationFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
