//! Physical constants and unit conversions.
//!
//! Stark parameters are stored in μm²/V² while fields cross the API boundary
//! in V/cm, so every quadratic term carries the (V/cm → V/μm)² conversion.
//! Energies are expressed throughout as frequencies (Hz).

/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON_J_PER_T: f64 = 9.274_010_078_3e-24;

/// Planck constant, J·s (exact in the 2019 SI).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Bohr magneton as a frequency-to-field ratio, Hz/T.
pub const BOHR_MAGNETON_HZ_PER_T: f64 = BOHR_MAGNETON_J_PER_T / PLANCK_J_S;

/// One V/cm expressed in V/μm.
pub const V_PER_CM_TO_V_PER_UM: f64 = 1e-4;
