//! Donor species: identity, isotropic g-factor, nuclear spin, and the
//! hyperfine coupling constant.
//!
//! The hyperfine constant A for donors in germanium is a required input with
//! no default; constructors leave it unset and evaluation paths that need it
//! fail loudly rather than inventing a value.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Donor identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Species {
    As75,
    P31,
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::As75 => f.write_str("As75"),
            Species::P31 => f.write_str("P31"),
        }
    }
}

/// Nuclear spin quantum number, stored doubled so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NuclearSpin(u8);

impl NuclearSpin {
    /// Builds from twice the spin (3 for I = 3/2, 1 for I = 1/2, 0 for I = 0).
    pub fn from_doubled(doubled: u8) -> Self {
        Self(doubled)
    }

    pub fn doubled(&self) -> u8 {
        self.0
    }

    pub fn value(&self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Number of hyperfine lines, 2I + 1.
    pub fn multiplicity(&self) -> usize {
        usize::from(self.0) + 1
    }

    /// Projections {-I, -I+1, ..., +I} in ascending order.
    pub fn projections(&self) -> Vec<f64> {
        let d = i32::from(self.0);
        (0..=d).map(|k| f64::from(2 * k - d) / 2.0).collect()
    }

    /// Checks that m is one of the allowed projections.
    pub fn allows(&self, m: f64) -> bool {
        let doubled = 2.0 * m;
        if (doubled - doubled.round()).abs() > 1e-9 {
            return false;
        }
        let d = doubled.round() as i64;
        let spin = i64::from(self.0);
        d.abs() <= spin && (d - spin) % 2 == 0
    }
}

/// A donor species with the constants needed by the shift model.
#[derive(Debug, Clone, PartialEq)]
pub struct DonorSpecies {
    pub species: Species,
    /// Isotropic zero-field g-factor.
    pub g0: f64,
    pub nuclear_spin: NuclearSpin,
    /// Hyperfine coupling constant in Hz; `None` until configured.
    pub hyperfine_a_hz: Option<f64>,
}

impl DonorSpecies {
    pub fn new(
        species: Species,
        g0: f64,
        nuclear_spin: NuclearSpin,
        hyperfine_a_hz: Option<f64>,
    ) -> Result<Self> {
        if g0 <= 0.0 || !g0.is_finite() {
            return Err(Error::InvalidDonor(format!(
                "g0 must be positive, got {g0}"
            )));
        }
        if let Some(a) = hyperfine_a_hz {
            if a <= 0.0 || !a.is_finite() {
                return Err(Error::InvalidDonor(format!(
                    "hyperfine A must be positive, got {a}"
                )));
            }
        }
        Ok(Self {
            species,
            g0,
            nuclear_spin,
            hyperfine_a_hz,
        })
    }

    /// ⁷⁵As in germanium: g0 = 1.57, I = 3/2, A unset.
    pub fn arsenic() -> Self {
        Self {
            species: Species::As75,
            g0: 1.57,
            nuclear_spin: NuclearSpin::from_doubled(3),
            hyperfine_a_hz: None,
        }
    }

    /// ³¹P in germanium: g0 = 1.5631, I = 1/2, A unset.
    pub fn phosphorus() -> Self {
        Self {
            species: Species::P31,
            g0: 1.5631,
            nuclear_spin: NuclearSpin::from_doubled(1),
            hyperfine_a_hz: None,
        }
    }

    pub fn with_hyperfine_a(mut self, a_hz: f64) -> Result<Self> {
        if a_hz <= 0.0 || !a_hz.is_finite() {
            return Err(Error::InvalidDonor(format!(
                "hyperfine A must be positive, got {a_hz}"
            )));
        }
        self.hyperfine_a_hz = Some(a_hz);
        Ok(self)
    }

    pub fn with_g0(mut self, g0: f64) -> Result<Self> {
        if g0 <= 0.0 || !g0.is_finite() {
            return Err(Error::InvalidDonor(format!(
                "g0 must be positive, got {g0}"
            )));
        }
        self.g0 = g0;
        Ok(self)
    }

    /// The donor's hyperfine line labels {-I, ..., +I}.
    pub fn hyperfine_projections(&self) -> Vec<f64> {
        self.nuclear_spin.projections()
    }

    pub fn validate_projection(&self, m: f64) -> Result<()> {
        if self.nuclear_spin.allows(m) {
            Ok(())
        } else {
            Err(Error::InvalidProjection {
                m_i: m,
                spin: self.nuclear_spin.value(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arsenic_has_four_lines() {
        let d = DonorSpecies::arsenic();
        assert_eq!(d.hyperfine_projections(), vec![-1.5, -0.5, 0.5, 1.5]);
    }

    #[test]
    fn phosphorus_has_two_lines() {
        let d = DonorSpecies::phosphorus();
        assert_eq!(d.hyperfine_projections(), vec![-0.5, 0.5]);
    }

    #[test]
    fn spin_zero_has_single_line() {
        let s = NuclearSpin::from_doubled(0);
        assert_eq!(s.projections(), vec![0.0]);
        assert!(s.allows(0.0));
        assert!(!s.allows(0.5));
    }

    #[test]
    fn projection_validation() {
        let d = DonorSpecies::arsenic();
        assert!(d.validate_projection(1.5).is_ok());
        assert!(d.validate_projection(-0.5).is_ok());
        // Integer projections do not occur for half-integer spin.
        assert!(matches!(
            d.validate_projection(1.0),
            Err(Error::InvalidProjection { .. })
        ));
        assert!(matches!(
            d.validate_projection(2.5),
            Err(Error::InvalidProjection { .. })
        ));
    }

    #[test]
    fn hyperfine_constant_must_be_positive() {
        assert!(DonorSpecies::arsenic().with_hyperfine_a(0.0).is_err());
        assert!(DonorSpecies::arsenic().with_hyperfine_a(1.0e8).is_ok());
    }
}
