//! Registry of Stark parameters keyed by donor and field orientation.
//!
//! Ships with the measured rows and their theory counterparts, plus one
//! inferred entry (P31, E ∥ B ∥ [111]) back-computed from a quoted shift
//! rather than tabulated directly; lookups flag it as such. Missing cells
//! are absent values — a lookup never turns absence into zero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::donor::{DonorSpecies, NuclearSpin, Species};
use crate::error::Error;
use crate::geometry::{classify_geometry, FieldGeometry, MillerDirection};
use crate::gtensor::ValleyGTensor;
use crate::stark::{ParameterSource, StarkParameters};
use crate::Result;

/// Per-donor constants stored alongside the Stark entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DonorRecord {
    /// Isotropic zero-field g-factor.
    pub g0: f64,
    /// Twice the nuclear spin quantum number.
    pub nuclear_spin_doubled: u8,
    /// Single-valley g perpendicular to the valley axis.
    pub g_perp: f64,
    /// Single-valley g parallel to the valley axis.
    pub g_par: f64,
}

/// One orientation row. Absent fields are unmeasured cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryEntry {
    pub donor: Species,
    pub e_direction: MillerDirection,
    pub geometry: FieldGeometry,
    pub b_direction: MillerDirection,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_a_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_a_theory: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_g_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_g_theory: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_g_inferred: Option<f64>,
}

/// Immutable registry of donors and Stark parameter rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkRegistry {
    pub donors: BTreeMap<Species, DonorRecord>,
    pub entries: Vec<RegistryEntry>,
}

const BUNDLED: &str = include_str!("../data/stark_registry.json");

impl StarkRegistry {
    /// The registry shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled registry is valid")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let registry: StarkRegistry = serde_json::from_str(json)?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (species, record) in &self.donors {
            if record.g0 <= 0.0
                || record.g_par <= 0.0
                || record.g_perp < record.g_par
                || record.g0.is_nan()
            {
                return Err(Error::InvalidDonor(format!(
                    "registry record for {species} has invalid g values"
                )));
            }
        }
        for entry in &self.entries {
            if !self.donors.contains_key(&entry.donor) {
                return Err(Error::InvalidDonor(format!(
                    "registry entry references unknown donor {}",
                    entry.donor
                )));
            }
            let derived = classify_geometry(&entry.e_direction, &entry.b_direction);
            if derived != entry.geometry {
                return Err(Error::InvalidFieldConfiguration(format!(
                    "registry entry {} E {} B {} is tagged {} but the directions are {}",
                    entry.donor, entry.e_direction, entry.b_direction, entry.geometry, derived
                )));
            }
            let any = entry.eta_a_exp.is_some()
                || entry.eta_a_theory.is_some()
                || entry.eta_g_exp.is_some()
                || entry.eta_g_theory.is_some()
                || entry.eta_g_inferred.is_some();
            if !any {
                return Err(Error::InvalidDonor(format!(
                    "registry entry {} E {} B {} carries no values",
                    entry.donor, entry.e_direction, entry.b_direction
                )));
            }
        }
        Ok(())
    }

    /// Finds the row for (donor, E, B). Directions match up to scale and
    /// overall sign: the axes are headless and the shift is even in E.
    pub fn entry(
        &self,
        donor: Species,
        e_direction: &MillerDirection,
        b_direction: &MillerDirection,
    ) -> Option<&RegistryEntry> {
        let e_key = e_direction.axis_key();
        let b_key = b_direction.axis_key();
        self.entries.iter().find(|entry| {
            entry.donor == donor
                && entry.e_direction.axis_key() == e_key
                && entry.b_direction.axis_key() == b_key
        })
    }

    /// Stark parameters for an orientation row from the requested source.
    ///
    /// `UnknownOrientation` if no row exists; `AbsentParameter` if the row
    /// exists but carries no values from that source.
    pub fn lookup(
        &self,
        donor: Species,
        e_direction: &MillerDirection,
        b_direction: &MillerDirection,
        source: ParameterSource,
    ) -> Result<StarkParameters> {
        let entry = self.entry(donor, e_direction, b_direction).ok_or_else(|| {
            Error::UnknownOrientation {
                donor: donor.to_string(),
                e_direction: e_direction.to_string(),
                geometry: classify_geometry(e_direction, b_direction).to_string(),
                b_direction: b_direction.to_string(),
            }
        })?;
        let (eta_g, eta_a) = match source {
            ParameterSource::Experiment => (entry.eta_g_exp, entry.eta_a_exp),
            ParameterSource::Theory => (entry.eta_g_theory, entry.eta_a_theory),
            ParameterSource::Inferred => (entry.eta_g_inferred, None),
            ParameterSource::Explicit => (None, None),
        };
        if eta_g.is_none() && eta_a.is_none() {
            return Err(Error::AbsentParameter {
                donor: donor.to_string(),
                e_direction: entry.e_direction.to_string(),
                geometry: entry.geometry.to_string(),
                b_direction: entry.b_direction.to_string(),
                requested: source.to_string(),
            });
        }
        StarkParameters::new(eta_g, eta_a, source)
    }

    pub fn donor_record(&self, species: Species) -> Result<&DonorRecord> {
        self.donors
            .get(&species)
            .ok_or_else(|| Error::InvalidDonor(format!("no registry record for {species}")))
    }

    /// Builds the donor with registry g0 and spin; the hyperfine constant
    /// stays unset because the registry does not carry one.
    pub fn donor_species(&self, species: Species) -> Result<DonorSpecies> {
        let record = self.donor_record(species)?;
        DonorSpecies::new(
            species,
            record.g0,
            NuclearSpin::from_doubled(record.nuclear_spin_doubled),
            None,
        )
    }

    /// Single-valley g values for the donor.
    pub fn valley_g(&self, species: Species) -> Result<ValleyGTensor> {
        let record = self.donor_record(species)?;
        ValleyGTensor::new(record.g_perp, record.g_par)
    }

    /// Experimental rows only (those with at least one measured value).
    pub fn experimental_entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.entries
            .iter()
            .filter(|e| e.eta_g_exp.is_some() || e.eta_a_exp.is_some())
    }
}
