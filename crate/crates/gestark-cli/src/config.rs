//! Run configuration: a single JSON file describing the donor, the fields,
//! the Stark parameters, and the optional simulation/fit blocks.
//!
//! The schema is strict — unknown keys are rejected — and every resolution
//! error points at the offending block.

use std::path::Path;

use serde::{Deserialize, Serialize};

use gestark::constants::BOHR_MAGNETON_HZ_PER_T;
use gestark::donor::{DonorSpecies, Species};
use gestark::experiment::{NoiseModel, PulseSequence};
use gestark::fit::{FitMode, Weighting};
use gestark::geometry::MillerDirection;
use gestark::gtensor::{calibrate_kappa, RepopulationModel, ValleyGTensor};
use gestark::registry::StarkRegistry;
use gestark::stark::{
    FieldConfiguration, ParameterSource, Polarity, StarkParameters, StrainConfiguration,
};
use gestark::tunability::{DEFAULT_E_MAX_V_PER_CM, DEFAULT_LINEWIDTH_HZ};

use crate::{CliError, CliResult};

/// Reference field for calibrating the valley-repopulation coupling when
/// the configuration does not pin one, V/cm.
pub const KAPPA_CALIBRATION_FIELD_V_PER_CM: f64 = 50.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DonorBlock {
    pub species: Species,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hyperfine_a_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub e_direction: MillerDirection,
    pub b_direction: MillerDirection,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e_magnitude_v_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e_sweep_v_per_cm: Option<Vec<f64>>,
    #[serde(default = "default_polarity")]
    pub polarity: Polarity,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f0_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b0_tesla: Option<f64>,
}

fn default_polarity() -> Polarity {
    Polarity::Bipolar
}

/// Stark parameters either looked up from the registry (`source`) or given
/// explicitly (`eta_g`, optional `eta_a`) — exactly one of the two forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkBlock {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<ParameterSource>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta_a: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceBlock {
    #[serde(default = "default_t_half_pi")]
    pub t_half_pi_s: f64,
    #[serde(default = "default_t_pi")]
    pub t_pi_s: f64,
    #[serde(default = "default_tau")]
    pub tau_s: f64,
    #[serde(default = "default_t_e")]
    pub t_e_s: f64,
}

fn default_t_half_pi() -> f64 {
    200e-9
}
fn default_t_pi() -> f64 {
    400e-9
}
fn default_tau() -> f64 {
    20e-6
}
fn default_t_e() -> f64 {
    10e-6
}

impl Default for SequenceBlock {
    fn default() -> Self {
        Self {
            t_half_pi_s: default_t_half_pi(),
            t_pi_s: default_t_pi(),
            tau_s: default_tau(),
            t_e_s: default_t_e(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    #[serde(default)]
    pub phase_sigma_rad: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StrainBlock {
    #[serde(default)]
    pub e_internal_v_per_cm: f64,
}

/// Valley g values and repopulation coupling for the tensor model. Absent
/// values fall back to the registry record for the donor; an absent kappa
/// is calibrated against the donor's ⟨111⟩ parallel-orientation entry.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GModelBlock {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g_perp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g_par: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa_um2_per_v2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    pub mode: FitMode,
    pub weighting: Weighting,
    pub fit_hyperfine: bool,
    pub include_intercept: bool,
    /// Average opposite hyperfine lines before fitting.
    pub average_lines: bool,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            mode: FitMode::BipolarQuadratic,
            weighting: Weighting::Uniform,
            fit_hyperfine: false,
            include_intercept: false,
            average_lines: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunabilityBlock {
    #[serde(default = "default_e_max")]
    pub e_max_v_per_cm: f64,
    #[serde(default = "default_linewidth")]
    pub linewidth_hz: f64,
}

fn default_e_max() -> f64 {
    DEFAULT_E_MAX_V_PER_CM
}
fn default_linewidth() -> f64 {
    DEFAULT_LINEWIDTH_HZ
}

impl Default for TunabilityBlock {
    fn default() -> Self {
        Self {
            e_max_v_per_cm: default_e_max(),
            linewidth_hz: default_linewidth(),
        }
    }
}

/// Switches the sweep command from a field sweep to an orientation sweep:
/// the E direction rotates about `rotation_axis` by each listed angle while
/// the repopulation model predicts the shift at the fixed field magnitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationSweepBlock {
    pub rotation_axis: MillerDirection,
    pub angles_deg: Vec<f64>,
}

/// The whole run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub donor: DonorBlock,
    pub field: FieldBlock,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stark: Option<StarkBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sequence: Option<SequenceBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise: Option<NoiseBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strain: Option<StrainBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gmodel: Option<GModelBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FitBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tunability: Option<TunabilityBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub orientation_sweep: Option<OrientationSweepBlock>,
}

impl RunConfig {
    /// Parses a configuration file; schema violations report the JSON
    /// line and column.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Donor with registry g0/spin and any configured overrides applied.
    pub fn resolve_donor(&self, registry: &StarkRegistry) -> CliResult<DonorSpecies> {
        let mut donor = registry.donor_species(self.donor.species)?;
        if let Some(g0) = self.donor.g0 {
            donor = donor.with_g0(g0)?;
        }
        if let Some(a) = self.donor.hyperfine_a_hz {
            donor = donor.with_hyperfine_a(a)?;
        }
        Ok(donor)
    }

    /// Spectrometer frequency: exactly one of f0_hz, b0_tesla must be set;
    /// a field value converts through g0·μ_B/h.
    pub fn resolve_f0(&self, donor: &DonorSpecies) -> CliResult<f64> {
        let f0 = match (self.field.f0_hz, self.field.b0_tesla) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "field block sets both f0_hz and b0_tesla; pick one".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "field block needs f0_hz or b0_tesla".into(),
                ))
            }
            (Some(f0), None) => f0,
            (None, Some(b0)) => donor.g0 * BOHR_MAGNETON_HZ_PER_T * b0,
        };
        if f0 <= 0.0 || f0.is_nan() {
            return Err(CliError::Config(format!(
                "spectrometer frequency must be positive, got {f0} Hz"
            )));
        }
        Ok(f0)
    }

    /// Stark parameters from the registry row for the configured field
    /// directions, or from explicit values — exactly one form.
    pub fn resolve_params(&self, registry: &StarkRegistry) -> CliResult<StarkParameters> {
        let block = self.stark.as_ref().ok_or_else(|| {
            CliError::Config("this command needs a stark block (source or explicit eta)".into())
        })?;
        match (block.source, block.eta_g, block.eta_a) {
            (Some(source), None, None) => Ok(registry.lookup(
                self.donor.species,
                &self.field.e_direction,
                &self.field.b_direction,
                source,
            )?),
            (None, Some(eta_g), eta_a) => Ok(StarkParameters::explicit(eta_g, eta_a)?),
            (Some(_), _, _) => Err(CliError::Config(
                "stark block sets both a registry source and explicit eta values; pick one".into(),
            )),
            (None, None, _) => Err(CliError::Config(
                "stark block needs a registry source or an explicit eta_g".into(),
            )),
        }
    }

    pub fn resolve_field_config(&self, f0_hz: f64) -> CliResult<FieldConfiguration> {
        Ok(FieldConfiguration::new(
            self.field.e_direction,
            self.field.e_magnitude_v_per_cm.unwrap_or(0.0),
            self.field.polarity,
            self.field.b_direction,
            f0_hz,
        )?)
    }

    pub fn require_e_magnitude(&self) -> CliResult<f64> {
        self.field.e_magnitude_v_per_cm.ok_or_else(|| {
            CliError::Config("field block needs e_magnitude_v_per_cm for this command".into())
        })
    }

    pub fn require_sweep(&self) -> CliResult<&[f64]> {
        match self.field.e_sweep_v_per_cm.as_deref() {
            Some(sweep) if !sweep.is_empty() => Ok(sweep),
            Some(_) => Err(gestark::Error::EmptySweep.into()),
            None => Err(CliError::Config(
                "field block needs a non-empty e_sweep_v_per_cm for this command".into(),
            )),
        }
    }

    /// Pulse timing from the sequence block (or its defaults), with the
    /// polarity taken from the field block so the two never disagree.
    pub fn resolve_sequence(&self) -> CliResult<PulseSequence> {
        let block = self.sequence.clone().unwrap_or_default();
        Ok(PulseSequence::new(
            block.t_half_pi_s,
            block.t_pi_s,
            block.tau_s,
            block.t_e_s,
            self.field.polarity,
        )?)
    }

    pub fn resolve_noise(&self, seed_override: Option<u64>) -> CliResult<NoiseModel> {
        let block = self.noise.clone().unwrap_or_default();
        Ok(NoiseModel::new(
            block.phase_sigma_rad,
            seed_override.unwrap_or(block.seed),
        )?)
    }

    pub fn resolve_strain(&self) -> StrainConfiguration {
        StrainConfiguration {
            e_internal_v_per_cm: self
                .strain
                .as_ref()
                .map(|s| s.e_internal_v_per_cm)
                .unwrap_or(0.0),
        }
    }

    /// Valley g values: configured override or the registry record.
    pub fn resolve_valley_g(&self, registry: &StarkRegistry) -> CliResult<ValleyGTensor> {
        let record = registry.donor_record(self.donor.species)?;
        let block = self.gmodel.clone().unwrap_or_default();
        Ok(ValleyGTensor::new(
            block.g_perp.unwrap_or(record.g_perp),
            block.g_par.unwrap_or(record.g_par),
        )?)
    }

    /// Repopulation coupling: explicit in the gmodel block, or calibrated
    /// so the tensor model reproduces the donor's measured (or inferred)
    /// ⟨111⟩ parallel spin-orbit parameter at a small reference field.
    pub fn resolve_repopulation(
        &self,
        registry: &StarkRegistry,
        donor: &DonorSpecies,
    ) -> CliResult<RepopulationModel> {
        if let Some(kappa) = self.gmodel.as_ref().and_then(|g| g.kappa_um2_per_v2) {
            return Ok(RepopulationModel::new(kappa)?);
        }
        let eta_g = body_diagonal_parallel_eta_g(registry, donor.species).ok_or_else(|| {
            CliError::Config(format!(
                "no kappa_um2_per_v2 configured and no ⟨111⟩ parallel eta_g entry for {} to calibrate against",
                donor.species
            ))
        })?;
        let vg = self.resolve_valley_g(registry)?;
        let valleys = gestark::geometry::ValleySet::germanium();
        let e_ref = KAPPA_CALIBRATION_FIELD_V_PER_CM * gestark::constants::V_PER_CM_TO_V_PER_UM;
        Ok(calibrate_kappa(&vg, &valleys, donor.g0, eta_g, e_ref)?)
    }
}

/// The donor's spin-orbit parameter for E ∥ B along a ⟨111⟩ family member,
/// preferring measured values over inferred ones.
fn body_diagonal_parallel_eta_g(registry: &StarkRegistry, species: Species) -> Option<f64> {
    let is_body_diagonal = |d: &MillerDirection| {
        let mut abs: Vec<i32> = d.indices().iter().map(|i| i.abs()).collect();
        abs.sort_unstable();
        abs == [1, 1, 1]
    };
    let mut inferred = None;
    for entry in &registry.entries {
        if entry.donor == species
            && entry.geometry == gestark::geometry::FieldGeometry::Parallel
            && is_body_diagonal(&entry.e_direction)
        {
            if let Some(eta) = entry.eta_g_exp {
                return Some(eta);
            }
            if entry.eta_g_inferred.is_some() {
                inferred = entry.eta_g_inferred;
            }
        }
    }
    inferred
}
