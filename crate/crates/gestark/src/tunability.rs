//! Tunability analysis: the largest Stark detuning reachable below the
//! ionization field bound, compared against the ensemble linewidth.

use serde::{Deserialize, Serialize};

use crate::donor::{DonorSpecies, Species};
use crate::geometry::{classify_geometry, FieldGeometry, MillerDirection};
use crate::stark::{stark_shift, HyperfineLine, StarkParameters};
use crate::Result;

/// Largest field demonstrated without donor ionization, V/cm.
pub const DEFAULT_E_MAX_V_PER_CM: f64 = 480.0;

/// Narrowest measured ensemble linewidth (highly enriched host), Hz.
pub const DEFAULT_LINEWIDTH_HZ: f64 = 1.1e6;

/// Reference comparison: the strongest silicon donor shift (Sb, M_I = 5/2).
pub const SI_SB_SHIFT_HZ: f64 = -3.0;
/// Field at which the silicon reference shift was measured, V/cm.
pub const SI_SB_FIELD_V_PER_CM: f64 = 50.0;

/// Fixed reference point for the silicon comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiliconReference {
    pub shift_hz: f64,
    pub e_field_v_per_cm: f64,
}

impl Default for SiliconReference {
    fn default() -> Self {
        Self {
            shift_hz: SI_SB_SHIFT_HZ,
            e_field_v_per_cm: SI_SB_FIELD_V_PER_CM,
        }
    }
}

/// Maximum detuning vs. linewidth summary for one orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunabilityReport {
    pub donor: Species,
    pub e_direction: MillerDirection,
    pub geometry: FieldGeometry,
    pub b_direction: MillerDirection,
    pub parameter_source: String,
    pub e_max_v_per_cm: f64,
    pub max_shift_hz: f64,
    pub linewidth_hz: f64,
    /// max_shift / linewidth, unrounded.
    pub ratio: f64,
    pub si_sb_reference: SiliconReference,
}

impl TunabilityReport {
    /// Aligned plain-text rendering for terminals.
    pub fn render_table(&self) -> String {
        let rows = [
            ("donor".to_string(), self.donor.to_string()),
            (
                "orientation".to_string(),
                format!(
                    "E {} {} B {}",
                    self.e_direction, self.geometry, self.b_direction
                ),
            ),
            (
                "parameter_source".to_string(),
                self.parameter_source.clone(),
            ),
            (
                "e_max_v_per_cm".to_string(),
                format!("{}", self.e_max_v_per_cm),
            ),
            (
                "max_shift_hz".to_string(),
                format!("{:.6e}", self.max_shift_hz),
            ),
            (
                "linewidth_hz".to_string(),
                format!("{:.6e}", self.linewidth_hz),
            ),
            (
                "shift_to_linewidth_ratio".to_string(),
                format!("{:.4}", self.ratio),
            ),
            (
                "si_sb_reference_hz".to_string(),
                format!(
                    "{} at {} V/cm",
                    self.si_sb_reference.shift_hz, self.si_sb_reference.e_field_v_per_cm
                ),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}

/// Builds the tunability report: the line-averaged |shift| at `e_max`
/// against the ensemble linewidth.
pub fn tunability(
    params: &StarkParameters,
    donor: &DonorSpecies,
    f0_hz: f64,
    e_max_v_per_cm: f64,
    linewidth_hz: f64,
    e_direction: &MillerDirection,
    b_direction: &MillerDirection,
) -> Result<TunabilityReport> {
    if linewidth_hz <= 0.0 || linewidth_hz.is_nan() {
        return Err(crate::Error::InvalidLinewidth {
            value: linewidth_hz,
        });
    }
    if e_max_v_per_cm < 0.0 || e_max_v_per_cm.is_nan() {
        return Err(crate::Error::InvalidFieldConfiguration(format!(
            "e_max must be non-negative, got {e_max_v_per_cm} V/cm"
        )));
    }
    let max_shift_hz = stark_shift(
        params,
        donor,
        f0_hz,
        HyperfineLine::Averaged,
        e_max_v_per_cm,
    )?
    .abs();
    Ok(TunabilityReport {
        donor: donor.species,
        e_direction: *e_direction,
        geometry: classify_geometry(e_direction, b_direction),
        b_direction: *b_direction,
        parameter_source: params.source.to_string(),
        e_max_v_per_cm,
        max_shift_hz,
        linewidth_hz,
        ratio: max_shift_hz / linewidth_hz,
        si_sb_reference: SiliconReference::default(),
    })
}
