//! The quadratic Stark shift model.
//!
//! The shift of a hyperfine line M_I under a field E is
//!
//! ```text
//! df = (eta_g·f0 + eta_A·A·M_I) · E²
//! ```
//!
//! with eta values in μm²/V², E converted from V/cm to V/μm at the boundary,
//! the electron Zeeman energy g·β·B₀ expressed as the spectrometer frequency
//! f0 (Hz), and the hyperfine constant A in Hz — so df emerges in Hz.
//! Static strain acts as an effective internal field collinear with the
//! applied one, turning E² into (E_int + E_ext)²; bipolar pulse pairs cancel
//! the resulting cross term exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::V_PER_CM_TO_V_PER_UM;
use crate::donor::DonorSpecies;
use crate::error::Error;
use crate::geometry::MillerDirection;
use crate::Result;

/// Provenance of a Stark parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterSource {
    /// Extracted from measured data.
    Experiment,
    /// Effective-mass or tight-binding theory.
    Theory,
    /// Back-computed from a quoted shift rather than tabulated directly.
    Inferred,
    /// Supplied explicitly by the caller.
    Explicit,
}

impl fmt::Display for ParameterSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParameterSource::Experiment => "experiment",
            ParameterSource::Theory => "theory",
            ParameterSource::Inferred => "inferred",
            ParameterSource::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

/// Spin-orbit (eta_g) and hyperfine (eta_A) Stark parameters, μm²/V².
///
/// Either value may be absent (unmeasured); absence is representable and
/// distinct from zero, and evaluation paths refuse to substitute 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkParameters {
    pub eta_g: Option<f64>,
    pub eta_a: Option<f64>,
    pub source: ParameterSource,
}

impl StarkParameters {
    pub fn new(eta_g: Option<f64>, eta_a: Option<f64>, source: ParameterSource) -> Result<Self> {
        if eta_g.is_none() && eta_a.is_none() {
            return Err(Error::InvalidDonor(
                "Stark parameters need at least one of eta_g, eta_a".into(),
            ));
        }
        for v in [eta_g, eta_a].into_iter().flatten() {
            if !v.is_finite() {
                return Err(Error::InvalidDonor(format!(
                    "Stark parameters must be finite, got {v}"
                )));
            }
        }
        Ok(Self {
            eta_g,
            eta_a,
            source,
        })
    }

    pub fn explicit(eta_g: f64, eta_a: Option<f64>) -> Result<Self> {
        Self::new(Some(eta_g), eta_a, ParameterSource::Explicit)
    }
}

/// Electric-field pulse polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Unipolar,
    Bipolar,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Unipolar => f.write_str("unipolar"),
            Polarity::Bipolar => f.write_str("bipolar"),
        }
    }
}

/// Applied-field configuration: E direction and magnitude, pulse polarity,
/// B direction, and the spectrometer frequency standing in for g·β·B₀/h.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfiguration {
    pub e_direction: MillerDirection,
    pub e_magnitude_v_per_cm: f64,
    pub polarity: Polarity,
    pub b_direction: MillerDirection,
    pub f0_hz: f64,
}

impl FieldConfiguration {
    pub fn new(
        e_direction: MillerDirection,
        e_magnitude_v_per_cm: f64,
        polarity: Polarity,
        b_direction: MillerDirection,
        f0_hz: f64,
    ) -> Result<Self> {
        if e_magnitude_v_per_cm < 0.0 || e_magnitude_v_per_cm.is_nan() {
            return Err(Error::InvalidFieldConfiguration(format!(
                "field magnitude must be non-negative, got {e_magnitude_v_per_cm} V/cm"
            )));
        }
        if f0_hz <= 0.0 || f0_hz.is_nan() {
            return Err(Error::InvalidFieldConfiguration(format!(
                "spectrometer frequency must be positive, got {f0_hz} Hz"
            )));
        }
        Ok(Self {
            e_direction,
            e_magnitude_v_per_cm,
            polarity,
            b_direction,
            f0_hz,
        })
    }
}

/// Static strain expressed as an effective internal field (signed, V/cm)
/// collinear with the applied field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrainConfiguration {
    pub e_internal_v_per_cm: f64,
}

impl StrainConfiguration {
    pub fn none() -> Self {
        Self::default()
    }
}

/// Selects a hyperfine line, or the average over opposite lines (which
/// cancels the M_I-odd hyperfine term exactly).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperfineLine {
    Projection(f64),
    Averaged,
}

impl HyperfineLine {
    pub fn projection(&self) -> Option<f64> {
        match self {
            HyperfineLine::Projection(m) => Some(*m),
            HyperfineLine::Averaged => None,
        }
    }
}

impl fmt::Display for HyperfineLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperfineLine::Projection(m) => write!(f, "{m}"),
            HyperfineLine::Averaged => f.write_str("averaged"),
        }
    }
}

impl FromStr for HyperfineLine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("averaged") {
            return Ok(HyperfineLine::Averaged);
        }
        s.parse::<f64>()
            .map(HyperfineLine::Projection)
            .map_err(|_| Error::InvalidDataset(format!("unparseable m_i value {s:?}")))
    }
}

/// Frequency shift in Hz of one hyperfine line (or the line average) under a
/// field of `e_v_per_cm`.
///
/// Even in E by construction; doubling E exactly quadruples the shift.
pub fn stark_shift(
    params: &StarkParameters,
    donor: &DonorSpecies,
    f0_hz: f64,
    line: HyperfineLine,
    e_v_per_cm: f64,
) -> Result<f64> {
    let eta_g = params.eta_g.ok_or(Error::MissingSpinOrbitParameter)?;
    let coefficient = match line {
        HyperfineLine::Averaged => eta_g * f0_hz,
        HyperfineLine::Projection(m) => {
            donor.validate_projection(m)?;
            let eta_a = params.eta_a.ok_or(Error::MissingHyperfineParameter)?;
            let a = donor
                .hyperfine_a_hz
                .ok_or(Error::MissingHyperfineConstant)?;
            eta_g * f0_hz + eta_a * a * m
        }
    };
    let e_um = e_v_per_cm * V_PER_CM_TO_V_PER_UM;
    Ok(coefficient * (e_um * e_um))
}

/// Stark shift with strain: E² is replaced by (E_int + E_ext)², both fields
/// collinear and signed in V/cm.
pub fn shift_with_strain(
    params: &StarkParameters,
    donor: &DonorSpecies,
    f0_hz: f64,
    line: HyperfineLine,
    e_ext_v_per_cm: f64,
    strain: &StrainConfiguration,
) -> Result<f64> {
    stark_shift(
        params,
        donor,
        f0_hz,
        line,
        strain.e_internal_v_per_cm + e_ext_v_per_cm,
    )
}

/// Shift accumulated over an ideal bipolar pulse pair: the average of the
/// +E_ext and −E_ext half-shifts. The strain cross term, linear in E_ext,
/// cancels exactly, leaving the even (E_ext² + E_int²) part.
pub fn bipolar_effective_shift(
    params: &StarkParameters,
    donor: &DonorSpecies,
    f0_hz: f64,
    line: HyperfineLine,
    e_ext_v_per_cm: f64,
    strain: &StrainConfiguration,
) -> Result<f64> {
    let plus = shift_with_strain(params, donor, f0_hz, line, e_ext_v_per_cm, strain)?;
    let minus = shift_with_strain(params, donor, f0_hz, line, -e_ext_v_per_cm, strain)?;
    Ok(0.5 * (plus + minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn arsenic_fixture() -> DonorSpecies {
        // Placeholder hyperfine constant for tests; A in Ge is a required
        // input, not a library default.
        DonorSpecies::arsenic().with_hyperfine_a(1.0e8).unwrap()
    }

    #[test]
    fn spin_orbit_shift_reference_values() {
        let p = StarkParameters::explicit(3.9e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let df = stark_shift(&p, &donor, 9.6e9, HyperfineLine::Averaged, 50.0).unwrap();
        assert_relative_eq!(df, 9.36e3, max_relative = 1e-12);

        let p = StarkParameters::explicit(-1.3e-3, None).unwrap();
        let donor = DonorSpecies::phosphorus();
        let df = stark_shift(&p, &donor, 9.6e9, HyperfineLine::Averaged, 480.0).unwrap();
        assert_relative_eq!(df, -2.875392e4, max_relative = 1e-12);
    }

    #[test]
    fn zero_field_shift_is_zero() {
        let p = StarkParameters::explicit(3.9e-2, Some(-1.3e-1)).unwrap();
        let df = stark_shift(
            &p,
            &arsenic_fixture(),
            9.6e9,
            HyperfineLine::Projection(1.5),
            0.0,
        )
        .unwrap();
        assert_eq!(df, 0.0);
    }

    #[test]
    fn hyperfine_term_hand_value() {
        // Pure hyperfine: eta_g = 0, eta_A = -1.3e-1, A = 1e8, m = +3/2,
        // E = 100 V/cm -> -0.13 * 1e8 * 1.5 * 1e-4 = -1950 Hz.
        let p = StarkParameters::new(Some(0.0), Some(-1.3e-1), ParameterSource::Explicit).unwrap();
        let df = stark_shift(
            &p,
            &arsenic_fixture(),
            9.6e9,
            HyperfineLine::Projection(1.5),
            100.0,
        )
        .unwrap();
        assert_relative_eq!(df, -1950.0, max_relative = 1e-12);
    }

    #[test]
    fn evenness_and_quadratic_scaling_are_exact() {
        let p = StarkParameters::explicit(1.7e-2, Some(-7.8e-2)).unwrap();
        let donor = arsenic_fixture();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let e = rng.gen_range(0.0..500.0);
            let line = if rng.gen_bool(0.5) {
                HyperfineLine::Averaged
            } else {
                HyperfineLine::Projection(*[-1.5, -0.5, 0.5, 1.5].get(rng.gen_range(0..4)).unwrap())
            };
            let df = stark_shift(&p, &donor, 9.6e9, line, e).unwrap();
            let df_neg = stark_shift(&p, &donor, 9.6e9, line, -e).unwrap();
            let df_double = stark_shift(&p, &donor, 9.6e9, line, 2.0 * e).unwrap();
            assert_eq!(df, df_neg);
            assert_eq!(df_double, 4.0 * df);
        }
    }

    #[test]
    fn opposite_lines_average_to_spin_orbit_term() {
        let p = StarkParameters::explicit(-1.8e-3, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let f0 = 9.6e9;
        for e in [10.0, 55.0, 100.0] {
            let so = stark_shift(&p, &donor, f0, HyperfineLine::Averaged, e).unwrap();
            for m in [0.5, 1.5] {
                let plus = stark_shift(&p, &donor, f0, HyperfineLine::Projection(m), e).unwrap();
                let minus = stark_shift(&p, &donor, f0, HyperfineLine::Projection(-m), e).unwrap();
                assert_relative_eq!(0.5 * (plus + minus), so, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn absent_parameters_error_rather_than_default() {
        let donor = arsenic_fixture();
        let no_eta_a = StarkParameters::new(Some(1e-2), None, ParameterSource::Explicit).unwrap();
        assert!(matches!(
            stark_shift(
                &no_eta_a,
                &donor,
                9.6e9,
                HyperfineLine::Projection(0.5),
                10.0
            ),
            Err(Error::MissingHyperfineParameter)
        ));
        let no_eta_g = StarkParameters::new(None, Some(-1.3e-1), ParameterSource::Theory).unwrap();
        assert!(matches!(
            stark_shift(&no_eta_g, &donor, 9.6e9, HyperfineLine::Averaged, 10.0),
            Err(Error::MissingSpinOrbitParameter)
        ));
        let donor_without_a = DonorSpecies::arsenic();
        let full = StarkParameters::explicit(1e-2, Some(-1e-1)).unwrap();
        assert!(matches!(
            stark_shift(
                &full,
                &donor_without_a,
                9.6e9,
                HyperfineLine::Projection(0.5),
                10.0
            ),
            Err(Error::MissingHyperfineConstant)
        ));
    }

    #[test]
    fn out_of_range_projection_rejected() {
        let p = StarkParameters::explicit(1e-2, Some(-1e-1)).unwrap();
        assert!(matches!(
            stark_shift(
                &p,
                &arsenic_fixture(),
                9.6e9,
                HyperfineLine::Projection(2.5),
                10.0
            ),
            Err(Error::InvalidProjection { .. })
        ));
    }

    #[test]
    fn strain_reduces_to_plain_shift_when_absent() {
        let p = StarkParameters::explicit(1.7e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let df = shift_with_strain(
            &p,
            &donor,
            9.6e9,
            HyperfineLine::Averaged,
            120.0,
            &StrainConfiguration::none(),
        )
        .unwrap();
        let plain = stark_shift(&p, &donor, 9.6e9, HyperfineLine::Averaged, 120.0).unwrap();
        assert_eq!(df, plain);

        // Relabeling: all of the field in the strain term.
        let strained = shift_with_strain(
            &p,
            &donor,
            9.6e9,
            HyperfineLine::Averaged,
            0.0,
            &StrainConfiguration {
                e_internal_v_per_cm: 50.0,
            },
        )
        .unwrap();
        let plain = stark_shift(&p, &donor, 9.6e9, HyperfineLine::Averaged, 50.0).unwrap();
        assert_eq!(strained, plain);
    }

    #[test]
    fn strain_cross_term_is_linear_in_applied_field() {
        let p = StarkParameters::explicit(1e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let f0 = 9.6e9;
        let strain = StrainConfiguration {
            e_internal_v_per_cm: 10.0,
        };
        let plus =
            shift_with_strain(&p, &donor, f0, HyperfineLine::Averaged, 100.0, &strain).unwrap();
        let minus =
            shift_with_strain(&p, &donor, f0, HyperfineLine::Averaged, -100.0, &strain).unwrap();
        // (E_int + E)^2 - (E_int - E)^2 = 4 E_int E
        let expected = 1e-2 * f0 * 4.0 * 10.0 * 100.0 * 1e-8;
        assert_relative_eq!(plus - minus, expected, max_relative = 1e-12);
    }

    #[test]
    fn bipolar_pair_cancels_the_cross_term() {
        let p = StarkParameters::explicit(1e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let f0 = 9.6e9;
        let strain = StrainConfiguration {
            e_internal_v_per_cm: 10.0,
        };
        let df = bipolar_effective_shift(&p, &donor, f0, HyperfineLine::Averaged, 100.0, &strain)
            .unwrap();
        // eta_g * f0 * (E_ext^2 + E_int^2) in (V/cm)^2 scaled by 1e-8.
        assert_relative_eq!(df, 9.696e3, max_relative = 1e-12);

        // Without strain the bipolar shift is the plain shift.
        let clean = bipolar_effective_shift(
            &p,
            &donor,
            f0,
            HyperfineLine::Averaged,
            100.0,
            &StrainConfiguration::none(),
        )
        .unwrap();
        let plain = stark_shift(&p, &donor, f0, HyperfineLine::Averaged, 100.0).unwrap();
        assert_eq!(clean, plain);

        // Zero applied field leaves the constant strain offset.
        let offset =
            bipolar_effective_shift(&p, &donor, f0, HyperfineLine::Averaged, 0.0, &strain).unwrap();
        assert_relative_eq!(df - offset, plain, max_relative = 1e-12);
    }

    #[test]
    fn bipolar_shift_is_even_in_both_fields() {
        let p = StarkParameters::explicit(-3.0e-2, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let f0 = 9.6e9;
        let line = HyperfineLine::Projection(-0.5);
        for e_int in [-40.0, -10.0, 0.0, 25.0, 50.0] {
            for e_ext in [-100.0, -30.0, 0.0, 60.0, 100.0] {
                let strain = StrainConfiguration {
                    e_internal_v_per_cm: e_int,
                };
                let flipped = StrainConfiguration {
                    e_internal_v_per_cm: -e_int,
                };
                let base = bipolar_effective_shift(&p, &donor, f0, line, e_ext, &strain).unwrap();
                let e_flip =
                    bipolar_effective_shift(&p, &donor, f0, line, -e_ext, &strain).unwrap();
                let i_flip =
                    bipolar_effective_shift(&p, &donor, f0, line, e_ext, &flipped).unwrap();
                assert_eq!(base, e_flip);
                assert_eq!(base, i_flip);
            }
        }
    }

    #[test]
    fn hyperfine_line_round_trips_through_text() {
        assert_eq!(
            "averaged".parse::<HyperfineLine>().unwrap(),
            HyperfineLine::Averaged
        );
        assert_eq!(
            "-1.5".parse::<HyperfineLine>().unwrap(),
            HyperfineLine::Projection(-1.5)
        );
        assert_eq!(HyperfineLine::Projection(0.5).to_string(), "0.5");
        assert_eq!(HyperfineLine::Averaged.to_string(), "averaged");
        assert!("not-a-line".parse::<HyperfineLine>().is_err());
    }
}
