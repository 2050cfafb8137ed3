//! Phase-accumulation ESR experiment simulation.
//!
//! A Hahn echo (π/2 – τ – π – τ – echo) encloses an electric-field pulse of
//! duration t_E; the Stark-detuned spins accumulate a phase dφ = 2π·df·t_E
//! that quadrature detection reads out, so df = dφ/(2π·t_E). Synthetic
//! datasets apply seeded Gaussian phase noise per point and report back the
//! equivalent frequency shift and uncertainty.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{DatasetMetadata, DatasetRow, EchoPhaseDataset};
use crate::donor::DonorSpecies;
use crate::error::Error;
use crate::geometry::MillerDirection;
use crate::stark::{
    bipolar_effective_shift, shift_with_strain, FieldConfiguration, HyperfineLine, Polarity,
    StarkParameters, StrainConfiguration,
};
use crate::Result;

/// Echo sequence timing. The electric-field pulse must fit strictly inside
/// the first dephasing window (t_E < τ), with everything inside 2τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSequence {
    pub t_half_pi_s: f64,
    pub t_pi_s: f64,
    pub tau_s: f64,
    pub t_e_s: f64,
    pub polarity: Polarity,
}

impl PulseSequence {
    pub fn new(
        t_half_pi_s: f64,
        t_pi_s: f64,
        tau_s: f64,
        t_e_s: f64,
        polarity: Polarity,
    ) -> Result<Self> {
        for (name, v) in [
            ("t_half_pi_s", t_half_pi_s),
            ("t_pi_s", t_pi_s),
            ("tau_s", tau_s),
            ("t_e_s", t_e_s),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidPulseSequence(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if t_e_s >= tau_s {
            return Err(Error::InvalidPulseSequence(format!(
                "t_E = {t_e_s} s must be shorter than tau = {tau_s} s"
            )));
        }
        if t_e_s + t_half_pi_s + t_pi_s > 2.0 * tau_s {
            return Err(Error::InvalidPulseSequence(
                "pulses do not fit in the 2*tau echo window".into(),
            ));
        }
        Ok(Self {
            t_half_pi_s,
            t_pi_s,
            tau_s,
            t_e_s,
            polarity,
        })
    }

    /// 200 ns / 400 ns microwave pulses with the given windows.
    pub fn standard(tau_s: f64, t_e_s: f64, polarity: Polarity) -> Result<Self> {
        Self::new(200e-9, 400e-9, tau_s, t_e_s, polarity)
    }
}

/// One measured crystal: doping, cut faces, and coherence time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFixture {
    pub number: u8,
    pub material: &'static str,
    pub doping_per_cm3: f64,
    pub faces: (MillerDirection, MillerDirection),
    pub t2_s: f64,
}

/// The five measured samples.
pub fn sample_table() -> Vec<SampleFixture> {
    let dir = |h, k, l| MillerDirection::new(h, k, l).expect("nonzero");
    vec![
        SampleFixture {
            number: 1,
            material: "74Ge:As",
            doping_per_cm3: 3e15,
            faces: (dir(1, 1, 0), dir(0, 0, 1)),
            t2_s: 114e-6,
        },
        SampleFixture {
            number: 2,
            material: "natGe:As",
            doping_per_cm3: 1e15,
            faces: (dir(-1, 1, 1), dir(0, 1, -1)),
            t2_s: 55e-6,
        },
        SampleFixture {
            number: 3,
            material: "70Ge:P",
            doping_per_cm3: 1e12,
            faces: (dir(1, 0, 0), dir(0, 0, 1)),
            t2_s: 250e-6,
        },
        SampleFixture {
            number: 4,
            material: "natGe:P",
            doping_per_cm3: 4e14,
            faces: (dir(1, 1, 0), dir(0, 0, 1)),
            t2_s: 55e-6,
        },
        SampleFixture {
            number: 5,
            material: "natGe:P",
            doping_per_cm3: 1e13,
            faces: (dir(1, 1, 1), dir(1, -1, 0)),
            t2_s: 55e-6,
        },
    ]
}

pub fn sample_by_number(number: u8) -> Option<SampleFixture> {
    sample_table().into_iter().find(|s| s.number == number)
}

/// Gaussian phase noise, radians per point, with the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub phase_sigma_rad: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(phase_sigma_rad: f64, seed: u64) -> Result<Self> {
        if phase_sigma_rad < 0.0 || !phase_sigma_rad.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "phase sigma must be non-negative, got {phase_sigma_rad}"
            )));
        }
        Ok(Self {
            phase_sigma_rad,
            seed,
        })
    }

    pub fn noiseless(seed: u64) -> Self {
        Self {
            phase_sigma_rad: 0.0,
            seed,
        }
    }

    /// Noise level that yields the requested frequency uncertainty at t_E.
    pub fn for_sigma_hz(sigma_hz: f64, t_e_s: f64, seed: u64) -> Result<Self> {
        Self::new(sigma_hz * 2.0 * PI * t_e_s, seed)
    }

    /// The frequency uncertainty this phase noise maps to at t_E; scales as
    /// 1/t_E, which is why longer field pulses resolve smaller shifts.
    pub fn sigma_hz(&self, t_e_s: f64) -> f64 {
        self.phase_sigma_rad / (2.0 * PI * t_e_s)
    }
}

/// Phase accumulated by a detuning `df` over a pulse of length t_E, radians,
/// unwrapped.
pub fn phase_from_shift(df_hz: f64, t_e_s: f64) -> f64 {
    2.0 * PI * df_hz * t_e_s
}

/// Hahn-echo amplitude after a total free evolution of 2τ: exp(−2τ/T2).
pub fn echo_amplitude(tau_s: f64, t2_s: f64) -> f64 {
    (-2.0 * tau_s / t2_s).exp()
}

/// Non-fatal conditions raised during dataset generation.
#[derive(Debug, Clone, PartialEq)]
pub enum SimWarning {
    /// |dφ| exceeded π/2 for a row; a real quadrature detector would be at
    /// risk of wrapping there.
    PhaseWrapRisk {
        row: usize,
        e_field_v_per_cm: f64,
        m_i: HyperfineLine,
        phase_rad: f64,
    },
}

impl std::fmt::Display for SimWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimWarning::PhaseWrapRisk {
                row,
                e_field_v_per_cm,
                m_i,
                phase_rad,
            } => write!(
                f,
                "phase wrap risk at row {row} (E = {e_field_v_per_cm} V/cm, m_i = {m_i}): |dphi| = {:.3} rad > pi/2",
                phase_rad.abs()
            ),
        }
    }
}

/// A generated dataset plus any warnings raised along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub dataset: EchoPhaseDataset,
    pub warnings: Vec<SimWarning>,
}

/// Simulates a field sweep.
///
/// Each row's true shift comes from the bipolar pair average or the
/// single-polarity strained shift, per the sequence polarity. If eta_A is
/// present, every hyperfine line of the donor is generated; otherwise only
/// the line-averaged shift is, mirroring measurements where the hyperfine
/// structure is unresolved. Noise streams derive from (seed, row index), so
/// output is independent of evaluation order.
pub fn generate_dataset(
    donor: &DonorSpecies,
    params: &StarkParameters,
    sweep_v_per_cm: &[f64],
    cfg: &FieldConfiguration,
    seq: &PulseSequence,
    noise: &NoiseModel,
    strain: &StrainConfiguration,
) -> Result<SimulationOutput> {
    if sweep_v_per_cm.is_empty() {
        return Err(Error::EmptySweep);
    }
    let lines: Vec<HyperfineLine> = if params.eta_a.is_some() {
        donor
            .hyperfine_projections()
            .into_iter()
            .map(HyperfineLine::Projection)
            .collect()
    } else {
        vec![HyperfineLine::Averaged]
    };

    let two_pi_te = 2.0 * PI * seq.t_e_s;
    let sigma_hz = noise.sigma_hz(seq.t_e_s);
    let gaussian =
        if noise.phase_sigma_rad > 0.0 {
            Some(Normal::new(0.0, noise.phase_sigma_rad).map_err(|e| {
                Error::InvalidNoise(format!("cannot build noise distribution: {e}"))
            })?)
        } else {
            None
        };

    let mut rows = Vec::with_capacity(sweep_v_per_cm.len() * lines.len());
    let mut warnings = Vec::new();
    for (ei, &e) in sweep_v_per_cm.iter().enumerate() {
        for (li, &line) in lines.iter().enumerate() {
            let row_index = ei * lines.len() + li;
            let df_true = match seq.polarity {
                Polarity::Bipolar => {
                    bipolar_effective_shift(params, donor, cfg.f0_hz, line, e, strain)?
                }
                Polarity::Unipolar => shift_with_strain(params, donor, cfg.f0_hz, line, e, strain)?,
            };
            let (phase, df_reported) = match &gaussian {
                Some(dist) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
                    rng.set_stream(row_index as u64);
                    let phase = phase_from_shift(df_true, seq.t_e_s) + dist.sample(&mut rng);
                    (phase, phase / two_pi_te)
                }
                // Noiseless rows report the model value exactly.
                None => (phase_from_shift(df_true, seq.t_e_s), df_true),
            };
            if phase.abs() > PI / 2.0 {
                warnings.push(SimWarning::PhaseWrapRisk {
                    row: row_index,
                    e_field_v_per_cm: e,
                    m_i: line,
                    phase_rad: phase,
                });
            }
            rows.push(DatasetRow {
                e_field_v_per_cm: e,
                m_i: line,
                delta_f_hz: df_reported,
                sigma_hz,
            });
        }
    }

    let metadata = DatasetMetadata {
        donor: donor.species,
        e_direction: cfg.e_direction,
        b_direction: cfg.b_direction,
        f0_hz: cfg.f0_hz,
        t_e_s: seq.t_e_s,
        polarity: seq.polarity,
        seed: noise.seed,
    };
    Ok(SimulationOutput {
        dataset: EchoPhaseDataset::new(rows, metadata)?,
        warnings,
    })
}
