//! Command implementations. Each returns a report value that the binary
//! renders and writes; nothing here touches stdout, so the commands are
//! directly testable.

use std::path::Path;

use nalgebra::{Rotation3, Unit};
use serde::Serialize;

use gestark::dataset::{sidecar_path, DatasetMetadata, EchoPhaseDataset};
use gestark::donor::Species;
use gestark::experiment::{generate_dataset, SimulationOutput};
use gestark::fit::{average_opposite_lines, global_fit, FitOptions, FitResult};
use gestark::geometry::{
    classify_geometry, FieldGeometry, MillerDirection, UnitVector3, ValleySet,
};
use gestark::gtensor::{
    effective_g_tensor, g_along, repopulation_weights, resonance_frequency, ValleyWeights,
};
use gestark::registry::StarkRegistry;
use gestark::stark::{stark_shift, HyperfineLine};
use gestark::tunability::{tunability, TunabilityReport};

use crate::config::RunConfig;
use crate::render::{aligned_table, simple_csv, OutputFormat};
use crate::{CliError, CliResult};

/// One rendered shift line.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftLine {
    pub m_i: String,
    pub delta_f_hz: f64,
}

/// Output of `shift`: the per-line shifts (when the hyperfine parameters
/// allow them) plus the line-averaged value.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftReport {
    pub donor: Species,
    pub e_direction: MillerDirection,
    pub geometry: FieldGeometry,
    pub b_direction: MillerDirection,
    pub f0_hz: f64,
    pub e_field_v_per_cm: f64,
    pub parameter_source: String,
    pub lines: Vec<ShiftLine>,
    pub averaged_delta_f_hz: f64,
}

impl ShiftReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        let rows: Vec<Vec<String>> = self
            .lines
            .iter()
            .map(|l| vec![l.m_i.clone(), l.delta_f_hz.to_string()])
            .chain(std::iter::once(vec![
                "averaged".to_string(),
                self.averaged_delta_f_hz.to_string(),
            ]))
            .collect();
        Ok(match format {
            OutputFormat::Table => {
                let mut out = format!(
                    "donor {}  E {} {} B {}  f0 {} Hz  E = {} V/cm  ({})\n",
                    self.donor,
                    self.e_direction,
                    self.geometry,
                    self.b_direction,
                    self.f0_hz,
                    self.e_field_v_per_cm,
                    self.parameter_source,
                );
                out.push_str(&aligned_table(&["m_i", "delta_f_hz"], &rows));
                out
            }
            OutputFormat::Json => pretty_json(self)?,
            OutputFormat::Csv => simple_csv(&["m_i", "delta_f_hz"], &rows),
        })
    }
}

/// Evaluates the shift for each hyperfine line at the configured field.
pub fn cmd_shift(config: &RunConfig, registry: &StarkRegistry) -> CliResult<ShiftReport> {
    let donor = config.resolve_donor(registry)?;
    let f0 = config.resolve_f0(&donor)?;
    let params = config.resolve_params(registry)?;
    let e = config.require_e_magnitude()?;

    let mut lines = Vec::new();
    if params.eta_a.is_some() && donor.hyperfine_a_hz.is_some() {
        for m in donor.hyperfine_projections() {
            let df = stark_shift(&params, &donor, f0, HyperfineLine::Projection(m), e)?;
            lines.push(ShiftLine {
                m_i: m.to_string(),
                delta_f_hz: df,
            });
        }
    }
    let averaged = stark_shift(&params, &donor, f0, HyperfineLine::Averaged, e)?;
    Ok(ShiftReport {
        donor: donor.species,
        e_direction: config.field.e_direction,
        geometry: classify_geometry(&config.field.e_direction, &config.field.b_direction),
        b_direction: config.field.b_direction,
        f0_hz: f0,
        e_field_v_per_cm: e,
        parameter_source: params.source.to_string(),
        lines,
        averaged_delta_f_hz: averaged,
    })
}

/// Output of `sweep`: a CSV-ready table, either shift vs. field or shift
/// vs. orientation angle.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl SweepData {
    pub fn to_csv(&self) -> String {
        simple_csv(&self.header, &self.rows)
    }
}

/// Forward-model sweep. With an `orientation_sweep` block the E direction
/// rotates at fixed magnitude and the valley-repopulation model supplies
/// the shift; otherwise the field magnitude sweeps through the configured
/// list.
pub fn cmd_sweep(config: &RunConfig, registry: &StarkRegistry) -> CliResult<SweepData> {
    let donor = config.resolve_donor(registry)?;
    let f0 = config.resolve_f0(&donor)?;

    if let Some(orientation) = &config.orientation_sweep {
        let e_mag_cm = config.require_e_magnitude()?;
        let e_mag_um = e_mag_cm * gestark::constants::V_PER_CM_TO_V_PER_UM;
        let vg = config.resolve_valley_g(registry)?;
        let model = config.resolve_repopulation(registry, &donor)?;
        let valleys = ValleySet::germanium();
        let b_hat = config.field.b_direction.unit_vector();
        let axis = Unit::new_normalize(*orientation.rotation_axis.unit_vector().as_vector());
        let e0 = config.field.e_direction.unit_vector();
        let g_zero = g_along(
            &effective_g_tensor(&vg, &valleys, &ValleyWeights::equal()),
            &b_hat,
        );

        let mut rows = Vec::with_capacity(orientation.angles_deg.len());
        for &angle_deg in &orientation.angles_deg {
            let rotation = Rotation3::from_axis_angle(&axis, angle_deg.to_radians());
            let e_hat = UnitVector3::from_vector(rotation * e0.as_vector())?;
            let weights = repopulation_weights(&model, &e_hat, e_mag_um, &valleys);
            let g = g_along(&effective_g_tensor(&vg, &valleys, &weights), &b_hat);
            let df = (g - g_zero) * f0 / donor.g0;
            rows.push(vec![
                angle_deg.to_string(),
                e_mag_cm.to_string(),
                df.to_string(),
            ]);
        }
        return Ok(SweepData {
            header: vec!["angle_deg", "e_field_v_per_cm", "delta_f_hz"],
            rows,
        });
    }

    let params = config.resolve_params(registry)?;
    let sweep = config.require_sweep()?;
    let per_line = params.eta_a.is_some() && donor.hyperfine_a_hz.is_some();
    let mut rows = Vec::new();
    for &e in sweep {
        if per_line {
            for m in donor.hyperfine_projections() {
                let df = stark_shift(&params, &donor, f0, HyperfineLine::Projection(m), e)?;
                rows.push(vec![e.to_string(), m.to_string(), df.to_string()]);
            }
        }
        let df = stark_shift(&params, &donor, f0, HyperfineLine::Averaged, e)?;
        rows.push(vec![e.to_string(), "averaged".to_string(), df.to_string()]);
    }
    Ok(SweepData {
        header: vec!["e_field_v_per_cm", "m_i", "delta_f_hz"],
        rows,
    })
}

/// Generates a synthetic dataset per the config; the caller writes it.
pub fn cmd_simulate(
    config: &RunConfig,
    registry: &StarkRegistry,
    seed_override: Option<u64>,
) -> CliResult<SimulationOutput> {
    let donor = config.resolve_donor(registry)?;
    let f0 = config.resolve_f0(&donor)?;
    let params = config.resolve_params(registry)?;
    let sweep = config.require_sweep()?;
    let field_config = config.resolve_field_config(f0)?;
    let sequence = config.resolve_sequence()?;
    let noise = config.resolve_noise(seed_override)?;
    let strain = config.resolve_strain();
    Ok(generate_dataset(
        &donor,
        &params,
        sweep,
        &field_config,
        &sequence,
        &noise,
        &strain,
    )?)
}

/// Output of `fit`.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub result: FitResult,
    /// Cross-check notes (sidecar metadata disagreements and the like).
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        let json = self.result.to_interface_json();
        Ok(match format {
            OutputFormat::Json | OutputFormat::Csv => {
                let mut text = serde_json::to_string_pretty(&json)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                text.push('\n');
                text
            }
            OutputFormat::Table => {
                let obj = json.as_object().expect("interface json is an object");
                let rows: Vec<Vec<String>> = obj
                    .iter()
                    .map(|(k, v)| vec![k.clone(), v.to_string()])
                    .collect();
                aligned_table(&["quantity", "value"], &rows)
            }
        })
    }
}

/// Fits Stark parameters to a dataset CSV. The sidecar supplies metadata
/// when present (and is cross-checked against the config); otherwise the
/// config fills it in.
pub fn cmd_fit(
    config: &RunConfig,
    registry: &StarkRegistry,
    dataset_path: &Path,
) -> CliResult<FitReport> {
    let donor = config.resolve_donor(registry)?;
    let f0 = config.resolve_f0(&donor)?;
    let fit_block = config.fit.clone().unwrap_or_default();

    let mut warnings = Vec::new();
    let sidecar = sidecar_path(dataset_path);
    let dataset = if sidecar.exists() {
        let dataset = EchoPhaseDataset::read(dataset_path)?;
        if dataset.metadata.donor != donor.species {
            warnings.push(format!(
                "dataset metadata says donor {}, config says {}",
                dataset.metadata.donor, donor.species
            ));
        }
        if (dataset.metadata.f0_hz - f0).abs() > 1e-6 * f0 {
            warnings.push(format!(
                "dataset metadata says f0 = {} Hz, config resolves to {} Hz",
                dataset.metadata.f0_hz, f0
            ));
        }
        dataset
    } else {
        let csv_text = std::fs::read_to_string(dataset_path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", dataset_path.display())))?;
        let metadata = DatasetMetadata {
            donor: donor.species,
            e_direction: config.field.e_direction,
            b_direction: config.field.b_direction,
            f0_hz: f0,
            t_e_s: config.resolve_sequence()?.t_e_s,
            polarity: config.field.polarity,
            seed: 0,
        };
        EchoPhaseDataset::from_csv_str(&csv_text, metadata)?
    };

    let dataset = if fit_block.average_lines {
        average_opposite_lines(&dataset)?
    } else {
        dataset
    };
    let options = FitOptions {
        mode: fit_block.mode,
        weighting: fit_block.weighting,
        fit_hyperfine: fit_block.fit_hyperfine,
        include_intercept: fit_block.include_intercept,
    };
    let result = global_fit(&dataset, &donor, f0, &options)?;
    Ok(FitReport { result, warnings })
}

/// Builds the tunability report for the configured orientation.
pub fn cmd_tunability(config: &RunConfig, registry: &StarkRegistry) -> CliResult<TunabilityReport> {
    let donor = config.resolve_donor(registry)?;
    let f0 = config.resolve_f0(&donor)?;
    let params = config.resolve_params(registry)?;
    let block = config.tunability.clone().unwrap_or_default();
    Ok(tunability(
        &params,
        &donor,
        f0,
        block.e_max_v_per_cm,
        block.linewidth_hz,
        &config.field.e_direction,
        &config.field.b_direction,
    )?)
}

/// Output of `gtensor`.
#[derive(Debug, Clone, Serialize)]
pub struct GTensorReport {
    pub donor: Species,
    pub g_perp: f64,
    pub g_par: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_um2_per_v2: Option<f64>,
    pub e_direction: MillerDirection,
    pub e_field_v_per_cm: f64,
    pub weights: [f64; 4],
    pub matrix: [[f64; 3]; 3],
    pub b_direction: MillerDirection,
    pub g_along_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonance_hz: Option<f64>,
}

impl GTensorReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Json => pretty_json(self),
            OutputFormat::Table | OutputFormat::Csv => {
                let mut out = format!(
                    "donor {}  g_perp {}  g_par {}\n",
                    self.donor, self.g_perp, self.g_par
                );
                if let Some(kappa) = self.kappa_um2_per_v2 {
                    out.push_str(&format!("kappa_um2_per_v2 {kappa}\n"));
                }
                out.push_str(&format!(
                    "E {} at {} V/cm, weights [{}, {}, {}, {}]\n",
                    self.e_direction,
                    self.e_field_v_per_cm,
                    self.weights[0],
                    self.weights[1],
                    self.weights[2],
                    self.weights[3],
                ));
                out.push_str("effective g-tensor:\n");
                for row in &self.matrix {
                    out.push_str(&format!(
                        "  {:>12.8}  {:>12.8}  {:>12.8}\n",
                        row[0], row[1], row[2]
                    ));
                }
                out.push_str(&format!(
                    "g along B {} = {:.8}\n",
                    self.b_direction, self.g_along_b
                ));
                if let Some(f) = self.resonance_hz {
                    out.push_str(&format!("resonance frequency = {f:.6e} Hz\n"));
                }
                Ok(out)
            }
        }
    }
}

/// Evaluates the effective g-tensor for the configured field, using equal
/// valley weights at zero field and the repopulation model otherwise.
pub fn cmd_gtensor(config: &RunConfig, registry: &StarkRegistry) -> CliResult<GTensorReport> {
    let donor = config.resolve_donor(registry)?;
    let vg = config.resolve_valley_g(registry)?;
    let valleys = ValleySet::germanium();
    let e_mag_cm = config.field.e_magnitude_v_per_cm.unwrap_or(0.0);

    let (weights, kappa) = if e_mag_cm != 0.0 {
        let model = config.resolve_repopulation(registry, &donor)?;
        let e_hat = config.field.e_direction.unit_vector();
        let e_um = e_mag_cm * gestark::constants::V_PER_CM_TO_V_PER_UM;
        (
            repopulation_weights(&model, &e_hat, e_um, &valleys),
            Some(model.kappa_um2_per_v2),
        )
    } else {
        (ValleyWeights::equal(), None)
    };

    let tensor = effective_g_tensor(&vg, &valleys, &weights);
    let b_hat = config.field.b_direction.unit_vector();
    let g_b = g_along(&tensor, &b_hat);
    let resonance_hz = config.field.b0_tesla.map(|b0| resonance_frequency(g_b, b0));

    let m = tensor.matrix();
    let mut matrix = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            matrix[i][j] = m[(i, j)];
        }
    }
    Ok(GTensorReport {
        donor: donor.species,
        g_perp: vg.g_perp(),
        g_par: vg.g_par(),
        kappa_um2_per_v2: kappa,
        e_direction: config.field.e_direction,
        e_field_v_per_cm: e_mag_cm,
        weights: *weights.alpha(),
        matrix,
        b_direction: config.field.b_direction,
        g_along_b: g_b,
        resonance_hz,
    })
}

/// Renders the tunability report in the chosen format.
pub fn render_tunability(report: &TunabilityReport, format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => pretty_json(report),
        OutputFormat::Table | OutputFormat::Csv => Ok(report.render_table()),
    }
}

fn pretty_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    Ok(text)
}
