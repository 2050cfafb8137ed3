//! Global least-squares extraction of Stark parameters from shift datasets.
//!
//! The shift model is linear in the fitted coefficients:
//!
//! ```text
//! df = a·E² + b·m_i·E² [+ c·E] [+ d]        (E in V/μm)
//! ```
//!
//! with eta_g = a/f0 and eta_A = b/A, so the fit is solved exactly in one
//! step. The linear term is only meaningful for unipolar data, where the
//! strain cross term survives; the optional intercept absorbs the constant
//! strain offset. The solve runs on a column-equilibrated SVD rather than
//! normal equations, and parameter covariance comes from the same
//! factorization.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::V_PER_CM_TO_V_PER_UM;
use crate::dataset::{DatasetRow, EchoPhaseDataset};
use crate::donor::DonorSpecies;
use crate::error::Error;
use crate::stark::HyperfineLine;
use crate::Result;

/// Which field program produced the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Purely even data; fit quadratic terms only.
    BipolarQuadratic,
    /// Single-polarity data; add a term linear in E for the strain cross term.
    UnipolarWithLinear,
}

/// Row weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseVariance,
}

/// Fit configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub mode: FitMode,
    pub weighting: Weighting,
    /// Fit the hyperfine term; requires per-line rows with at least two
    /// distinct m_i values and a configured hyperfine constant.
    pub fit_hyperfine: bool,
    /// Add a constant term to absorb the field-independent strain offset.
    pub include_intercept: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            mode: FitMode::BipolarQuadratic,
            weighting: Weighting::Uniform,
            fit_hyperfine: false,
            include_intercept: false,
        }
    }
}

/// A fitted value with its 1-standard-error uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Fit output. Coefficients are reported in the natural interface units:
/// eta in μm²/V², the linear coefficient in Hz·cm/V, the intercept in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub eta_g: Estimate,
    pub eta_a: Option<Estimate>,
    pub linear_coeff: Option<Estimate>,
    pub intercept: Option<Estimate>,
    /// Mean squared weighted residual per degree of freedom; absent when any
    /// row lacks a positive uncertainty to normalize against.
    pub chi2_reduced: Option<f64>,
    /// Unweighted residuals, Hz, in row order.
    pub residuals: Vec<f64>,
    pub dof: usize,
}

impl FitResult {
    /// The JSON interchange object:
    /// `{eta_g, eta_g_err, eta_a?, eta_a_err?, linear?, linear_err?, chi2_reduced, dof}`.
    pub fn to_interface_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        let num = |v: f64| serde_json::Value::from(v);
        map.insert("eta_g".into(), num(self.eta_g.value));
        map.insert("eta_g_err".into(), num(self.eta_g.std_error));
        if let Some(eta_a) = &self.eta_a {
            map.insert("eta_a".into(), num(eta_a.value));
            map.insert("eta_a_err".into(), num(eta_a.std_error));
        }
        if let Some(linear) = &self.linear_coeff {
            map.insert("linear".into(), num(linear.value));
            map.insert("linear_err".into(), num(linear.std_error));
        }
        if let Some(intercept) = &self.intercept {
            map.insert("intercept".into(), num(intercept.value));
            map.insert("intercept_err".into(), num(intercept.std_error));
        }
        map.insert(
            "chi2_reduced".into(),
            match self.chi2_reduced {
                Some(v) => num(v),
                None => serde_json::Value::Null,
            },
        );
        map.insert("dof".into(), serde_json::Value::from(self.dof as u64));
        serde_json::Value::Object(map)
    }
}

fn distinct_count(values: impl Iterator<Item = f64>) -> usize {
    let mut seen: Vec<u64> = Vec::new();
    for v in values {
        if !seen.contains(&v.to_bits()) {
            seen.push(v.to_bits());
        }
    }
    seen.len()
}

/// Weighted linear least squares for the Stark coefficients.
pub fn global_fit(
    data: &EchoPhaseDataset,
    donor: &DonorSpecies,
    f0_hz: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    let rows = &data.rows;
    let n = rows.len();
    if distinct_count(rows.iter().map(|r| r.e_field_v_per_cm)) < 3 {
        return Err(Error::RankDeficient(
            "need at least 3 distinct field values".into(),
        ));
    }

    let hyperfine_a = if opts.fit_hyperfine {
        if rows.iter().any(|r| r.m_i.projection().is_none()) {
            return Err(Error::RankDeficient(
                "hyperfine fit requires per-line rows, but averaged rows are present".into(),
            ));
        }
        if distinct_count(rows.iter().filter_map(|r| r.m_i.projection())) < 2 {
            return Err(Error::RankDeficient(
                "hyperfine fit requires at least 2 distinct m_i values".into(),
            ));
        }
        Some(
            donor
                .hyperfine_a_hz
                .ok_or(Error::MissingHyperfineConstant)?,
        )
    } else {
        None
    };

    // Column layout: [E², m·E²?, E?, 1?] with E in V/μm.
    let mut p = 1;
    let hyperfine_col = opts.fit_hyperfine.then(|| {
        let c = p;
        p += 1;
        c
    });
    let linear_col = (opts.mode == FitMode::UnipolarWithLinear).then(|| {
        let c = p;
        p += 1;
        c
    });
    let intercept_col = opts.include_intercept.then(|| {
        let c = p;
        p += 1;
        c
    });

    if n <= p {
        return Err(Error::InsufficientDegreesOfFreedom { rows: n, params: p });
    }
    let dof = n - p;

    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    let mut weights = DVector::from_element(n, 1.0);
    for (i, row) in rows.iter().enumerate() {
        let e_um = row.e_field_v_per_cm * V_PER_CM_TO_V_PER_UM;
        x[(i, 0)] = e_um * e_um;
        if let Some(c) = hyperfine_col {
            // Presence of the column implies every row carries a projection.
            x[(i, c)] = row.m_i.projection().unwrap() * (e_um * e_um);
        }
        if let Some(c) = linear_col {
            x[(i, c)] = e_um;
        }
        if let Some(c) = intercept_col {
            x[(i, c)] = 1.0;
        }
        y[i] = row.delta_f_hz;
        if opts.weighting == Weighting::InverseVariance {
            if row.sigma_hz <= 0.0 || row.sigma_hz.is_nan() {
                return Err(Error::NonPositiveSigma { row: i });
            }
            weights[i] = 1.0 / (row.sigma_hz * row.sigma_hz);
        }
    }

    // Row-scale by sqrt(w), then equilibrate columns to unit norm so the
    // rank test and the solve are insensitive to the wildly different
    // natural scales of E², m·E², E, and 1.
    let sqrt_w = weights.map(f64::sqrt);
    let mut xw = x.clone();
    let mut yw = y.clone();
    for i in 0..n {
        yw[i] *= sqrt_w[i];
        for j in 0..p {
            xw[(i, j)] *= sqrt_w[i];
        }
    }
    let mut col_scale = vec![1.0; p];
    for j in 0..p {
        let norm = xw.column(j).norm();
        if norm > 0.0 {
            col_scale[j] = norm;
            for i in 0..n {
                xw[(i, j)] /= norm;
            }
        }
    }

    let svd = xw.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let rank_tol = s_max * 1e-10;
    let rank = s.iter().filter(|&&sv| sv > rank_tol).count();
    if rank < p {
        return Err(Error::RankDeficient(format!(
            "design matrix rank {rank} < {p} parameters"
        )));
    }

    // beta_eq = V Σ⁻¹ Uᵀ yw on the equilibrated system.
    let uty = u.transpose() * &yw;
    let mut beta_eq: DVector<f64> = DVector::zeros(p);
    for k in 0..p {
        let coeff = uty[k] / s[k];
        for j in 0..p {
            beta_eq[j] += v_t[(k, j)] * coeff;
        }
    }
    let beta: Vec<f64> = (0..p).map(|j| beta_eq[j] / col_scale[j]).collect();

    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>())
        .collect();
    let weighted_rss: f64 = residuals
        .iter()
        .zip(weights.iter())
        .map(|(r, w)| w * r * r)
        .sum();

    // Covariance of beta_eq is V Σ⁻² Vᵀ; undo the equilibration, and for
    // uniform weighting scale by the residual variance estimate.
    let variance_scale = match opts.weighting {
        Weighting::Uniform => weighted_rss / dof as f64,
        Weighting::InverseVariance => 1.0,
    };
    let mut var = vec![0.0; p];
    for j in 0..p {
        let mut v_jj = 0.0;
        for k in 0..p {
            v_jj += v_t[(k, j)] * v_t[(k, j)] / (s[k] * s[k]);
        }
        var[j] = v_jj * variance_scale / (col_scale[j] * col_scale[j]);
    }

    let chi2_reduced = if rows.iter().all(|r| r.sigma_hz > 0.0) {
        let chi2: f64 = residuals
            .iter()
            .zip(rows.iter())
            .map(|(r, row)| (r / row.sigma_hz).powi(2))
            .sum();
        Some(chi2 / dof as f64)
    } else {
        None
    };

    let estimate = |idx: usize, scale: f64| Estimate {
        value: beta[idx] / scale,
        std_error: var[idx].sqrt() / scale.abs(),
    };
    let eta_g = estimate(0, f0_hz);
    let eta_a = hyperfine_col.map(|c| estimate(c, hyperfine_a.expect("checked above")));
    // The linear column was built against E in V/μm; report per V/cm.
    let linear_coeff = linear_col.map(|c| estimate(c, 1.0 / V_PER_CM_TO_V_PER_UM));
    let intercept = intercept_col.map(|c| estimate(c, 1.0));

    Ok(FitResult {
        eta_g,
        eta_a,
        linear_coeff,
        intercept,
        chi2_reduced,
        residuals,
        dof,
    })
}

/// Replaces each ±m_i pair at a common field value with its mean.
///
/// The hyperfine term is odd in m_i, so the averages carry the pure
/// spin-orbit shift; uncertainties combine in quadrature over two. Output
/// rows are labeled `averaged`, one per (E, |m_i|) pair, with |m_i|
/// ascending within each field value.
pub fn average_opposite_lines(data: &EchoPhaseDataset) -> Result<EchoPhaseDataset> {
    // Doubled m_i -> (shift, sigma) within one field value.
    type LineGroup = std::collections::BTreeMap<i64, (f64, f64)>;
    // E bits in first-seen order, then its line group.
    let mut field_order: Vec<u64> = Vec::new();
    let mut groups: std::collections::HashMap<u64, LineGroup> = std::collections::HashMap::new();
    for row in &data.rows {
        let m = row.m_i.projection().ok_or_else(|| {
            Error::InvalidDataset("cannot average a dataset that already has averaged rows".into())
        })?;
        let doubled_f = 2.0 * m;
        if (doubled_f - doubled_f.round()).abs() > 1e-9 {
            return Err(Error::InvalidDataset(format!(
                "m_i = {m} is not a half-integer projection"
            )));
        }
        let doubled = doubled_f.round() as i64;
        let bits = row.e_field_v_per_cm.to_bits();
        if !field_order.contains(&bits) {
            field_order.push(bits);
        }
        let group = groups.entry(bits).or_default();
        if group
            .insert(doubled, (row.delta_f_hz, row.sigma_hz))
            .is_some()
        {
            return Err(Error::DuplicateRow {
                e_field: row.e_field_v_per_cm,
                m_i: m,
            });
        }
    }

    let mut rows = Vec::new();
    for bits in field_order {
        let e_field = f64::from_bits(bits);
        let group = &groups[&bits];
        let mut magnitudes: Vec<i64> = group.keys().map(|d| d.abs()).collect();
        magnitudes.sort_unstable();
        magnitudes.dedup();
        for doubled_abs in magnitudes {
            if doubled_abs == 0 {
                let (df, sigma) = group[&0];
                rows.push(DatasetRow {
                    e_field_v_per_cm: e_field,
                    m_i: HyperfineLine::Averaged,
                    delta_f_hz: df,
                    sigma_hz: sigma,
                });
                continue;
            }
            let plus = group.get(&doubled_abs);
            let minus = group.get(&(-doubled_abs));
            match (plus, minus) {
                (Some(&(df_p, s_p)), Some(&(df_m, s_m))) => rows.push(DatasetRow {
                    e_field_v_per_cm: e_field,
                    m_i: HyperfineLine::Averaged,
                    delta_f_hz: 0.5 * (df_p + df_m),
                    sigma_hz: (s_p * s_p + s_m * s_m).sqrt() / 2.0,
                }),
                _ => {
                    return Err(Error::UnpairedLines {
                        e_field,
                        m_i: f64::from(doubled_abs as i32) / 2.0,
                    })
                }
            }
        }
    }
    EchoPhaseDataset::new(rows, data.metadata.clone())
}

/// Phase noise level that maps to a frequency uncertainty of `fraction`
/// times the largest |shift| in the dataset, at the dataset's t_E.
pub fn phase_sigma_for_fraction(rows: &[DatasetRow], fraction: f64, t_e_s: f64) -> f64 {
    let max_shift = rows.iter().map(|r| r.delta_f_hz.abs()).fold(0.0, f64::max);
    fraction * max_shift * 2.0 * PI * t_e_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetMetadata;
    use crate::donor::Species;
    use crate::experiment::{generate_dataset, NoiseModel, PulseSequence};
    use crate::geometry::MillerDirection;
    use crate::stark::{FieldConfiguration, Polarity, StarkParameters, StrainConfiguration};
    use approx::assert_relative_eq;

    fn arsenic_fixture() -> DonorSpecies {
        DonorSpecies::arsenic().with_hyperfine_a(1.0e8).unwrap()
    }

    fn field_config(polarity: Polarity) -> FieldConfiguration {
        FieldConfiguration::new(
            MillerDirection::new(0, 0, 1).unwrap(),
            100.0,
            polarity,
            MillerDirection::new(1, 1, 0).unwrap(),
            9.6e9,
        )
        .unwrap()
    }

    fn sweep() -> Vec<f64> {
        (0..8).map(|i| 100.0 * i as f64 / 7.0).collect()
    }

    fn noiseless_bipolar(params: &StarkParameters, donor: &DonorSpecies) -> EchoPhaseDataset {
        let seq = PulseSequence::standard(20e-6, 10e-6, Polarity::Bipolar).unwrap();
        generate_dataset(
            donor,
            params,
            &sweep(),
            &field_config(Polarity::Bipolar),
            &seq,
            &NoiseModel::noiseless(0),
            &StrainConfiguration::none(),
        )
        .unwrap()
        .dataset
    }

    #[test]
    fn noiseless_round_trip_recovers_both_parameters() {
        let truth = StarkParameters::explicit(-1.8e-3, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let data = noiseless_bipolar(&truth, &donor);
        let opts = FitOptions {
            fit_hyperfine: true,
            ..FitOptions::default()
        };
        let fit = global_fit(&data, &donor, 9.6e9, &opts).unwrap();
        assert_relative_eq!(fit.eta_g.value, -1.8e-3, max_relative = 1e-10);
        assert_relative_eq!(fit.eta_a.unwrap().value, -1.3e-1, max_relative = 1e-10);
        assert_eq!(fit.dof, 30);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-6));
    }

    #[test]
    fn averaged_only_fit_recovers_spin_orbit_term() {
        let truth = StarkParameters::explicit(1.7e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let data = noiseless_bipolar(&truth, &donor);
        let fit = global_fit(&data, &donor, 9.6e9, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.eta_g.value, 1.7e-2, max_relative = 1e-10);
        assert!(fit.eta_a.is_none());
        assert!(fit.linear_coeff.is_none());
    }

    #[test]
    fn single_field_value_is_rank_deficient() {
        let donor = arsenic_fixture();
        let truth = StarkParameters::explicit(1e-2, Some(-1e-1)).unwrap();
        let seq = PulseSequence::standard(20e-6, 10e-6, Polarity::Bipolar).unwrap();
        let data = generate_dataset(
            &donor,
            &truth,
            &[50.0, 50.0, 50.0],
            &field_config(Polarity::Bipolar),
            &seq,
            &NoiseModel::noiseless(0),
            &StrainConfiguration::none(),
        )
        .unwrap()
        .dataset;
        assert!(matches!(
            global_fit(&data, &donor, 9.6e9, &FitOptions::default()),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn hyperfine_fit_without_constant_is_rejected() {
        let truth = StarkParameters::explicit(-1.8e-3, Some(-1.3e-1)).unwrap();
        let with_a = arsenic_fixture();
        let data = noiseless_bipolar(&truth, &with_a);
        let donor_without_a = DonorSpecies::arsenic();
        let opts = FitOptions {
            fit_hyperfine: true,
            ..FitOptions::default()
        };
        assert!(matches!(
            global_fit(&data, &donor_without_a, 9.6e9, &opts),
            Err(Error::MissingHyperfineConstant)
        ));
    }

    #[test]
    fn hyperfine_fit_on_averaged_rows_is_rejected() {
        let truth = StarkParameters::explicit(1.7e-2, None).unwrap();
        let donor = arsenic_fixture();
        let data = noiseless_bipolar(&truth, &donor);
        let opts = FitOptions {
            fit_hyperfine: true,
            ..FitOptions::default()
        };
        assert!(matches!(
            global_fit(&data, &donor, 9.6e9, &opts),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn fit_is_invariant_under_row_permutation_and_sigma_scale() {
        let truth = StarkParameters::explicit(-3.0e-2, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let seq = PulseSequence::standard(40e-6, 30e-6, Polarity::Bipolar).unwrap();
        let noise = NoiseModel::for_sigma_hz(50.0, 30e-6, 9).unwrap();
        let base = generate_dataset(
            &donor,
            &truth,
            &sweep(),
            &field_config(Polarity::Bipolar),
            &seq,
            &noise,
            &StrainConfiguration::none(),
        )
        .unwrap()
        .dataset;
        let opts = FitOptions {
            fit_hyperfine: true,
            weighting: Weighting::InverseVariance,
            ..FitOptions::default()
        };
        let fit = global_fit(&base, &donor, 9.6e9, &opts).unwrap();

        let mut shuffled_rows = base.rows.clone();
        shuffled_rows.reverse();
        shuffled_rows.swap(3, 17);
        let shuffled = EchoPhaseDataset::new(shuffled_rows, base.metadata.clone()).unwrap();
        let fit_shuffled = global_fit(&shuffled, &donor, 9.6e9, &opts).unwrap();
        assert_relative_eq!(
            fit.eta_g.value,
            fit_shuffled.eta_g.value,
            max_relative = 1e-10
        );

        let scaled_rows: Vec<DatasetRow> = base
            .rows
            .iter()
            .map(|r| DatasetRow {
                sigma_hz: 3.0 * r.sigma_hz,
                ..*r
            })
            .collect();
        let scaled = EchoPhaseDataset::new(scaled_rows, base.metadata.clone()).unwrap();
        let fit_scaled = global_fit(&scaled, &donor, 9.6e9, &opts).unwrap();
        assert_relative_eq!(
            fit.eta_g.value,
            fit_scaled.eta_g.value,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            fit.eta_g.std_error * 3.0,
            fit_scaled.eta_g.std_error,
            max_relative = 1e-12
        );
    }

    #[test]
    fn linear_term_vanishes_on_bipolar_data() {
        let truth = StarkParameters::explicit(1.7e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let seq = PulseSequence::standard(20e-6, 10e-6, Polarity::Bipolar).unwrap();
        let strain = StrainConfiguration {
            e_internal_v_per_cm: 50.0,
        };
        let data = generate_dataset(
            &donor,
            &truth,
            &sweep(),
            &field_config(Polarity::Bipolar),
            &seq,
            &NoiseModel::noiseless(0),
            &strain,
        )
        .unwrap()
        .dataset;
        let opts = FitOptions {
            mode: FitMode::UnipolarWithLinear,
            include_intercept: true,
            ..FitOptions::default()
        };
        let fit = global_fit(&data, &donor, 9.6e9, &opts).unwrap();
        // Analytic unipolar value for comparison: 2*eta_g*f0*E_int (per V/cm).
        let unipolar_linear = 2.0 * 1.7e-2 * 9.6e9 * 50.0 * 1e-8;
        assert!(fit.linear_coeff.unwrap().value.abs() < 1e-12 * unipolar_linear);
        // The intercept picks up the strain offset eta_g*f0*E_int².
        assert_relative_eq!(
            fit.intercept.unwrap().value,
            1.7e-2 * 9.6e9 * 50.0 * 50.0 * 1e-8,
            max_relative = 1e-8
        );
    }

    #[test]
    fn unipolar_fit_recovers_the_analytic_linear_term() {
        let truth = StarkParameters::explicit(1.7e-2, None).unwrap();
        let donor = DonorSpecies::arsenic();
        let seq = PulseSequence::standard(20e-6, 10e-6, Polarity::Unipolar).unwrap();
        let strain = StrainConfiguration {
            e_internal_v_per_cm: 50.0,
        };
        let data = generate_dataset(
            &donor,
            &truth,
            &sweep(),
            &field_config(Polarity::Unipolar),
            &seq,
            &NoiseModel::noiseless(0),
            &strain,
        )
        .unwrap()
        .dataset;
        let opts = FitOptions {
            mode: FitMode::UnipolarWithLinear,
            include_intercept: true,
            ..FitOptions::default()
        };
        let fit = global_fit(&data, &donor, 9.6e9, &opts).unwrap();
        let expected = 2.0 * 1.7e-2 * 9.6e9 * 50.0 * 1e-8;
        assert_relative_eq!(
            fit.linear_coeff.unwrap().value,
            expected,
            max_relative = 1e-8
        );
        assert_relative_eq!(fit.eta_g.value, 1.7e-2, max_relative = 1e-8);
    }

    #[test]
    fn averaging_pairs_lines_and_cancels_the_odd_part() {
        let truth = StarkParameters::explicit(-1.8e-3, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let data = noiseless_bipolar(&truth, &donor);
        let averaged = average_opposite_lines(&data).unwrap();
        // Two |m| pairs per field value.
        assert_eq!(averaged.rows.len(), 2 * sweep().len());
        let so = StarkParameters::explicit(-1.8e-3, None).unwrap();
        for row in &averaged.rows {
            let expected = crate::stark::stark_shift(
                &so,
                &donor,
                9.6e9,
                HyperfineLine::Averaged,
                row.e_field_v_per_cm,
            )
            .unwrap();
            assert_relative_eq!(row.delta_f_hz, expected, epsilon = 1e-9);
            assert_eq!(row.m_i, HyperfineLine::Averaged);
        }
    }

    #[test]
    fn averaging_arithmetic_and_error_combination() {
        let metadata = DatasetMetadata {
            donor: Species::As75,
            e_direction: MillerDirection::new(0, 0, 1).unwrap(),
            b_direction: MillerDirection::new(1, 1, 0).unwrap(),
            f0_hz: 9.6e9,
            t_e_s: 1e-5,
            polarity: Polarity::Bipolar,
            seed: 0,
        };
        let row = |m: f64, df: f64, sigma: f64| DatasetRow {
            e_field_v_per_cm: 40.0,
            m_i: HyperfineLine::Projection(m),
            delta_f_hz: df,
            sigma_hz: sigma,
        };
        let data = EchoPhaseDataset::new(
            vec![row(1.5, -10.0, 2.0), row(-1.5, -4.0, 2.0)],
            metadata.clone(),
        )
        .unwrap();
        let averaged = average_opposite_lines(&data).unwrap();
        assert_eq!(averaged.rows.len(), 1);
        assert_eq!(averaged.rows[0].delta_f_hz, -7.0);
        assert_relative_eq!(
            averaged.rows[0].sigma_hz,
            2.0 / 2.0_f64.sqrt(),
            max_relative = 1e-12
        );

        let unpaired = EchoPhaseDataset::new(vec![row(1.5, -10.0, 2.0)], metadata.clone()).unwrap();
        assert!(matches!(
            average_opposite_lines(&unpaired),
            Err(Error::UnpairedLines { .. })
        ));

        let duplicated =
            EchoPhaseDataset::new(vec![row(1.5, -10.0, 2.0), row(1.5, -9.0, 2.0)], metadata)
                .unwrap();
        assert!(matches!(
            average_opposite_lines(&duplicated),
            Err(Error::DuplicateRow { .. })
        ));
    }

    #[test]
    fn noisy_fit_is_calibrated_and_unbiased() {
        // Reduced-size version of the acceptance Monte Carlo.
        let truth = StarkParameters::explicit(-1.8e-3, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let f0 = 9.6e9;
        let seq = PulseSequence::standard(20e-6, 10e-6, Polarity::Bipolar).unwrap();
        let clean = noiseless_bipolar(&truth, &donor);
        let phase_sigma = phase_sigma_for_fraction(&clean.rows, 0.05, seq.t_e_s);

        let n_seeds = 300;
        let opts = FitOptions {
            fit_hyperfine: true,
            weighting: Weighting::InverseVariance,
            ..FitOptions::default()
        };
        let mut covered = 0;
        let mut estimates = Vec::with_capacity(n_seeds);
        for seed in 0..n_seeds as u64 {
            let noise = NoiseModel::new(phase_sigma, 1000 + seed).unwrap();
            let data = generate_dataset(
                &donor,
                &truth,
                &sweep(),
                &field_config(Polarity::Bipolar),
                &seq,
                &noise,
                &StrainConfiguration::none(),
            )
            .unwrap()
            .dataset;
            let fit = global_fit(&data, &donor, f0, &opts).unwrap();
            if (fit.eta_g.value - -1.8e-3).abs() <= 3.0 * fit.eta_g.std_error {
                covered += 1;
            }
            estimates.push(fit.eta_g.value);
        }
        assert!(covered as f64 / n_seeds as f64 >= 0.99, "covered {covered}");

        let mean = estimates.iter().sum::<f64>() / n_seeds as f64;
        let sd = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
            / (n_seeds as f64 - 1.0))
            .sqrt();
        let sem = sd / (n_seeds as f64).sqrt();
        assert!((mean - -1.8e-3).abs() <= 2.0 * sem);
    }

    #[test]
    fn residuals_of_a_correct_model_have_zero_mean() {
        let truth = StarkParameters::explicit(-3.0e-2, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let seq = PulseSequence::standard(20e-6, 10e-6, Polarity::Bipolar).unwrap();
        let clean = noiseless_bipolar(&truth, &donor);
        let phase_sigma = phase_sigma_for_fraction(&clean.rows, 0.05, seq.t_e_s);
        let data = generate_dataset(
            &donor,
            &truth,
            &sweep(),
            &field_config(Polarity::Bipolar),
            &seq,
            &NoiseModel::new(phase_sigma, 77).unwrap(),
            &StrainConfiguration::none(),
        )
        .unwrap()
        .dataset;
        let opts = FitOptions {
            fit_hyperfine: true,
            weighting: Weighting::InverseVariance,
            ..FitOptions::default()
        };
        let fit = global_fit(&data, &donor, 9.6e9, &opts).unwrap();
        let n = fit.residuals.len() as f64;
        let mean = fit.residuals.iter().sum::<f64>() / n;
        let sd = (fit
            .residuals
            .iter()
            .map(|r| (r - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt();
        assert!(mean.abs() < 2.0 * sd / n.sqrt());
        // chi2 per dof should be order one.
        let chi2 = fit.chi2_reduced.unwrap();
        assert!(chi2 > 0.3 && chi2 < 3.0, "chi2_reduced = {chi2}");
    }

    #[test]
    fn interface_json_shape() {
        let truth = StarkParameters::explicit(-1.8e-3, Some(-1.3e-1)).unwrap();
        let donor = arsenic_fixture();
        let data = noiseless_bipolar(&truth, &donor);
        let opts = FitOptions {
            fit_hyperfine: true,
            ..FitOptions::default()
        };
        let fit = global_fit(&data, &donor, 9.6e9, &opts).unwrap();
        let json = fit.to_interface_json();
        assert!(json.get("eta_g").is_some());
        assert!(json.get("eta_g_err").is_some());
        assert!(json.get("eta_a").is_some());
        assert!(json.get("linear").is_none());
        assert_eq!(json.get("dof").unwrap().as_u64(), Some(30));
        // Noiseless rows have sigma = 0, so chi2 cannot be normalized.
        assert!(json.get("chi2_reduced").unwrap().is_null());
    }
}
