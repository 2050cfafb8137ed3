//! Per-valley g-tensors, the weighted effective g-tensor, resonance
//! frequency, and a phenomenological valley-repopulation model.
//!
//! Each valley carries an axially symmetric tensor with principal values
//! (g_perp, g_perp, g_par) about its ⟨111⟩ axis. The donor ground state is a
//! weighted superposition of the four valleys, so the effective tensor is
//! the weight-sum of the rotated valley tensors. With equal weights the sum
//! collapses to the isotropic value (2·g_perp + g_par)/3.

use nalgebra::Matrix3;

use crate::constants::BOHR_MAGNETON_HZ_PER_T;
use crate::error::Error;
use crate::geometry::{projection_squared, UnitVector3, ValleySet, GEOMETRY_TOL};
use crate::Result;

/// Principal g values of a single conduction-band valley.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValleyGTensor {
    g_perp: f64,
    g_par: f64,
}

impl ValleyGTensor {
    pub fn new(g_perp: f64, g_par: f64) -> Result<Self> {
        if g_par <= 0.0 || g_perp < g_par || !g_perp.is_finite() || g_par.is_nan() {
            return Err(Error::InvalidGValues { g_perp, g_par });
        }
        Ok(Self { g_perp, g_par })
    }

    pub fn g_perp(&self) -> f64 {
        self.g_perp
    }

    pub fn g_par(&self) -> f64 {
        self.g_par
    }

    /// Isotropic average (2·g_perp + g_par)/3, the equal-weight value.
    pub fn isotropic_average(&self) -> f64 {
        (2.0 * self.g_perp + self.g_par) / 3.0
    }
}

/// Valley occupation amplitudes α, each in [0, 1], summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValleyWeights {
    alpha: [f64; 4],
}

impl ValleyWeights {
    pub fn new(alpha: [f64; 4]) -> Result<Self> {
        let sum = (alpha[0] + alpha[1]) + (alpha[2] + alpha[3]);
        let in_range = alpha.iter().all(|a| (0.0..=1.0).contains(a));
        if !in_range || (sum - 1.0).abs() > GEOMETRY_TOL {
            return Err(Error::InvalidWeights { sum });
        }
        Ok(Self { alpha })
    }

    /// The zero-field equal occupation (1/4, 1/4, 1/4, 1/4).
    pub fn equal() -> Self {
        Self { alpha: [0.25; 4] }
    }

    pub fn alpha(&self) -> &[f64; 4] {
        &self.alpha
    }
}

/// Symmetric 3×3 effective g-tensor in the crystal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveGTensor {
    m: Matrix3<f64>,
}

impl EffectiveGTensor {
    /// Wraps a matrix, rejecting asymmetry beyond [`GEOMETRY_TOL`].
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let asymmetry = (m - m.transpose()).abs().max();
        if asymmetry > GEOMETRY_TOL {
            return Err(Error::AsymmetricTensor { asymmetry });
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut ev: Vec<f64> = self
            .m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        [ev[0], ev[1], ev[2]]
    }
}

/// Single-valley tensor rotated into the crystal frame:
/// g_perp·I + (g_par − g_perp)·n̂n̂ᵀ.
pub fn valley_tensor_in_crystal_frame(vg: &ValleyGTensor, axis: &UnitVector3) -> EffectiveGTensor {
    let n = axis.as_vector();
    let m = Matrix3::identity() * vg.g_perp() + (n * n.transpose()) * (vg.g_par() - vg.g_perp());
    EffectiveGTensor { m }
}

/// Weighted sum of the four valley tensors.
pub fn effective_g_tensor(
    vg: &ValleyGTensor,
    valleys: &ValleySet,
    weights: &ValleyWeights,
) -> EffectiveGTensor {
    let mut m = Matrix3::zeros();
    for (axis, &alpha) in valleys.axes().iter().zip(weights.alpha()) {
        m += valley_tensor_in_crystal_frame(vg, axis).m * alpha;
    }
    EffectiveGTensor { m }
}

/// Effective g-factor for resonance along B̂: |g·B̂| (g symmetric).
pub fn g_along(tensor: &EffectiveGTensor, b_hat: &UnitVector3) -> f64 {
    (tensor.m * b_hat.as_vector()).norm()
}

/// Analytic derivative of [`g_along`] with respect to each valley weight.
///
/// The effective tensor is linear in the weights, so
/// ∂g/∂αᵢ = (g·B̂)·(Tᵢ·B̂)/|g·B̂| with Tᵢ the i-th valley tensor.
pub fn g_along_weight_gradient(
    vg: &ValleyGTensor,
    valleys: &ValleySet,
    weights: &ValleyWeights,
    b_hat: &UnitVector3,
) -> [f64; 4] {
    let tensor = effective_g_tensor(vg, valleys, weights);
    let gb = tensor.m * b_hat.as_vector();
    let norm = gb.norm();
    let mut grad = [0.0; 4];
    for (i, axis) in valleys.axes().iter().enumerate() {
        let tb = valley_tensor_in_crystal_frame(vg, axis).m * b_hat.as_vector();
        grad[i] = gb.dot(&tb) / norm;
    }
    grad
}

/// Spin resonance frequency f = g·μ_B·B₀/h in Hz.
pub fn resonance_frequency(g: f64, b0_tesla: f64) -> f64 {
    g * BOHR_MAGNETON_HZ_PER_T * b0_tesla
}

/// Quadratic valley-repopulation coupling, μm²/V².
///
/// The occupation law is the minimal symmetry-respecting quadratic form
/// αᵢ ∝ 1/4 + κ·[(ê·n̂ᵢ)² − 1/3]·E²: it is even in E, vanishes identically
/// for E along ⟨100⟩ (all projections equal), and preserves Σα = 1 before
/// clamping. The sign of κ is fixed by calibration, not by this type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepopulationModel {
    pub kappa_um2_per_v2: f64,
}

impl RepopulationModel {
    pub fn new(kappa_um2_per_v2: f64) -> Result<Self> {
        if !kappa_um2_per_v2.is_finite() {
            return Err(Error::CalibrationFailed(format!(
                "kappa must be finite, got {kappa_um2_per_v2}"
            )));
        }
        Ok(Self { kappa_um2_per_v2 })
    }
}

/// Valley occupations under an electric field of magnitude `e_v_per_um`
/// along `e_hat`.
///
/// Raw weights are clamped to [0, 1] and renormalized. The sum is formed
/// pairwise so that four identical raw weights renormalize to exactly 1/4
/// each; E = 0 returns exact quarters.
pub fn repopulation_weights(
    model: &RepopulationModel,
    e_hat: &UnitVector3,
    e_v_per_um: f64,
    valleys: &ValleySet,
) -> ValleyWeights {
    let t = model.kappa_um2_per_v2 * e_v_per_um * e_v_per_um;
    let mut alpha = [0.0; 4];
    for (i, axis) in valleys.axes().iter().enumerate() {
        let bracket = projection_squared(e_hat, axis) - 1.0 / 3.0;
        alpha[i] = (0.25 + t * bracket).clamp(0.0, 1.0);
    }
    let sum = (alpha[0] + alpha[1]) + (alpha[2] + alpha[3]);
    for a in &mut alpha {
        *a /= sum;
    }
    ValleyWeights { alpha }
}

/// Relative calibration reference: E ∥ B ∥ [111].
fn reference_direction() -> UnitVector3 {
    UnitVector3::from_vector(nalgebra::Vector3::new(1.0, 1.0, 1.0)).expect("nonzero")
}

/// Solves for κ such that the repopulation model reproduces a measured
/// spin-orbit Stark parameter at the E ∥ B ∥ [111] reference orientation.
///
/// The condition is [g(κ, E_ref) − g(0)]/g0 = eta_g·E_ref² with E_ref in
/// V/μm. Solved by bisection to 1e-10 relative tolerance on κ; the sign of
/// κ is whatever the measured eta_g demands.
pub fn calibrate_kappa(
    vg: &ValleyGTensor,
    valleys: &ValleySet,
    g0: f64,
    eta_g: f64,
    e_ref_v_per_um: f64,
) -> Result<RepopulationModel> {
    if e_ref_v_per_um <= 0.0 || e_ref_v_per_um.is_nan() {
        return Err(Error::CalibrationFailed(format!(
            "reference field must be positive, got {e_ref_v_per_um}"
        )));
    }
    let e_hat = reference_direction();
    let b_hat = reference_direction();
    let g_zero = g_along(
        &effective_g_tensor(vg, valleys, &ValleyWeights::equal()),
        &b_hat,
    );
    let target = eta_g * e_ref_v_per_um * e_ref_v_per_um;
    let objective = |kappa: f64| -> f64 {
        let model = RepopulationModel {
            kappa_um2_per_v2: kappa,
        };
        let w = repopulation_weights(&model, &e_hat, e_ref_v_per_um, valleys);
        let g = g_along(&effective_g_tensor(vg, valleys, &w), &b_hat);
        (g - g_zero) / g0 - target
    };

    // Expand a symmetric bracket until the objective changes sign; the
    // clamped weights saturate g, so an unreachable target never brackets.
    let mut half_width = 1.0;
    let (mut lo, mut hi) = loop {
        let f_lo = objective(-half_width);
        let f_hi = objective(half_width);
        if f_lo == 0.0 {
            return RepopulationModel::new(-half_width);
        }
        if f_hi == 0.0 {
            return RepopulationModel::new(half_width);
        }
        if f_lo * f_hi < 0.0 {
            break (-half_width, half_width);
        }
        half_width *= 2.0;
        if half_width > 1e9 {
            return Err(Error::CalibrationFailed(format!(
                "target relative shift {target:e} is outside the model's reachable range"
            )));
        }
    };

    let mut f_lo = objective(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = objective(mid);
        if f_mid == 0.0 {
            return RepopulationModel::new(mid);
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if (hi - lo).abs() <= 1e-10 * mid.abs().max(1e-30) {
            break;
        }
    }
    RepopulationModel::new(0.5 * (lo + hi))
}
