//! Balanced homodyne detection of the ancilla quadrature `x^(θ)`.
//!
//! # Phase convention
//!
//! For a coherent label `μ` the wavefunction is
//! `⟨x|μ⟩ = π^{-1/4} exp(-(x-m)²/2) exp(i m' x - i m m'/2)` with
//! `m = √2 Re(μ e^{-iθ})` and `m' = -√2 Im(μ e^{-iθ})`. For `μ = α e^{inφ}` this
//! gives `m = √2α cos(nφ-θ)` and `m' = √2α sin(θ-nφ)`. The sign of `m'` is the
//! opposite of the displacement-operator convention; it is the complex
//! conjugate wavefunction, equivalent to `(θ, φ) → (-θ, -φ)`. Every modulus
//! (densities, β, the Schmidt weights) is unaffected. To first order in `nφ`
//! the per-photon phase is `-√2αφx cos θ + α²φ cos 2θ`, which coincides with
//! [`gamma`] at `θ = π/2`.
//!
//! All Gaussian exponents are evaluated in the offset `u = x - √2α cos θ`,
//! and per-`n` quantities as differences from the `n = 0` term, so ancilla
//! amplitudes of order 10⁷ lose no precision.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kerr::HybridState;
use crate::schmidt::SchmidtDiagonalState;

/// `π^{-1/4}`.
const VACUUM_PEAK_AMPLITUDE: f64 = 0.751_125_544_464_942_5;
/// `π^{-1/2}`.
pub const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Smallest outcome density at which a projection is still defined.
pub const MIN_PROJECTION_DENSITY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneSetting {
    pub theta: f64,
    /// Half-width of the integration/sampling grid around `√2α cos θ`.
    pub x_grid_halfwidth: f64,
    pub grid_points: usize,
}

impl HomodyneSetting {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            x_grid_halfwidth: 8.0,
            grid_points: 16384,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 256 {
            return Err(Error::Config(format!(
                "grid_points must be at least 256, got {}",
                self.grid_points
            )));
        }
        if !(self.x_grid_halfwidth > 0.0) || !self.x_grid_halfwidth.is_finite() {
            return Err(Error::Config(format!(
                "grid half-width must be positive, got {}",
                self.x_grid_halfwidth
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::Config("theta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub x_theta: f64,
    /// Exact-sum density at `x_theta`.
    pub density: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `(α² sin 2θ - 2√2 x α sin θ)/2`, removed together with `γ n` by the feed-forward.
    pub global_phase: f64,
}

/// Which approximation of the per-`n` amplitude ratio a closed-form density uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityApprox {
    /// `λ e^{β}`
    ExpBeta,
    /// `λ (1 + β)`
    LinearBeta,
}

/// Mean of the `n = 0` quadrature distribution, `√2α cos θ`.
pub fn quadrature_center(alpha: f64, theta: f64) -> f64 {
    SQRT_2 * alpha * theta.cos()
}

/// `β` as a function of the offset `u = x - √2α cos θ`: `√2 α φ sin θ · u`.
pub fn beta_at_offset(alpha: f64, phi: f64, theta: f64, offset: f64) -> f64 {
    SQRT_2 * alpha * phi * theta.sin() * offset
}

/// `β(x) = √2 α x φ sin θ - α² φ sin 2θ`, evaluated in offset form.
pub fn beta(alpha: f64, phi: f64, theta: f64, x: f64) -> f64 {
    beta_at_offset(alpha, phi, theta, x - quadrature_center(alpha, theta))
}

/// `γ(x) = √2 α φ x cos θ + α² φ cos 2θ`.
pub fn gamma(alpha: f64, phi: f64, theta: f64, x: f64) -> f64 {
    SQRT_2 * alpha * phi * x * theta.cos() + alpha * alpha * phi * (2.0 * theta).cos()
}

/// `(α² sin 2θ - 2√2 x α sin θ)/2`.
pub fn global_phase(alpha: f64, theta: f64, x: f64) -> f64 {
    0.5 * (alpha * alpha * (2.0 * theta).sin() - 2.0 * SQRT_2 * x * alpha * theta.sin())
}

pub fn coherent_quadrature_wavefunction(label: Complex64, theta: f64, x: f64) -> Complex64 {
    let rotated = label * Complex64::from_polar(1.0, -theta);
    let mean = SQRT_2 * rotated.re;
    let conj_mean = -SQRT_2 * rotated.im;
    let envelope = VACUUM_PEAK_AMPLITUDE * (-(x - mean).powi(2) / 2.0).exp();
    Complex64::from_polar(envelope, conj_mean * x - 0.5 * mean * conj_mean)
}

/// Per-`n` quadrature data of the hybrid state, relative to the `n = 0` term.
#[derive(Debug, Clone, Copy)]
struct LabelGeometry {
    /// `m_n - m_0 = -2√2 α sin(nφ/2) sin(nφ/2 - θ)`
    mean_shift: f64,
    /// `Φ_n - Φ_0` of the wavefunction phase, given `x`.
    phase_shift: f64,
}

fn mean_shift(alpha: f64, phi: f64, theta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let half = 0.5 * n as f64 * phi;
    -2.0 * SQRT_2 * alpha * half.sin() * (half - theta).sin()
}

fn label_geometry(alpha: f64, phi: f64, theta: f64, x: f64, n: usize) -> LabelGeometry {
    if n == 0 {
        return LabelGeometry {
            mean_shift: 0.0,
            phase_shift: 0.0,
        };
    }
    let half = 0.5 * n as f64 * phi;
    let full = n as f64 * phi;
    let mean_shift = mean_shift(alpha, phi, theta, n);
    let phase_shift = -2.0 * SQRT_2 * alpha * x * (theta - half).cos() * half.sin()
        + alpha * alpha * (2.0 * theta - full).cos() * full.sin();
    LabelGeometry {
        mean_shift,
        phase_shift,
    }
}

/// Phase `Φ_0 = √2αx sin θ - α² sin 2θ / 2` of the `n = 0` wavefunction.
fn base_phase(alpha: f64, theta: f64, x: f64) -> f64 {
    SQRT_2 * alpha * x * theta.sin() - 0.5 * alpha * alpha * (2.0 * theta).sin()
}

/// Exact density at offset `u = x - √2α cos θ`.
pub fn density_exact_at_offset(hybrid: &HybridState, theta: f64, offset: f64) -> f64 {
    let (alpha, phi) = (hybrid.alpha(), hybrid.phi());
    hybrid
        .schmidt()
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(n, &p)| p * (-(offset - mean_shift(alpha, phi, theta, n)).powi(2)).exp())
        .sum::<f64>()
        * FRAC_1_SQRT_PI
}

/// `π(x) = Σ |c_n|² |⟨x|α e^{inφ}⟩|²` without linearization.
pub fn density_exact(hybrid: &HybridState, theta: f64, x: f64) -> f64 {
    density_exact_at_offset(hybrid, theta, x - quadrature_center(hybrid.alpha(), theta))
}

/// Largest `|m_n - m_0|` over populated levels; the exact density is a
/// mixture of unit-width Gaussians centered within this distance of `√2α cos θ`.
pub fn max_component_offset(hybrid: &HybridState, theta: f64) -> f64 {
    hybrid
        .schmidt()
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-30)
        .map(|(n, _)| mean_shift(hybrid.alpha(), hybrid.phi(), theta, n).abs())
        .fold(0.0, f64::max)
}

/// Closed-form density at offset `u`, treating the Schmidt ratio as geometric.
pub fn density_closed_form_at_offset(
    lambda: f64,
    alpha: f64,
    phi: f64,
    theta: f64,
    offset: f64,
    variant: DensityApprox,
) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let b = beta_at_offset(alpha, phi, theta, offset);
    let factor = match variant {
        DensityApprox::ExpBeta => b.exp(),
        DensityApprox::LinearBeta => 1.0 + b,
    };
    let lambda_prime = factor * lambda;
    if lambda_prime.abs() >= 1.0 || lambda_prime.is_nan() {
        return Err(Error::Divergent { lambda_prime });
    }
    let lambda2 = lambda * lambda;
    Ok((-offset * offset).exp() * (1.0 - lambda2) * FRAC_1_SQRT_PI / (1.0 - lambda_prime * lambda_prime))
}

pub fn density_closed_form(
    lambda: f64,
    alpha: f64,
    phi: f64,
    theta: f64,
    x: f64,
    variant: DensityApprox,
) -> Result<f64> {
    density_closed_form_at_offset(lambda, alpha, phi, theta, x - quadrature_center(alpha, theta), variant)
}

/// Unnormalized post-measurement amplitudes `c_n ⟨x|α e^{inφ}⟩`.
///
/// Their squared norm is the outcome density.
pub fn projected_amplitudes(hybrid: &HybridState, theta: f64, x: f64) -> Vec<Complex64> {
    let (alpha, phi) = (hybrid.alpha(), hybrid.phi());
    let offset = x - quadrature_center(alpha, theta);
    let phase0 = base_phase(alpha, theta, x);
    hybrid
        .schmidt()
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let g = label_geometry(alpha, phi, theta, x, n);
            let envelope = VACUUM_PEAK_AMPLITUDE * (-(offset - g.mean_shift).powi(2) / 2.0).exp();
            c * Complex64::from_polar(envelope, phase0 + g.phase_shift)
        })
        .collect()
}

pub fn outcome_at(hybrid: &HybridState, theta: f64, x: f64) -> MeasurementOutcome {
    let (alpha, phi) = (hybrid.alpha(), hybrid.phi());
    MeasurementOutcome {
        x_theta: x,
        density: density_exact(hybrid, theta, x),
        beta: beta(alpha, phi, theta, x),
        gamma: gamma(alpha, phi, theta, x),
        global_phase: global_phase(alpha, theta, x),
    }
}

/// Projects the ancilla onto `|x_θ⟩` and returns the normalized Alice–Bob state.
pub fn project(hybrid: &HybridState, theta: f64, x: f64) -> Result<(SchmidtDiagonalState, MeasurementOutcome)> {
    let outcome = outcome_at(hybrid, theta, x);
    if !(outcome.density > MIN_PROJECTION_DENSITY) {
        return Err(Error::ProjectionUndefined {
            density: outcome.density,
        });
    }
    let state = SchmidtDiagonalState::from_amplitudes(projected_amplitudes(hybrid, theta, x))?.normalize()?;
    Ok((state, outcome))
}
