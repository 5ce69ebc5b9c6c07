//! Success criterion, outcome window, success probability and the
//! feasibility algebra that maps a target variance ratio to a required
//! measurement outcome and resource product `αφ`.
//!
//! Two routes are kept side by side for the required `β`: the printed closed
//! form ([`BetaVariant::Paper`]) and the root of `v_out(λ, β) / v_in(λ) = ν`
//! found by bisection ([`BetaVariant::Exact`]). They differ by about 7% at
//! `λ = 1/2, ν = 0.9`.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::homodyne::{self, DensityApprox};
use crate::kerr::HybridState;
use crate::quad;

/// Absolute tolerance of the success-probability quadrature.
pub const PS_TOLERANCE: f64 = 1e-10;
/// Beyond this offset from the center `e^{-u²}` is below 1e-62.
const GAUSSIAN_CUTOFF: f64 = 12.0;
const MAX_PANELS: usize = 4000;

fn check_lambda_open(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    Ok(())
}

/// Duan sum of the squeezed-vacuum input at `a = 1`: `2(1-λ)²/(1-λ²)`.
pub fn v_in(lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    Ok(2.0 * (1.0 - lambda).powi(2) / (1.0 - lambda * lambda))
}

/// Duan sum of the linear-model output with `λ' = (1+β)λ`.
pub fn v_out(lambda: f64, beta: f64) -> Result<f64> {
    let lambda_prime = (1.0 + beta) * lambda;
    if !(0.0..1.0).contains(&lambda_prime) {
        return Err(Error::domain(format!(
            "lambda' = (1 + beta) lambda = {lambda_prime} is outside [0, 1)"
        )));
    }
    Ok(2.0 * (1.0 - lambda_prime).powi(2) / (1.0 - lambda_prime * lambda_prime))
}

/// `x > √2α cos θ`, strict. The threshold itself (β = 0) is a failure.
pub fn success_criterion(x: f64, alpha: f64, theta: f64) -> bool {
    x > homodyne::quadrature_center(alpha, theta)
}

/// `β(x) > 0`: the sign-aware form of the criterion, valid for either sign of `φ sin θ`.
pub fn concentrates(x: f64, alpha: f64, phi: f64, theta: f64) -> bool {
    homodyne::beta(alpha, phi, theta, x) > 0.0
}

/// Upper end of the success window, where `(1 + β)λ` reaches 1:
/// `(1-λ)/(√2 λ α φ sin θ) + √2α cos θ`.
pub fn x_limit(lambda: f64, alpha: f64, phi: f64, theta: f64) -> Result<f64> {
    check_lambda_open(lambda)?;
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let coupling = phi * theta.sin();
    if !(coupling > 0.0) {
        return Err(Error::domain(format!(
            "x_limit needs phi sin(theta) > 0, got {coupling}"
        )));
    }
    Ok((1.0 - lambda) / (SQRT_2 * lambda * alpha * coupling) + homodyne::quadrature_center(alpha, theta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessBounds {
    /// `√2α cos θ`.
    pub x_min: f64,
    /// Far end of the success window. Lies below `x_min` when `φ sin θ < 0`;
    /// infinite for `λ = 0`.
    pub x_limit: f64,
    /// Integral of the `1 + β` closed-form density over the window, clamped to `[0, 1]`.
    pub ps: f64,
    /// The same integral of the exact density.
    pub ps_exact: f64,
    pub abs_error: f64,
    /// Set when the closed-form integrand diverges inside the integrated
    /// range (the window end lies within the Gaussian bulk) or the result
    /// had to be clamped.
    pub warning: bool,
}

/// Probability that the outcome falls in the success window.
///
/// For `φ sin θ < 0` the window is mirrored below the center.
pub fn success_probability(hybrid: &HybridState, lambda: f64, theta: f64) -> Result<SuccessBounds> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let (alpha, phi) = (hybrid.alpha(), hybrid.phi());
    let coupling = phi * theta.sin();
    if coupling == 0.0 || alpha == 0.0 {
        return Err(Error::domain(
            "no outcome changes lambda when alpha, phi or sin(theta) vanishes",
        ));
    }
    let direction = coupling.signum();
    let x_min = homodyne::quadrature_center(alpha, theta);
    let window = if lambda == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - lambda) / (SQRT_2 * lambda * alpha * coupling.abs())
    };

    let mut warning = false;
    let closed_upper = if window > GAUSSIAN_CUTOFF {
        GAUSSIAN_CUTOFF
    } else {
        warning = true;
        window * (1.0 - 1e-9)
    };
    let closed = |u: f64| {
        homodyne::density_closed_form_at_offset(lambda, alpha, phi, theta, direction * u, DensityApprox::LinearBeta)
            .unwrap_or(0.0)
    };
    let r = quad::adaptive(closed, 0.0, closed_upper, PS_TOLERANCE, MAX_PANELS);

    let exact_upper = window.min(GAUSSIAN_CUTOFF + homodyne::max_component_offset(hybrid, theta));
    let exact = |u: f64| homodyne::density_exact_at_offset(hybrid, theta, direction * u);
    let e = quad::adaptive(exact, 0.0, exact_upper, PS_TOLERANCE, MAX_PANELS);

    if !r.converged || !(0.0..=1.0).contains(&r.value) {
        warning = true;
    }
    Ok(SuccessBounds {
        x_min,
        x_limit: x_min + direction * window,
        ps: r.value.clamp(0.0, 1.0),
        ps_exact: e.value.clamp(0.0, 1.0),
        abs_error: r.abs_error,
        warning,
    })
}

/// Closed-form success probability on `panels` fixed panels, for convergence checks.
pub fn success_probability_fixed_panels(lambda: f64, alpha: f64, phi: f64, theta: f64, panels: usize) -> Result<f64> {
    let coupling = phi * theta.sin();
    if coupling == 0.0 || alpha == 0.0 || !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain("success window undefined"));
    }
    let window = if lambda == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - lambda) / (SQRT_2 * lambda * alpha * coupling.abs())
    };
    let upper = if window > GAUSSIAN_CUTOFF {
        GAUSSIAN_CUTOFF
    } else {
        window * (1.0 - 1e-9)
    };
    let direction = coupling.signum();
    Ok(quad::composite(
        |u| {
            homodyne::density_closed_form_at_offset(lambda, alpha, phi, theta, direction * u, DensityApprox::LinearBeta)
                .unwrap_or(0.0)
        },
        0.0,
        upper,
        panels,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetaVariant {
    /// `(λ²-1)(1-ν) / (2λ(λ(ν-1)-1))`, as printed.
    Paper,
    /// Root of `v_out(λ, β)/v_in(λ) = ν`.
    Exact,
}

impl BetaVariant {
    pub fn label(self) -> &'static str {
        match self {
            BetaVariant::Paper => "paper_formula",
            BetaVariant::Exact => "exact",
        }
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::domain(format!(
            "nu must lie in (0, 1]; nu > 1 would dilute entanglement, got {nu}"
        )));
    }
    Ok(())
}

/// Closed-form root of `v_out/v_in = ν`: `(1-ν)(1-λ²) / (λ(ν(1-λ) + 1 + λ))`.
pub fn beta_for_ratio_closed(lambda: f64, nu: f64) -> f64 {
    (1.0 - nu) * (1.0 - lambda * lambda) / (lambda * (nu * (1.0 - lambda) + 1.0 + lambda))
}

/// `β` that turns a variance ratio `ν` into a required outcome.
pub fn beta_for_ratio(lambda: f64, nu: f64, variant: BetaVariant) -> Result<f64> {
    check_lambda_open(lambda)?;
    check_nu(nu)?;
    match variant {
        BetaVariant::Paper => Ok((lambda * lambda - 1.0) * (1.0 - nu) / (2.0 * lambda * (lambda * (nu - 1.0) - 1.0))),
        BetaVariant::Exact => {
            if nu == 1.0 {
                return Ok(0.0);
            }
            let target = nu * v_in(lambda)?;
            let ratio_gap = |b: f64| v_out(lambda, b).map(|v| v - target);
            let mut lo = 0.0;
            let mut hi = 1.0 / lambda - 1.0 - 1e-9;
            // v_out falls monotonically in β, so the gap changes sign once
            if ratio_gap(lo)? <= 0.0 || ratio_gap(hi)? > 0.0 {
                return Err(Error::domain(format!("nu = {nu} is not reachable inside the bracket")));
            }
            let guess = beta_for_ratio_closed(lambda, nu);
            if !(guess > lo && guess < hi) {
                return Err(Error::domain(format!(
                    "closed-form root {guess} falls outside the bracket"
                )));
            }
            while hi - lo > 1e-15 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ratio_gap(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityQuery {
    pub lambda: f64,
    /// Target variance ratio; the improvement is `1 - ν`.
    pub nu: f64,
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
}

impl FeasibilityQuery {
    pub fn validate(&self) -> Result<()> {
        check_lambda_open(self.lambda)?;
        check_nu(self.nu)?;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.phi == 0.0 || !self.phi.is_finite() {
            return Err(Error::domain(format!("phi must be nonzero, got {}", self.phi)));
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(Error::domain(format!("theta must lie in (0, pi), got {}", self.theta)));
        }
        Ok(())
    }
}

/// Outcome that realizes the target ratio: `x = (β + α²φ sin 2θ) / (√2 α φ sin θ)`.
pub fn x_for_improvement(query: &FeasibilityQuery, variant: BetaVariant) -> Result<f64> {
    query.validate()?;
    let b = beta_for_ratio(query.lambda, query.nu, variant)?;
    let FeasibilityQuery { alpha, phi, theta, .. } = *query;
    Ok(b / (SQRT_2 * alpha * phi * theta.sin()) + homodyne::quadrature_center(alpha, theta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceCondition {
    /// `(λ²-1)(1-ν) / (2√2 sin θ (λ(ν-1)-1))`
    pub rhs: f64,
    /// `αφ / rhs`; the protocol is comfortable when this is much larger than 1.
    pub margin: f64,
}

pub fn resource_condition(query: &FeasibilityQuery) -> Result<ResourceCondition> {
    query.validate()?;
    let rhs = resource_rhs(query.lambda, query.nu, query.theta);
    Ok(ResourceCondition {
        rhs,
        margin: query.alpha * query.phi / rhs,
    })
}

fn resource_rhs(lambda: f64, nu: f64, theta: f64) -> f64 {
    (lambda * lambda - 1.0) * (1.0 - nu) / (2.0 * SQRT_2 * theta.sin() * (lambda * (nu - 1.0) - 1.0))
}

/// Ancilla amplitude at which the resource margin equals `margin`.
pub fn alpha_for_margin(lambda: f64, nu: f64, phi: f64, theta: f64, margin: f64) -> Result<f64> {
    check_lambda_open(lambda)?;
    check_nu(nu)?;
    if phi == 0.0 {
        return Err(Error::domain("phi must be nonzero"));
    }
    Ok(margin * resource_rhs(lambda, nu, theta) / phi)
}

/// Quoted worked-example outcome `0.03 / (αφ)` for a 10% improvement at `λ = 1/2, θ = π/2`.
pub fn paper_quoted_x(alpha: f64, phi: f64) -> f64 {
    0.03 / (alpha * phi)
}

/// Quoted worked-example density `0.6 exp(-0.0009 / (α²φ²))`.
pub fn paper_quoted_density(alpha: f64, phi: f64) -> f64 {
    0.6 * (-0.0009 / (alpha * alpha * phi * phi)).exp()
}
