//! Conditional phase correction after the homodyne measurement.
//!
//! The correction is the linear model `e^{-i(γ(x) n + global)}`. Whatever it
//! leaves behind (terms of second and higher order in `nφ`) is reported as
//! the residual phase rather than fitted away.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::homodyne::MeasurementOutcome;
use crate::schmidt::{tmsv_from_lambda, SchmidtDiagonalState, Truncation};

/// Amplitudes below this modulus do not enter the residual.
const POPULATED: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionRecord {
    /// Per-photon phase removed, radians.
    pub gamma: f64,
    /// Common phase removed. It has no observable effect; it is applied
    /// only to match the linear model term by term.
    pub global_phase: f64,
    /// `max_n |arg(d_n / d_0) - arg(r_n / r_0)|` over populated levels, for a
    /// reference pattern `r_n`.
    pub residual_max_phase: f64,
}

/// Applies the correction and measures the residual against the sign
/// pattern `(-1)^n` of a squeezed-vacuum input.
pub fn apply_feedforward(
    state: &SchmidtDiagonalState,
    outcome: &MeasurementOutcome,
) -> Result<(SchmidtDiagonalState, CorrectionRecord)> {
    let reference: Vec<Complex64> = (0..=state.n_max())
        .map(|n| Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    apply_feedforward_against(state, outcome, &reference)
}

/// As [`apply_feedforward`] with an explicit reference phase pattern
/// (typically the pre-measurement amplitudes).
pub fn apply_feedforward_against(
    state: &SchmidtDiagonalState,
    outcome: &MeasurementOutcome,
    reference: &[Complex64],
) -> Result<(SchmidtDiagonalState, CorrectionRecord)> {
    if !state.is_normalized() {
        return Err(Error::Contract("feed-forward input must be normalized".into()));
    }
    if reference.len() != state.amplitudes().len() {
        return Err(Error::Contract(format!(
            "reference pattern has {} entries, state has {}",
            reference.len(),
            state.amplitudes().len()
        )));
    }
    let corrected: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, d)| d * Complex64::from_polar(1.0, -(outcome.gamma * n as f64 + outcome.global_phase)))
        .collect();
    let residual_max_phase = residual_phase(&corrected, reference);
    let out = SchmidtDiagonalState::from_amplitudes(corrected)?;
    Ok((
        out,
        CorrectionRecord {
            gamma: outcome.gamma,
            global_phase: outcome.global_phase,
            residual_max_phase,
        },
    ))
}

fn residual_phase(amplitudes: &[Complex64], reference: &[Complex64]) -> f64 {
    let Some(anchor) = amplitudes
        .iter()
        .zip(reference)
        .position(|(d, r)| d.norm() > POPULATED && r.norm() > 0.0)
    else {
        return 0.0;
    };
    let base = amplitudes[anchor] * reference[anchor].conj();
    amplitudes
        .iter()
        .zip(reference)
        .filter(|(d, r)| d.norm() > POPULATED && r.norm() > 0.0)
        .map(|(d, r)| (d * r.conj() * base.conj()).arg().abs())
        .fold(0.0, f64::max)
}

/// The linear-model output `√(1-λ'²) Σ (-λ')^n |n,n⟩` with `λ' = (1+β)λ`.
pub fn ideal_output_state(lambda: f64, beta: f64) -> Result<SchmidtDiagonalState> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let lambda_prime = (1.0 + beta) * lambda;
    if !(0.0..1.0).contains(&lambda_prime) {
        return Err(Error::domain(format!(
            "lambda' = (1 + beta) lambda = {lambda_prime} is outside [0, 1)"
        )));
    }
    tmsv_from_lambda(lambda_prime, Truncation::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::project;
    use crate::kerr::apply_cross_kerr;
    use crate::schmidt::{duan_variance_sum, DuanParams};
    use std::f64::consts::FRAC_PI_2;

    fn pipeline(lambda: f64, alpha: f64, phi: f64, theta: f64, x: f64) -> (SchmidtDiagonalState, CorrectionRecord) {
        let s = tmsv_from_lambda(lambda, Truncation::default()).unwrap();
        let h = apply_cross_kerr(&s, alpha, phi).unwrap();
        let (projected, outcome) = project(&h, theta, x).unwrap();
        apply_feedforward(&projected, &outcome).unwrap()
    }

    /// Real amplitudes `|d_n|` with the squeezed-vacuum sign pattern.
    fn all_real(state: &SchmidtDiagonalState) -> SchmidtDiagonalState {
        let real: Vec<f64> = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, d)| if n % 2 == 0 { d.norm() } else { -d.norm() })
            .collect();
        SchmidtDiagonalState::from_real(&real).unwrap()
    }

    #[test]
    fn no_kerr_phase_nothing_to_correct() {
        let (out, rec) = pipeline(0.5, 2.0, 0.0, 0.9, 0.4);
        assert_eq!(rec.gamma, 0.0);
        assert!(rec.residual_max_phase < 1e-12);
        let base = out.amplitudes()[0] / out.amplitudes()[0].norm();
        for d in out.amplitudes() {
            assert!((d * base.conj()).im.abs() < 1e-12);
        }
    }

    #[test]
    fn weak_coupling_residual_is_tiny() {
        let (_, rec) = pipeline(0.5, 1e4, 1e-10, FRAC_PI_2, 1.0);
        assert!(rec.residual_max_phase < 1e-8, "{}", rec.residual_max_phase);
    }

    #[test]
    fn strong_coupling_residual_visible_but_harmless() {
        let (out, rec) = pipeline(0.5, 1.5, 1e-2, FRAC_PI_2, 1.0);
        assert!(rec.residual_max_phase > 0.0);
        let v = duan_variance_sum(&out, DuanParams::default()).unwrap();
        let v_real = duan_variance_sum(&all_real(&out), DuanParams::default()).unwrap();
        assert!((v - v_real).abs() < 1e-4, "{v} vs {v_real}");
    }

    #[test]
    fn moduli_unchanged() {
        let s = tmsv_from_lambda(0.6, Truncation::default()).unwrap();
        let h = apply_cross_kerr(&s, 2.0, 0.03).unwrap();
        let (projected, outcome) = project(&h, 1.1, 0.7).unwrap();
        let (out, _) = apply_feedforward(&projected, &outcome).unwrap();
        for (a, b) in out.amplitudes().iter().zip(projected.amplitudes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        assert!(out.is_normalized());
    }

    #[test]
    fn explicit_reference_must_match_length() {
        let s = tmsv_from_lambda(0.5, Truncation::default()).unwrap();
        let h = apply_cross_kerr(&s, 1.0, 0.0).unwrap();
        let (p, o) = project(&h, 0.0, 0.0).unwrap();
        assert!(apply_feedforward_against(&p, &o, &[Complex64::new(1.0, 0.0)]).is_err());
        let (_, rec) = apply_feedforward_against(&p, &o, s.amplitudes()).unwrap();
        assert!(rec.residual_max_phase < 1e-12);
    }

    #[test]
    fn ideal_output() {
        let plain = tmsv_from_lambda(0.5, Truncation::default()).unwrap();
        assert_eq!(ideal_output_state(0.5, 0.0).unwrap(), plain);
        let s = ideal_output_state(0.5, 1.0 / 13.0).unwrap();
        assert!((s.amplitudes()[1].re / s.amplitudes()[0].re + 0.538_461_538_461_538_5).abs() < 1e-12);
        assert!(matches!(ideal_output_state(0.5, 1.0), Err(Error::Domain(_))));
    }
}
