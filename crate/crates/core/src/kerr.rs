//! Cross-Kerr coupling of Bob's mode to a coherent ancilla.
//!
//! `exp(-iκt b†b c†c)` maps `|n,n⟩|α⟩` to `|n,n⟩|α e^{inφ}⟩` with `φ = -κt`,
//! so the post-interaction state stays Schmidt-diagonal with one pure
//! coherent label per photon number. Storing `(c_n, α, φ)` is lossless.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schmidt::SchmidtDiagonalState;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    schmidt: SchmidtDiagonalState,
    alpha: f64,
    phi: f64,
}

impl HybridState {
    pub fn schmidt(&self) -> &SchmidtDiagonalState {
        &self.schmidt
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Nonlinear phase `φ = -κt` in radians.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Coherent label `α e^{inφ}` of the ancilla paired with `|n,n⟩`.
    pub fn label(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(self.alpha, 0.0);
        }
        Complex64::from_polar(self.alpha, n as f64 * self.phi)
    }

    pub fn labels(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..=self.schmidt.n_max()).map(|n| self.label(n))
    }

    /// Further Kerr evolution: label phases add.
    pub fn with_additional_phase(&self, phi: f64) -> Self {
        Self {
            schmidt: self.schmidt.clone(),
            alpha: self.alpha,
            phi: self.phi + phi,
        }
    }

    /// `Σ |c_n|²`; every ancilla label is a unit vector so this is the total norm.
    pub fn norm_sqr(&self) -> f64 {
        self.schmidt.norm_sqr()
    }
}

pub fn apply_cross_kerr(input: &SchmidtDiagonalState, alpha: f64, phi: f64) -> Result<HybridState> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "ancilla amplitude must be finite and nonnegative (absorb its phase into theta), got {alpha}"
        )));
    }
    if !phi.is_finite() {
        return Err(Error::domain(format!("nonlinear phase must be finite, got {phi}")));
    }
    if !input.is_normalized() {
        return Err(Error::Contract("cross-Kerr input must be normalized".into()));
    }
    Ok(HybridState {
        schmidt: input.clone(),
        alpha,
        phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schmidt::{tmsv_from_lambda, Truncation};

    fn tmsv(lambda: f64) -> SchmidtDiagonalState {
        tmsv_from_lambda(lambda, Truncation::default()).unwrap()
    }

    #[test]
    fn zero_phase_leaves_labels_equal() {
        let h = apply_cross_kerr(&tmsv(0.5), 2.0, 0.0).unwrap();
        assert!(h.labels().all(|l| l == Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn vacuum_ancilla() {
        let h = apply_cross_kerr(&tmsv(0.5), 0.0, 0.3).unwrap();
        assert!(h.labels().all(|l| l.norm() == 0.0));
    }

    #[test]
    fn label_value() {
        let h = apply_cross_kerr(&tmsv(0.5), 1.0, 0.1).unwrap();
        let l = h.label(3);
        assert!((l.re - 0.955_336_489_125_606).abs() < 1e-12);
        assert!((l.im - 0.295_520_206_661_339_6).abs() < 1e-12);
    }

    #[test]
    fn labels_on_circle_and_norm_kept() {
        let s = tmsv(0.8);
        let h = apply_cross_kerr(&s, 3.5, -0.07).unwrap();
        assert_eq!(h.label(0), Complex64::new(3.5, 0.0));
        assert!(h.labels().all(|l| (l.norm() - 3.5).abs() < 1e-12));
        assert!((h.norm_sqr() - s.norm_sqr()).abs() < 1e-15);
        assert_eq!(h.schmidt(), &s);
    }

    #[test]
    fn phases_compose() {
        let s = tmsv(0.5);
        let a = apply_cross_kerr(&s, 1.2, 0.01).unwrap().with_additional_phase(0.02);
        let b = apply_cross_kerr(&s, 1.2, 0.03).unwrap();
        for (la, lb) in a.labels().zip(b.labels()) {
            assert!((la - lb).norm() < 1e-12);
        }
    }

    #[test]
    fn negative_alpha_rejected() {
        assert!(matches!(apply_cross_kerr(&tmsv(0.5), -1.0, 0.1), Err(Error::Domain(_))));
    }
}
