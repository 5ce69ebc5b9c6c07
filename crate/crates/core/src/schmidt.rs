//! Schmidt-diagonal two-mode states `Σ d_n |n,n⟩` in a truncated Fock basis.
//!
//! Quadratures follow `x = (a + a†)/√2`, `p = (a - a†)/(i√2)`, so the vacuum
//! variance of each is 1/2 and the Duan sum of the vacuum is exactly 2 for
//! `a = ±1`.
//!
//! Because the state is diagonal in photon number, all first moments vanish
//! and every second moment entering the Duan sum reduces to two scalars:
//! the mean photon number `N = Σ n |d_n|²` and the pair coherence
//! `M = ⟨a₁a₂⟩ = Σ n d*_{n-1} d_n`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Normalization tolerance shared by every constructor.
pub const NORM_TOL: f64 = 1e-12;
/// Target geometric tail mass for automatic truncation.
pub const TAIL_TARGET: f64 = 1e-12;
/// Largest tolerated relative weight of the last retained amplitude.
pub const TAIL_ADEQUACY: f64 = 1e-10;
pub const DEFAULT_N_MAX_CAP: usize = 4096;

/// How many Fock levels to keep when building a geometric state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// `n_max = max(16, ceil(ln(1e-12) / (2 ln λ)) + 8)`, refused above `cap`.
    Auto { cap: usize },
    /// Keep exactly `n_max + 1` levels and renormalize.
    Fixed(usize),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto { cap: DEFAULT_N_MAX_CAP }
    }
}

impl Truncation {
    pub fn resolve(self, lambda: f64) -> Result<usize> {
        match self {
            Truncation::Fixed(n) => Ok(n),
            Truncation::Auto { cap } => {
                let required = auto_n_max(lambda);
                if required > cap {
                    Err(Error::Truncation { required, cap })
                } else {
                    Ok(required)
                }
            }
        }
    }
}

/// Automatic truncation level for a geometric amplitude ratio `λ`.
pub fn auto_n_max(lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 16;
    }
    let tail = (TAIL_TARGET.ln() / (2.0 * lambda.ln())).ceil();
    // saturate rather than overflow for λ within an ulp of 1
    let tail = if tail.is_finite() && tail < 1e15 {
        tail as usize
    } else {
        usize::MAX / 2
    };
    16.max(tail.saturating_add(8))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDiagonalState {
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl SchmidtDiagonalState {
    /// Wraps raw amplitudes `d_0..=d_{n_max}`. The state need not be normalized;
    /// see [`Self::normalize`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Contract("a state needs at least one amplitude".into()));
        }
        if amplitudes.iter().any(|d| !d.re.is_finite() || !d.im.is_finite()) {
            return Err(Error::Contract("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|d| d.norm_sqr()).sum::<f64>();
        Ok(Self {
            amplitudes,
            normalized: (norm - 1.0).abs() <= NORM_TOL,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&d| Complex64::new(d, 0.0)).collect())
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Contract("cannot normalize the zero vector".into()));
        }
        for d in &mut self.amplitudes {
            *d /= norm;
        }
        let renorm = self.norm_sqr();
        self.normalized = (renorm - 1.0).abs() <= NORM_TOL;
        Ok(self)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|d| d.norm_sqr()).sum()
    }

    /// Schmidt weights `p_n = |d_n|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|d| d.norm_sqr()).collect()
    }

    /// Relative weight of the last retained level, `|d_{n_max}|² / Σ |d_n|²`.
    pub fn tail_mass(&self) -> f64 {
        self.amplitudes[self.n_max()].norm_sqr() / self.norm_sqr()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, d)| n as f64 * d.norm_sqr())
            .sum()
    }

    /// Pair coherence `⟨a₁a₂⟩ = Σ_n n d*_{n-1} d_n`.
    pub fn pair_coherence(&self) -> Complex64 {
        self.amplitudes
            .windows(2)
            .enumerate()
            .map(|(k, w)| (k + 1) as f64 * w[0].conj() * w[1])
            .sum()
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let rot = Complex64::from_polar(1.0, phase);
        Self {
            amplitudes: self.amplitudes.iter().map(|d| d * rot).collect(),
            normalized: self.normalized,
        }
    }

    fn require_normalized(&self, op: &str) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "{op} needs a normalized state (norm² = {})",
                self.norm_sqr()
            )))
        }
    }
}

/// Weighting `a` of the Duan operators `U = |a| x₁ + x₂/a`, `V = |a| p₁ - p₂/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuanParams {
    a: f64,
}

impl DuanParams {
    pub fn new(a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::domain(format!(
                "Duan weighting must be finite and nonzero, got {a}"
            )));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl Default for DuanParams {
    fn default() -> Self {
        Self { a: 1.0 }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    Ok(())
}

/// Geometric state with `d_n = √(1-λ²) (-λ)^n`.
///
/// Under automatic truncation the amplitudes are the exact series terms (the
/// dropped tail is below 1e-12). A fixed truncation renormalizes and is
/// refused when the last kept level still carries more than 1e-10 of the
/// weight.
pub fn tmsv_from_lambda(lambda: f64, truncation: Truncation) -> Result<SchmidtDiagonalState> {
    check_lambda(lambda)?;
    let n_max = truncation.resolve(lambda)?;
    let c0 = (1.0 - lambda * lambda).sqrt();
    let mut amplitudes = Vec::with_capacity(n_max + 1);
    let mut term = c0;
    for _ in 0..=n_max {
        amplitudes.push(Complex64::new(term, 0.0));
        term *= -lambda;
    }
    let state = SchmidtDiagonalState::from_amplitudes(amplitudes)?;
    match truncation {
        Truncation::Auto { .. } => Ok(state),
        Truncation::Fixed(_) => {
            let state = state.normalize()?;
            if state.tail_mass() >= TAIL_ADEQUACY {
                return Err(Error::Contract(format!(
                    "n_max = {n_max} leaves tail mass {:e} for lambda = {lambda}",
                    state.tail_mass()
                )));
            }
            Ok(state)
        }
    }
}

/// `λ = tanh r` for a squeezing level quoted as `10 log10(e^{2r})` dB.
pub fn lambda_from_squeezing_db(db: f64) -> Result<f64> {
    if !(db >= 0.0) || !db.is_finite() {
        return Err(Error::domain(format!(
            "squeezing must be a finite, nonnegative dB value, got {db}"
        )));
    }
    let r = db * std::f64::consts::LN_10 / 20.0;
    Ok(r.tanh())
}

pub fn squeezing_db_from_lambda(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(20.0 / std::f64::consts::LN_10 * lambda.atanh())
}

/// `⟨(ΔU)²⟩ + ⟨(ΔV)²⟩` from the truncated Fock moments of the state.
pub fn duan_variance_sum(state: &SchmidtDiagonalState, params: DuanParams) -> Result<f64> {
    state.require_normalized("duan_variance_sum")?;
    let a = params.a();
    let a2 = a * a;
    let local = 2.0 * (a2 + 1.0 / a2) * (state.mean_photon_number() + 0.5);
    let cross = 4.0 * a.signum() * state.pair_coherence().re;
    Ok(local + cross)
}

/// Entropy of entanglement in bits, `-Σ p_n log₂ p_n`.
pub fn entropy_of_entanglement(state: &SchmidtDiagonalState) -> Result<f64> {
    state.require_normalized("entropy_of_entanglement")?;
    Ok(state
        .probabilities()
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum())
}

/// Exponential of the least-squares slope of `ln|d_n|` against `n`.
///
/// Only levels with `|d_n| > 1e-12` enter the fit. For an exact geometric
/// state this recovers `λ`.
pub fn effective_lambda(state: &SchmidtDiagonalState) -> Result<f64> {
    state.require_normalized("effective_lambda")?;
    if state.amplitudes()[0].norm() <= 1e-15 {
        return Err(Error::Contract("effective_lambda needs |d_0| > 1e-15".into()));
    }
    let points: Vec<(f64, f64)> = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, d)| d.norm() > 1e-12)
        .map(|(n, d)| (n as f64, d.norm().ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::DegenerateFit { usable: points.len() });
    }
    let k = points.len() as f64;
    let mean_n = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(n, y)| {
        let dn = n - mean_n;
        (sxy + dn * (y - mean_y), sxx + dn * dn)
    });
    Ok((sxy / sxx).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmsv(lambda: f64) -> SchmidtDiagonalState {
        tmsv_from_lambda(lambda, Truncation::default()).unwrap()
    }

    #[test]
    fn vacuum_is_product_state() {
        let s = tmsv(0.0);
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|d| *d == Complex64::new(0.0, 0.0)));
        assert_eq!(s.n_max(), 16);
    }

    #[test]
    fn half_lambda_amplitudes() {
        let s = tmsv(0.5);
        let d = s.amplitudes();
        assert!((d[0].re - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((d[1].re + 0.433_012_701_892_219_3).abs() < 1e-15);
        assert!((d[2].re - 0.216_506_350_946_109_66).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.is_normalized());
        assert!(s.tail_mass() < 1e-10);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(auto_n_max(0.5), 20 + 8);
        assert_eq!(auto_n_max(0.1), 16);
        // ln(1e-12) / (2 ln 0.99) = 1374.8...
        assert_eq!(auto_n_max(0.99), 1375 + 8);
        let err = tmsv_from_lambda(0.999_99, Truncation::default()).unwrap_err();
        assert!(matches!(err, Error::Truncation { cap: 4096, .. }));
        assert!(tmsv_from_lambda(0.999_99, Truncation::Auto { cap: 2_000_000 }).is_ok());
    }

    #[test]
    fn fixed_truncation_checks_adequacy() {
        let s = tmsv_from_lambda(0.5, Truncation::Fixed(40)).unwrap();
        assert_eq!(s.n_max(), 40);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        assert!(tmsv_from_lambda(0.5, Truncation::Fixed(5)).is_err());
    }

    #[test]
    fn lambda_domain() {
        assert!(matches!(
            tmsv_from_lambda(1.0, Truncation::default()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            tmsv_from_lambda(-0.1, Truncation::default()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            tmsv_from_lambda(f64::NAN, Truncation::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn squeezing_conversion() {
        assert_eq!(lambda_from_squeezing_db(0.0).unwrap(), 0.0);
        // (20 / ln 10) artanh(1/2) = 4.7712...
        let db = squeezing_db_from_lambda(0.5).unwrap();
        assert!((db - 4.771_212_547_196_624).abs() < 1e-12);
        for i in 0..=40 {
            let x = 0.5 * i as f64;
            let back = squeezing_db_from_lambda(lambda_from_squeezing_db(x).unwrap()).unwrap();
            assert!((back - x).abs() < 1e-12, "{x} -> {back}");
        }
        assert!(lambda_from_squeezing_db(-1.0).is_err());
    }

    #[test]
    fn duan_examples() {
        let a1 = DuanParams::new(1.0).unwrap();
        assert_eq!(duan_variance_sum(&tmsv(0.0), a1).unwrap(), 2.0);
        let v = duan_variance_sum(&tmsv(0.5), a1).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        // a = -1 swaps to the anti-squeezed pair x₁ - x₂, p₁ + p₂: 2(1+λ)/(1-λ)
        let v = duan_variance_sum(&tmsv(0.5), DuanParams::new(-1.0).unwrap()).unwrap();
        assert!((v - 6.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn duan_closed_form_on_range() {
        for i in 0..=95 {
            let lambda = i as f64 / 100.0;
            let v = duan_variance_sum(&tmsv(lambda), DuanParams::default()).unwrap();
            let closed = 2.0 * (1.0 - lambda) / (1.0 + lambda);
            assert!((v - closed).abs() < 1e-10, "lambda {lambda}: {v} vs {closed}");
        }
    }

    #[test]
    fn duan_near_maximal_entanglement() {
        let s = tmsv_from_lambda(0.99, Truncation::Auto { cap: 100_000 }).unwrap();
        let v = duan_variance_sum(&s, DuanParams::default()).unwrap();
        assert!(v < 0.011, "{v}");
    }

    #[test]
    fn duan_rejects_unnormalized() {
        let s = SchmidtDiagonalState::from_real(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            duan_variance_sum(&s, DuanParams::default()),
            Err(Error::Contract(_))
        ));
        assert!(DuanParams::new(0.0).is_err());
    }

    #[test]
    fn duan_invariant_under_global_phase() {
        let s = tmsv(0.7);
        let v0 = duan_variance_sum(&s, DuanParams::default()).unwrap();
        for phase in [0.3, 1.7, -2.9] {
            let v = duan_variance_sum(&s.with_global_phase(phase), DuanParams::default()).unwrap();
            assert!((v - v0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_matches_closed_form() {
        assert_eq!(entropy_of_entanglement(&tmsv(0.0)).unwrap(), 0.0);
        let lambda: f64 = 0.5;
        let r = lambda.atanh();
        let (c2, s2) = (r.cosh().powi(2), r.sinh().powi(2));
        let closed = c2 * c2.log2() - s2 * s2.log2();
        let e = entropy_of_entanglement(&tmsv(lambda)).unwrap();
        assert!((e - closed).abs() < 1e-10, "{e} vs {closed}");

        let mut last = 0.0;
        for i in 1..=9 {
            let e = entropy_of_entanglement(&tmsv(i as f64 / 10.0)).unwrap();
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn effective_lambda_recovers_geometric_ratio() {
        for lambda in [0.5, 0.9] {
            let fit = effective_lambda(&tmsv(lambda)).unwrap();
            assert!((fit - lambda).abs() < 1e-10, "{fit}");
        }
        assert!(matches!(
            effective_lambda(&tmsv(0.0)),
            Err(Error::DegenerateFit { usable: 1 })
        ));
    }
}
