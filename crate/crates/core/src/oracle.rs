//! Brute-force moment computation on the full two-mode Fock space.
//!
//! Slow (dense matrices of side `(n_max + 2)²`) and meant only as a check on
//! the Schmidt-diagonal fast path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schmidt::{DuanParams, SchmidtDiagonalState};

/// Largest `n_max` accepted; the matrices grow as `n_max⁴`.
pub const MAX_DENSE_N: usize = 40;

fn annihilation(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn dagger(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.adjoint()
}

/// `⟨(ΔU)²⟩ + ⟨(ΔV)²⟩` from dense operators `U = |a| x₁ + x₂/a`, `V = |a| p₁ - p₂/a`.
pub fn dense_duan_variance_sum(state: &SchmidtDiagonalState, params: DuanParams) -> Result<f64> {
    if !state.is_normalized() {
        return Err(Error::Contract(
            "dense_duan_variance_sum needs a normalized state".into(),
        ));
    }
    let n_max = state.n_max();
    if n_max > MAX_DENSE_N {
        return Err(Error::Contract(format!(
            "dense oracle limited to n_max <= {MAX_DENSE_N}, got {n_max}"
        )));
    }
    // one spare level so that a† acting on |n_max⟩ is not truncated
    let dim = n_max + 2;
    let a = annihilation(dim);
    let ad = dagger(&a);
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * Complex64::new(s, 0.0);
    let p = (&a - &ad) * Complex64::new(0.0, -s);

    let w = params.a();
    let x1 = x.kronecker(&id);
    let x2 = id.kronecker(&x);
    let p1 = p.kronecker(&id);
    let p2 = id.kronecker(&p);
    let u = x1 * Complex64::new(w.abs(), 0.0) + x2 * Complex64::new(1.0 / w, 0.0);
    let v = p1 * Complex64::new(w.abs(), 0.0) - p2 * Complex64::new(1.0 / w, 0.0);

    let mut psi = DVector::<Complex64>::zeros(dim * dim);
    for (n, d) in state.amplitudes().iter().enumerate() {
        psi[n * dim + n] = *d;
    }
    Ok(variance(&u, &psi) + variance(&v, &psi))
}

fn variance(op: &DMatrix<Complex64>, psi: &DVector<Complex64>) -> f64 {
    let applied = op * psi;
    let mean = psi.dotc(&applied).re;
    let second = op * &applied;
    psi.dotc(&second).re - mean * mean
}
