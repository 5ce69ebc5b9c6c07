//! Seeded inverse-CDF sampling of homodyne outcomes.
//!
//! The exact density is tabulated on a uniform grid centered at `√2α cos θ`
//! and integrated with the trapezoid rule. Between grid nodes the density is
//! taken as linear, so the CDF is piecewise quadratic and is inverted in
//! closed form.
//!
//! Random numbers come from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`); a uniform variate is
//! `(next_u64 >> 11) · 2⁻⁵³`. Both are fixed algorithms, so a seed gives
//! the same draws on every platform. Independent streams for parallel work
//! use [`derive_seed`].

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::homodyne::{self, HomodyneSetting, MeasurementOutcome};
use crate::kerr::HybridState;
use crate::quad::cumulative_trapezoid;

/// Grid widening stops once the captured mass reaches this level.
const TARGET_MASS: f64 = 1.0 - 1e-9;
/// Below this captured mass the sampler refuses to run.
const MIN_MASS: f64 = 1.0 - 1e-6;
const MAX_WIDENINGS: usize = 4;

/// Seed of the `stream`-th independent stream derived from `base`:
/// `base XOR (stream + 1) · 0x9E3779B97F4A7C15`, then SplitMix64 on seeding.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform variate on `[0, 1)` with 53 random bits.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    hybrid: HybridState,
    theta: f64,
    center: f64,
    start: f64,
    step: f64,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadratureSampler {
    pub fn new(hybrid: &HybridState, setting: &HomodyneSetting) -> Result<Self> {
        setting.validate()?;
        let theta = setting.theta;
        let n = setting.grid_points;
        let mut halfwidth = setting.x_grid_halfwidth + homodyne::max_component_offset(hybrid, theta);
        let mut widenings = 0;
        loop {
            let step = 2.0 * halfwidth / (n - 1) as f64;
            let density: Vec<f64> = (0..n)
                .map(|i| homodyne::density_exact_at_offset(hybrid, theta, -halfwidth + step * i as f64))
                .collect();
            let cdf = cumulative_trapezoid(&density, step);
            let mass = *cdf.last().expect("grid has nodes");
            if mass >= TARGET_MASS || widenings == MAX_WIDENINGS {
                if mass < MIN_MASS {
                    return Err(Error::GridTooNarrow { mass });
                }
                return Ok(Self {
                    hybrid: hybrid.clone(),
                    theta,
                    center: homodyne::quadrature_center(hybrid.alpha(), theta),
                    start: -halfwidth,
                    step,
                    density,
                    cdf,
                });
            }
            halfwidth *= 2.0;
            widenings += 1;
        }
    }

    /// Trapezoid mass captured by the grid.
    pub fn mass(&self) -> f64 {
        *self.cdf.last().expect("grid has nodes")
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Offsets of the first and last grid nodes from the center.
    pub fn offset_range(&self) -> (f64, f64) {
        (self.start, self.start + self.step * (self.density.len() - 1) as f64)
    }

    /// Grid CDF at offset `u`, normalized by the captured mass.
    pub fn cdf_at_offset(&self, offset: f64) -> f64 {
        let t = (offset - self.start) / self.step;
        if t <= 0.0 {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i >= self.density.len() - 1 {
            return 1.0;
        }
        let dt = offset - (self.start + self.step * i as f64);
        let slope = (self.density[i + 1] - self.density[i]) / self.step;
        (self.cdf[i] + self.density[i] * dt + 0.5 * slope * dt * dt) / self.mass()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_at_offset(x - self.center)
    }

    /// Offset `u` whose grid CDF equals `p ∈ [0, 1)`.
    pub fn quantile_offset(&self, p: f64) -> f64 {
        let target = p * self.mass();
        // first node with cdf > target
        let hi = self.cdf.partition_point(|&c| c <= target).clamp(1, self.cdf.len() - 1);
        let i = hi - 1;
        let f0 = self.density[i];
        let slope = (self.density[i + 1] - f0) / self.step;
        let remaining = target - self.cdf[i];
        // root of f0 t + slope t²/2 = remaining, in the cancellation-free form
        let disc = (f0 * f0 + 2.0 * slope * remaining).max(0.0);
        let denom = f0 + disc.sqrt();
        let dt = if denom > 0.0 { 2.0 * remaining / denom } else { 0.0 };
        self.start + self.step * i as f64 + dt.clamp(0.0, self.step)
    }

    pub fn sample_offset(&self, rng: &mut impl RngCore) -> f64 {
        self.quantile_offset(uniform(rng))
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> MeasurementOutcome {
        let x = self.center + self.sample_offset(rng);
        homodyne::outcome_at(&self.hybrid, self.theta, x)
    }

    /// `count` outcomes from a single stream seeded with `seed`.
    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<MeasurementOutcome> {
        let mut rng = rng_from_seed(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    /// Kolmogorov–Smirnov distance between the sample and the grid CDF.
    pub fn ks_statistic(&self, xs: &[f64]) -> f64 {
        let mut sorted: Vec<f64> = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = self.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Draws one outcome for `seed`.
pub fn sample_outcome(hybrid: &HybridState, setting: &HomodyneSetting, seed: u64) -> Result<MeasurementOutcome> {
    let sampler = QuadratureSampler::new(hybrid, setting)?;
    Ok(sampler.sample(&mut rng_from_seed(seed)))
}
