//! End-to-end pipeline and the flat records emitted by the command line.
//!
//! Every record carries its inputs, so a row can be recomputed on its own.

use serde::Serialize;

use crate::error::{Error, InStage, Result};
use crate::feedforward::apply_feedforward;
use crate::homodyne::{self, DensityApprox, HomodyneSetting};
use crate::kerr::{apply_cross_kerr, HybridState};
use crate::protocol::{self, BetaVariant, FeasibilityQuery};
use crate::sampling::sample_outcome;
use crate::schmidt::{
    duan_variance_sum, effective_lambda, entropy_of_entanglement, lambda_from_squeezing_db, squeezing_db_from_lambda,
    tmsv_from_lambda, DuanParams, Truncation, TAIL_ADEQUACY,
};

/// Squeezing given either as the Schmidt ratio or in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Squeezing {
    Lambda(f64),
    Db(f64),
}

impl Squeezing {
    pub fn lambda(self) -> Result<f64> {
        match self {
            Squeezing::Lambda(l) => {
                if (0.0..1.0).contains(&l) {
                    Ok(l)
                } else {
                    Err(Error::domain(format!("lambda must lie in [0, 1), got {l}")))
                }
            }
            Squeezing::Db(db) => lambda_from_squeezing_db(db),
        }
    }
}

/// Physical parameters shared by every command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateParams {
    pub squeezing: Squeezing,
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
    /// Fixed truncation; automatic when `None`.
    pub n_max: Option<usize>,
}

impl StateParams {
    fn truncation(&self) -> Truncation {
        self.n_max.map_or_else(Truncation::default, Truncation::Fixed)
    }

    /// The post-interaction state.
    pub fn hybrid(&self) -> Result<(f64, HybridState)> {
        let lambda = self.squeezing.lambda().stage("input")?;
        let input = tmsv_from_lambda(lambda, self.truncation()).stage("input")?;
        let hybrid = apply_cross_kerr(&input, self.alpha, self.phi).stage("cross-kerr")?;
        Ok((lambda, hybrid))
    }
}

/// Where the measurement outcome comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Given(f64),
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub lambda: f64,
    pub squeezing_db: f64,
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
    pub x: f64,
    pub seed: Option<u64>,
    pub n_max: usize,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_prime_linear: f64,
    pub lambda_prime_exp: f64,
    /// Zero when only the vacuum level is populated; empty when the
    /// vacuum level is not (the outcome resolved the photon number).
    pub lambda_prime_exact_fit: Option<f64>,
    pub v_in: f64,
    /// Empty when `(1 + β)λ ≥ 1`.
    pub v_out_linear: Option<f64>,
    pub v_out_exact: f64,
    pub entropy_in: f64,
    pub entropy_out_exact: f64,
    pub density_at_x: f64,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ps: Option<f64>,
    pub residual_max_phase: f64,
}

/// tmsv → cross-Kerr → homodyne projection → feed-forward → measures.
pub fn run_pipeline(params: &StateParams, outcome: Outcome, compute_ps: bool) -> Result<RunRecord> {
    let (lambda, hybrid) = params.hybrid()?;
    let input = hybrid.schmidt();
    let theta = params.theta;
    let (x, seed) = match outcome {
        Outcome::Given(x) => (x, None),
        Outcome::Sampled { seed } => {
            let o = sample_outcome(&hybrid, &HomodyneSetting::new(theta), seed).stage("sampling")?;
            (o.x_theta, Some(seed))
        }
    };
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite, got {x}")).in_stage("homodyne"));
    }

    let (projected, measured) = homodyne::project(&hybrid, theta, x).stage("homodyne")?;
    if projected.tail_mass() > TAIL_ADEQUACY {
        return Err(Error::Contract(format!(
            "post-measurement state is not resolved at n_max = {} (tail weight {:e}); raise n_max",
            projected.n_max(),
            projected.tail_mass()
        ))
        .in_stage("homodyne"));
    }
    let (output, correction) = apply_feedforward(&projected, &measured).stage("feed-forward")?;

    let duan = DuanParams::default();
    let lambda_prime_exact_fit = match effective_lambda(&output) {
        Ok(l) => Some(l),
        Err(Error::DegenerateFit { .. }) if output.amplitudes()[0].norm() > 1e-12 => Some(0.0),
        Err(Error::DegenerateFit { .. } | Error::Contract(_)) => None,
        Err(e) => return Err(e.in_stage("measures")),
    };
    let ps = if compute_ps {
        Some(
            protocol::success_probability(&hybrid, lambda, theta)
                .stage("success probability")?
                .ps,
        )
    } else {
        None
    };
    let beta = measured.beta;
    Ok(RunRecord {
        lambda,
        squeezing_db: squeezing_db_from_lambda(lambda).stage("input")?,
        alpha: params.alpha,
        phi: params.phi,
        theta,
        x,
        seed,
        n_max: input.n_max(),
        beta,
        gamma: measured.gamma,
        lambda_prime_linear: (1.0 + beta) * lambda,
        lambda_prime_exp: beta.exp() * lambda,
        lambda_prime_exact_fit,
        v_in: duan_variance_sum(input, duan).stage("measures")?,
        v_out_linear: protocol::v_out(lambda, beta).ok(),
        v_out_exact: duan_variance_sum(&output, duan).stage("measures")?,
        entropy_in: entropy_of_entanglement(input).stage("measures")?,
        entropy_out_exact: entropy_of_entanglement(&output).stage("measures")?,
        density_at_x: measured.density,
        success: protocol::success_criterion(x, params.alpha, theta),
        ps,
        residual_max_phase: correction.residual_max_phase,
    })
}

/// Which density columns to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fidelity {
    pub exact: bool,
    pub exp_beta: bool,
    pub linear_beta: bool,
}

impl Default for Fidelity {
    fn default() -> Self {
        Self {
            exact: true,
            exp_beta: true,
            linear_beta: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl DensityGrid {
    /// `±(6 + largest component shift)` around the center, 1201 points.
    pub fn around(hybrid: &HybridState, theta: f64) -> Self {
        let center = homodyne::quadrature_center(hybrid.alpha(), theta);
        let half = 6.0 + homodyne::max_component_offset(hybrid, theta);
        Self {
            x_min: center - half,
            x_max: center + half,
            points: 1201,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::Config(format!(
                "density grid needs x_min < x_max and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let step = (self.x_max - self.x_min) / (self.points - 1) as f64;
        (0..self.points).map(move |i| {
            if i + 1 == self.points {
                self.x_max
            } else {
                self.x_min + step * i as f64
            }
        })
    }
}

/// A disabled column is omitted; an enabled closed form that diverges at `x` is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub lambda: f64,
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_exp_beta: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_linear_beta: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_quoted_density: Option<f64>,
}

pub fn density_rows(
    params: &StateParams,
    grid: Option<DensityGrid>,
    fidelity: Fidelity,
    paper_quoted: bool,
) -> Result<Vec<DensityRow>> {
    let (lambda, hybrid) = params.hybrid()?;
    let theta = params.theta;
    let grid = grid.unwrap_or_else(|| DensityGrid::around(&hybrid, theta));
    grid.validate()?;
    let (alpha, phi) = (params.alpha, params.phi);
    let closed = |x: f64, variant| match homodyne::density_closed_form(lambda, alpha, phi, theta, x, variant) {
        Ok(d) => Ok(Some(d)),
        Err(Error::Divergent { .. }) => Ok(None),
        Err(e) => Err(e.in_stage("density")),
    };
    grid.nodes()
        .map(|x| {
            Ok(DensityRow {
                lambda,
                alpha,
                phi,
                theta,
                x,
                density_exact: fidelity.exact.then(|| homodyne::density_exact(&hybrid, theta, x)),
                density_exp_beta: fidelity
                    .exp_beta
                    .then(|| closed(x, DensityApprox::ExpBeta))
                    .transpose()?,
                density_linear_beta: fidelity
                    .linear_beta
                    .then(|| closed(x, DensityApprox::LinearBeta))
                    .transpose()?,
                paper_quoted_density: paper_quoted.then(|| protocol::paper_quoted_density(alpha, phi)),
            })
        })
        .collect()
}

/// How the ancilla amplitude of a feasibility row is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    Given(f64),
    /// Solve for the `α` that gives this resource margin.
    Margin(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityRecord {
    pub lambda: f64,
    pub nu: f64,
    pub improvement: f64,
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
    pub derived_beta_paper_formula: f64,
    pub derived_beta_exact: f64,
    pub derived_x_paper_formula: f64,
    pub derived_x_exact: f64,
    /// Exact outcome density at `derived_x_exact`.
    pub derived_density_exact: f64,
    pub rhs: f64,
    pub margin: f64,
    pub ps: f64,
    pub ps_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_quoted_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_quoted_density: Option<f64>,
}

pub fn feasibility_record(
    squeezing: Squeezing,
    nu: f64,
    alpha: AlphaChoice,
    phi: f64,
    theta: f64,
    paper_quoted: bool,
) -> Result<FeasibilityRecord> {
    let lambda = squeezing.lambda().stage("input")?;
    let alpha = match alpha {
        AlphaChoice::Given(a) => a,
        AlphaChoice::Margin(m) => protocol::alpha_for_margin(lambda, nu, phi, theta, m).stage("feasibility")?,
    };
    let query = FeasibilityQuery {
        lambda,
        nu,
        alpha,
        phi,
        theta,
    };
    query.validate().stage("feasibility")?;
    let beta = |v| protocol::beta_for_ratio(lambda, nu, v).stage("feasibility");
    let x = |v| protocol::x_for_improvement(&query, v).stage("feasibility");
    let resources = protocol::resource_condition(&query).stage("feasibility")?;
    let params = StateParams {
        squeezing: Squeezing::Lambda(lambda),
        alpha,
        phi,
        theta,
        n_max: None,
    };
    let (_, hybrid) = params.hybrid()?;
    let bounds = protocol::success_probability(&hybrid, lambda, theta).stage("success probability")?;
    let derived_x_exact = x(BetaVariant::Exact)?;
    Ok(FeasibilityRecord {
        lambda,
        nu,
        improvement: 1.0 - nu,
        alpha,
        phi,
        theta,
        derived_beta_paper_formula: beta(BetaVariant::Paper)?,
        derived_beta_exact: beta(BetaVariant::Exact)?,
        derived_x_paper_formula: x(BetaVariant::Paper)?,
        derived_x_exact,
        derived_density_exact: homodyne::density_exact(&hybrid, theta, derived_x_exact),
        rhs: resources.rhs,
        margin: resources.margin,
        ps: bounds.ps,
        ps_exact: bounds.ps_exact,
        paper_quoted_x: paper_quoted.then(|| protocol::paper_quoted_x(alpha, phi)),
        paper_quoted_density: paper_quoted.then(|| protocol::paper_quoted_density(alpha, phi)),
    })
}
