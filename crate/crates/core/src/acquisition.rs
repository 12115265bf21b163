//! Expected improvement.
//!
//! `EI(x) = (mu - f*) Phi(g) + sigma phi(g)`, `g = (mu - f*) / sigma`, with
//! `mu`, `sigma` the posterior mean and standard deviation at `x` and `f*` the
//! best observed value (maximisation). This is the Mockus/Jones closed form of
//! `E[max(Y - f*, 0)]`; the variant with `sigma^2` in the denominator of `g`
//! is not an expectation of the improvement and can go negative.

use statrs::function::erf::erfc;

use crate::gp::GpPosterior;

/// Below this standard deviation the posterior is treated as a point mass.
pub const SIGMA_FLOOR: f64 = 1e-12;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// EI for a normal predictive distribution `N(mean, sigma^2)`.
pub fn ei_from_moments(mean: f64, sigma: f64, incumbent: f64) -> f64 {
    let diff = mean - incumbent;
    if !(sigma >= SIGMA_FLOOR) {
        return diff.max(0.0);
    }
    let g = diff / sigma;
    (diff * normal_cdf(g) + sigma * normal_pdf(g)).max(0.0)
}

#[derive(Debug, Clone, Copy)]
pub struct AcquisitionContext<'a> {
    pub gp: &'a GpPosterior,
    /// Best observed value, maximisation convention.
    pub incumbent: f64,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(gp: &'a GpPosterior, incumbent: f64) -> Self {
        AcquisitionContext { gp, incumbent }
    }

    /// Uses the largest training target of `gp` as the incumbent.
    pub fn from_training_max(gp: &'a GpPosterior) -> Self {
        let incumbent = gp.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        AcquisitionContext { gp, incumbent }
    }

    /// Cheap upper bound on EI at `x`: EI grows with sigma, so the exact mean
    /// with an upper bound on sigma bounds it from above.
    pub fn ei_upper_bound(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.gp.predict_mean_variance_bound(x);
        ei_from_moments(mean, var.sqrt(), self.incumbent)
    }
}

/// EI at one point. Panics on a dimension mismatch with the posterior.
pub fn expected_improvement(ctx: &AcquisitionContext<'_>, x: &[f64]) -> f64 {
    assert_eq!(x.len(), ctx.gp.dim(), "point dimension does not match the posterior");
    let (mean, var) = ctx.gp.predict_unchecked(x);
    ei_from_moments(mean, var.sqrt(), ctx.incumbent)
}

pub fn ei_surface(ctx: &AcquisitionContext<'_>, points: &[Vec<f64>]) -> Vec<f64> {
    points.iter().map(|p| expected_improvement(ctx, p)).collect()
}
