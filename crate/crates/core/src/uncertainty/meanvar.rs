use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::dist::Distribution;
use crate::error::{domain, Error, Result};
use crate::risk::RiskMeasure;

/// Laws with mean `mu` and standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVarianceClass {
    pub mu: f64,
    pub sigma: f64,
}

impl MeanVarianceClass {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain(format!("mean-variance class needs finite mu and sigma > 0, got ({mu}, {sigma})")));
        }
        Ok(Self { mu, sigma })
    }

    /// `⋁₁`: quantile `μ + σ √(α/(1-α))`.
    pub fn sup_fsd(&self) -> Distribution {
        Distribution::MeanVarFsd { mu: self.mu, sigma: self.sigma }
    }

    /// `⋁₂`: quantile `μ + σ (α - ½)/√(α(1-α))`.
    pub fn sup_ssd(&self) -> Distribution {
        Distribution::MeanVarSsd { mu: self.mu, sigma: self.sigma }
    }

    /// Worst case and both aggregations, by translation and scaling of the
    /// standard table.
    pub fn values(&self, rho: &RiskMeasure) -> Result<MvRow> {
        let t = mv_table(rho)?;
        let f = |c: f64| self.mu + self.sigma * c;
        Ok(MvRow { wr: f(t.wr), ma1: f(t.ma1), ma2: f(t.ma2) })
    }
}

/// Values for the standardized class (`μ = 0`, `σ = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvRow {
    pub wr: f64,
    pub ma1: f64,
    pub ma2: f64,
}

fn asin_sqrt_term(s: f64) -> f64 {
    s.sqrt().asin() - (s * (1.0 - s)).sqrt()
}

/// Worst case, `ρ(⋁₁)` and `ρ(⋁₂)` over the standardized class.
pub fn mv_table(rho: &RiskMeasure) -> Result<MvRow> {
    rho.validate()?;
    match *rho {
        RiskMeasure::Es { alpha } => {
            let wr = (alpha / (1.0 - alpha)).sqrt();
            let ma1 = (FRAC_PI_2 - alpha.sqrt().asin() + (alpha * (1.0 - alpha)).sqrt()) / (1.0 - alpha);
            Ok(MvRow { wr, ma1, ma2: wr })
        }
        RiskMeasure::Rvar { alpha, beta } => {
            if beta >= 1.0 {
                return mv_table(&RiskMeasure::Es { alpha });
            }
            let w = beta - alpha;
            Ok(MvRow {
                wr: (alpha / (1.0 - alpha)).sqrt(),
                ma1: (asin_sqrt_term(beta) - asin_sqrt_term(alpha)) / w,
                ma2: ((alpha * (1.0 - alpha)).sqrt() - (beta * (1.0 - beta)).sqrt()) / w,
            })
        }
        RiskMeasure::Var { alpha } => {
            let wr = (alpha / (1.0 - alpha)).sqrt();
            Ok(MvRow { wr, ma1: wr, ma2: (alpha - 0.5) / (alpha * (1.0 - alpha)).sqrt() })
        }
        RiskMeasure::Pd { k } => Ok(pd_row(k)),
        RiskMeasure::Expectile { alpha } => {
            let v = (alpha - 0.5) / (alpha * (1.0 - alpha)).sqrt();
            let ma1 = crate::risk::expectile(&Distribution::MeanVarFsd { mu: 0.0, sigma: 1.0 }, alpha)?;
            Ok(MvRow { wr: v, ma1, ma2: v })
        }
        RiskMeasure::Kusuoka { .. } => {
            Err(Error::Unsupported("mean-variance table has no closed form for general Kusuoka measures".into()))
        }
    }
}

fn pd_row(k: f64) -> MvRow {
    // Γ(k + ½) / Γ(k)
    let ratio = (ln_gamma(k + 0.5) - ln_gamma(k)).exp();
    MvRow {
        wr: (k - 1.0) / (2.0 * k - 1.0).sqrt(),
        ma1: PI.sqrt() * ratio,
        ma2: PI.sqrt() * (k - 1.0) * ratio / (2.0 * k - 1.0),
    }
}

/// Per-unit-σ loadings `(β_k, γ_k, η_k)` of `PD_k` under `⋁₁`, `⋁₂` and
/// the worst case.
pub fn pd_meanvar_coefficients(k: f64) -> Result<(f64, f64, f64)> {
    RiskMeasure::pd(k)?;
    let r = pd_row(k);
    Ok((r.ma1, r.ma2, r.wr))
}
