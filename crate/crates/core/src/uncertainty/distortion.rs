use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::numeric::tanh_sinh;
use crate::risk::RiskMeasure;

/// Distortion risk measures `∫ VaR_s dh(s)` with an available density `h'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    Es { alpha: f64 },
    Pd { k: f64 },
}

impl Distortion {
    pub fn from_measure(rho: &RiskMeasure) -> Result<Self> {
        rho.validate()?;
        match *rho {
            RiskMeasure::Es { alpha } => Ok(Distortion::Es { alpha }),
            RiskMeasure::Pd { k } => Ok(Distortion::Pd { k }),
            _ => Err(domain(format!("{} has no distortion coefficients here", rho.label()))),
        }
    }

    pub fn measure(&self) -> RiskMeasure {
        match *self {
            Distortion::Es { alpha } => RiskMeasure::Es { alpha },
            Distortion::Pd { k } => RiskMeasure::Pd { k },
        }
    }

    /// `h'(s)`.
    pub fn density(&self, s: f64) -> f64 {
        match *self {
            Distortion::Es { alpha } => {
                if s >= alpha {
                    1.0 / (1.0 - alpha)
                } else {
                    0.0
                }
            }
            Distortion::Pd { k } => k * s.powf(k - 1.0),
        }
    }

    fn support_start(&self) -> f64 {
        match *self {
            Distortion::Es { alpha } => alpha,
            Distortion::Pd { .. } => 0.0,
        }
    }

    /// `ζ = ‖h'‖_q`, the worst-case loading of the radius, `1/p + 1/q = 1`.
    pub fn zeta(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        if p == 1.0 {
            return Ok(self.density(1.0));
        }
        let q = p / (p - 1.0);
        Ok(match *self {
            Distortion::Es { alpha } => (1.0 - alpha).powf(-1.0 / p),
            Distortion::Pd { k } => k * ((k - 1.0) * q + 1.0).powf(-1.0 / q),
        })
    }

    /// `ξ = (1 - 1/p) ∫ (1-s)^{-1/p} h'(s) ds`, the SSD aggregation loading;
    /// infinite for `p = 1`.
    pub fn xi(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        Ok(match *self {
            Distortion::Es { alpha } => (1.0 - alpha).powf(-1.0 / p),
            Distortion::Pd { k } => {
                let lg = ln_gamma(k) + ln_gamma(1.0 - 1.0 / p) - ln_gamma(k + 1.0 - 1.0 / p);
                (1.0 - 1.0 / p) * k * lg.exp()
            }
        })
    }

    /// `ζ` by quadrature of `∫ h'^q`.
    pub fn zeta_quadrature(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        if p == 1.0 {
            return Ok(self.density(1.0));
        }
        let q = p / (p - 1.0);
        let v = tanh_sinh(|s, _, _| self.density(s).powf(q), self.support_start(), 1.0, 1e-15, 1e-13);
        Ok(v.powf(1.0 / q))
    }

    /// `ξ` by quadrature.
    pub fn xi_quadrature(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        let v = tanh_sinh(|s, _, db| db.powf(-1.0 / p) * self.density(s), self.support_start(), 1.0, 1e-15, 1e-13);
        Ok((1.0 - 1.0 / p) * v)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(domain(format!("Wasserstein order {p} must be >= 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_match_quadrature() {
        for d in [Distortion::Es { alpha: 0.9 }, Distortion::Pd { k: 2.0 }, Distortion::Pd { k: 10.0 }] {
            for p in [1.5, 2.0, 3.0] {
                let (z, zq) = (d.zeta(p).unwrap(), d.zeta_quadrature(p).unwrap());
                let (x, xq) = (d.xi(p).unwrap(), d.xi_quadrature(p).unwrap());
                assert!((z - zq).abs() < 1e-9 * z, "{d:?} {p}: {z} {zq}");
                assert!((x - xq).abs() < 1e-8 * x, "{d:?} {p}: {x} {xq}");
            }
        }
    }

    #[test]
    fn order_one() {
        let d = Distortion::Pd { k: 3.0 };
        assert_eq!(d.zeta(1.0).unwrap(), 3.0);
        assert!(d.xi(1.0).unwrap().is_infinite());
    }
}
