use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dist::{Atoms, Distribution};
use crate::error::{domain, Error, Result};
use crate::numeric::golden_min;

pub const MIN_FIT_OBS: usize = 30;
pub const NU_RANGE: (f64, f64) = (2.0, 200.0);
const NU_TOL: f64 = 1e-3;

/// Sample mean and covariance (divisor `n - 1`).
pub fn sample_moments(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let mut mu = vec![0.0; d];
    for x in xs {
        for i in 0..d {
            mu[i] += x[i] / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for x in xs {
        for i in 0..d {
            for j in 0..=i {
                cov[i][j] += (x[i] - mu[i]) * (x[j] - mu[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    (mu, cov)
}

/// Multivariate t fit: location, scatter and degrees of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TFit {
    pub nu: f64,
    pub location: Vec<f64>,
    pub scatter: Vec<Vec<f64>>,
    pub log_likelihood: f64,
}

struct Em {
    /// observations as rows
    data: DMatrix<f64>,
}

impl Em {
    /// EM for location and scatter at fixed `nu`. Returns the fit and its
    /// log-likelihood.
    fn profile(&self, nu: f64, start: &(DVector<f64>, DMatrix<f64>)) -> Option<(DVector<f64>, DMatrix<f64>, f64)> {
        let (n, d) = self.data.shape();
        let (nf, df) = (n as f64, d as f64);
        let c = ln_gamma(0.5 * (nu + df)) - ln_gamma(0.5 * nu) - 0.5 * df * (nu * std::f64::consts::PI).ln();
        let (mut mu, mut s) = start.clone();
        let mut ll_prev = f64::NEG_INFINITY;
        for _ in 0..500 {
            let chol = s.clone().cholesky()?;
            let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let mut r = self.data.clone();
            for mut row in r.row_iter_mut() {
                row -= mu.transpose();
            }
            // squared Mahalanobis distances: column norms of L⁻¹ Rᵀ
            let z = chol.l().solve_lower_triangular(&r.transpose())?;
            let deltas: Vec<f64> = z.column_iter().map(|col| col.norm_squared()).collect();
            let ll = nf * (c - 0.5 * log_det) - 0.5 * (nu + df) * deltas.iter().map(|q| (q / nu).ln_1p()).sum::<f64>();
            if (ll - ll_prev).abs() <= 1e-11 * (1.0 + ll.abs()) {
                return Some((mu, s, ll));
            }
            ll_prev = ll;
            let w = DVector::from_iterator(n, deltas.iter().map(|q| (nu + df) / (nu + q)));
            mu = self.data.tr_mul(&w) / w.sum();
            let mut r = self.data.clone();
            for (i, mut row) in r.row_iter_mut().enumerate() {
                row -= mu.transpose();
                row *= w[i].sqrt();
            }
            s = r.tr_mul(&r) / nf;
        }
        Some((mu, s, ll_prev))
    }
}

/// Maximum likelihood t fit with `ν ∈ (2, 200]` chosen by golden section on
/// the profile likelihood (location and scatter re-estimated per `ν`).
pub fn fit_multivariate_t(xs: &[Vec<f64>]) -> Result<TFit> {
    if xs.len() < MIN_FIT_OBS {
        return Err(domain(format!("t fit needs at least {MIN_FIT_OBS} observations")));
    }
    let d = xs[0].len();
    if d == 0 || xs.iter().any(|x| x.len() != d) {
        return Err(domain("observations must share one positive dimension"));
    }
    let (m, c) = sample_moments(xs);
    let start = (DVector::from_vec(m), DMatrix::from_fn(d, d, |i, j| c[i][j]));
    if start.1.clone().cholesky().is_none() {
        return Err(domain("sample covariance is singular; the sample is degenerate"));
    }
    let em = Em { data: DMatrix::from_fn(xs.len(), d, |i, j| xs[i][j]) };
    // neighbouring golden-section points have close optima; warm start EM
    let warm = std::cell::RefCell::new(start.clone());
    let neg = |nu: f64| {
        let from = warm.borrow().clone();
        match em.profile(nu, &from) {
            Some((mu, s, ll)) => {
                *warm.borrow_mut() = (mu, s);
                -ll
            }
            None => f64::INFINITY,
        }
    };
    let (nu, _) = golden_min(neg, NU_RANGE.0 + NU_TOL, NU_RANGE.1, NU_TOL);
    let from = warm.borrow().clone();
    let (mu, s, ll) = em.profile(nu, &from).ok_or_else(|| Error::Numeric("t scatter lost definiteness".into()))?;
    Ok(TFit {
        nu,
        location: mu.iter().copied().collect(),
        scatter: (0..d).map(|i| (0..d).map(|j| s[(i, j)]).collect()).collect(),
        log_likelihood: ll,
    })
}

/// The four candidate models for one loss series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModels {
    pub empirical: Distribution,
    pub normal: Distribution,
    pub student_t: Distribution,
    pub logistic: Distribution,
    pub mean: f64,
    pub sd: f64,
    pub nu: f64,
}

impl FittedModels {
    pub fn names() -> [&'static str; 4] {
        ["empirical", "normal", "t", "logistic"]
    }

    pub fn as_vec(&self) -> Vec<Distribution> {
        vec![self.empirical.clone(), self.normal.clone(), self.student_t.clone(), self.logistic.clone()]
    }
}

/// Normal and logistic by moments (logistic scale `σ√3/π`), t by maximum
/// likelihood, and the empirical law.
pub fn fit_models(xs: &[f64]) -> Result<FittedModels> {
    if xs.len() < MIN_FIT_OBS {
        return Err(domain(format!("fitting needs at least {MIN_FIT_OBS} observations, got {}", xs.len())));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(domain("sample contains non-finite values"));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let (m, c) = sample_moments(&rows);
    let (mean, sd) = (m[0], c[0][0].sqrt());
    if !(sd > 0.0) {
        return Err(domain("sample has zero variance"));
    }
    let t = fit_multivariate_t(&rows)?;
    Ok(FittedModels {
        empirical: Distribution::Atoms(Atoms::from_samples(xs)?),
        normal: Distribution::normal(mean, sd)?,
        student_t: Distribution::student_t(t.nu, t.location[0], t.scatter[0][0].sqrt())?,
        logistic: Distribution::logistic(mean, sd * 3f64.sqrt() / std::f64::consts::PI)?,
        mean,
        sd,
        nu: t.nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_is_rejected() {
        assert!(fit_models(&[1.0; 40]).is_err());
        assert!(fit_models(&[1.0, 2.0]).is_err());
    }
}
