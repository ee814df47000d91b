use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Atoms, Distribution, QuantileGrid};
use crate::error::{domain, invalid, Error, Result};
use crate::numeric::tanh_sinh;

/// Default number of levels in a Wasserstein FSD supremum.
pub const WASSERSTEIN_GRID: usize = 4096;
const LOW_LEVEL: f64 = 1e-6;
const HIGH_LEVEL: f64 = 1.0 - 1e-9;

/// `{F : W_p(F, F₀) ≤ ε}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinBall {
    pub p: f64,
    pub eps: f64,
    pub benchmark: Distribution,
}

/// Whether `E|X|^p < ∞`.
pub fn has_moment(d: &Distribution, p: f64) -> bool {
    use Distribution::*;
    match d {
        Atoms(_) | Normal { .. } | Logistic { .. } | PointMass { .. } => true,
        StudentT { nu, .. } => *nu > p,
        ParetoTail { p: q } => *q > p,
        MeanVarFsd { .. } | MeanVarSsd { .. } => p < 2.0,
        QuantileGrid(g) => g.tail_index() * p < 1.0 || g.tail_index() == 0.0,
        ParetoShift { base, coef, p: q } => has_moment(base, p) && (*coef == 0.0 || *q > p),
        MaxQuantile { parts } | Mixture { parts, .. } => parts.iter().all(|x| has_moment(x, p)),
    }
}

/// Logit-spaced levels on `[lo, hi]`, dense toward both ends.
pub fn logit_levels(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let logit = |s: f64| (s / (1.0 - s)).ln();
    let (a, b) = (logit(lo), logit(hi));
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let u = a + (b - a) * i as f64 / (n - 1).max(1) as f64;
            // 1 / (1 + e^{-u}), written to keep 1 - s accurate for large u
            if u > 0.0 {
                1.0 / (1.0 + (-u).exp())
            } else {
                let e = u.exp();
                e / (1.0 + e)
            }
        })
        .collect();
    out.dedup();
    out
}

impl WassersteinBall {
    pub fn new(p: f64, eps: f64, benchmark: Distribution) -> Result<Self> {
        let b = Self { p, eps, benchmark };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(domain(format!("Wasserstein order {} must be >= 1", self.p)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(domain(format!("radius {} must be >= 0", self.eps)));
        }
        self.benchmark.validate()?;
        if !has_moment(&self.benchmark, self.p) {
            return Err(invalid(format!("benchmark lacks a finite moment of order {}", self.p)));
        }
        Ok(())
    }

    /// `R(q) = ∫_α^1 (q - F₀⁻¹(s))_+^p ds - ε^p` and `R'(q)`.
    pub fn residual(&self, alpha: f64, q: f64) -> (f64, f64) {
        let p = self.p;
        let target = self.eps.powf(p);
        let (v, dv) = match &self.benchmark {
            Distribution::Atoms(a) => atoms_residual(a, alpha, q, p),
            Distribution::PointMass { t } => {
                let gap = (q - t).max(0.0);
                ((1.0 - alpha) * gap.powf(p), (1.0 - alpha) * p * gap.powf(p - 1.0))
            }
            d => {
                let tail = d.sf(q);
                let upper = 1.0 - tail;
                if upper <= alpha {
                    (0.0, 0.0)
                } else {
                    // level s written through its distance to F(q) so that
                    // upper-tail quantiles stay accurate
                    let gap = |s: f64, db: f64| {
                        let x = if s > 0.5 { d.quantile_tail(tail + db) } else { d.q(s) };
                        (q - x).max(0.0)
                    };
                    // for large p the target ε^p can be far below any fixed
                    // absolute tolerance
                    let abs = 1e-15 * target.min(1.0);
                    let v = tanh_sinh(|s, _, db| gap(s, db).powf(p), alpha, upper, abs, 1e-13);
                    let dv = tanh_sinh(|s, _, db| p * gap(s, db).powf(p - 1.0), alpha, upper, 0.0, 1e-13);
                    (v, dv)
                }
            }
        };
        (v - target, dv)
    }

    /// Quantile of the FSD supremum at level `α`: the root of `R(q) = 0`.
    pub fn fsd_quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!("level {alpha} outside (0, 1)")));
        }
        let f0 = &self.benchmark;
        let base = f0.q(alpha);
        if self.eps == 0.0 {
            return Ok(base);
        }
        if self.eps.powf(self.p) == 0.0 {
            return Err(Error::Numeric(format!("radius^p underflows for p = {}", self.p)));
        }
        let mut lo = base;
        let mut hi = f0.quantile_tail(1e-9).max(base) + self.eps * (1.0 - alpha).powf(-1.0 / self.p) + 1.0;
        let mut guard = 0;
        while self.residual(alpha, hi).0 <= 0.0 {
            hi = lo + 2.0 * (hi - lo);
            guard += 1;
            if guard > 200 {
                return Err(Error::Numeric(format!("no bracket for the supremum quantile at level {alpha}")));
            }
        }
        let mut q = hi;
        let target_tol = 1e-13 * self.eps.powf(self.p) + 1e-300;
        let mut width = hi - lo;
        let mut bisect = false;
        for _ in 0..400 {
            let (r, dr) = self.residual(alpha, q);
            if r.abs() <= target_tol {
                return Ok(q);
            }
            if r > 0.0 {
                hi = q;
            } else {
                lo = q;
            }
            let newton = if dr > 0.0 { q - r / dr } else { f64::NAN };
            // Newton crawls on high powers; fall back to halving when it
            // has not halved the bracket
            let next = if !bisect && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            bisect = hi - lo > 0.5 * width;
            width = hi - lo;
            if (next - q).abs() <= 4.0 * f64::EPSILON * (1.0 + q.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + q.abs()) {
                return Ok(next);
            }
            q = next;
        }
        Err(Error::Numeric(format!("supremum quantile at level {alpha} did not converge")))
    }

    /// `⋁₁` of the ball on the default level grid.
    pub fn sup_fsd(&self) -> Result<Distribution> {
        self.sup_fsd_on(&logit_levels(WASSERSTEIN_GRID, LOW_LEVEL, HIGH_LEVEL))
    }

    /// `⋁₁` of the ball with quantiles solved at the given levels. The right
    /// tail beyond the last level is a power tail with index `1/p`.
    pub fn sup_fsd_on(&self, levels: &[f64]) -> Result<Distribution> {
        self.validate()?;
        if !(self.eps > 0.0) {
            return Err(domain("FSD supremum needs a positive radius"));
        }
        let mut values = levels.par_iter().map(|&a| self.fsd_quantile(a)).collect::<Result<Vec<_>>>()?;
        // quantiles are nondecreasing in the level; remove solver jitter
        for i in 1..values.len() {
            if values[i] < values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Ok(Distribution::QuantileGrid(QuantileGrid::with_power_tail(levels.to_vec(), values, 1.0 / self.p)?))
    }

    /// `⋁₂` of the ball: quantile `F₀⁻¹(α) + (1 - 1/p)(1 - α)^{-1/p} ε`.
    pub fn sup_ssd(&self) -> Result<Distribution> {
        self.validate()?;
        if self.p <= 1.0 {
            return Err(Error::Unbounded("the order-1 Wasserstein ball has no SSD upper bound".into()));
        }
        if self.eps == 0.0 {
            return Ok(self.benchmark.clone());
        }
        Ok(Distribution::ParetoShift {
            base: Box::new(self.benchmark.clone()),
            coef: (1.0 - 1.0 / self.p) * self.eps,
            p: self.p,
        })
    }
}

fn atoms_residual(a: &Atoms, alpha: f64, q: f64, p: f64) -> (f64, f64) {
    let xs = a.locations();
    let cum = a.cumulative();
    let start = cum.partition_point(|&c| c <= alpha);
    let mut v = 0.0;
    let mut dv = 0.0;
    let mut lo = alpha;
    for j in start..xs.len() {
        if xs[j] >= q {
            break;
        }
        let len = cum[j] - lo;
        let gap = q - xs[j];
        v += len * gap.powf(p);
        dv += len * p * gap.powf(p - 1.0);
        lo = cum[j];
    }
    (v, dv)
}

/// Benchmark of a multivariate ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiBenchmark {
    /// Normal with mean `mu` and covariance `sigma`.
    Normal { mu: Vec<f64>, sigma: Vec<Vec<f64>> },
    /// Student t with `nu > 2` degrees of freedom, mean `mu` and covariance `sigma`.
    StudentT { nu: f64, mu: Vec<f64>, sigma: Vec<Vec<f64>> },
    /// Equally weighted points.
    EmpiricalCloud { points: Vec<Vec<f64>> },
}

/// `{F : W_{a,p}(F, F₀) ≤ ε}` on `R^d` with the `‖·‖_a` ground norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiWassersteinBall {
    pub a: f64,
    pub p: f64,
    pub eps: f64,
    pub benchmark: MultiBenchmark,
}

/// `b` with `1/a + 1/b = 1`; `a = 1` gives `b = ∞`.
pub fn conjugate_exponent(a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(domain(format!("norm exponent {a} must be >= 1")));
    }
    if a == 1.0 {
        Ok(f64::INFINITY)
    } else if a.is_infinite() {
        Ok(1.0)
    } else {
        Ok(a / (a - 1.0))
    }
}

/// `‖w‖_b`, with `b = ∞` the max norm.
pub fn norm(w: &[f64], b: f64) -> f64 {
    if b.is_infinite() {
        w.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else if b == 2.0 {
        w.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else if b == 1.0 {
        w.iter().map(|x| x.abs()).sum()
    } else {
        w.iter().map(|x| x.abs().powf(b)).sum::<f64>().powf(1.0 / b)
    }
}

fn quad_form(w: &[f64], s: &[Vec<f64>]) -> f64 {
    let mut v = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            v += wi * s[i][j] * wj;
        }
    }
    v
}

impl MultiWassersteinBall {
    pub fn dim(&self) -> usize {
        match &self.benchmark {
            MultiBenchmark::Normal { mu, .. } | MultiBenchmark::StudentT { mu, .. } => mu.len(),
            MultiBenchmark::EmpiricalCloud { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        conjugate_exponent(self.a)?;
        if !(self.p >= 1.0) {
            return Err(domain(format!("Wasserstein order {} must be >= 1", self.p)));
        }
        if !(self.eps >= 0.0) {
            return Err(domain("radius must be nonnegative"));
        }
        let d = self.dim();
        match &self.benchmark {
            MultiBenchmark::Normal { mu, sigma } | MultiBenchmark::StudentT { mu, sigma, .. } => {
                if sigma.len() != d || sigma.iter().any(|r| r.len() != d) {
                    return Err(invalid("covariance shape does not match the mean"));
                }
                for i in 0..d {
                    for j in 0..d {
                        if (sigma[i][j] - sigma[j][i]).abs() > 1e-12 * (1.0 + sigma[i][j].abs()) {
                            return Err(invalid("covariance must be symmetric"));
                        }
                    }
                }
                let m = nalgebra::DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
                let min_eig = m.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b));
                if min_eig < -1e-10 * (1.0 + m.norm()) {
                    return Err(invalid("covariance must be positive semidefinite"));
                }
                if mu.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("mean must be finite"));
                }
                if let MultiBenchmark::StudentT { nu, .. } = &self.benchmark {
                    if !(*nu > 2.0) {
                        return Err(invalid("t benchmark needs nu > 2"));
                    }
                }
            }
            MultiBenchmark::EmpiricalCloud { points } => {
                if points.is_empty() || points.iter().any(|p| p.len() != d) {
                    return Err(invalid("point cloud must be nonempty with equal dimensions"));
                }
            }
        }
        Ok(())
    }

    /// The univariate ball of `wᵀX`: radius `ε ‖w‖_b`, benchmark the law of
    /// `wᵀX` under the multivariate benchmark.
    pub fn project(&self, w: &[f64]) -> Result<WassersteinBall> {
        self.validate()?;
        if w.len() != self.dim() {
            return Err(domain("weight vector has the wrong dimension"));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(domain("weight vector must be nonzero"));
        }
        let b = conjugate_exponent(self.a)?;
        let radius = self.eps * norm(w, b);
        let dot = |m: &[f64]| m.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        let benchmark = match &self.benchmark {
            MultiBenchmark::Normal { mu, sigma } => {
                let s = quad_form(w, sigma).max(0.0).sqrt();
                if s == 0.0 {
                    Distribution::point_mass(dot(mu))?
                } else {
                    Distribution::normal(dot(mu), s)?
                }
            }
            MultiBenchmark::StudentT { nu, mu, sigma } => {
                let s = quad_form(w, sigma).max(0.0).sqrt();
                if s == 0.0 {
                    Distribution::point_mass(dot(mu))?
                } else {
                    Distribution::student_t_unit_variance(*nu, dot(mu), s)?
                }
            }
            MultiBenchmark::EmpiricalCloud { points } => {
                let xs: Vec<f64> = points.iter().map(|p| dot(p)).collect();
                Distribution::Atoms(Atoms::from_samples(&xs)?)
            }
        };
        WassersteinBall::new(self.p, radius, benchmark)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_closed_form() {
        let ball = WassersteinBall::new(2.0, 0.1, Distribution::point_mass(0.0).unwrap()).unwrap();
        for a in [0.1, 0.5, 0.9, 0.999] {
            let q = ball.fsd_quantile(a).unwrap();
            assert!((q - 0.1 * (1.0 - a).powf(-0.5)).abs() < 1e-12, "{a}: {q}");
        }
        let atoms = Distribution::atoms(vec![(0.0, 1.0)]).unwrap();
        let ball = WassersteinBall::new(3.0, 0.2, atoms).unwrap();
        let q = ball.fsd_quantile(0.75).unwrap();
        assert!((q - 0.2 * 0.25f64.powf(-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn ssd_quantile_formula() {
        let ball = WassersteinBall::new(2.0, 0.1, Distribution::point_mass(0.0).unwrap()).unwrap();
        let s = ball.sup_ssd().unwrap();
        assert!((s.quantile(0.75).unwrap() - 0.1).abs() < 1e-15);
        let one = WassersteinBall::new(1.0, 0.1, Distribution::point_mass(0.0).unwrap()).unwrap();
        assert!(matches!(one.sup_ssd(), Err(Error::Unbounded(_))));
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert!(conjugate_exponent(1.0).unwrap().is_infinite());
        assert!(conjugate_exponent(0.5).is_err());
        assert_eq!(norm(&[0.3, -0.7], f64::INFINITY), 0.7);
    }

    #[test]
    fn levels_are_increasing() {
        let l = logit_levels(100, 1e-6, 1.0 - 1e-9);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!((l[0] - 1e-6).abs() < 1e-15 && (1.0 - l[99] - 1e-9).abs() < 1e-15);
    }
}
