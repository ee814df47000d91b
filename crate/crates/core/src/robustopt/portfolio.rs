use serde::{Deserialize, Serialize};

use super::bundle::{level_bundle, BundleOptions, Polytope};
use super::{finite::wr_program, psd_root, ActionSet, Approach, LossFunction};
use crate::conic::{Affine, ConicProblem, SolverOptions};
use crate::dist::Distribution;
use crate::error::{domain, Error, Result};
use crate::risk::RiskMeasure;
use crate::uncertainty::{conjugate_exponent, mv_table, norm, Distortion};

/// Mean and covariance of the loss vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioInputs {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

impl PortfolioInputs {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.sigma.len() != d || self.sigma.iter().any(|r| r.len() != d) {
            return Err(domain("portfolio inputs need a d-vector mean and a d x d covariance"));
        }
        Ok(())
    }

    pub fn variance(&self, w: &[f64]) -> f64 {
        let mut v = 0.0;
        for i in 0..w.len() {
            for j in 0..w.len() {
                v += w[i] * self.sigma[i][j] * w[j];
            }
        }
        v.max(0.0)
    }

    pub fn mean(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.mu).map(|(a, b)| a * b).sum()
    }
}

/// Expected annualized return `r0` over `m` periods; constraint `wᵀμ ≤ -r0/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnTarget {
    pub r0: f64,
    pub m: f64,
}

impl ReturnTarget {
    pub fn bound(&self) -> f64 {
        -self.r0 / self.m
    }
}

fn action_set(inputs: &PortfolioInputs, target: Option<ReturnTarget>) -> ActionSet {
    match target {
        Some(t) => ActionSet::SimplexTarget { mu: inputs.mu.clone(), bound: t.bound() },
        None => ActionSet::Simplex { dim: inputs.dim() },
    }
}

/// Generator of the elliptical benchmark, scaled to unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EllipticalGenerator {
    Normal,
    StudentT { nu: f64 },
}

impl EllipticalGenerator {
    pub fn unit(&self) -> Result<Distribution> {
        match *self {
            EllipticalGenerator::Normal => Distribution::normal(0.0, 1.0),
            EllipticalGenerator::StudentT { nu } => {
                if !(nu > 2.0) {
                    return Err(domain("t generator needs nu > 2"));
                }
                Distribution::student_t_unit_variance(nu, 0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSolution {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
    pub residual: f64,
}

/// `min wᵀμ + c_s √(wᵀΣw) + c_n ‖w‖_b` over the (target-cut) simplex.
fn socp(
    inputs: &PortfolioInputs,
    target: Option<ReturnTarget>,
    c_sqrt: f64,
    c_norm: f64,
    b: f64,
    opts: &SolverOptions,
) -> Result<PortfolioSolution> {
    inputs.validate()?;
    if !(c_sqrt >= 0.0) || !(c_norm >= 0.0) {
        return Err(domain("dispersion coefficients must be nonnegative for a convex program"));
    }
    if c_norm.is_infinite() {
        return Err(Error::Unbounded("the radius term has an infinite coefficient".into()));
    }
    let actions = action_set(inputs, target);
    actions.validate()?;
    let d = inputs.dim();
    let mut prob = ConicProblem::new();
    let w = actions.add_to(&mut prob);
    for (i, &j) in w.iter().enumerate() {
        prob.set_cost(j, inputs.mu[i]);
    }
    if c_sqrt > 0.0 {
        let root = psd_root(&inputs.sigma)?;
        let s = prob.add_var();
        prob.set_cost(s, c_sqrt);
        let mut rows = vec![Affine::var(s)];
        for k in 0..d {
            rows.push(Affine::new((0..d).map(|i| (w[i], root[i][k])).collect(), 0.0));
        }
        prob.soc(rows);
    }
    if c_norm > 0.0 {
        let t = prob.add_var();
        prob.set_cost(t, c_norm);
        if b == 2.0 {
            let mut rows = vec![Affine::var(t)];
            rows.extend(w.iter().map(|&j| Affine::var(j)));
            prob.soc(rows);
        } else if b.is_infinite() {
            for &j in &w {
                prob.nonneg(Affine::new(vec![(t, 1.0), (j, -1.0)], 0.0));
                prob.nonneg(Affine::new(vec![(t, 1.0), (j, 1.0)], 0.0));
            }
        } else if b == 1.0 {
            let mut sum = Affine::new(vec![(t, 1.0)], 0.0);
            for &j in &w {
                let u = prob.add_var();
                prob.nonneg(Affine::new(vec![(u, 1.0), (j, -1.0)], 0.0));
                prob.nonneg(Affine::new(vec![(u, 1.0), (j, 1.0)], 0.0));
                sum = sum.add(u, -1.0);
            }
            prob.nonneg(sum);
        } else {
            // r_i^{1/b} t^{1-1/b} ≥ |w_i|, Σ r_i ≤ t
            let mut sum = Affine::new(vec![(t, 1.0)], 0.0);
            for &j in &w {
                let r = prob.add_var();
                prob.pow(1.0 / b, Affine::var(r), Affine::var(t), Affine::var(j));
                sum = sum.add(r, -1.0);
            }
            prob.nonneg(sum);
        }
    }
    let sol = prob.solve(opts)?;
    let weights: Vec<f64> = w.iter().map(|&j| sol.x[j].max(0.0)).collect();
    let objective = inputs.mean(&weights) + c_sqrt * inputs.variance(&weights).sqrt() + c_norm * norm(&weights, b);
    Ok(PortfolioSolution { weights, objective, iterations: sol.iterations, residual: sol.residual })
}

/// Robust `ρ` of `wᵀX` over a projected Wasserstein ball around an
/// elliptical benchmark: `wᵀμ + ρ(F_ψ)√(wᵀΣw) + c ε ‖w‖_b`, `c = ζ` (WR) or
/// `ξ` (MA₂).
#[allow(clippy::too_many_arguments)]
pub fn portfolio_wasserstein(
    inputs: &PortfolioInputs,
    target: Option<ReturnTarget>,
    rho: &Distortion,
    generator: EllipticalGenerator,
    eps: f64,
    a: f64,
    p: f64,
    approach: Approach,
    opts: &SolverOptions,
) -> Result<PortfolioSolution> {
    if !(eps >= 0.0) {
        return Err(domain("radius must be nonnegative"));
    }
    let rho_psi = rho.measure().evaluate(&generator.unit()?)?;
    let c = match approach {
        Approach::Wr => rho.zeta(p)?,
        Approach::Ma2 => rho.xi(p)?,
        other => return Err(Error::Unsupported(format!("{other:?} is not a Wasserstein portfolio approach"))),
    };
    let b = conjugate_exponent(a)?;
    let coef = if eps == 0.0 { 0.0 } else { c * eps };
    socp(inputs, target, rho_psi, coef, b, opts)
}

/// `wᵀμ + κ √(wᵀΣw)` with `κ` the WR, MA₁ or MA₂ value of `ρ` on the
/// standardized mean-variance class.
pub fn portfolio_meanvar(
    inputs: &PortfolioInputs,
    target: Option<ReturnTarget>,
    rho: &RiskMeasure,
    approach: Approach,
    opts: &SolverOptions,
) -> Result<PortfolioSolution> {
    let row = mv_table(rho)?;
    let k = match approach {
        Approach::Wr => row.wr,
        Approach::Ma1 => row.ma1,
        Approach::Ma2 => row.ma2,
        Approach::Saa => return Err(Error::Unsupported("SAA has no mean-variance form".into())),
    };
    if k < 0.0 {
        return Err(Error::Unsupported(format!(
            "{} has a negative dispersion loading on this class; the program is not convex",
            rho.label()
        )));
    }
    socp(inputs, target, k, 0.0, 2.0, opts)
}

/// `min wᵀΣw` over the (target-cut) simplex.
pub fn markowitz(inputs: &PortfolioInputs, target: Option<ReturnTarget>, opts: &SolverOptions) -> Result<PortfolioSolution> {
    inputs.validate()?;
    let actions = action_set(inputs, target);
    actions.validate()?;
    let d = inputs.dim();
    let root = psd_root(&inputs.sigma)?;
    let mut prob = ConicProblem::new();
    let w = actions.add_to(&mut prob);
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..d).map(|k| root[i][k] * root[j][k]).sum();
            if s != 0.0 {
                prob.add_quad(w[i], w[j], 2.0 * s);
            }
        }
    }
    let sol = prob.solve(opts)?;
    let weights: Vec<f64> = w.iter().map(|&j| sol.x[j].max(0.0)).collect();
    let objective = inputs.variance(&weights);
    Ok(PortfolioSolution { weights, objective, iterations: sol.iterations, residual: sol.residual })
}

/// `ρ` of the empirical loss `wᵀX` minimized over the (target-cut)
/// simplex. ES and Kusuoka measures use the sample linear program; PD uses
/// a level bundle method on the sorted-sample representation.
pub fn saa_portfolio(
    samples: &[Vec<f64>],
    mu: &[f64],
    target: Option<ReturnTarget>,
    rho: &RiskMeasure,
    opts: &SolverOptions,
) -> Result<PortfolioSolution> {
    if samples.is_empty() || samples.iter().any(|x| x.len() != mu.len()) {
        return Err(domain("SAA needs a nonempty sample matching the asset count"));
    }
    let actions = match target {
        Some(t) => ActionSet::SimplexTarget { mu: mu.to_vec(), bound: t.bound() },
        None => ActionSet::Simplex { dim: mu.len() },
    };
    actions.validate()?;
    match rho {
        RiskMeasure::Es { .. } | RiskMeasure::Kusuoka { .. } => {
            let s = wr_program(&actions, &LossFunction::Linear, &[samples.to_vec()], rho, opts)?;
            Ok(PortfolioSolution { weights: s.action, objective: s.objective, iterations: s.iterations, residual: s.residual })
        }
        RiskMeasure::Pd { k } => {
            let n = samples.len();
            let k = *k;
            let omega: Vec<f64> = (1..=n)
                .map(|i| (i as f64 / n as f64).powf(k) - ((i - 1) as f64 / n as f64).powf(k))
                .collect();
            let f = |w: &[f64]| {
                let mut l: Vec<(f64, usize)> =
                    samples.iter().enumerate().map(|(i, x)| (x.iter().zip(w).map(|(a, b)| a * b).sum(), i)).collect();
                l.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut v = 0.0;
                let mut g = vec![0.0; w.len()];
                for (r, &(li, idx)) in l.iter().enumerate() {
                    v += omega[r] * li;
                    for (gj, xj) in g.iter_mut().zip(&samples[idx]) {
                        *gj += omega[r] * xj;
                    }
                }
                (v, g)
            };
            let region = Polytope::simplex(mu.len(), target.map(|t| (mu, t.bound())));
            let start_idx = (0..mu.len()).min_by(|&i, &j| mu[i].total_cmp(&mu[j])).unwrap_or(0);
            let mut start = vec![0.0; mu.len()];
            start[start_idx] = 1.0;
            let bo = BundleOptions { max_iter: (opts.max_iter as usize).max(400), ..BundleOptions::default() };
            let r = level_bundle(f, &region, &start, &bo)?;
            Ok(PortfolioSolution {
                weights: r.x.iter().map(|v| v.max(0.0)).collect(),
                objective: r.value,
                iterations: r.iterations as u32,
                residual: r.value - r.lower,
            })
        }
        _ => Err(Error::Unsupported(format!("SAA portfolio is implemented for ES, Kusuoka and PD, not {}", rho.label()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> PortfolioInputs {
        PortfolioInputs { mu: vec![-0.001, -0.0005], sigma: vec![vec![4e-4, 1e-4], vec![1e-4, 2e-4]] }
    }

    #[test]
    fn single_asset() {
        let one = PortfolioInputs { mu: vec![0.2], sigma: vec![vec![0.09]] };
        let s = portfolio_wasserstein(
            &one,
            None,
            &Distortion::Pd { k: 2.0 },
            EllipticalGenerator::Normal,
            0.1,
            2.0,
            2.0,
            Approach::Wr,
            &SolverOptions::default(),
        )
        .unwrap();
        let pd = RiskMeasure::pd(2.0).unwrap().evaluate(&Distribution::normal(0.0, 1.0).unwrap()).unwrap();
        let expect = 0.2 + pd * 0.3 + 2.0 / 3f64.sqrt() * 0.1;
        assert!((s.objective - expect).abs() < 1e-7);
        assert!((s.weights[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn markowitz_two_assets() {
        let s = markowitz(&inputs(), None, &SolverOptions::default()).unwrap();
        // w* = (σ2² - σ12)/(σ1² + σ2² - 2σ12) = 1/4
        // interior-point accuracy in x is about the square root of the gap tolerance
        assert!((s.weights[0] - 0.25).abs() < 1e-5, "{:?}", s.weights);
    }
}
