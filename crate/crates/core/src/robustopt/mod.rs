//! WR and MA₂ robust optimization over finite scenario sets, box
//! probability sets and the closed-form portfolio sets.

mod boxset;
mod bundle;
mod finite;
pub mod newsvendor;
mod portfolio;

pub use boxset::{box_es_program, box_es_value, box_worst_expectation, box_worst_expectation_vertices, BoxProbability};
pub use bundle::{level_bundle, BundleOptions, BundleResult, Polytope};
pub use finite::{induced_losses, kusuoka_form, ma2_program, ma_value_at, wr_program, wr_value_at};
pub use portfolio::{
    markowitz, portfolio_meanvar, portfolio_wasserstein, saa_portfolio, EllipticalGenerator, PortfolioInputs,
    PortfolioSolution, ReturnTarget,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::conic::{Affine, ConicProblem, SolverOptions};
use crate::error::{domain, Error, Result};
use crate::risk::RiskMeasure;

/// Robust approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Wr,
    Ma1,
    Ma2,
    Saa,
}

impl std::str::FromStr for Approach {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wr" => Ok(Approach::Wr),
            "ma1" => Ok(Approach::Ma1),
            "ma2" => Ok(Approach::Ma2),
            "saa" => Ok(Approach::Saa),
            _ => Err(Error::Parse(format!("unknown approach '{s}'"))),
        }
    }
}

/// `f(a, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossFunction {
    /// `aᵀx`
    Linear,
    /// `Σᵢ βᵢ(aᵢ - xᵢ)₊ + ηᵢ(xᵢ - aᵢ)₊`
    Newsvendor { beta: Vec<f64>, eta: Vec<f64> },
    /// `max_k {c_kᵀa + g_kᵀx + d_k}`, convex in `a` for every `x`.
    MaxAffine { pieces: Vec<AffinePiece> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub action: Vec<f64>,
    pub outcome: Vec<f64>,
    pub constant: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LossFunction {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            LossFunction::Linear => Ok(()),
            LossFunction::Newsvendor { beta, eta } => {
                if beta.len() != dim || eta.len() != dim {
                    return Err(domain("newsvendor coefficients must match the action dimension"));
                }
                if beta.iter().chain(eta).any(|c| !(*c >= 0.0)) {
                    return Err(domain("newsvendor coefficients must be nonnegative"));
                }
                Ok(())
            }
            LossFunction::MaxAffine { pieces } => {
                if pieces.is_empty() || pieces.iter().any(|p| p.action.len() != dim || p.outcome.len() != dim) {
                    return Err(domain("max-affine loss needs pieces matching the dimension"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, a: &[f64], x: &[f64]) -> f64 {
        match self {
            LossFunction::Linear => dot(a, x),
            LossFunction::Newsvendor { beta, eta } => (0..a.len())
                .map(|i| (beta[i] * (a[i] - x[i])).max(eta[i] * (x[i] - a[i])))
                .sum(),
            LossFunction::MaxAffine { pieces } => pieces
                .iter()
                .map(|p| dot(&p.action, a) + dot(&p.outcome, x) + p.constant)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// An affine expression in the program variables that upper bounds
    /// `f(a, x)` and is tight at the optimum (epigraph variables are added
    /// when the loss is not affine in `a`).
    pub(crate) fn epigraph(&self, prob: &mut ConicProblem, a: &[usize], x: &[f64]) -> Affine {
        match self {
            LossFunction::Linear => Affine::new(a.iter().zip(x).map(|(&j, &xi)| (j, xi)).collect(), 0.0),
            LossFunction::Newsvendor { beta, eta } => {
                let mut total = Affine::default();
                for i in 0..a.len() {
                    let e = prob.add_var();
                    // e >= beta (a - x), e >= eta (x - a)
                    prob.nonneg(Affine::new(vec![(e, 1.0), (a[i], -beta[i])], beta[i] * x[i]));
                    prob.nonneg(Affine::new(vec![(e, 1.0), (a[i], eta[i])], -eta[i] * x[i]));
                    total = total.add(e, 1.0);
                }
                total
            }
            LossFunction::MaxAffine { pieces } => {
                let t = prob.add_var();
                for p in pieces {
                    let mut e = Affine::new(vec![(t, 1.0)], -(dot(&p.outcome, x) + p.constant));
                    for (&j, &c) in a.iter().zip(&p.action) {
                        e = e.add(j, -c);
                    }
                    prob.nonneg(e);
                }
                Affine::var(t)
            }
        }
    }
}

/// Feasible actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSet {
    Free { dim: usize },
    NonNegative { dim: usize },
    Bounds { lower: Vec<f64>, upper: Vec<f64> },
    Simplex { dim: usize },
    /// Simplex with `wᵀμ ≤ bound`.
    SimplexTarget { mu: Vec<f64>, bound: f64 },
    Fixed { action: Vec<f64> },
}

impl ActionSet {
    pub fn dim(&self) -> usize {
        match self {
            ActionSet::Free { dim } | ActionSet::NonNegative { dim } | ActionSet::Simplex { dim } => *dim,
            ActionSet::Bounds { lower, .. } => lower.len(),
            ActionSet::SimplexTarget { mu, .. } => mu.len(),
            ActionSet::Fixed { action } => action.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(domain("action set has dimension zero"));
        }
        match self {
            ActionSet::Bounds { lower, upper } => {
                if lower.len() != upper.len() || lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(Error::Infeasible("action bounds are empty".into()));
                }
            }
            ActionSet::SimplexTarget { mu, bound } => {
                let best = mu.iter().copied().fold(f64::INFINITY, f64::min);
                if best > *bound {
                    return Err(Error::Infeasible(format!(
                        "return target wᵀμ ≤ {bound:.6e} is unattainable on the simplex (smallest attainable {best:.6e})"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Adds the action variables and their constraints.
    pub(crate) fn add_to(&self, prob: &mut ConicProblem) -> Vec<usize> {
        let a = prob.add_vars(self.dim());
        match self {
            ActionSet::Free { .. } => {}
            ActionSet::NonNegative { .. } => a.iter().for_each(|&j| prob.nonneg(Affine::var(j))),
            ActionSet::Bounds { lower, upper } => {
                for (i, &j) in a.iter().enumerate() {
                    prob.nonneg(Affine::new(vec![(j, 1.0)], -lower[i]));
                    prob.nonneg(Affine::new(vec![(j, -1.0)], upper[i]));
                }
            }
            ActionSet::Simplex { .. } | ActionSet::SimplexTarget { .. } => {
                a.iter().for_each(|&j| prob.nonneg(Affine::var(j)));
                prob.eq(Affine::new(a.iter().map(|&j| (j, 1.0)).collect(), -1.0));
                if let ActionSet::SimplexTarget { mu, bound } = self {
                    prob.nonneg(Affine::new(a.iter().zip(mu).map(|(&j, &m)| (j, -m)).collect(), *bound));
                }
            }
            ActionSet::Fixed { action } => {
                for (&j, &v) in a.iter().zip(action) {
                    prob.eq(Affine::new(vec![(j, 1.0)], -v));
                }
            }
        }
        a
    }
}

/// A scenario distribution of the outcome vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cloud {
    /// Equally weighted points.
    Points { points: Vec<Vec<f64>> },
    /// `N(μ, Σ)` approximated by `samples` draws from a seeded stream.
    Gaussian { mu: Vec<f64>, sigma: Vec<Vec<f64>>, samples: usize, seed: u64 },
}

impl Cloud {
    pub fn materialize(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            Cloud::Points { points } => {
                if points.is_empty() {
                    return Err(domain("empty point cloud"));
                }
                Ok(points.clone())
            }
            Cloud::Gaussian { mu, sigma, samples, seed } => {
                let d = mu.len();
                if sigma.len() != d || sigma.iter().any(|r| r.len() != d) || *samples == 0 {
                    return Err(domain("Gaussian cloud needs a d x d covariance and a positive sample size"));
                }
                let root = psd_root(sigma)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*samples)
                    .map(|_| {
                        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                        (0..d).map(|i| mu[i] + dot(&root[i], &z)).collect()
                    })
                    .collect())
            }
        }
    }
}

/// Rows of `L` with `L Lᵀ = Σ`, negative eigenvalues clipped to zero.
pub fn psd_root(sigma: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = sigma.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| 0.5 * (sigma[i][j] + sigma[j][i]));
    if m.iter().any(|v| !v.is_finite()) {
        return Err(domain("covariance has non-finite entries"));
    }
    let eig = m.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if eig.eigenvalues.iter().any(|&l| l < -1e-8 * (1.0 + scale)) {
        return Err(domain("covariance is not positive semidefinite"));
    }
    Ok((0..d)
        .map(|i| (0..d).map(|k| eig.eigenvectors[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt()).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSet {
    FiniteClouds { clouds: Vec<Cloud> },
    BoxProbability(BoxProbability),
}

/// An optimization instance read by the command line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustProgram {
    pub actions: ActionSet,
    pub loss: LossFunction,
    pub scenarios: ScenarioSet,
    pub measure: RiskMeasure,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iters")]
    pub max_iter: u32,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_iters() -> u32 {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramSolution {
    pub objective: f64,
    pub action: Vec<f64>,
    /// Thresholds `x`, flattened in scenario-major order.
    pub thresholds: Vec<f64>,
    pub iterations: u32,
    pub residual: f64,
    pub variables: usize,
    pub constraints: usize,
    pub threshold_variables: usize,
}

impl RobustProgram {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iter: self.max_iter }
    }

    pub fn solve(&self, approach: Approach) -> Result<ProgramSolution> {
        self.actions.validate()?;
        self.loss.validate(self.actions.dim())?;
        if approach == Approach::Ma2 && !self.measure.consistency().ssd_consistent {
            return Err(domain(format!("{} is not consistent with SSD; MA2 is undefined for it", self.measure.label())));
        }
        let opts = self.solver_options();
        match (&self.scenarios, approach) {
            (ScenarioSet::FiniteClouds { clouds }, Approach::Wr | Approach::Saa) => {
                if approach == Approach::Saa && clouds.len() != 1 {
                    return Err(domain("SAA needs a single empirical cloud"));
                }
                let pts = clouds.iter().map(|c| c.materialize()).collect::<Result<Vec<_>>>()?;
                wr_program(&self.actions, &self.loss, &pts, &self.measure, &opts)
            }
            (ScenarioSet::FiniteClouds { clouds }, Approach::Ma2) => {
                let pts = clouds.iter().map(|c| c.materialize()).collect::<Result<Vec<_>>>()?;
                ma2_program(&self.actions, &self.loss, &pts, &self.measure, &opts)
            }
            (ScenarioSet::BoxProbability(b), Approach::Wr | Approach::Ma2) => match self.measure {
                RiskMeasure::Es { alpha } => box_es_program(&self.actions, &self.loss, b, alpha, approach, &opts),
                _ => Err(Error::Unsupported("box programs are implemented for ES".into())),
            },
            (_, a) => Err(Error::Unsupported(format!("approach {a:?} is not available for this scenario set"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newsvendor_loss() {
        let f = LossFunction::Newsvendor { beta: vec![1.0, 2.0], eta: vec![3.0, 1.0] };
        assert_eq!(f.eval(&[1.0, 1.0], &[0.0, 2.0]), 1.0 + 1.0);
        assert_eq!(LossFunction::Linear.eval(&[0.5, 0.5], &[2.0, 4.0]), 3.0);
    }

    #[test]
    fn gaussian_cloud_is_reproducible() {
        let c = Cloud::Gaussian { mu: vec![1.0, -1.0], sigma: vec![vec![1.0, 0.5], vec![0.5, 2.0]], samples: 20, seed: 7 };
        assert_eq!(c.materialize().unwrap(), c.materialize().unwrap());
    }

    #[test]
    fn unattainable_target() {
        let s = ActionSet::SimplexTarget { mu: vec![0.1, 0.2], bound: 0.0 };
        assert!(matches!(s.validate(), Err(Error::Infeasible(_))));
    }
}
