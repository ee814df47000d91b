//! Stochastic dominance comparisons and lattice suprema of finite sets.

use serde::{Deserialize, Serialize};

use crate::dist::{linear_grid, Atoms, Distribution, Envelope, PiFunction, DEFAULT_GRID_SIZE, TAIL_EPS};
use crate::error::{domain, invalid, Result};

/// Masses below this are dropped from an exact FSD supremum.
const FSD_MASS_EPS: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    /// first-order dominance, `F ≼₁ G` iff `F ≥ G` pointwise
    Fsd,
    /// increasing-convex dominance, `F ≼₂ G` iff `π_F ≤ π_G` pointwise
    Ssd,
}

impl std::str::FromStr for Order {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fsd" | "1" => Ok(Order::Fsd),
            "ssd" | "2" => Ok(Order::Ssd),
            _ => Err(crate::Error::Parse(format!("unknown order '{s}', expected fsd or ssd"))),
        }
    }
}

/// Discretization settings for non-atomic inputs.
#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    pub size: usize,
    pub tail_eps: f64,
    pub tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { size: DEFAULT_GRID_SIZE, tail_eps: TAIL_EPS, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct SupremumResult {
    pub order: Order,
    pub sup: Distribution,
    /// True iff every input was atomic.
    pub exact: bool,
    /// Upper envelope of the π's (SSD only).
    pub witness: Option<Envelope>,
    /// One-sided sup-norm bound on the π error from discretizing inputs.
    pub pi_error: f64,
}

fn all_atoms(set: &[Distribution]) -> Option<Vec<&Atoms>> {
    set.iter().map(|d| d.as_atoms()).collect()
}

/// Evaluation points covering the bulk of every law in the set.
fn comparison_grid(set: &[&Distribution], cfg: &GridConfig) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pts = Vec::new();
    for d in set {
        if let Some(a) = d.as_atoms() {
            pts.extend_from_slice(a.locations());
            lo = lo.min(a.min());
            hi = hi.max(a.max());
        } else {
            let (l, h) = d.span(cfg.tail_eps);
            lo = lo.min(l);
            hi = hi.max(h);
        }
    }
    pts.extend(linear_grid(lo, hi, cfg.size.max(2)));
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

/// Whether `f ≼ g` under `order`. Exact on atom pairs; on a grid otherwise.
pub fn dominates(order: Order, f: &Distribution, g: &Distribution, cfg: &GridConfig) -> Result<bool> {
    let tol = cfg.tol;
    match order {
        Order::Fsd => {
            let grid = comparison_grid(&[f, g], cfg);
            Ok(grid.iter().all(|&x| f.cdf(x) >= g.cdf(x) - tol))
        }
        Order::Ssd => {
            if f.mean()? > g.mean()? + tol {
                return Ok(false);
            }
            let grid = match (f.as_atoms(), g.as_atoms()) {
                (Some(a), Some(b)) => {
                    let mut v: Vec<f64> = a.locations().iter().chain(b.locations()).copied().collect();
                    v.sort_by(|x, y| x.total_cmp(y));
                    v.dedup();
                    v
                }
                _ => comparison_grid(&[f, g], cfg),
            };
            for &x in &grid {
                if f.pi(x)? > g.pi(x)? + tol {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// `⋁₁`: the pointwise minimum of the cdfs.
pub fn sup_fsd(set: &[Distribution]) -> Result<SupremumResult> {
    if set.is_empty() {
        return Err(domain("supremum of an empty set"));
    }
    if set.len() == 1 {
        return Ok(SupremumResult {
            order: Order::Fsd,
            sup: set[0].clone(),
            exact: set[0].is_atoms(),
            witness: None,
            pi_error: 0.0,
        });
    }
    if let Some(atoms) = all_atoms(set) {
        return Ok(SupremumResult {
            order: Order::Fsd,
            sup: Distribution::Atoms(sup_fsd_atoms(&atoms)),
            exact: true,
            witness: None,
            pi_error: 0.0,
        });
    }
    Ok(SupremumResult {
        order: Order::Fsd,
        sup: Distribution::MaxQuantile { parts: set.to_vec() },
        exact: false,
        witness: None,
        pi_error: 0.0,
    })
}

fn sup_fsd_atoms(set: &[&Atoms]) -> Atoms {
    let mut xs: Vec<f64> = set.iter().flat_map(|a| a.locations().iter().copied()).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let mut locs = Vec::new();
    let mut masses = Vec::new();
    let mut prev = 0.0;
    for &x in &xs {
        let c = set.iter().map(|a| a.cdf(x)).fold(1.0, f64::min);
        let m = c - prev;
        if m > FSD_MASS_EPS {
            locs.push(x);
            masses.push(m);
            prev = c;
        }
    }
    Atoms::from_sorted_unchecked(locs, masses)
}

/// `⋁₂`: the law whose π is the pointwise maximum of the inputs' π.
pub fn sup_ssd(set: &[Distribution], cfg: &GridConfig) -> Result<SupremumResult> {
    if set.is_empty() {
        return Err(domain("supremum of an empty set"));
    }
    let exact = set.iter().all(|d| d.is_atoms());
    let mut pis = Vec::with_capacity(set.len());
    let mut pi_error: f64 = 0.0;
    for d in set {
        let a = d.discretize(cfg.size)?;
        if !d.is_atoms() {
            // the discrete π lies below the true one; measure the gap at the atoms
            for &x in a.locations().iter().step_by((a.len() / 64).max(1)) {
                pi_error = pi_error.max(d.pi(x)? - a.pi(x));
            }
        }
        pis.push(PiFunction::from_atoms(&a));
    }
    let env = PiFunction::envelope(&pis)?;
    let sup = env.pi.to_atoms()?;
    Ok(SupremumResult { order: Order::Ssd, sup: Distribution::Atoms(sup), exact, witness: Some(env), pi_error })
}

pub fn supremum(order: Order, set: &[Distribution], cfg: &GridConfig) -> Result<SupremumResult> {
    match order {
        Order::Fsd => sup_fsd(set),
        Order::Ssd => sup_ssd(set, cfg),
    }
}

/// `Σ λ_i F_i`. Atomic inputs give merged atoms.
pub fn convex_mixture(set: &[Distribution], weights: &[f64]) -> Result<Distribution> {
    if set.is_empty() || set.len() != weights.len() {
        return Err(invalid("mixture needs matching, nonempty sets of laws and weights"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(invalid("mixture weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("mixture weights sum to {total}, not 1")));
    }
    if let Some(atoms) = all_atoms(set) {
        let mut pairs = Vec::new();
        for (a, &w) in atoms.iter().zip(weights) {
            pairs.extend(a.iter().map(|(x, p)| (x, p * w)));
        }
        // renormalise away the rounding in the products
        let s: f64 = pairs.iter().map(|p| p.1).sum();
        pairs.iter_mut().for_each(|p| p.1 /= s);
        return Ok(Distribution::Atoms(Atoms::new(pairs)?));
    }
    Distribution::mixture(set.to_vec(), weights.to_vec())
}
