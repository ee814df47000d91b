use serde::Serialize;

use super::RiskMeasure;
use crate::conic::{Affine, ConicProblem, SolverOptions};
use crate::dist::{Distribution, PiFunction};
use crate::error::{domain, Result};
use crate::lattice::{convex_mixture, supremum, GridConfig, Order};

/// `sup_{F ∈ set} ρ(F)`.
pub fn wr_value(rho: &RiskMeasure, set: &[Distribution]) -> Result<f64> {
    if set.is_empty() {
        return Err(domain("worst case over an empty set"));
    }
    let mut best = f64::NEG_INFINITY;
    for d in set {
        best = best.max(rho.evaluate(d)?);
    }
    Ok(best)
}

/// `ρ(⋁ set)` under the given order.
pub fn ma_value(rho: &RiskMeasure, order: Order, set: &[Distribution], cfg: &GridConfig) -> Result<f64> {
    let tag = rho.consistency();
    let consistent = match order {
        Order::Fsd => tag.fsd_consistent,
        Order::Ssd => tag.ssd_consistent,
    };
    if !consistent {
        log::warn!("{} is not consistent with {:?}; the aggregated value may be below the worst case", rho.label(), order);
    }
    let sup = supremum(order, set, cfg)?;
    rho.evaluate(&sup.sup)
}

/// `min_x {x + max_F π_F(x) / (1-α)}` over atomic laws, minimized over the
/// breakpoints of the envelope.
pub fn es_minimax(alpha: f64, set: &[Distribution]) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(domain(format!("ES level {alpha} outside [0, 1)")));
    }
    let pis = set
        .iter()
        .map(|d| {
            d.as_atoms()
                .map(PiFunction::from_atoms)
                .ok_or_else(|| domain("minimax form needs atomic laws"))
        })
        .collect::<Result<Vec<_>>>()?;
    let env = PiFunction::envelope(&pis)?;
    Ok(env
        .pi
        .trace()
        .into_iter()
        .map(|(x, v)| x + v / (1.0 - alpha))
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Serialize)]
pub struct CemaReport {
    /// `ρ(⋁ conv F)`, equal to `ρ(⋁ F)`.
    pub ma: f64,
    /// Largest `ρ` over the mixture grid (a lower bound on the polytope sup).
    pub wr_polytope: f64,
    /// Largest `ρ` over the generators alone.
    pub wr_vertices: f64,
    /// `ma - wr_polytope`.
    pub gap: f64,
    /// Exact polytope supremum when `ρ` is ES over atomic generators.
    pub lp_sup: Option<f64>,
    /// Bound on how far the grid sup may sit below the true sup (ES only).
    pub grid_bound: Option<f64>,
    pub grid_points: usize,
}

/// Compositions of `total` into `parts` nonnegative integers.
fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=total {
            prefix.push(i);
            rec(parts - 1, total - i, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, total, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Compares the aggregated value with the worst case over the convex hull
/// of the generators, the latter searched on a simplex grid with step
/// `1/resolution`.
pub fn cema_check(
    rho: &RiskMeasure,
    order: Order,
    generators: &[Distribution],
    resolution: usize,
    cfg: &GridConfig,
) -> Result<CemaReport> {
    if generators.is_empty() || resolution == 0 {
        return Err(domain("cEMA check needs generators and a positive grid resolution"));
    }
    let ma = ma_value(rho, order, generators, cfg)?;
    let wr_vertices = wr_value(rho, generators)?;
    let n = generators.len();
    let mut wr_polytope = wr_vertices;
    let grid = compositions(n, resolution);
    for c in &grid {
        let w: Vec<f64> = c.iter().map(|&k| k as f64 / resolution as f64).collect();
        let mix = convex_mixture(generators, &w)?;
        wr_polytope = wr_polytope.max(rho.evaluate(&mix)?);
    }
    let all_atoms = generators.iter().all(|d| d.is_atoms());
    let (lp_sup, grid_bound) = match rho {
        RiskMeasure::Es { alpha } if all_atoms => {
            let lp = es_polytope_sup(*alpha, generators)?;
            let (lo, hi) = generators.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| {
                let a = d.as_atoms().unwrap();
                (l.min(a.min()), h.max(a.max()))
            });
            // ES moves by at most (range)/(1-α) per unit of total variation
            let bound = 0.5 * n as f64 / resolution as f64 * (hi - lo) / (1.0 - alpha);
            (Some(lp), Some(bound))
        }
        _ => (None, None),
    };
    Ok(CemaReport { ma, wr_polytope, wr_vertices, gap: ma - wr_polytope, lp_sup, grid_bound, grid_points: grid.len() })
}

/// `max_{λ ∈ Δ} ES_α(Σ λ_i F_i)` for atomic `F_i`, as the linear program
/// `max Σ u_k q_k` s.t. `0 ≤ q_k ≤ θ_k/(1-α)`, `Σ q_k = 1`, `θ = Σ λ_i P_i`.
pub fn es_polytope_sup(alpha: f64, generators: &[Distribution]) -> Result<f64> {
    let atoms = generators
        .iter()
        .map(|d| d.as_atoms().ok_or_else(|| domain("polytope ES needs atomic generators")))
        .collect::<Result<Vec<_>>>()?;
    let mut support: Vec<f64> = atoms.iter().flat_map(|a| a.locations().iter().copied()).collect();
    support.sort_by(|a, b| a.total_cmp(b));
    support.dedup();
    let mut prob = ConicProblem::new();
    let lam = prob.add_vars(atoms.len());
    let q = prob.add_vars(support.len());
    for (k, &u) in support.iter().enumerate() {
        prob.set_cost(q[k], -u);
        prob.nonneg(Affine::var(q[k]));
        let mut cap = Affine::new(vec![(q[k], -1.0)], 0.0);
        for (i, a) in atoms.iter().enumerate() {
            let p = a
                .locations()
                .binary_search_by(|x| x.total_cmp(&u))
                .map(|idx| a.probabilities()[idx])
                .unwrap_or(0.0);
            if p > 0.0 {
                cap = cap.add(lam[i], p / (1.0 - alpha));
            }
        }
        prob.nonneg(cap);
    }
    prob.eq(Affine::new(q.iter().map(|&j| (j, 1.0)).collect(), -1.0));
    prob.eq(Affine::new(lam.iter().map(|&j| (j, 1.0)).collect(), -1.0));
    for &l in &lam {
        prob.nonneg(Affine::var(l));
    }
    let sol = prob.solve(&SolverOptions { tol: 1e-10, max_iter: 400 })?;
    Ok(-sol.objective)
}
