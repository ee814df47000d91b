use serde::{Deserialize, Serialize};

use super::{ActionSet, Approach, LossFunction, ProgramSolution};
use crate::conic::{Affine, ConicProblem, SolverOptions};
use crate::error::{domain, Error, Result};

/// `{θ⁰ + η : η̲ ≤ η ≤ η̄, 𝟙ᵀη = 0}` over fixed support points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxProbability {
    pub points: Vec<Vec<f64>>,
    pub nominal: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxProbability {
    pub fn len(&self) -> usize {
        self.nominal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nominal.is_empty()
    }

    /// Bounds on `η` with `θ ≥ 0` folded in.
    pub fn effective_bounds(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        if n == 0 || self.lower.len() != n || self.upper.len() != n {
            return Err(domain("box needs nominal weights and bounds of equal length"));
        }
        if !self.points.is_empty() && self.points.len() != n {
            return Err(domain("box support and nominal weights differ in length"));
        }
        let total: f64 = self.nominal.iter().sum();
        if (total - 1.0).abs() > 1e-12 || self.nominal.iter().any(|t| !(*t >= 0.0)) {
            return Err(domain("nominal weights must lie in the simplex"));
        }
        let lo: Vec<f64> = self.lower.iter().zip(&self.nominal).map(|(l, t)| l.max(-t)).collect();
        let hi = self.upper.clone();
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::Infeasible("box has an empty coordinate range".into()));
        }
        let (sl, sh): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
        if sl > 1e-15 || sh < -1e-15 {
            return Err(Error::Infeasible("no perturbation in the box sums to zero".into()));
        }
        Ok((lo, hi))
    }
}

/// `sup_θ θᵀu` over the box, by filling the largest entries first.
pub fn box_worst_expectation(u: &[f64], b: &BoxProbability) -> Result<f64> {
    let (lo, hi) = b.effective_bounds()?;
    if u.len() != b.len() {
        return Err(domain("payoff vector length differs from the box"));
    }
    let mut theta: Vec<f64> = b.nominal.iter().zip(&lo).map(|(t, l)| t + l).collect();
    let mut rest = -lo.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&i, &j| u[j].total_cmp(&u[i]));
    for i in order {
        if rest <= 0.0 {
            break;
        }
        let add = (hi[i] - lo[i]).min(rest);
        theta[i] += add;
        rest -= add;
    }
    Ok(theta.iter().zip(u).map(|(t, x)| t * x).sum())
}

/// The same supremum by enumerating basic solutions: every coordinate but
/// one at a bound, the free one fixed by `𝟙ᵀη = 0`.
pub fn box_worst_expectation_vertices(u: &[f64], b: &BoxProbability) -> Result<f64> {
    let (lo, hi) = b.effective_bounds()?;
    let n = b.len();
    if n > 20 {
        return Err(domain("vertex enumeration is limited to 20 points"));
    }
    let mut best = f64::NEG_INFINITY;
    for free in 0..n {
        for mask in 0u32..(1u32 << (n - 1)) {
            let mut eta = vec![0.0; n];
            let mut bit = 0;
            let mut sum = 0.0;
            for i in 0..n {
                if i == free {
                    continue;
                }
                eta[i] = if mask >> bit & 1 == 1 { hi[i] } else { lo[i] };
                sum += eta[i];
                bit += 1;
            }
            eta[free] = -sum;
            let slack = 1e-13;
            if eta[free] < lo[free] - slack || eta[free] > hi[free] + slack {
                continue;
            }
            let v: f64 = (0..n).map(|i| (b.nominal[i] + eta[i]) * u[i]).sum();
            best = best.max(v);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Infeasible("box has no vertex".into()));
    }
    Ok(best)
}

/// ES programs over a box probability set. The set is convex, so WR and
/// MA₂ share one program: `min_{a,t} t + sup_θ E_θ[(L - t)₊]/(1-α)` with the
/// inner supremum replaced by its dual. Dualizing the joint `max_{θ,q}` form
/// of the WR value gives the same constraints after scaling.
pub fn box_es_program(
    actions: &ActionSet,
    loss: &LossFunction,
    b: &BoxProbability,
    alpha: f64,
    approach: Approach,
    opts: &SolverOptions,
) -> Result<ProgramSolution> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(domain(format!("ES level {alpha} outside [0, 1)")));
    }
    if !matches!(approach, Approach::Wr | Approach::Ma2) {
        return Err(domain("box programs support WR and MA2"));
    }
    let (lo, hi) = b.effective_bounds()?;
    actions.validate()?;
    loss.validate(actions.dim())?;
    if b.points.len() != b.len() || b.points.iter().any(|x| x.len() != actions.dim()) {
        return Err(domain("box support points must match the action dimension"));
    }
    let mut prob = ConicProblem::new();
    let a = actions.add_to(&mut prob);
    let h = prob.add_var();
    prob.set_cost(h, 1.0);
    let t = prob.add_var();
    let z = prob.add_var();
    let c = 1.0 / (1.0 - alpha);
    // h ≥ t + Σ θ⁰ s c_s + η̄ᵀξ - η̲ᵀγ, with s the tail slacks
    let mut top = Affine::new(vec![(h, 1.0), (t, -1.0)], 0.0);
    for (l, x) in b.points.iter().enumerate() {
        let lf = loss.epigraph(&mut prob, &a, x);
        let s = prob.add_var();
        let xi = prob.add_var();
        let ga = prob.add_var();
        prob.nonneg(Affine::var(s));
        prob.nonneg(Affine::var(xi));
        prob.nonneg(Affine::var(ga));
        let mut e = Affine::new(vec![(s, 1.0), (t, 1.0)], -lf.constant);
        for &(j, v) in &lf.terms {
            e = e.add(j, -v);
        }
        prob.nonneg(e);
        // E_θ[(L-t)₊]/(1-α) = θᵀ(c s) with c s = ξ - γ + z
        prob.eq(Affine::new(vec![(s, c), (xi, -1.0), (ga, 1.0), (z, -1.0)], 0.0));
        top = top.add(s, -b.nominal[l] * c);
        top = top.add(xi, -hi[l]).add(ga, lo[l]);
    }
    prob.nonneg(top);
    let variables = prob.num_vars();
    let constraints = prob.num_constraints();
    let sol = prob.solve(opts)?;
    Ok(ProgramSolution {
        objective: sol.x[h],
        action: a.iter().map(|&j| sol.x[j]).collect(),
        thresholds: vec![sol.x[t]],
        iterations: sol.iterations,
        residual: sol.residual,
        variables,
        constraints,
        threshold_variables: 1,
    })
}

/// `sup_θ ES_α(Σ θ_l δ_{L_l})` for fixed losses, as the joint linear
/// program in `(θ, q)`: `max Lᵀq`, `0 ≤ q ≤ θ/(1-α)`, `𝟙ᵀq = 1`.
pub fn box_es_value(losses: &[f64], b: &BoxProbability, alpha: f64) -> Result<f64> {
    let (lo, hi) = b.effective_bounds()?;
    if losses.len() != b.len() {
        return Err(domain("loss vector length differs from the box"));
    }
    let mut prob = ConicProblem::new();
    let q = prob.add_vars(b.len());
    let eta = prob.add_vars(b.len());
    let c = 1.0 / (1.0 - alpha);
    for l in 0..b.len() {
        prob.set_cost(q[l], -losses[l]);
        prob.nonneg(Affine::var(q[l]));
        prob.nonneg(Affine::new(vec![(q[l], -1.0), (eta[l], c)], c * b.nominal[l]));
        prob.nonneg(Affine::new(vec![(eta[l], 1.0)], -lo[l]));
        prob.nonneg(Affine::new(vec![(eta[l], -1.0)], hi[l]));
    }
    prob.eq(Affine::new(q.iter().map(|&j| (j, 1.0)).collect(), -1.0));
    prob.eq(Affine::new(eta.iter().map(|&j| (j, 1.0)).collect(), 0.0));
    let sol = prob.solve(&SolverOptions { tol: 1e-10, max_iter: 400 })?;
    Ok(-sol.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> BoxProbability {
        BoxProbability {
            points: vec![],
            nominal: vec![0.5, 0.5],
            lower: vec![-0.25, -0.25],
            upper: vec![0.25, 0.25],
        }
    }

    #[test]
    fn greedy_small_cases() {
        let b = two_point();
        assert!((box_worst_expectation(&[1.0, 0.0], &b).unwrap() - 0.75).abs() < 1e-15);
        assert!((box_worst_expectation(&[2.0, 2.0], &b).unwrap() - 2.0).abs() < 1e-15);
        let fixed = BoxProbability { lower: vec![0.0, 0.0], upper: vec![0.0, 0.0], ..b };
        assert_eq!(box_worst_expectation(&[3.0, 1.0], &fixed).unwrap(), 2.0);
    }

    #[test]
    fn vertices_agree() {
        let b = two_point();
        let u = [0.3, -1.2];
        assert!((box_worst_expectation(&u, &b).unwrap() - box_worst_expectation_vertices(&u, &b).unwrap()).abs() < 1e-15);
    }
}
