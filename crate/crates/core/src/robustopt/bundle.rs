use crate::conic::{Affine, ConicProblem, SolverOptions};
use crate::error::{domain, Error, Result};

/// `{x ≥ 0 (optional) : A_eq x = b_eq, A x ≤ b}`, assumed bounded.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub dim: usize,
    pub nonneg: bool,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

impl Polytope {
    /// Probability simplex, optionally cut by `μᵀw ≤ bound`.
    pub fn simplex(dim: usize, cut: Option<(&[f64], f64)>) -> Self {
        let mut p = Polytope { dim, nonneg: true, eq: vec![(vec![1.0; dim], 1.0)], le: Vec::new() };
        if let Some((mu, bound)) = cut {
            p.le.push((mu.to_vec(), bound));
        }
        p
    }

    fn add_to(&self, prob: &mut ConicProblem) -> Vec<usize> {
        let x = prob.add_vars(self.dim);
        if self.nonneg {
            x.iter().for_each(|&j| prob.nonneg(Affine::var(j)));
        }
        for (a, b) in &self.eq {
            prob.eq(Affine::new(x.iter().zip(a).map(|(&j, &c)| (j, c)).collect(), -b));
        }
        for (a, b) in &self.le {
            prob.nonneg(Affine::new(x.iter().zip(a).map(|(&j, &c)| (j, -c)).collect(), *b));
        }
        x
    }
}

#[derive(Debug, Clone)]
pub struct BundleOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Level parameter in `(0, 1)`.
    pub lambda: f64,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, max_iter: 400, lambda: 0.3 }
    }
}

#[derive(Debug, Clone)]
pub struct BundleResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub lower: f64,
    pub iterations: usize,
}

/// Level bundle method for a convex function given by value and
/// subgradient over a polytope. Each step solves the cutting-plane LP for
/// a lower bound, then projects the best point onto the level set of the
/// model.
pub fn level_bundle<F>(f: F, region: &Polytope, start: &[f64], opts: &BundleOptions) -> Result<BundleResult>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    if start.len() != region.dim {
        return Err(domain("start point has the wrong dimension"));
    }
    let lp = SolverOptions { tol: 1e-11, max_iter: 300 };
    let mut cuts: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let (v0, g0) = f(start);
    let mut best = (v0, start.to_vec());
    cuts.push((v0, g0, start.to_vec()));
    let add_cut = |prob: &mut ConicProblem, x: &[usize], theta: Option<usize>, rhs: f64, c: &(f64, Vec<f64>, Vec<f64>)| {
        // f_k + g_kᵀ(x - x_k) ≤ θ (or ≤ rhs)
        let (fk, gk, xk) = c;
        let shift = fk - gk.iter().zip(xk).map(|(g, x)| g * x).sum::<f64>();
        let mut e = Affine::new(x.iter().zip(gk).map(|(&j, &g)| (j, -g)).collect(), rhs - shift);
        if let Some(t) = theta {
            e = e.add(t, 1.0);
        }
        prob.nonneg(e);
    };
    let mut lower = f64::NEG_INFINITY;
    for it in 0..opts.max_iter {
        let mut prob = ConicProblem::new();
        let x = region.add_to(&mut prob);
        let theta = prob.add_var();
        prob.set_cost(theta, 1.0);
        for c in &cuts {
            add_cut(&mut prob, &x, Some(theta), 0.0, c);
        }
        let sol = prob.solve(&lp)?;
        lower = lower.max(sol.objective);
        let gap = best.0 - lower;
        if gap <= opts.abs_tol + opts.rel_tol * best.0.abs() {
            return Ok(BundleResult { x: best.1, value: best.0, lower, iterations: it });
        }
        let level = lower + opts.lambda * gap;
        let mut proj = ConicProblem::new();
        let y = region.add_to(&mut proj);
        for (k, &j) in y.iter().enumerate() {
            proj.add_quad(j, j, 1.0);
            proj.set_cost(j, -best.1[k]);
        }
        for c in &cuts {
            add_cut(&mut proj, &y, None, level, c);
        }
        let next = match proj.solve(&lp) {
            Ok(s) => y.iter().map(|&j| s.x[j]).collect::<Vec<f64>>(),
            // the level set can be numerically empty when the gap is tiny
            Err(_) => x.iter().map(|&j| sol.x[j]).collect(),
        };
        let (v, g) = f(&next);
        if v < best.0 {
            best = (v, next.clone());
        }
        cuts.push((v, g, next));
    }
    Err(Error::SolverNotConverged {
        status: "bundle iteration limit".into(),
        objective: best.0,
        residual: best.0 - lower,
        action: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_on_simplex() {
        // max(x0 - x1, x1 - x0) + 0.1 x2 on the simplex: minimum 0 at x0 = x1
        let f = |x: &[f64]| {
            let v1 = x[0] - x[1];
            let g = if v1 >= 0.0 { vec![1.0, -1.0, 0.1] } else { vec![-1.0, 1.0, 0.1] };
            (v1.abs() + 0.1 * x[2], g)
        };
        let r = level_bundle(f, &Polytope::simplex(3, None), &[1.0, 0.0, 0.0], &BundleOptions::default()).unwrap();
        assert!(r.value < 1e-8, "{}", r.value);
    }
}
