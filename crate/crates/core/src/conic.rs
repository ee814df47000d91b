//! Small builder over the Clarabel interior-point solver.
//!
//! Problems are stated as `min ½ xᵀPx + cᵀx` subject to affine equalities,
//! inequalities, second-order cones and 3-d power cones. Rows are collected
//! per cone family and assembled in the order Clarabel expects.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// Sparse affine expression `Σ a_i x_i + c`.
#[derive(Debug, Clone, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn var(i: usize) -> Self {
        Self { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn new(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        Self { terms, constant }
    }

    pub fn add(mut self, i: usize, a: f64) -> Self {
        self.terms.push((i, a));
        self
    }
}

#[derive(Debug, Default)]
struct Block {
    // rows of s = b - A x
    rows: Vec<Affine>,
}

impl Block {
    // constraint s = expr, i.e. A = -terms, b = constant
    fn push(&mut self, e: Affine) {
        self.rows.push(e);
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: String,
    pub iterations: u32,
    pub residual: f64,
}

#[derive(Debug, Default)]
pub struct ConicProblem {
    n: usize,
    cost: Vec<f64>,
    quad: Vec<(usize, usize, f64)>,
    eq: Block,
    nonneg: Block,
    socs: Vec<Block>,
    pows: Vec<(f64, Block)>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self) -> usize {
        self.n += 1;
        self.cost.push(0.0);
        self.n - 1
    }

    pub fn add_vars(&mut self, k: usize) -> Vec<usize> {
        (0..k).map(|_| self.add_var()).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Number of scalar constraint rows.
    pub fn num_constraints(&self) -> usize {
        self.eq.rows.len()
            + self.nonneg.rows.len()
            + self.socs.iter().map(|b| b.rows.len()).sum::<usize>()
            + self.pows.iter().map(|b| b.1.rows.len()).sum::<usize>()
    }

    pub fn set_cost(&mut self, i: usize, c: f64) {
        self.cost[i] = c;
    }

    /// Adds `v x_i x_j` to `½ xᵀPx` (symmetric; pass each unordered pair once
    /// with the full coefficient of `x_i x_j`, or `i == j` for `½ v x_i²`).
    pub fn add_quad(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.quad.push((r, c, v));
    }

    /// `expr = 0`.
    pub fn eq(&mut self, expr: Affine) {
        self.eq.push(expr);
    }

    /// `expr ≥ 0`.
    pub fn nonneg(&mut self, expr: Affine) {
        self.nonneg.push(expr);
    }

    /// `e_0 ≥ ‖(e_1, …)‖₂`.
    pub fn soc(&mut self, exprs: Vec<Affine>) {
        let mut b = Block::default();
        exprs.into_iter().for_each(|e| b.push(e));
        self.socs.push(b);
    }

    /// `x^α y^{1-α} ≥ |z|` with `x, y ≥ 0`.
    pub fn pow(&mut self, alpha: f64, x: Affine, y: Affine, z: Affine) {
        let mut b = Block::default();
        b.push(x);
        b.push(y);
        b.push(z);
        self.pows.push((alpha, b));
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<ConicSolution> {
        let n = self.n;
        let mut ai = Vec::new();
        let mut aj = Vec::new();
        let mut av = Vec::new();
        let mut b = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;
        let mut emit = |blk: &Block, ai: &mut Vec<usize>, aj: &mut Vec<usize>, av: &mut Vec<f64>, b: &mut Vec<f64>| {
            for e in &blk.rows {
                for &(j, a) in &e.terms {
                    ai.push(row);
                    aj.push(j);
                    av.push(-a);
                }
                b.push(e.constant);
                row += 1;
            }
        };
        if !self.eq.rows.is_empty() {
            emit(&self.eq, &mut ai, &mut aj, &mut av, &mut b);
            cones.push(SupportedConeT::ZeroConeT(self.eq.rows.len()));
        }
        if !self.nonneg.rows.is_empty() {
            emit(&self.nonneg, &mut ai, &mut aj, &mut av, &mut b);
            cones.push(SupportedConeT::NonnegativeConeT(self.nonneg.rows.len()));
        }
        for blk in &self.socs {
            emit(blk, &mut ai, &mut aj, &mut av, &mut b);
            cones.push(SupportedConeT::SecondOrderConeT(blk.rows.len()));
        }
        for (alpha, blk) in &self.pows {
            emit(blk, &mut ai, &mut aj, &mut av, &mut b);
            cones.push(SupportedConeT::PowerConeT(*alpha));
        }
        let m = b.len();
        let a = CscMatrix::new_from_triplets(m, n, ai, aj, av);
        let (pi, pj, pv): (Vec<usize>, Vec<usize>, Vec<f64>) = {
            let mut pi = Vec::new();
            let mut pj = Vec::new();
            let mut pv = Vec::new();
            for &(r, c, v) in &self.quad {
                pi.push(r);
                pj.push(c);
                pv.push(v);
            }
            (pi, pj, pv)
        };
        let p = if pi.is_empty() { CscMatrix::zeros((n, n)) } else { CscMatrix::new_from_triplets(n, n, pi, pj, pv) };
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(opts.max_iter)
            .tol_gap_abs(opts.tol)
            .tol_gap_rel(opts.tol)
            .tol_feas(opts.tol)
            .build()
            .map_err(|e| Error::Numeric(format!("solver settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &self.cost, &a, &b, &cones, settings);
        solver.solve();
        let sol = &solver.solution;
        let status = format!("{:?}", sol.status);
        let residual = sol.r_prim.max(sol.r_dual);
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(ConicSolution {
                x: sol.x.clone(),
                objective: sol.obj_val,
                status,
                iterations: sol.iterations,
                residual,
            }),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Err(Error::Infeasible("optimization problem is primal infeasible".into()))
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                Err(Error::Unbounded("optimization problem is unbounded below".into()))
            }
            _ => Err(Error::SolverNotConverged { status, objective: sol.obj_val, residual, action: sol.x.clone() }),
        }
    }
}
