use super::{ActionSet, LossFunction, ProgramSolution};
use crate::conic::{Affine, ConicProblem, SolverOptions};
use crate::dist::{Atoms, Distribution};
use crate::error::{domain, Error, Result};
use crate::lattice::{GridConfig, Order};
use crate::risk::{ma_value, wr_value, KusuokaScenario, RiskMeasure};

/// The finite Kusuoka scenarios of `ρ`; ES is the single scenario `{(1, α)}`.
pub fn kusuoka_form(rho: &RiskMeasure) -> Result<Vec<KusuokaScenario>> {
    rho.validate()?;
    match rho {
        RiskMeasure::Es { alpha } => Ok(vec![KusuokaScenario { weights: vec![1.0], levels: vec![*alpha] }]),
        RiskMeasure::Kusuoka { scenarios } => Ok(scenarios.clone()),
        _ => Err(Error::Unsupported(format!("{} has no finite Kusuoka form", rho.label()))),
    }
}

/// Losses `f(a, X)` of every cloud at a fixed action.
pub fn induced_losses(loss: &LossFunction, a: &[f64], clouds: &[Vec<Vec<f64>>]) -> Result<Vec<Distribution>> {
    clouds
        .iter()
        .map(|c| {
            let xs: Vec<f64> = c.iter().map(|x| loss.eval(a, x)).collect();
            Ok(Distribution::Atoms(Atoms::from_samples(&xs)?))
        })
        .collect()
}

/// `ρ(⋁₂ {F_{f(a,X)}})` at a fixed action, through the lattice.
pub fn ma_value_at(
    rho: &RiskMeasure,
    loss: &LossFunction,
    a: &[f64],
    clouds: &[Vec<Vec<f64>>],
) -> Result<f64> {
    ma_value(rho, Order::Ssd, &induced_losses(loss, a, clouds)?, &GridConfig::default())
}

/// `max_i ρ(F_{f(a,X)}^i)` at a fixed action.
pub fn wr_value_at(rho: &RiskMeasure, loss: &LossFunction, a: &[f64], clouds: &[Vec<Vec<f64>>]) -> Result<f64> {
    wr_value(rho, &induced_losses(loss, a, clouds)?)
}

fn check_clouds(actions: &ActionSet, clouds: &[Vec<Vec<f64>>]) -> Result<()> {
    if clouds.is_empty() || clouds.iter().any(|c| c.is_empty()) {
        return Err(domain("scenario set needs nonempty clouds"));
    }
    let d = actions.dim();
    if clouds.iter().flatten().any(|x| x.len() != d) {
        return Err(domain("cloud points must match the action dimension"));
    }
    Ok(())
}

struct Built {
    prob: ConicProblem,
    a: Vec<usize>,
    h: usize,
    thresholds: Vec<usize>,
}

// z ≥ L - x, z ≥ 0 for every sample; returns Σ z / (N (1-α))
fn tail_term(prob: &mut ConicProblem, losses: &[Affine], x: usize, alpha: f64) -> Affine {
    let n = losses.len() as f64;
    let mut sum = Affine::default();
    for l in losses {
        let z = prob.add_var();
        prob.nonneg(Affine::var(z));
        let mut e = Affine::new(vec![(z, 1.0), (x, 1.0)], -l.constant);
        for &(j, c) in &l.terms {
            e = e.add(j, -c);
        }
        prob.nonneg(e);
        sum = sum.add(z, 1.0 / (n * (1.0 - alpha)));
    }
    sum
}

fn build(
    actions: &ActionSet,
    loss: &LossFunction,
    clouds: &[Vec<Vec<f64>>],
    rho: &RiskMeasure,
    shared: bool,
) -> Result<Built> {
    actions.validate()?;
    loss.validate(actions.dim())?;
    check_clouds(actions, clouds)?;
    let scen = kusuoka_form(rho)?;
    let mut prob = ConicProblem::new();
    let a = actions.add_to(&mut prob);
    let h = prob.add_var();
    prob.set_cost(h, 1.0);
    let losses: Vec<Vec<Affine>> =
        clouds.iter().map(|c| c.iter().map(|x| loss.epigraph(&mut prob, &a, x)).collect()).collect();
    let mut thresholds = Vec::new();
    for s in &scen {
        let active: Vec<(f64, f64)> =
            s.weights.iter().zip(&s.levels).filter(|(p, _)| **p > 0.0).map(|(&p, &al)| (p, al)).collect();
        if shared {
            // Σ_j p_j h_j ≤ h, x_j + E^i[(L - x_j)₊]/(1-α_j) ≤ h_j for all i
            let mut top = Affine::new(vec![(h, 1.0)], 0.0);
            for &(p, alpha) in &active {
                let x = prob.add_var();
                let hj = prob.add_var();
                thresholds.push(x);
                top = top.add(hj, -p);
                for li in &losses {
                    let tail = tail_term(&mut prob, li, x, alpha);
                    let mut e = Affine::new(vec![(hj, 1.0), (x, -1.0)], 0.0);
                    for (j, c) in tail.terms {
                        e = e.add(j, -c);
                    }
                    prob.nonneg(e);
                }
            }
            prob.nonneg(top);
        } else {
            // per scenario i: Σ_j p_j (x_ij + E^i[(L - x_ij)₊]/(1-α_j)) ≤ h
            for li in &losses {
                let mut top = Affine::new(vec![(h, 1.0)], 0.0);
                for &(p, alpha) in &active {
                    let x = prob.add_var();
                    thresholds.push(x);
                    top = top.add(x, -p);
                    let tail = tail_term(&mut prob, li, x, alpha);
                    for (j, c) in tail.terms {
                        top = top.add(j, -p * c);
                    }
                }
                prob.nonneg(top);
            }
        }
    }
    Ok(Built { prob, a, h, thresholds })
}

fn finish(b: Built, opts: &SolverOptions) -> Result<ProgramSolution> {
    let variables = b.prob.num_vars();
    let constraints = b.prob.num_constraints();
    let sol = b.prob.solve(opts).map_err(|e| match e {
        Error::SolverNotConverged { status, objective, residual, action } => Error::SolverNotConverged {
            status,
            objective,
            residual,
            action: b.a.iter().map(|&j| action.get(j).copied().unwrap_or(f64::NAN)).collect(),
        },
        other => other,
    })?;
    Ok(ProgramSolution {
        objective: sol.x[b.h],
        action: b.a.iter().map(|&j| sol.x[j]).collect(),
        thresholds: b.thresholds.iter().map(|&j| sol.x[j]).collect(),
        iterations: sol.iterations,
        residual: sol.residual,
        variables,
        constraints,
        threshold_variables: b.thresholds.len(),
    })
}

/// Worst-case program: thresholds `x_{i,j}^w` per scenario cloud.
pub fn wr_program(
    actions: &ActionSet,
    loss: &LossFunction,
    clouds: &[Vec<Vec<f64>>],
    rho: &RiskMeasure,
    opts: &SolverOptions,
) -> Result<ProgramSolution> {
    finish(build(actions, loss, clouds, rho, false)?, opts)
}

/// MA₂ program: thresholds `x_j^w` shared by every scenario cloud.
pub fn ma2_program(
    actions: &ActionSet,
    loss: &LossFunction,
    clouds: &[Vec<Vec<f64>>],
    rho: &RiskMeasure,
    opts: &SolverOptions,
) -> Result<ProgramSolution> {
    finish(build(actions, loss, clouds, rho, true)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_es_program_is_sample_es() {
        let cloud: Vec<Vec<f64>> = [3.0, -1.0, 2.0, 5.0, 0.0].iter().map(|&x| vec![x]).collect();
        let rho = RiskMeasure::es(0.6).unwrap();
        let s = wr_program(
            &ActionSet::Fixed { action: vec![1.0] },
            &LossFunction::Linear,
            std::slice::from_ref(&cloud),
            &rho,
            &SolverOptions::default(),
        )
        .unwrap();
        // top 40% of {-1, 0, 2, 3, 5} averages to 4
        assert!((s.objective - 4.0).abs() < 1e-7, "{}", s.objective);
    }
}
