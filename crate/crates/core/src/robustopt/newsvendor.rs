//! Random newsvendor instances and the WR vs MA₂ timing sweep.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ma2_program, wr_program, ActionSet, Approach, LossFunction, ProgramSolution};
use crate::conic::SolverOptions;
use crate::error::{domain, Error, Result};
use crate::risk::{KusuokaScenario, RiskMeasure};

/// Sizes: dimension `d`, clouds `n`, ES terms per scenario `nw`, Kusuoka
/// scenarios `w`, samples per cloud `samples`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsvendorConfig {
    pub d: usize,
    pub n: usize,
    pub nw: usize,
    pub w: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for NewsvendorConfig {
    fn default() -> Self {
        Self { d: 3, n: 3, nw: 10, w: 3, samples: 100, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct NewsvendorInstance {
    pub clouds: Vec<Vec<Vec<f64>>>,
    pub loss: LossFunction,
    pub measure: RiskMeasure,
}

/// `(μᵢ, σᵢ) ~ N(0, I_{2d})`, `Σᵢ = diag(exp σᵢ)`, `βᵢ = i`, `ηᵢ = d - i + 1`,
/// Kusuoka weights uniform on the simplex with levels `(2j-1)/(2nw)`.
pub fn generate(cfg: &NewsvendorConfig) -> Result<NewsvendorInstance> {
    if cfg.d == 0 || cfg.n == 0 || cfg.nw == 0 || cfg.w == 0 || cfg.samples == 0 {
        return Err(domain("newsvendor sizes must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut clouds = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let mu: Vec<f64> = (0..cfg.d).map(|_| rng.sample(StandardNormal)).collect();
        let sd: Vec<f64> = (0..cfg.d).map(|_| (0.5 * rng.sample::<f64, _>(StandardNormal)).exp()).collect();
        let pts = (0..cfg.samples)
            .map(|_| (0..cfg.d).map(|i| mu[i] + sd[i] * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        clouds.push(pts);
    }
    let loss = LossFunction::Newsvendor {
        beta: (1..=cfg.d).map(|i| i as f64).collect(),
        eta: (1..=cfg.d).map(|i| (cfg.d - i + 1) as f64).collect(),
    };
    let levels: Vec<f64> = (1..=cfg.nw).map(|j| (2 * j - 1) as f64 / (2 * cfg.nw) as f64).collect();
    let scenarios = (0..cfg.w)
        .map(|_| {
            let e: Vec<f64> = (0..cfg.nw).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = e.iter().sum();
            let mut weights: Vec<f64> = e.iter().map(|v| v / total).collect();
            let head: f64 = weights[..cfg.nw - 1].iter().sum();
            weights[cfg.nw - 1] = (1.0 - head).max(0.0);
            KusuokaScenario { weights, levels: levels.clone() }
        })
        .collect();
    Ok(NewsvendorInstance { clouds, loss, measure: RiskMeasure::kusuoka(scenarios)? })
}

impl NewsvendorInstance {
    pub fn solve(&self, approach: Approach, opts: &SolverOptions) -> Result<ProgramSolution> {
        let actions = ActionSet::Free { dim: self.clouds[0][0].len() };
        match approach {
            Approach::Wr => wr_program(&actions, &self.loss, &self.clouds, &self.measure, opts),
            Approach::Ma2 => ma2_program(&actions, &self.loss, &self.clouds, &self.measure, opts),
            other => Err(Error::Unsupported(format!("{other:?} is not part of the newsvendor comparison"))),
        }
    }
}

/// Parameter varied in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    D,
    N,
    Nw,
    W,
    Samples,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [SweepAxis::D, SweepAxis::N, SweepAxis::Nw, SweepAxis::W, SweepAxis::Samples];

    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::D => "d",
            SweepAxis::N => "n",
            SweepAxis::Nw => "nw",
            SweepAxis::W => "W",
            SweepAxis::Samples => "N",
        }
    }

    pub fn default_values(&self) -> Vec<usize> {
        match self {
            SweepAxis::D => vec![2, 3, 5, 10],
            SweepAxis::N => vec![2, 3, 5, 8],
            SweepAxis::Nw => vec![2, 5, 10, 20],
            SweepAxis::W => vec![1, 3, 5, 8],
            SweepAxis::Samples => vec![50, 100, 200, 400],
        }
    }

    pub fn apply(&self, base: &NewsvendorConfig, v: usize) -> NewsvendorConfig {
        let mut c = *base;
        match self {
            SweepAxis::D => c.d = v,
            SweepAxis::N => c.n = v,
            SweepAxis::Nw => c.nw = v,
            SweepAxis::W => c.w = v,
            SweepAxis::Samples => c.samples = v,
        }
        c
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d" => Ok(SweepAxis::D),
            "n" => Ok(SweepAxis::N),
            "nw" => Ok(SweepAxis::Nw),
            "W" | "w" => Ok(SweepAxis::W),
            "N" | "samples" => Ok(SweepAxis::Samples),
            _ => Err(Error::Parse(format!("unknown sweep axis '{s}' (d, n, nw, W, N)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: String,
    pub value: usize,
    pub approach: String,
    pub median_seconds: f64,
    pub variables: usize,
    pub constraints: usize,
    pub threshold_variables: usize,
    pub objective: f64,
    pub reps: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Solves both programs `reps` times at every value of the axis, with the
/// other sizes held at `base`.
pub fn sweep(
    axis: SweepAxis,
    values: &[usize],
    base: &NewsvendorConfig,
    reps: usize,
    opts: &SolverOptions,
) -> Result<Vec<SweepRow>> {
    if reps == 0 {
        return Err(domain("at least one repetition is needed"));
    }
    let mut rows = Vec::new();
    for &v in values {
        let cfg = axis.apply(base, v);
        let inst = generate(&cfg)?;
        for approach in [Approach::Wr, Approach::Ma2] {
            let mut times = Vec::with_capacity(reps);
            let mut last = None;
            for _ in 0..reps {
                let t0 = Instant::now();
                let s = inst.solve(approach, opts)?;
                times.push(t0.elapsed().as_secs_f64());
                last = Some(s);
            }
            let s = last.expect("reps > 0");
            log::info!("sweep {}={} {:?}: objective {:.6} in {:.3}s", axis.label(), v, approach, s.objective, median(times.clone()));
            rows.push(SweepRow {
                sweep_var: axis.label().to_string(),
                value: v,
                approach: match approach {
                    Approach::Wr => "wr".into(),
                    _ => "ma2".into(),
                },
                median_seconds: median(times),
                variables: s.variables,
                constraints: s.constraints,
                threshold_variables: s.threshold_variables,
                objective: s.objective,
                reps,
            });
        }
    }
    Ok(rows)
}

/// Writes sweep rows as CSV.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
