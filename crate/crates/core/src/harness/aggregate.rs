use serde::{Deserialize, Serialize};

use super::fit::FittedModels;
use crate::dist::{linear_grid, Distribution};
use crate::error::Result;
use crate::lattice::{sup_fsd, sup_ssd, GridConfig};
use crate::risk::RiskMeasure;

/// One x-row of the curve table: cdf and π of each model and both suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub x: f64,
    /// model order as in [`FittedModels::names`]
    pub cdf: Vec<f64>,
    pub pi: Vec<f64>,
    pub sup_fsd_cdf: f64,
    pub sup_ssd_cdf: f64,
    pub sup_fsd_pi: f64,
    pub sup_ssd_pi: f64,
}

/// Risk values at one parameter of a family (RVaR in β or ES in α).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub family: String,
    pub parameter: f64,
    pub models: Vec<f64>,
    pub wr: f64,
    pub ma1: f64,
    pub ma2: f64,
    /// whether the measure is consistent with the SSD order, i.e. whether
    /// `ma2 ≥ wr` is guaranteed
    pub ssd_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub models: Vec<String>,
    pub curves: Vec<CurveRow>,
    pub risk: Vec<RiskRow>,
    /// Points where the SSD envelope switches model, with the cdf jump.
    pub ssd_switches: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct AggregateGrid {
    pub x_points: usize,
    pub rvar_alpha: f64,
    pub rvar_betas: Vec<f64>,
    pub es_alphas: Vec<f64>,
    pub lattice: GridConfig,
}

impl Default for AggregateGrid {
    fn default() -> Self {
        Self {
            x_points: 401,
            rvar_alpha: 0.95,
            rvar_betas: linear_grid(0.955, 1.0, 10),
            es_alphas: linear_grid(0.90, 0.99, 10),
            lattice: GridConfig::default(),
        }
    }
}

fn row(family: &str, parameter: f64, rho: &RiskMeasure, set: &[Distribution], fsd: &Distribution, ssd: &Distribution) -> Result<RiskRow> {
    let models = set.iter().map(|d| rho.evaluate(d)).collect::<Result<Vec<_>>>()?;
    Ok(RiskRow {
        family: family.into(),
        parameter,
        wr: models.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        models,
        ma1: rho.evaluate(fsd)?,
        ma2: rho.evaluate(ssd)?,
        ssd_consistent: rho.consistency().ssd_consistent,
    })
}

/// Curves of the four models and their suprema, and RVaR/ES series of the
/// models, the worst case and both aggregated laws.
pub fn aggregate_experiment(models: &FittedModels, grid: &AggregateGrid) -> Result<AggregateReport> {
    let set = models.as_vec();
    let fsd = sup_fsd(&set)?.sup;
    let ssd_res = sup_ssd(&set, &grid.lattice)?;
    let ssd = ssd_res.sup;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for d in &set {
        lo = lo.min(d.quantile(0.001)?);
        hi = hi.max(d.quantile(0.999)?);
    }
    let curves = linear_grid(lo, hi, grid.x_points.max(2))
        .into_iter()
        .map(|x| {
            Ok(CurveRow {
                x,
                cdf: set.iter().map(|d| d.cdf(x)).collect(),
                pi: set.iter().map(|d| d.pi(x)).collect::<Result<_>>()?,
                sup_fsd_cdf: fsd.cdf(x),
                sup_ssd_cdf: ssd.cdf(x),
                sup_fsd_pi: fsd.pi(x)?,
                sup_ssd_pi: ssd.pi(x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut risk = Vec::new();
    for &b in &grid.rvar_betas {
        let rho = if b >= 1.0 { RiskMeasure::es(grid.rvar_alpha)? } else { RiskMeasure::rvar(grid.rvar_alpha, b)? };
        risk.push(row("rvar", b, &rho, &set, &fsd, &ssd)?);
    }
    for &a in &grid.es_alphas {
        risk.push(row("es", a, &RiskMeasure::es(a)?, &set, &fsd, &ssd)?);
    }
    let ssd_switches = ssd_res.witness.map(|w| w.switch_points()).unwrap_or_default();
    Ok(AggregateReport { models: FittedModels::names().iter().map(|s| s.to_string()).collect(), curves, risk, ssd_switches })
}

impl AggregateReport {
    pub fn write_curves_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["x".to_string()];
        for m in &self.models {
            head.push(format!("cdf_{m}"));
        }
        for m in &self.models {
            head.push(format!("pi_{m}"));
        }
        head.extend(["cdf_sup_fsd", "cdf_sup_ssd", "pi_sup_fsd", "pi_sup_ssd"].map(String::from));
        w.write_record(&head)?;
        for r in &self.curves {
            let mut rec = vec![r.x];
            rec.extend(&r.cdf);
            rec.extend(&r.pi);
            rec.extend([r.sup_fsd_cdf, r.sup_ssd_cdf, r.sup_fsd_pi, r.sup_ssd_pi]);
            w.write_record(rec.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_risk_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["family".to_string(), "parameter".to_string()];
        head.extend(self.models.iter().cloned());
        head.extend(["wr", "ma1", "ma2"].map(String::from));
        w.write_record(&head)?;
        for r in &self.risk {
            let mut rec = vec![r.family.clone(), r.parameter.to_string()];
            rec.extend(r.models.iter().map(|v| v.to_string()));
            rec.extend([r.wr, r.ma1, r.ma2].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
