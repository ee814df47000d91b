use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::PriceTable;
use super::fit::{fit_multivariate_t, sample_moments};
use crate::conic::SolverOptions;
use crate::error::{domain, Error, Result};
use crate::risk::RiskMeasure;
use crate::robustopt::{
    markowitz, portfolio_meanvar, portfolio_wasserstein, saa_portfolio, Approach, EllipticalGenerator, PortfolioInputs,
    PortfolioSolution, ReturnTarget,
};
use crate::uncertainty::Distortion;

/// One rebalancing rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "SAA")]
    Saa,
    #[serde(rename = "Markowitz")]
    Markowitz,
    #[serde(rename = "W-WR")]
    WassersteinWr,
    #[serde(rename = "W-MA2")]
    WassersteinMa2,
    #[serde(rename = "MV-WR")]
    MeanVarWr,
    #[serde(rename = "MV-MA1")]
    MeanVarMa1,
    #[serde(rename = "MV-MA2")]
    MeanVarMa2,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Saa,
        Strategy::Markowitz,
        Strategy::WassersteinWr,
        Strategy::WassersteinMa2,
        Strategy::MeanVarWr,
        Strategy::MeanVarMa1,
        Strategy::MeanVarMa2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Saa => "SAA",
            Strategy::Markowitz => "Markowitz",
            Strategy::WassersteinWr => "W-WR",
            Strategy::WassersteinMa2 => "W-MA2",
            Strategy::MeanVarWr => "MV-WR",
            Strategy::MeanVarMa1 => "MV-MA1",
            Strategy::MeanVarMa2 => "MV-MA2",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .find(|t| t.label().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown strategy '{s}'")))
    }
}

/// Benchmark family of the Wasserstein strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkFamily {
    Normal,
    StudentT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub train_window: usize,
    pub r0: f64,
    pub m: f64,
    /// exponent of the power-distorted measure
    pub k: f64,
    pub eps: f64,
    pub a: f64,
    pub p: f64,
    pub benchmark: BenchmarkFamily,
    pub strategies: Vec<Strategy>,
    pub risk_free: f64,
    pub tol: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            train_window: 350,
            r0: 0.2,
            m: 250.0,
            k: 2.0,
            eps: 0.01,
            a: 2.0,
            p: 2.0,
            benchmark: BenchmarkFamily::StudentT,
            strategies: Strategy::ALL.to_vec(),
            risk_free: 0.00165,
            tol: 1e-9,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self, table: &PriceTable) -> Result<()> {
        if self.train_window < 30 || self.train_window + 1 >= table.len() {
            return Err(domain(format!(
                "training window {} needs at least 30 days and fewer than the {} loss days",
                self.train_window,
                table.len() - 1
            )));
        }
        if !(self.eps >= 0.0) || !(self.m > 0.0) || !(self.k >= 1.0) {
            return Err(domain("backtest needs eps >= 0, m > 0 and k >= 1"));
        }
        if self.strategies.is_empty() {
            return Err(domain("no strategies selected"));
        }
        Ok(())
    }
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Deserialize::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    /// Wealth after each trading day; wealth before the first is 1.
    pub wealth: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    /// Program objective per day (NaN where previous weights were held,
    /// `null` in JSON).
    #[serde(deserialize_with = "nan_from_null")]
    pub objectives: Vec<f64>,
    /// Days on which the program failed and the previous weights were kept.
    pub held: usize,
    pub annual_return: f64,
    pub annual_volatility: f64,
    pub sharpe: f64,
    pub transaction_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// fitted t degrees of freedom per day
    pub nu: Vec<f64>,
    pub strategies: Vec<StrategyReport>,
}

/// Annualized return and volatility, Sharpe ratio and mean ℓ₁ weight change.
pub fn performance(returns: &[f64], weights: &[Vec<f64>], m: f64, risk_free: f64) -> (f64, f64, f64, f64) {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let ar = mean * m;
    let av = var.sqrt() * m.sqrt();
    let tc = weights
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum::<f64>()
        / n;
    (ar, av, (ar - risk_free) / av, tc)
}

struct DayFit {
    inputs: PortfolioInputs,
    nu: f64,
}

fn solve_day(s: Strategy, fit: &DayFit, window: &[Vec<f64>], cfg: &BacktestConfig, opts: &SolverOptions) -> Result<PortfolioSolution> {
    let target = Some(ReturnTarget { r0: cfg.r0, m: cfg.m });
    let pd = RiskMeasure::pd(cfg.k)?;
    let generator = match cfg.benchmark {
        BenchmarkFamily::Normal => EllipticalGenerator::Normal,
        BenchmarkFamily::StudentT => EllipticalGenerator::StudentT { nu: fit.nu },
    };
    let wass = |approach| {
        portfolio_wasserstein(&fit.inputs, target, &Distortion::Pd { k: cfg.k }, generator, cfg.eps, cfg.a, cfg.p, approach, opts)
    };
    match s {
        Strategy::Saa => saa_portfolio(window, &fit.inputs.mu, target, &pd, opts),
        Strategy::Markowitz => markowitz(&fit.inputs, target, opts),
        Strategy::WassersteinWr => wass(Approach::Wr),
        Strategy::WassersteinMa2 => wass(Approach::Ma2),
        Strategy::MeanVarWr => portfolio_meanvar(&fit.inputs, target, &pd, Approach::Wr, opts),
        Strategy::MeanVarMa1 => portfolio_meanvar(&fit.inputs, target, &pd, Approach::Ma1, opts),
        Strategy::MeanVarMa2 => portfolio_meanvar(&fit.inputs, target, &pd, Approach::Ma2, opts),
    }
}

/// Rolling-window backtest: each day after the training window, fit on the
/// preceding window, solve every strategy, and realize the next loss.
pub fn backtest(table: &PriceTable, cfg: &BacktestConfig) -> Result<BacktestReport> {
    cfg.validate(table)?;
    let losses = table.losses();
    let d = table.tickers.len();
    let days: Vec<usize> = (cfg.train_window..losses.len()).collect();
    let opts = SolverOptions { tol: cfg.tol, ..SolverOptions::default() };
    let need_t = cfg.benchmark == BenchmarkFamily::StudentT
        && cfg.strategies.iter().any(|s| matches!(s, Strategy::WassersteinWr | Strategy::WassersteinMa2));
    // solves are independent across days; failures are resolved in order below
    let solved: Vec<(f64, Vec<Result<PortfolioSolution>>)> = days
        .par_iter()
        .map(|&t| {
            let window = &losses[t - cfg.train_window..t];
            let (mu, sigma) = sample_moments(window);
            let nu = if need_t { fit_multivariate_t(window).map(|f| f.nu).unwrap_or(f64::NAN) } else { f64::NAN };
            let fit = DayFit { inputs: PortfolioInputs { mu, sigma }, nu };
            let sols = cfg
                .strategies
                .iter()
                .map(|&s| {
                    if need_t && nu.is_nan() {
                        return Err(Error::Numeric("t fit failed on this window".into()));
                    }
                    solve_day(s, &fit, window, cfg, &opts)
                })
                .collect();
            (nu, sols)
        })
        .collect();
    let mut strategies = Vec::with_capacity(cfg.strategies.len());
    for (si, &s) in cfg.strategies.iter().enumerate() {
        let mut prev = vec![1.0 / d as f64; d];
        let mut wealth = Vec::with_capacity(days.len());
        let mut weights = Vec::with_capacity(days.len());
        let mut objectives = Vec::with_capacity(days.len());
        let mut returns = Vec::with_capacity(days.len());
        let mut held = 0;
        let mut w_now = 1.0;
        for (di, &t) in days.iter().enumerate() {
            let w = match &solved[di].1[si] {
                Ok(sol) => {
                    objectives.push(sol.objective);
                    sol.weights.clone()
                }
                Err(e) => {
                    log::warn!("{} on {}: {e}; holding previous weights", s.label(), table.dates[t + 1]);
                    held += 1;
                    objectives.push(f64::NAN);
                    prev.clone()
                }
            };
            let loss: f64 = w.iter().zip(&losses[t]).map(|(a, b)| a * b).sum();
            w_now *= 1.0 - loss;
            returns.push(-loss);
            wealth.push(w_now);
            prev = w.clone();
            weights.push(w);
        }
        let (ar, av, sr, tc) = performance(&returns, &weights, cfg.m, cfg.risk_free);
        strategies.push(StrategyReport {
            strategy: s,
            wealth,
            weights,
            objectives,
            held,
            annual_return: ar,
            annual_volatility: av,
            sharpe: sr,
            transaction_cost: tc,
        });
    }
    Ok(BacktestReport {
        config: cfg.clone(),
        tickers: table.tickers.clone(),
        // loss t is realized on price date t + 1
        dates: days.iter().map(|&t| table.dates[t + 1]).collect(),
        nu: solved.iter().map(|s| s.0).collect(),
        strategies,
    })
}

impl BacktestReport {
    pub fn write_summary_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["approach", "AR", "AV", "SR", "TC"])?;
        for s in &self.strategies {
            w.write_record([
                s.strategy.label().to_string(),
                s.annual_return.to_string(),
                s.annual_volatility.to_string(),
                s.sharpe.to_string(),
                s.transaction_cost.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per trading day, one column per strategy.
    pub fn write_wealth_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        self.write_daily(out, |s, i| s.wealth[i])
    }

    pub fn write_objectives_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        self.write_daily(out, |s, i| s.objectives[i])
    }

    fn write_daily<W: std::io::Write, F: Fn(&StrategyReport, usize) -> f64>(&self, out: W, f: F) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["date".to_string()];
        head.extend(self.strategies.iter().map(|s| s.strategy.label().to_string()));
        w.write_record(&head)?;
        for (i, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.to_string()];
            rec.extend(self.strategies.iter().map(|s| f(s, i).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format: date, approach, then one column per ticker.
    pub fn write_weights_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["date".to_string(), "approach".to_string()];
        head.extend(self.tickers.iter().cloned());
        w.write_record(&head)?;
        for (i, d) in self.dates.iter().enumerate() {
            for s in &self.strategies {
                let mut rec = vec![d.to_string(), s.strategy.label().to_string()];
                rec.extend(s.weights[i].iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<prefix>_summary.csv`, `_wealth.csv`, `_weights.csv`,
    /// `_objectives.csv` and `<prefix>.json` into `dir`.
    pub fn emit(&self, dir: &Path, prefix: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |suffix: &str| std::fs::File::create(dir.join(format!("{prefix}{suffix}")));
        self.write_summary_csv(open("_summary.csv")?)?;
        self.write_wealth_csv(open("_wealth.csv")?)?;
        self.write_weights_csv(open("_weights.csv")?)?;
        self.write_objectives_csv(open("_objectives.csv")?)?;
        serde_json::to_writer_pretty(open(".json")?, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weights_cost_nothing() {
        let w = vec![vec![0.5, 0.5]; 4];
        let (_, _, _, tc) = performance(&[0.01, -0.01, 0.02, 0.0], &w, 250.0, 0.0);
        assert_eq!(tc, 0.0);
    }
}
