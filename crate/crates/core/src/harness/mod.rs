//! Price ingestion, model fitting, the aggregation experiment and the
//! rolling-window portfolio backtest.

mod aggregate;
mod backtest;
mod data;
mod fit;

pub use aggregate::{aggregate_experiment, AggregateGrid, AggregateReport, CurveRow, RiskRow};
pub use backtest::{
    backtest, performance, BacktestConfig, BacktestReport, BenchmarkFamily, Strategy, StrategyReport,
};
pub use data::{
    ingest_csv, synthetic_moments, synthetic_prices, vendored_prices, PriceTable, SYNTHETIC_TICKERS, VENDORED_NU,
    VENDORED_PRICES_CSV, VENDORED_ROWS, VENDORED_SEED,
};
pub use fit::{fit_models, fit_multivariate_t, sample_moments, FittedModels, TFit, MIN_FIT_OBS, NU_RANGE};
