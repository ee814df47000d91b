use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use domagg::conic::SolverOptions;
use domagg::dist::{io as dio, Atoms, Distribution};
use domagg::harness::{
    aggregate_experiment, backtest, fit_models, ingest_csv, synthetic_prices, vendored_prices, AggregateGrid,
    BacktestConfig, BenchmarkFamily, PriceTable, Strategy,
};
use domagg::lattice::{supremum, GridConfig, Order};
use domagg::risk::{ma_value, wr_value, RiskMeasure};
use domagg::robustopt::newsvendor::{sweep, write_sweep_csv, NewsvendorConfig, SweepAxis};
use domagg::robustopt::{Approach, RobustProgram};
use domagg::uncertainty::{logit_levels, MeanVarianceClass, WassersteinBall};
use domagg::{Error, Result};

#[derive(Parser)]
#[command(name = "domagg", version, about = "Robust model aggregation under stochastic dominance")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Discretization size for non-atomic laws
    #[arg(long, global = true, default_value_t = domagg::dist::DEFAULT_GRID_SIZE)]
    grid: usize,
    /// Directory for output files
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
}

impl Global {
    fn lattice(&self) -> GridConfig {
        GridConfig { size: self.grid, ..GridConfig::default() }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, ..SolverOptions::default() }
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a price file and write its daily losses
    Ingest {
        #[arg(long)]
        prices: PathBuf,
    },
    /// Write a seeded synthetic price set
    Synth {
        #[arg(long, default_value_t = 650)]
        rows: usize,
        #[arg(long, default_value_t = 4.0)]
        nu: f64,
    },
    /// Fit empirical, normal, t and logistic models to one loss series
    Fit(SeriesArgs),
    /// Suprema of the fitted models and RVaR/ES series under WR and MA
    Aggregate(SeriesArgs),
    /// Risk of each law, worst case and aggregated values
    Risk {
        /// var:a, es:a, rvar:a:b, pd:k, expectile:a, mean or kusuoka:@file.json
        #[arg(long)]
        measure: RiskMeasure,
        /// Law: normal:mu:sigma, t:nu:loc:scale, logistic:loc:s, point:x or a .json/.csv file
        #[arg(long = "dist", required = true)]
        dists: Vec<String>,
    },
    /// Aggregated robust model of an uncertainty set
    RobustModel {
        #[arg(long, value_enum)]
        set: SetKind,
        #[arg(long, default_value = "ssd")]
        order: Order,
        /// Members of a finite set
        #[arg(long = "dist")]
        dists: Vec<String>,
        /// Wasserstein benchmark
        #[arg(long)]
        benchmark: Option<String>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Solve a robust program read from JSON
    Optimize {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        approach: Approach,
    },
    /// Timing benchmarks
    Bench {
        #[command(subcommand)]
        which: Bench,
    },
    /// Rolling-window portfolio backtest
    Backtest(BacktestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    Finite,
    Wasserstein,
    Meanvar,
}

#[derive(Args)]
struct SeriesArgs {
    /// Price file; the vendored synthetic set when omitted
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long, default_value = "AAPL")]
    ticker: String,
}

#[derive(Subcommand)]
enum Bench {
    /// WR vs MA2 newsvendor programs over one size parameter
    Newsvendor {
        /// d, n, nw, W, N or all
        #[arg(long, default_value = "all")]
        sweep: String,
        /// Comma-separated values; defaults per axis
        #[arg(long, value_delimiter = ',')]
        values: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        nw: usize,
        #[arg(long, default_value_t = 3)]
        w: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BacktestArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Exponents of the power-distorted measure, one report each
    #[arg(long, value_delimiter = ',', default_value = "2,20")]
    k: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    r0: f64,
    #[arg(long, default_value_t = 250.0)]
    m: f64,
    #[arg(long, default_value_t = 350)]
    window: usize,
    #[arg(long, value_enum, default_value = "t")]
    benchmark: BenchArg,
    #[arg(long, default_value_t = 0.00165)]
    risk_free: f64,
    /// Subset of SAA, Markowitz, W-WR, W-MA2, MV-WR, MV-MA1, MV-MA2
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<Strategy>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchArg {
    T,
    Normal,
}

fn prices(path: &Option<PathBuf>) -> Result<PriceTable> {
    match path {
        Some(p) => ingest_csv(p),
        None => vendored_prices(),
    }
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    // a closed pipe on stdout is not a failure of the command
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.cmd {
        Command::Ingest { prices } => {
            let t = ingest_csv(prices)?;
            let out = g.path("losses.csv")?;
            let mut w = csv::Writer::from_path(&out)?;
            let mut head = vec!["date".to_string()];
            head.extend(t.tickers.iter().cloned());
            w.write_record(&head)?;
            for (d, row) in t.dates[1..].iter().zip(t.losses()) {
                let mut rec = vec![d.to_string()];
                rec.extend(row.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            w.flush()?;
            print_json(&json!({
                "rows": t.len(),
                "tickers": t.tickers,
                "dropped_rows": t.dropped_rows,
                "losses": out,
            }))
        }
        Command::Synth { rows, nu } => {
            let t = synthetic_prices(*rows, *nu, g.seed)?;
            let out = g.path("synthetic_prices.csv")?;
            t.write_csv(File::create(&out)?)?;
            print_json(&json!({ "rows": t.len(), "file": out }))
        }
        Command::Fit(a) => {
            let m = fit_models(&prices(&a.prices)?.asset_losses(&a.ticker)?)?;
            let out = g.path(&format!("fit_{}.json", a.ticker))?;
            write_json(&out, &m)?;
            print_json(&json!({
                "ticker": a.ticker,
                "mean": m.mean,
                "sd": m.sd,
                "nu": m.nu,
                "normal": m.normal,
                "t": m.student_t,
                "logistic": m.logistic,
                "file": out,
            }))
        }
        Command::Aggregate(a) => {
            let m = fit_models(&prices(&a.prices)?.asset_losses(&a.ticker)?)?;
            let grid = AggregateGrid { lattice: g.lattice(), ..AggregateGrid::default() };
            let r = aggregate_experiment(&m, &grid)?;
            r.write_curves_csv(File::create(g.path("aggregate_curves.csv")?)?)?;
            r.write_risk_csv(File::create(g.path("aggregate_risk.csv")?)?)?;
            write_json(&g.path("aggregate.json")?, &r)?;
            print_json(&json!({ "ticker": a.ticker, "ssd_switches": r.ssd_switches, "out_dir": g.out_dir }))
        }
        Command::Risk { measure, dists } => {
            let set = dists.iter().map(|s| dio::parse_spec(s)).collect::<Result<Vec<_>>>()?;
            let values = set.iter().map(|d| measure.evaluate(d)).collect::<Result<Vec<_>>>()?;
            let tag = measure.consistency();
            let ma = |o: Order, ok: bool| -> Result<Option<f64>> {
                if ok {
                    ma_value(measure, o, &set, &g.lattice()).map(Some)
                } else {
                    Ok(None)
                }
            };
            print_json(&json!({
                "measure": measure.label(),
                "values": values,
                "wr": wr_value(measure, &set)?,
                "ma1": ma(Order::Fsd, tag.fsd_consistent)?,
                "ma2": ma(Order::Ssd, tag.ssd_consistent)?,
            }))
        }
        Command::RobustModel { set, order, dists, benchmark, p, eps, mu, sigma } => {
            let (sup, exact): (Distribution, bool) = match set {
                SetKind::Finite => {
                    if dists.is_empty() {
                        return Err(Error::Domain("a finite set needs at least one --dist".into()));
                    }
                    let laws = dists.iter().map(|s| dio::parse_spec(s)).collect::<Result<Vec<_>>>()?;
                    let r = supremum(*order, &laws, &g.lattice())?;
                    (r.sup, r.exact)
                }
                SetKind::Wasserstein => {
                    let b = dio::parse_spec(benchmark.as_deref().unwrap_or("normal:0:1"))?;
                    let ball = WassersteinBall::new(*p, *eps, b)?;
                    match order {
                        Order::Fsd => (ball.sup_fsd()?, false),
                        Order::Ssd => (ball.sup_ssd()?, true),
                    }
                }
                SetKind::Meanvar => {
                    let c = MeanVarianceClass::new(*mu, *sigma)?;
                    match order {
                        Order::Fsd => (c.sup_fsd(), true),
                        Order::Ssd => (c.sup_ssd(), true),
                    }
                }
            };
            dio::save_json(&g.path("robust_model.json")?, &sup)?;
            let qfile = g.path("robust_model_quantiles.csv")?;
            let mut w = csv::Writer::from_path(&qfile)?;
            w.write_record(["level", "quantile"])?;
            let levels = match sup.as_atoms() {
                Some(a) => a.cumulative().to_vec(),
                None => logit_levels(512, 1e-4, 1.0 - 1e-4),
            };
            for s in levels.into_iter().filter(|s| *s > 0.0 && *s < 1.0) {
                w.write_record([s.to_string(), sup.quantile(s)?.to_string()])?;
            }
            w.flush()?;
            print_json(&json!({
                "family": sup.family(),
                "mean": sup.mean().ok(),
                "exact": exact,
                "atoms": sup.as_atoms().map(Atoms::len),
                "file": g.out_dir.join("robust_model.json"),
            }))
        }
        Command::Optimize { program, approach } => {
            let mut prog: RobustProgram = serde_json::from_reader(std::io::BufReader::new(File::open(program)?))?;
            prog.tol = prog.tol.min(g.tol);
            let s = prog.solve(*approach)?;
            print_json(&json!({
                "objective": s.objective,
                "action": s.action,
                "iterations": s.iterations,
                "residual": s.residual,
            }))
        }
        Command::Bench { which: Bench::Newsvendor { sweep: axis, values, reps, d, n, nw, w, samples, out } } => {
            let base = NewsvendorConfig { d: *d, n: *n, nw: *nw, w: *w, samples: *samples, seed: g.seed };
            let axes: Vec<SweepAxis> =
                if axis == "all" { SweepAxis::ALL.to_vec() } else { vec![axis.parse()?] };
            let mut rows = Vec::new();
            for a in axes {
                let vals = if values.is_empty() { a.default_values() } else { values.clone() };
                rows.extend(sweep(a, &vals, &base, *reps, &g.solver())?);
            }
            let path = match out {
                Some(p) => p.clone(),
                None => g.path("bench_newsvendor.csv")?,
            };
            write_sweep_csv(&rows, File::create(&path)?)?;
            print_json(&json!({ "rows": rows.len(), "file": path }))
        }
        Command::Backtest(a) => {
            let table = prices(&a.prices)?;
            let mut summary = Vec::new();
            for &k in &a.k {
                let cfg = BacktestConfig {
                    train_window: a.window,
                    r0: a.r0,
                    m: a.m,
                    k,
                    eps: a.eps,
                    benchmark: match a.benchmark {
                        BenchArg::T => BenchmarkFamily::StudentT,
                        BenchArg::Normal => BenchmarkFamily::Normal,
                    },
                    strategies: if a.strategies.is_empty() { Strategy::ALL.to_vec() } else { a.strategies.clone() },
                    risk_free: a.risk_free,
                    tol: g.tol,
                    ..BacktestConfig::default()
                };
                let r = backtest(&table, &cfg)?;
                std::fs::create_dir_all(&g.out_dir)?;
                r.emit(&g.out_dir, &format!("backtest_k{k}"))?;
                for s in &r.strategies {
                    summary.push(json!({
                        "k": k,
                        "approach": s.strategy.label(),
                        "AR": s.annual_return,
                        "AV": s.annual_volatility,
                        "SR": s.sharpe,
                        "TC": s.transaction_cost,
                        "held": s.held,
                    }));
                }
            }
            print_json(&json!(summary))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
