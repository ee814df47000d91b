mod common;

use std::process::Command;

use common::close;
use domagg::harness::*;
use domagg::lattice::Order;
use domagg::risk::RiskMeasure;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

fn table_from(text: &str) -> domagg::Result<PriceTable> {
    PriceTable::from_reader(text.as_bytes())
}

#[test]
fn ingest_examples() {
    let t = table_from("date,X\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n").unwrap();
    let l = t.asset_losses("X").unwrap();
    assert!(close(l[0], -0.10, 1e-15) && close(l[1], 0.10, 1e-15));
    assert!(table_from("date,X\n2020-01-01,100\n2020-01-01,110\n").is_err());
    let t = table_from("date,X,Y\n2020-01-01,100,5\n2020-01-02,,6\n2020-01-03,99,7\n2020-01-06,98,7\n").unwrap();
    assert_eq!(t.dropped_rows, 1);
    assert_eq!(t.len(), 3);
    assert!(table_from("date,X\n2020-01-01,100\n2020-01-02,0\n").is_err());
    assert!(table_from("date,X\n2020-01-01,100\n").is_err());
    assert!(table_from("date,X\n2020-13-01,100\n2020-01-02,101\n").is_err());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, "date,X\n2020-01-01,100\n2020-01-02,110\n").unwrap();
    assert_eq!(ingest_csv(&path).unwrap().len(), 2);
    assert!(ingest_csv(&dir.path().join("missing.csv")).is_err());
}

#[test]
fn vendored_set_shape() {
    let t = vendored_prices().unwrap();
    assert_eq!(t.len(), VENDORED_ROWS);
    assert_eq!(t.tickers.len(), 20);
    assert_eq!(t.losses().len(), VENDORED_ROWS - 1);
    assert!(t.dates.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn vendored_t_fit_recovers_nu() {
    let t = vendored_prices().unwrap();
    let fit = fit_multivariate_t(&t.losses()).unwrap();
    assert!((fit.nu - VENDORED_NU).abs() <= 0.5, "{}", fit.nu);
    assert!(fit.nu > NU_RANGE.0 && fit.nu <= NU_RANGE.1);
}

#[test]
fn normal_fit_within_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mu, sigma) = (0.3, 1.7);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| Normal::new(mu, sigma).unwrap().sample(&mut rng)).collect();
    let m = fit_models(&xs).unwrap();
    let se_mean = sigma / (n as f64).sqrt();
    let se_sd = sigma / (2.0 * n as f64).sqrt();
    assert!((m.mean - mu).abs() <= 3.0 * se_mean, "{}", m.mean);
    assert!((m.sd - sigma).abs() <= 3.0 * se_sd, "{}", m.sd);
    assert!(m.nu > 30.0, "normal data should push nu up, got {}", m.nu);
}

#[test]
fn logistic_scale_matches_variance() {
    // a symmetric ±1 sample has unit standard deviation (n - 1 divisor aside)
    let n = 1000;
    let xs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let m = fit_models(&xs).unwrap();
    match m.logistic {
        domagg::Distribution::Logistic { scale, .. } => {
            assert!(close(scale, m.sd * 3f64.sqrt() / std::f64::consts::PI, 1e-15));
            assert!(close(scale, 3f64.sqrt() / std::f64::consts::PI, 1e-3));
        }
        other => panic!("{other:?}"),
    }
    assert!(fit_models(&vec![0.01; 50]).is_err());
    assert!(fit_models(&[0.1, 0.2]).is_err());
}

#[test]
fn aggregation_tables() {
    let t = vendored_prices().unwrap();
    let models = fit_models(&t.asset_losses("AAPL").unwrap()).unwrap();
    let grid = AggregateGrid { x_points: 101, ..AggregateGrid::default() };
    let rep = aggregate_experiment(&models, &grid).unwrap();
    assert_eq!(rep.models.len(), 4);
    assert_eq!(rep.curves.len(), 101);
    for row in &rep.risk {
        let worst = row.models.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(close(row.wr, worst, 1e-15));
        assert!(row.ma1 >= row.wr - 1e-9, "{row:?}");
        if row.ssd_consistent {
            assert!(row.ma2 >= row.wr - 1e-9 && row.ma1 >= row.ma2 - 1e-9, "{row:?}");
        }
    }
    assert!(rep.risk.iter().any(|r| r.family == "es"));
    for c in &rep.curves {
        let min_cdf = c.cdf.iter().copied().fold(f64::INFINITY, f64::min);
        let max_pi = c.pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(c.sup_fsd_cdf <= min_cdf + 1e-6);
        assert!(c.sup_ssd_pi >= max_pi - 1e-6);
    }
    assert!(!rep.ssd_switches.is_empty());
    let mut buf = Vec::new();
    rep.write_risk_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("family,parameter"));
    let _ = Order::Ssd;
}

fn small_table() -> PriceTable {
    let full = vendored_prices().unwrap();
    PriceTable {
        dates: full.dates[..150].to_vec(),
        tickers: full.tickers[..5].to_vec(),
        prices: full.prices[..150].iter().map(|r| r[..5].to_vec()).collect(),
        dropped_rows: 0,
    }
}

#[test]
fn small_backtest_properties() {
    let table = small_table();
    let cfg = BacktestConfig { train_window: 100, r0: 0.05, ..BacktestConfig::default() };
    let rep = backtest(&table, &cfg).unwrap();
    let losses = table.losses();
    let days = losses.len() - cfg.train_window;
    assert_eq!(rep.dates.len(), days);
    for s in &rep.strategies {
        assert_eq!(s.wealth.len(), days);
        let mut w = 1.0;
        for (i, t) in (cfg.train_window..losses.len()).enumerate() {
            let l: f64 = s.weights[i].iter().zip(&losses[t]).map(|(a, b)| a * b).sum();
            w *= 1.0 - l;
        }
        assert_eq!(*s.wealth.last().unwrap(), w);
        assert!(s.wealth.iter().all(|v| *v > 0.0));
        assert!(s.transaction_cost >= 0.0);
        assert!(close(s.sharpe, (s.annual_return - cfg.risk_free) / s.annual_volatility, 1e-12));
    }
    let obj = |st: Strategy| rep.strategies.iter().find(|s| s.strategy == st).unwrap().objectives.clone();
    for (w, m) in obj(Strategy::WassersteinWr).iter().zip(obj(Strategy::WassersteinMa2)) {
        if w.is_finite() && m.is_finite() {
            assert!(m >= w - 1e-7);
        }
    }
    let again = backtest(&table, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&rep).unwrap(), serde_json::to_string(&again).unwrap());

    let dir = tempfile::tempdir().unwrap();
    rep.emit(dir.path(), "bt").unwrap();
    let summary = std::fs::read_to_string(dir.path().join("bt_summary.csv")).unwrap();
    assert!(summary.starts_with("approach,AR,AV,SR,TC\n"));
    assert_eq!(summary.lines().count(), 1 + rep.strategies.len());
    let wealth = std::fs::read_to_string(dir.path().join("bt_wealth.csv")).unwrap();
    assert_eq!(wealth.lines().count(), 1 + days);
    let json = std::fs::read_to_string(dir.path().join("bt.json")).unwrap();
    let back: BacktestReport = serde_json::from_str(&json).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&rep).unwrap());
}

#[test]
fn zero_radius_backtest_paths_coincide() {
    let cfg = BacktestConfig {
        train_window: 100,
        r0: 0.05,
        eps: 0.0,
        strategies: vec![Strategy::WassersteinWr, Strategy::WassersteinMa2],
        ..BacktestConfig::default()
    };
    let rep = backtest(&small_table(), &cfg).unwrap();
    assert_eq!(rep.strategies[0].weights, rep.strategies[1].weights);
}

#[test]
fn risk_measure_for_backtest_is_coherent() {
    // the loadings used by the mean-variance strategies are ordered
    for k in [2.0, 20.0] {
        let (b, g, e) = domagg::uncertainty::pd_meanvar_coefficients(k).unwrap();
        assert!(b >= g && g >= e);
    }
    assert!(RiskMeasure::pd(2.0).unwrap().consistency().ssd_consistent);
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_domagg")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();

    let (code, out, _) = cli(&["risk", "--measure", "es:0.5", "--dist", "point:0", "--dist", "point:1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(close(v["wr"].as_f64().unwrap(), 1.0, 1e-12));

    assert_eq!(cli(&["risk", "--measure", "bogus:1", "--dist", "point:0"]).0, 1);
    assert_eq!(cli(&["ingest", "--prices", &format!("{d}/none.csv"), "--out-dir", d]).0, 4);
    let (code, _, err) = cli(&["robust-model", "--set", "wasserstein", "--benchmark", "normal:0:1", "--p", "1", "--out-dir", d]);
    assert_eq!(code, 3, "{err}");

    let prog = serde_json::json!({
        "actions": {"kind": "simplex_target", "mu": [0.1, 0.2], "bound": -1.0},
        "loss": {"kind": "linear"},
        "scenarios": {"kind": "finite_clouds", "clouds": [{"kind": "points", "points": [[0.1, 0.2], [0.3, -0.1]]}]},
        "measure": {"kind": "es", "alpha": 0.5}
    });
    let path = dir.path().join("prog.json");
    std::fs::write(&path, prog.to_string()).unwrap();
    assert_eq!(cli(&["optimize", "--program", path.to_str().unwrap(), "--approach", "wr"]).0, 2);

    let prices = dir.path().join("p.csv");
    std::fs::write(&prices, "date,X\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n").unwrap();
    let (code, _, _) = cli(&["ingest", "--prices", prices.to_str().unwrap(), "--out-dir", d]);
    assert_eq!(code, 0);
    assert!(dir.path().join("losses.csv").exists());
}
