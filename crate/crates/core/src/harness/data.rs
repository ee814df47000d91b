use std::io::Read;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Daily closing prices, one row per date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `prices[t][i]` for date `t` and ticker `i`
    pub prices: Vec<Vec<f64>>,
    /// Rows skipped at ingestion because a cell was empty.
    pub dropped_rows: usize,
}

fn is_gap(cell: &str) -> bool {
    matches!(cell.trim().to_ascii_lowercase().as_str(), "" | "na" | "nan" | "null")
}

impl PriceTable {
    /// Parses `date,TICKER1,...` CSV. Rows with an empty cell are dropped and
    /// counted; duplicate or decreasing dates and non-positive prices are
    /// errors.
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
            return Err(Error::Parse("price file header must be date,TICKER,...".into()));
        }
        let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut prices = Vec::new();
        let mut dropped_rows = 0;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = line + 2;
            let date = NaiveDate::parse_from_str(&rec[0], DATE_FORMAT)
                .map_err(|e| Error::Parse(format!("row {row}: bad date '{}': {e}", &rec[0])))?;
            if let Some(&last) = dates.last() {
                if date == last {
                    return Err(Error::Parse(format!("row {row}: duplicate date {date}")));
                }
                if date < last {
                    return Err(Error::Parse(format!("row {row}: date {date} is out of order")));
                }
            }
            if rec.len() != tickers.len() + 1 || rec.iter().skip(1).any(is_gap) {
                dropped_rows += 1;
                continue;
            }
            let mut vals = Vec::with_capacity(tickers.len());
            for (i, cell) in rec.iter().skip(1).enumerate() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {row}: bad price '{cell}' for {}", tickers[i])))?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(domain(format!("row {row}: price {v} for {} is not positive", tickers[i])));
                }
                vals.push(v);
            }
            dates.push(date);
            prices.push(vals);
        }
        if dropped_rows > 0 {
            log::warn!("dropped {dropped_rows} row(s) with missing prices");
        }
        if dates.len() < 2 {
            return Err(domain("need at least two complete price rows"));
        }
        Ok(PriceTable { dates, tickers, prices, dropped_rows })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// `x_t = -(p_t / p_{t-1} - 1)`, one row per date after the first.
    pub fn losses(&self) -> Vec<Vec<f64>> {
        self.prices.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| -(a / b - 1.0)).collect()).collect()
    }

    /// Loss series of one ticker.
    pub fn asset_losses(&self, ticker: &str) -> Result<Vec<f64>> {
        let i = self
            .tickers
            .iter()
            .position(|t| t == ticker)
            .ok_or_else(|| domain(format!("ticker '{ticker}' not in table")))?;
        Ok(self.losses().iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["date".to_string()];
        head.extend(self.tickers.iter().cloned());
        w.write_record(&head)?;
        for (d, row) in self.dates.iter().zip(&self.prices) {
            let mut rec = vec![d.format(DATE_FORMAT).to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn ingest_csv(path: &Path) -> Result<PriceTable> {
    PriceTable::from_reader(std::fs::File::open(path)?)
}

/// The vendored 20-asset, 650-day synthetic price set.
pub const VENDORED_PRICES_CSV: &str = include_str!("../../data/synthetic_prices.csv");
/// Parameters that regenerate [`VENDORED_PRICES_CSV`].
pub const VENDORED_ROWS: usize = 650;
pub const VENDORED_NU: f64 = 4.0;
pub const VENDORED_SEED: u64 = 2021;

pub fn vendored_prices() -> Result<PriceTable> {
    PriceTable::from_reader(VENDORED_PRICES_CSV.as_bytes())
}

pub const SYNTHETIC_TICKERS: [&str; 20] = [
    "AAPL", "MSFT", "GOOGL", "AMZN", "ADBE", "NFLX", "AMD", "V", "JNJ", "COST", "WMT", "PG", "MA", "UNH", "DIS", "HD",
    "INTC", "PYPL", "GS", "IBM",
];

/// Daily mean returns, ×1e-3.
const SYN_MEAN: [f64; 20] =
    [2.3, 1.8, 1.6, 1.4, 1.8, 1.3, 3.2, 1.6, 0.7, 1.3, 0.8, 0.9, 1.4, 1.1, 1.0, 1.3, 0.6, 2.1, 1.6, 0.7];
/// Daily return variances, ×1e-4.
const SYN_VAR: [f64; 20] =
    [5.1, 4.0, 3.8, 3.7, 5.0, 6.3, 11.6, 3.7, 2.0, 2.0, 2.1, 2.3, 5.0, 4.8, 5.1, 3.8, 6.6, 6.5, 5.7, 3.7];
/// Lower triangle of the return correlations, row by row.
const SYN_CORR: [&[f64]; 19] = [
    &[0.784],
    &[0.679, 0.786],
    &[0.660, 0.714, 0.644],
    &[0.707, 0.838, 0.716, 0.704],
    &[0.496, 0.546, 0.505, 0.614, 0.612],
    &[0.583, 0.600, 0.519, 0.560, 0.574, 0.445],
    &[0.637, 0.737, 0.685, 0.443, 0.653, 0.330, 0.473],
    &[0.485, 0.563, 0.478, 0.332, 0.429, 0.251, 0.323, 0.568],
    &[0.588, 0.647, 0.531, 0.529, 0.600, 0.405, 0.447, 0.513, 0.534],
    &[0.438, 0.520, 0.403, 0.378, 0.449, 0.330, 0.334, 0.377, 0.479, 0.680],
    &[0.491, 0.581, 0.478, 0.371, 0.494, 0.271, 0.338, 0.538, 0.656, 0.610, 0.610],
    &[0.626, 0.715, 0.662, 0.457, 0.628, 0.308, 0.472, 0.922, 0.534, 0.470, 0.349, 0.513],
    &[0.500, 0.580, 0.534, 0.357, 0.482, 0.292, 0.379, 0.611, 0.565, 0.483, 0.363, 0.491, 0.567],
    &[0.437, 0.493, 0.498, 0.308, 0.402, 0.198, 0.307, 0.649, 0.410, 0.310, 0.274, 0.392, 0.670, 0.415],
    &[0.606, 0.681, 0.584, 0.424, 0.598, 0.372, 0.471, 0.654, 0.494, 0.569, 0.469, 0.548, 0.613, 0.593, 0.539],
    &[0.584, 0.646, 0.552, 0.461, 0.587, 0.397, 0.434, 0.562, 0.442, 0.514, 0.437, 0.444, 0.548, 0.457, 0.409, 0.560],
    &[
        0.659, 0.742, 0.636, 0.595, 0.742, 0.445, 0.522, 0.653, 0.395, 0.513, 0.374, 0.425, 0.640, 0.428, 0.428, 0.595,
        0.540,
    ],
    &[
        0.525, 0.544, 0.535, 0.321, 0.440, 0.241, 0.364, 0.649, 0.452, 0.398, 0.321, 0.426, 0.633, 0.556, 0.631, 0.621,
        0.521, 0.441,
    ],
    &[
        0.479, 0.546, 0.513, 0.354, 0.450, 0.227, 0.361, 0.630, 0.563, 0.455, 0.390, 0.543, 0.623, 0.521, 0.522, 0.595,
        0.555, 0.391, 0.630,
    ],
];

/// Mean and covariance of daily returns behind the synthetic price set. The
/// correlation matrix is repaired to the nearest PSD one with unit diagonal.
pub fn synthetic_moments() -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = SYN_MEAN.len();
    let mut c = DMatrix::<f64>::identity(d, d);
    for (i, row) in SYN_CORR.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            c[(i + 1, j)] = v;
            c[(j, i + 1)] = v;
        }
    }
    let eig = SymmetricEigen::new(c);
    let vals = eig.eigenvalues.map(|v| v.max(1e-6));
    let mut c = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let diag: Vec<f64> = (0..d).map(|i| c[(i, i)].sqrt()).collect();
    for i in 0..d {
        for j in 0..d {
            c[(i, j)] /= diag[i] * diag[j];
        }
    }
    let sd: Vec<f64> = SYN_VAR.iter().map(|v| (v * 1e-4).sqrt()).collect();
    let cov = (0..d).map(|i| (0..d).map(|j| c[(i, j)] * sd[i] * sd[j]).collect()).collect();
    (SYN_MEAN.iter().map(|m| m * 1e-3).collect(), cov)
}

/// Seeded price paths whose daily returns are multivariate t with `nu`
/// degrees of freedom and the moments of [`synthetic_moments`]. Dates run
/// over weekdays from 2019-01-02.
pub fn synthetic_prices(rows: usize, nu: f64, seed: u64) -> Result<PriceTable> {
    if rows < 2 || !(nu > 2.0) {
        return Err(domain("synthetic prices need at least two rows and nu > 2"));
    }
    let (mu, cov) = synthetic_moments();
    let root = crate::robustopt::psd_root(&cov)?;
    let d = mu.len();
    let chi = ChiSquared::new(nu).map_err(|e| domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = ((nu - 2.0) / nu).sqrt();
    let mut prices = vec![vec![100.0; d]];
    for _ in 1..rows {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let g = (chi.sample(&mut rng) / nu).sqrt();
        let last = prices.last().expect("nonempty");
        let next: Vec<f64> = (0..d)
            .map(|i| {
                let r = mu[i] + scale * (0..d).map(|k| root[i][k] * z[k]).sum::<f64>() / g;
                last[i] * (1.0 + r)
            })
            .collect();
        if next.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Numeric("synthetic path hit a non-positive price".into()));
        }
        prices.push(next);
    }
    let mut dates = Vec::with_capacity(rows);
    let mut day = NaiveDate::from_ymd_opt(2019, 1, 2).expect("valid date");
    while dates.len() < rows {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day += Duration::days(1);
    }
    Ok(PriceTable { dates, tickers: SYNTHETIC_TICKERS.iter().map(|s| s.to_string()).collect(), prices, dropped_rows: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn losses_are_negative_returns() {
        let t = PriceTable::from_reader("date,A\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n".as_bytes()).unwrap();
        let l = t.asset_losses("A").unwrap();
        assert!((l[0] + 0.1).abs() < 1e-15 && (l[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn vendored_set_regenerates() {
        let t = synthetic_prices(VENDORED_ROWS, VENDORED_NU, VENDORED_SEED).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap() == VENDORED_PRICES_CSV);
    }

    #[test]
    fn gaps_and_duplicates() {
        let t = PriceTable::from_reader("date,A,B\n2020-01-01,1,2\n2020-01-02,,2\n2020-01-03,1,3\n".as_bytes()).unwrap();
        assert_eq!((t.len(), t.dropped_rows), (2, 1));
        assert!(PriceTable::from_reader("date,A\n2020-01-01,1\n2020-01-01,2\n".as_bytes()).is_err());
        assert!(PriceTable::from_reader("date,A\n2020-01-01,1\n2020-01-02,0\n".as_bytes()).is_err());
    }
}
