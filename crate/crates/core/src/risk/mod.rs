//! Risk measure catalogue and robust evaluation (worst case and model
//! aggregation).

mod robust;

pub use robust::{cema_check, es_minimax, ma_value, wr_value, CemaReport};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, LevelWeight};
use crate::error::{domain, Error, Result};
use crate::numeric::bisect_increasing;

/// Kusuoka levels are capped here so values stay finite on laws with a
/// finite mean.
pub const KUSUOKA_LEVEL_CAP: f64 = 1.0 - 1e-9;

/// Agreement required between the primal and dual ES on atoms.
const ES_CROSS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KusuokaScenario {
    pub weights: Vec<f64>,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMeasure {
    Var { alpha: f64 },
    Es { alpha: f64 },
    Rvar { alpha: f64, beta: f64 },
    /// `∫ k s^{k-1} VaR_s ds`
    Pd { k: f64 },
    Expectile { alpha: f64 },
    /// `max_w Σ_j p_j^w ES_{α_j^w}`
    Kusuoka { scenarios: Vec<KusuokaScenario> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyTag {
    pub fsd_consistent: bool,
    pub ssd_consistent: bool,
}

impl RiskMeasure {
    pub fn var(alpha: f64) -> Result<Self> {
        let r = RiskMeasure::Var { alpha };
        r.validate()?;
        Ok(r)
    }

    pub fn es(alpha: f64) -> Result<Self> {
        let r = RiskMeasure::Es { alpha };
        r.validate()?;
        Ok(r)
    }

    pub fn rvar(alpha: f64, beta: f64) -> Result<Self> {
        let r = RiskMeasure::Rvar { alpha, beta };
        r.validate()?;
        Ok(r)
    }

    pub fn pd(k: f64) -> Result<Self> {
        let r = RiskMeasure::Pd { k };
        r.validate()?;
        Ok(r)
    }

    pub fn expectile(alpha: f64) -> Result<Self> {
        let r = RiskMeasure::Expectile { alpha };
        r.validate()?;
        Ok(r)
    }

    pub fn kusuoka(scenarios: Vec<KusuokaScenario>) -> Result<Self> {
        let r = RiskMeasure::Kusuoka { scenarios };
        r.validate()?;
        Ok(r)
    }

    pub fn mean() -> Self {
        RiskMeasure::Es { alpha: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(domain(m));
        match *self {
            RiskMeasure::Var { alpha } if !(alpha > 0.0 && alpha < 1.0) => bad(format!("VaR level {alpha} outside (0, 1)")),
            RiskMeasure::Es { alpha } if !(0.0..1.0).contains(&alpha) => bad(format!("ES level {alpha} outside [0, 1)")),
            RiskMeasure::Rvar { alpha, beta } if !((0.0..1.0).contains(&alpha) && beta > alpha && beta <= 1.0) => {
                bad(format!("RVaR levels ({alpha}, {beta}) need 0 <= alpha < beta <= 1"))
            }
            RiskMeasure::Pd { k } if !(k >= 1.0 && k.is_finite()) => bad(format!("PD exponent {k} must be >= 1")),
            RiskMeasure::Expectile { alpha } if !(0.5..1.0).contains(&alpha) => {
                bad(format!("expectile level {alpha} outside [1/2, 1)"))
            }
            RiskMeasure::Kusuoka { ref scenarios } => {
                if scenarios.is_empty() {
                    return bad("Kusuoka measure needs at least one scenario".into());
                }
                for s in scenarios {
                    if s.weights.is_empty() || s.weights.len() != s.levels.len() {
                        return bad("Kusuoka scenario needs matching, nonempty weights and levels".into());
                    }
                    let total: f64 = s.weights.iter().sum();
                    if (total - 1.0).abs() > 1e-12 || s.weights.iter().any(|w| !(*w >= 0.0)) {
                        return bad(format!("Kusuoka weights must lie in the simplex (sum {total})"));
                    }
                    if s.levels.iter().any(|a| !(0.0..1.0).contains(a)) {
                        return bad("Kusuoka levels must lie in [0, 1)".into());
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn consistency(&self) -> ConsistencyTag {
        let (fsd, ssd) = match *self {
            RiskMeasure::Var { .. } => (true, false),
            RiskMeasure::Rvar { beta, .. } => (true, beta >= 1.0),
            _ => (true, true),
        };
        ConsistencyTag { fsd_consistent: fsd, ssd_consistent: ssd }
    }

    /// Parses `var:a`, `es:a`, `rvar:a:b`, `pd:k`, `expectile:a`, `mean` or
    /// `kusuoka:@file.json`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("measure '{spec}' is missing a parameter")))?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("measure '{spec}': bad number")))
        };
        let arity = |n: usize| -> Result<()> {
            if parts.len() == n + 1 {
                Ok(())
            } else {
                Err(Error::Parse(format!("measure '{spec}' expects {n} parameter(s)")))
            }
        };
        let r = match parts[0].to_ascii_lowercase().as_str() {
            "var" => {
                arity(1)?;
                RiskMeasure::Var { alpha: num(1)? }
            }
            "es" | "cvar" => {
                arity(1)?;
                RiskMeasure::Es { alpha: num(1)? }
            }
            "rvar" => {
                arity(2)?;
                RiskMeasure::Rvar { alpha: num(1)?, beta: num(2)? }
            }
            "pd" => {
                arity(1)?;
                RiskMeasure::Pd { k: num(1)? }
            }
            "expectile" => {
                arity(1)?;
                RiskMeasure::Expectile { alpha: num(1)? }
            }
            "mean" => {
                arity(0)?;
                RiskMeasure::mean()
            }
            "kusuoka" => {
                let rest = spec.trim().splitn(2, ':').nth(1).unwrap_or("");
                let path = rest
                    .strip_prefix('@')
                    .ok_or_else(|| Error::Parse("kusuoka measure expects kusuoka:@file.json".into()))?;
                return Self::kusuoka_from_file(Path::new(path));
            }
            other => return Err(Error::Parse(format!("unknown risk measure '{other}'"))),
        };
        r.validate()?;
        Ok(r)
    }

    /// Reads `{"scenarios": [{"weights": [...], "levels": [...]}, ...]}` or a
    /// bare list of scenarios.
    pub fn kusuoka_from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Doc {
            Wrapped { scenarios: Vec<KusuokaScenario> },
            Bare(Vec<KusuokaScenario>),
        }
        let scenarios = match serde_json::from_str::<Doc>(&text)? {
            Doc::Wrapped { scenarios } | Doc::Bare(scenarios) => scenarios,
        };
        Self::kusuoka(scenarios)
    }

    pub fn label(&self) -> String {
        match self {
            RiskMeasure::Var { alpha } => format!("var:{alpha}"),
            RiskMeasure::Es { alpha } => format!("es:{alpha}"),
            RiskMeasure::Rvar { alpha, beta } => format!("rvar:{alpha}:{beta}"),
            RiskMeasure::Pd { k } => format!("pd:{k}"),
            RiskMeasure::Expectile { alpha } => format!("expectile:{alpha}"),
            RiskMeasure::Kusuoka { scenarios } => format!("kusuoka[{}]", scenarios.len()),
        }
    }

    /// `ρ(F)`.
    pub fn evaluate(&self, d: &Distribution) -> Result<f64> {
        self.validate()?;
        match *self {
            RiskMeasure::Var { alpha } => d.quantile(alpha),
            RiskMeasure::Es { alpha } => es(d, alpha),
            RiskMeasure::Rvar { alpha, beta } => {
                if beta >= 1.0 {
                    es(d, alpha)
                } else {
                    Ok(d.integrate_quantile(alpha, beta)? / (beta - alpha))
                }
            }
            RiskMeasure::Pd { k } => {
                if k == 1.0 {
                    d.mean()
                } else {
                    d.weighted_quantile_integral(0.0, 1.0, LevelWeight::Power(k))
                }
            }
            RiskMeasure::Expectile { alpha } => expectile(d, alpha),
            RiskMeasure::Kusuoka { ref scenarios } => {
                let mut best = f64::NEG_INFINITY;
                for s in scenarios {
                    let mut v = 0.0;
                    for (&p, &a) in s.weights.iter().zip(&s.levels) {
                        if p > 0.0 {
                            v += p * es(d, a.min(KUSUOKA_LEVEL_CAP))?;
                        }
                    }
                    best = best.max(v);
                }
                Ok(best)
            }
        }
    }
}

impl std::str::FromStr for RiskMeasure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RiskMeasure::parse(s)
    }
}

/// `ES_α` as the upper-tail quantile average. On atoms the dual form
/// `min_x {x + π(x)/(1-α)}` is computed as well and the two must agree.
pub fn es(d: &Distribution, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(domain(format!("ES level {alpha} outside [0, 1)")));
    }
    if alpha == 0.0 {
        return d.mean();
    }
    let primal = d.integrate_quantile(alpha, 1.0)? / (1.0 - alpha);
    if d.is_atoms() {
        let dual = es_dual(d, alpha)?;
        if (primal - dual).abs() > ES_CROSS_TOL * (1.0 + primal.abs()) {
            return Err(Error::Numeric(format!("ES primal {primal} and dual {dual} disagree")));
        }
    }
    Ok(primal)
}

/// `min_x {x + π(x)/(1-α)}`. Exact over atoms; at `x = VaR_α` otherwise.
pub fn es_dual(d: &Distribution, alpha: f64) -> Result<f64> {
    let obj = |x: f64| -> Result<f64> { Ok(x + d.pi(x)? / (1.0 - alpha)) };
    match d.as_atoms() {
        Some(a) => {
            let mut best = f64::INFINITY;
            for &x in a.locations() {
                best = best.min(obj(x)?);
            }
            Ok(best)
        }
        None => obj(d.quantile(alpha.max(f64::MIN_POSITIVE))?),
    }
}

/// Root of `α E[(X-t)_+] = (1-α) E[(t-X)_+]`.
pub fn expectile(d: &Distribution, alpha: f64) -> Result<f64> {
    let m = d.mean()?;
    if alpha == 0.5 {
        return Ok(m);
    }
    let g = |t: f64| -> Result<f64> {
        let p = d.pi(t)?;
        Ok(alpha * p - (1.0 - alpha) * (p + t - m))
    };
    if let Some(a) = d.as_atoms() {
        // g is linear between atoms, nonincreasing, g(min) >= 0 >= g(max)
        let xs = a.locations();
        let mut prev = (xs[0], g(xs[0])?);
        if prev.1 <= 0.0 {
            return Ok(xs[0]);
        }
        for &x in &xs[1..] {
            let cur = (x, g(x)?);
            if cur.1 <= 0.0 {
                let t = prev.0 + prev.1 * (cur.0 - prev.0) / (prev.1 - cur.1);
                return Ok(t);
            }
            prev = cur;
        }
        return Ok(*xs.last().unwrap());
    }
    let (mut lo, mut hi) = d.span(1e-6);
    let width = (hi - lo).max(1.0);
    let mut guard = 0;
    while g(lo)? < 0.0 && guard < 60 {
        lo -= width * 2f64.powi(guard);
        guard += 1;
    }
    guard = 0;
    while g(hi)? > 0.0 && guard < 60 {
        hi += width * 2f64.powi(guard);
        guard += 1;
    }
    // -g is nondecreasing in t
    let root = bisect_increasing(|t| -g(t).unwrap_or(f64::NAN), lo, hi, 1e-14, 300);
    let res = g(root)?;
    if !(res.abs() <= 1e-10 * (1.0 + m.abs())) {
        return Err(Error::Numeric(format!("expectile residual {res:e} at {root}")));
    }
    Ok(root)
}
