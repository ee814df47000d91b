//! Quadrature and one-dimensional search helpers.
//!
//! Integrands over probability levels are typically singular at 0 or 1
//! (quantiles of unbounded laws). The tanh-sinh rule below hands the
//! integrand the exact distance of each node to both endpoints, so callers
//! can evaluate `F^{-1}(1 - t)` for tiny `t` without cancellation.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

const MAX_LEVEL: usize = 9;
const T_MAX: f64 = 6.5;

struct Node {
    /// distance of the node to the nearer endpoint on [-1, 1]
    dist: f64,
    weight: f64,
}

struct Level {
    // nodes at t = k h for odd k (level > 0) or all k >= 1 (level 0)
    nodes: Vec<Node>,
}

fn levels() -> &'static Vec<Level> {
    static TABLE: OnceLock<Vec<Level>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(MAX_LEVEL + 1);
        for level in 0..=MAX_LEVEL {
            let h = 0.5f64.powi(level as i32);
            let mut nodes = Vec::new();
            let mut k = 1usize;
            loop {
                if level > 0 && k % 2 == 0 {
                    k += 1;
                    continue;
                }
                let t = k as f64 * h;
                if t > T_MAX {
                    break;
                }
                let u = FRAC_PI_2 * t.sinh();
                let dist = 2.0 / (1.0 + (2.0 * u).exp());
                let cu = u.cosh();
                let weight = FRAC_PI_2 * t.cosh() / (cu * cu);
                if dist <= 0.0 || weight == 0.0 {
                    break;
                }
                nodes.push(Node { dist, weight });
                k += 1;
            }
            out.push(Level { nodes });
        }
        out
    })
}

/// Integrates `f` over `[a, b]` with the tanh-sinh rule.
///
/// The integrand is called as `f(x, x - a, b - x)`; the two distances are
/// computed directly rather than by subtraction. Endpoint singularities of
/// integrable power type are handled. Iteration stops once two successive
/// levels agree to `max(abs_tol, rel_tol * |I|)`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(b > a) {
        return 0.0;
    }
    let hw = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let table = levels();

    let mut sum = hw * FRAC_PI_2 * f(mid, hw, hw);
    let add_level = |level: &Level| {
        let mut s = 0.0;
        for node in &level.nodes {
            let d = hw * node.dist;
            if d <= 0.0 {
                break;
            }
            let w = hw * node.weight;
            // right node: distance d from b
            let fr = f(b - d, 2.0 * hw - d, d);
            // left node: distance d from a
            let fl = f(a + d, d, 2.0 * hw - d);
            let term = w * (fl + fr);
            if term.is_finite() {
                s += term;
            }
        }
        s
    };
    sum += add_level(&table[0]);
    let mut estimate = sum;
    for (level_idx, level) in table.iter().enumerate().skip(1) {
        sum += add_level(level);
        let h = 0.5f64.powi(level_idx as i32);
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if level_idx >= 3 && diff <= abs_tol.max(rel_tol * next.abs()) {
            break;
        }
    }
    estimate
}

/// Integrates over `[a, b]` split at the given interior points.
pub fn tanh_sinh_split<F>(f: F, a: f64, b: f64, cuts: &[f64], abs_tol: f64, rel_tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > a && *c < b).collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for &c in pts.iter().chain(std::iter::once(&b)) {
        total += tanh_sinh(&f, lo, c, abs_tol, rel_tol);
        lo = c;
    }
    total
}

/// Bisection for the root of a nondecreasing function on `[lo, hi]`.
///
/// Returns the point where the bracket collapses; the function value there
/// is at most `ftol` in magnitude unless the bracket was exhausted first.
pub fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64, ftol: f64, max_iter: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v.abs() <= ftol {
            return mid;
        }
        if v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mid
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
pub fn golden_min<F>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Chebyshev-spaced points in `(lo, hi)`, clustered toward both ends.
pub fn chebyshev_levels(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let theta = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            lo + (hi - lo) * 0.5 * (1.0 - theta.cos())
        })
        .collect()
}
