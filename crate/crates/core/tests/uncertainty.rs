mod common;

use common::close;
use domagg::lattice::{dominates, GridConfig, Order};
use domagg::risk::RiskMeasure;
use domagg::uncertainty::{
    conjugate_exponent, mv_table, norm, Distortion, MeanVarianceClass, MultiBenchmark, MultiWassersteinBall,
    WassersteinBall,
};
use domagg::{Distribution, Error};
use proptest::prelude::*;

fn delta0() -> Distribution {
    Distribution::atoms(vec![(0.0, 1.0)]).unwrap()
}

fn five_atoms() -> Distribution {
    Distribution::atoms(vec![(-2.0, 0.1), (-0.5, 0.2), (0.0, 0.3), (1.0, 0.25), (3.0, 0.15)]).unwrap()
}

/// Composite Simpson rule on `[0, 1]`.
fn simpson<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn fsd_sup_of_point_mass_ball() {
    for p in [1.0, 1.5, 2.0, 4.0] {
        let ball = WassersteinBall::new(p, 0.1, delta0()).unwrap();
        for alpha in [0.01, 0.3, 0.5, 0.9, 0.999] {
            let q = ball.fsd_quantile(alpha).unwrap();
            assert!(close(q, 0.1 * (1.0f64 - alpha).powf(-1.0 / p), 1e-10), "p {p} α {alpha}: {q}");
        }
    }
}

#[test]
fn fsd_sup_high_order_tends_to_shift() {
    // near the root q^{p+1} φ(0)/(p+1) ≈ ε^p, so the excess over F₀⁻¹ + ε
    // decays like ε ln(p/ε)/p
    let n = Distribution::normal(0.0, 1.0).unwrap();
    let mut last = f64::INFINITY;
    for p in [8.0, 16.0, 32.0, 64.0] {
        let q = WassersteinBall::new(p, 0.1, n.clone()).unwrap().fsd_quantile(0.5).unwrap();
        let excess = q - 0.1;
        let approx = 0.1 * (((p + 1.0) / (0.1 * (2.0 * std::f64::consts::PI).powf(-0.5))).ln() / (p + 1.0)).exp() - 0.1;
        assert!(excess > 0.0 && excess < last, "p {p}: {q}");
        assert!((excess - approx).abs() <= 0.2 * approx, "p {p}: {excess} vs {approx}");
        last = excess;
    }
    assert!(last <= 0.15 * 0.1);
}

#[test]
fn fsd_sup_grows_with_radius() {
    let n = Distribution::normal(0.0, 1.0).unwrap();
    let small = WassersteinBall::new(2.0, 0.1, n.clone()).unwrap();
    let large = WassersteinBall::new(2.0, 0.2, n).unwrap();
    for j in 1..50 {
        let a = j as f64 / 50.0;
        assert!(large.fsd_quantile(a).unwrap() >= small.fsd_quantile(a).unwrap());
    }
}

#[test]
fn ssd_sup_examples() {
    let ball = WassersteinBall::new(2.0, 0.1, delta0()).unwrap();
    let s = ball.sup_ssd().unwrap();
    assert!(close(s.quantile(0.75).unwrap(), 0.1, 1e-14));
    let one = WassersteinBall::new(1.0, 0.1, delta0()).unwrap();
    assert!(matches!(one.sup_ssd(), Err(Error::Unbounded(_))));
}

#[test]
fn ssd_sup_sits_below_fsd_sup() {
    for f0 in [Distribution::normal(0.0, 1.0).unwrap(), five_atoms()] {
        for p in [1.5, 2.0, 4.0] {
            let ball = WassersteinBall::new(p, 0.1, f0.clone()).unwrap();
            let s2 = ball.sup_ssd().unwrap();
            for j in 1..100 {
                let a = j as f64 / 100.0;
                assert!(s2.quantile(a).unwrap() <= ball.fsd_quantile(a).unwrap() + 1e-12);
            }
        }
    }
}

#[test]
fn ssd_sup_is_benchmark_plus_pareto() {
    let f0 = Distribution::normal(0.3, 2.0).unwrap();
    let (p, eps) = (3.0, 0.05);
    let s2 = WassersteinBall::new(p, eps, f0.clone()).unwrap().sup_ssd().unwrap();
    let g = Distribution::pareto_tail(p).unwrap();
    for j in 1..100 {
        let a = j as f64 / 100.0;
        let diff = s2.quantile(a).unwrap() - f0.quantile(a).unwrap();
        assert!(close(diff, (1.0 - 1.0 / p) * eps * g.quantile(a).unwrap(), 1e-12));
    }
}

#[test]
fn es_shift_identity() {
    for f0 in [Distribution::normal(0.0, 1.0).unwrap(), five_atoms()] {
        for p in [1.5, 2.0, 4.0] {
            for alpha in [0.5, 0.9, 0.99] {
                let ball = WassersteinBall::new(p, 0.1, f0.clone()).unwrap();
                let es = RiskMeasure::es(alpha).unwrap();
                let shift = es.evaluate(&ball.sup_ssd().unwrap()).unwrap() - es.evaluate(&f0).unwrap();
                assert!(close(shift, (1.0f64 - alpha).powf(-1.0 / p) * 0.1, 1e-8), "p {p} α {alpha}: {shift}");
            }
        }
    }
}

#[test]
fn projection_examples() {
    let mu = vec![0.0, 0.0, 0.0];
    let sigma = vec![vec![1.0, 0.2, 0.0], vec![0.2, 2.0, 0.0], vec![0.0, 0.0, 0.5]];
    let ball = MultiWassersteinBall { a: 2.0, p: 2.0, eps: 0.1, benchmark: MultiBenchmark::Normal { mu, sigma } };
    let b = ball.project(&[1.0, 0.0, 0.0]).unwrap();
    assert!(close(b.eps, 0.1, 1e-15));
    assert_eq!(b.benchmark, Distribution::normal(0.0, 1.0).unwrap());
    let l1 = MultiWassersteinBall { a: 1.0, ..ball.clone() };
    assert!(close(l1.project(&[0.2, -0.7, 0.1]).unwrap().eps, 0.1 * 0.7, 1e-15));
    assert_eq!(conjugate_exponent(1.0).unwrap(), f64::INFINITY);
    let iso = MultiWassersteinBall {
        a: 2.0,
        p: 2.0,
        eps: 0.1,
        benchmark: MultiBenchmark::Normal { mu: vec![0.0, 0.0], sigma: vec![vec![1.0, 0.0], vec![0.0, 1.0]] },
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match iso.project(&[s, s]).unwrap().benchmark {
        Distribution::Normal { mu, sigma } => assert!(close(mu, 0.0, 1e-15) && close(sigma, 1.0, 1e-15)),
        other => panic!("{other:?}"),
    }
    assert!(MultiWassersteinBall { a: 0.5, ..iso.clone() }.project(&[1.0, 0.0]).is_err());
    assert!(iso.project(&[0.0, 0.0]).is_err());
    let cloud = MultiWassersteinBall {
        a: 2.0,
        p: 2.0,
        eps: 0.1,
        benchmark: MultiBenchmark::EmpiricalCloud { points: vec![vec![1.0, 0.0], vec![0.0, 2.0]] },
    };
    let pb = cloud.project(&[0.5, 0.5]).unwrap();
    assert_eq!(pb.benchmark.as_atoms().unwrap().locations(), &[0.5, 1.0]);
}

#[test]
fn projected_distortion_formula() {
    let mu = vec![0.01, -0.02, 0.005];
    let sigma = vec![vec![0.04, 0.01, 0.0], vec![0.01, 0.09, 0.02], vec![0.0, 0.02, 0.01]];
    let ws = [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.6, 0.3]];
    for (bench, unit) in [
        (MultiBenchmark::Normal { mu: mu.clone(), sigma: sigma.clone() }, Distribution::normal(0.0, 1.0).unwrap()),
        (
            MultiBenchmark::StudentT { nu: 5.0, mu: mu.clone(), sigma: sigma.clone() },
            Distribution::student_t_unit_variance(5.0, 0.0, 1.0).unwrap(),
        ),
    ] {
        for a in [1.0, 2.0, 3.0] {
            let ball = MultiWassersteinBall { a, p: 2.0, eps: 0.05, benchmark: bench.clone() };
            for w in &ws {
                let proj = ball.project(w).unwrap();
                let s2 = proj.sup_ssd().unwrap();
                let sd: f64 = (0..3).map(|i| (0..3).map(|j| w[i] * sigma[i][j] * w[j]).sum::<f64>()).sum::<f64>().sqrt();
                let m: f64 = w.iter().zip(&mu).map(|(x, y)| x * y).sum();
                for d in [Distortion::Es { alpha: 0.9 }, Distortion::Pd { k: 5.0 }] {
                    let rho = d.measure();
                    let want = m
                        + rho.evaluate(&unit).unwrap() * sd
                        + d.xi(2.0).unwrap() * 0.05 * norm(w, conjugate_exponent(a).unwrap());
                    let got = rho.evaluate(&s2).unwrap();
                    assert!(close(got, want, 1e-6), "{d:?} a {a}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn distortion_coefficients_match_quadrature() {
    for p in [1.5, 2.0, 4.0] {
        let q = p / (p - 1.0);
        for alpha in [0.5, 0.9, 0.99] {
            let d = Distortion::Es { alpha };
            assert!(close(d.zeta(p).unwrap(), (1.0f64 - alpha).powf(-1.0 / p), 1e-12));
        }
        for k in [1.0, 2.0, 5.0, 10.0, 20.0] {
            let d = Distortion::Pd { k };
            let zeta = simpson(|s| (k * s.powf(k - 1.0)).powf(q), 20_000).powf(1.0 / q);
            // ∫ (1-s)^{-1/p} h'(s) ds after s = 1 - v^q
            let xi = simpson(|v| k * (1.0 - v.powf(q)).powf(k - 1.0), 20_000);
            assert!(close(d.zeta(p).unwrap(), zeta, 1e-8 * zeta), "ζ k {k} p {p}");
            assert!(close(d.xi(p).unwrap(), xi, 1e-8 * xi), "ξ k {k} p {p}");
        }
    }
}

#[test]
fn mean_variance_examples() {
    let c = MeanVarianceClass::new(0.0, 1.0).unwrap();
    assert!(close(c.sup_fsd().cdf(1.0), 0.5, 1e-15));
    assert!(close(c.sup_ssd().cdf(0.0), 0.5, 1e-15));
    assert!(close(c.sup_fsd().quantile(0.99).unwrap(), 99f64.sqrt(), 1e-12));
    assert!(MeanVarianceClass::new(0.0, 0.0).is_err());
    let pd5 = mv_table(&RiskMeasure::pd(5.0).unwrap()).unwrap();
    assert!(close(pd5.wr, 4.0 / 3.0, 1e-14));
    let var = mv_table(&RiskMeasure::var(0.5).unwrap()).unwrap();
    assert!(close(var.wr, 1.0, 1e-15) && var.ma2 == 0.0);
    let es = mv_table(&RiskMeasure::es(0.9).unwrap()).unwrap();
    assert!(close(es.wr, 3.0, 1e-14) && close(es.ma2, 3.0, 1e-14));
    assert!(close(RiskMeasure::es(0.9).unwrap().evaluate(&c.sup_ssd()).unwrap(), 3.0, 1e-6));
    let shifted = MeanVarianceClass::new(1.0, 2.0).unwrap().values(&RiskMeasure::es(0.9).unwrap()).unwrap();
    assert!(close(shifted.wr, 7.0, 1e-13));
}

#[test]
fn table_entries_match_direct_evaluation() {
    let c = MeanVarianceClass::new(0.0, 1.0).unwrap();
    let measures = [
        RiskMeasure::es(0.5).unwrap(),
        RiskMeasure::es(0.95).unwrap(),
        RiskMeasure::rvar(0.9, 0.99).unwrap(),
        RiskMeasure::var(0.9).unwrap(),
        RiskMeasure::pd(2.0).unwrap(),
        RiskMeasure::pd(10.0).unwrap(),
        RiskMeasure::expectile(0.9).unwrap(),
    ];
    for rho in measures {
        let row = mv_table(&rho).unwrap();
        let ma1 = rho.evaluate(&c.sup_fsd()).unwrap();
        let ma2 = rho.evaluate(&c.sup_ssd()).unwrap();
        assert!(close(row.ma1, ma1, 1e-6), "{} MA1 {} vs {ma1}", rho.label(), row.ma1);
        assert!(close(row.ma2, ma2, 1e-6), "{} MA2 {} vs {ma2}", rho.label(), row.ma2);
    }
}

#[test]
fn mean_variance_sups_are_ordered() {
    let c = MeanVarianceClass::new(0.0, 1.0).unwrap();
    let cfg = GridConfig { size: 4096, tail_eps: 1e-4, tol: 1e-9 };
    assert!(dominates(Order::Fsd, &c.sup_ssd(), &c.sup_fsd(), &cfg).unwrap());
    let n = Distribution::normal(0.0, 1.0).unwrap();
    assert!(dominates(Order::Ssd, &n, &c.sup_ssd(), &cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fsd_residual_vanishes_on_normal(alpha in 0.01f64..0.99, eps in 0.01f64..0.5, p in 1.0f64..5.0) {
        let ball = WassersteinBall::new(p, eps, Distribution::normal(0.0, 1.0).unwrap()).unwrap();
        let q = ball.fsd_quantile(alpha).unwrap();
        prop_assert!(ball.residual(alpha, q).0.abs() <= 1e-8);
    }

    #[test]
    fn conjugates(a in 1.0f64..10.0) {
        let b = conjugate_exponent(a).unwrap();
        if a > 1.0 {
            prop_assert!(close(1.0 / a + 1.0 / b, 1.0, 1e-12));
        }
    }
}
