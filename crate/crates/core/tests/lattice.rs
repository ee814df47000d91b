mod common;

use common::{atoms_strategy, close, lattice_set, simplex_weights};
use domagg::lattice::{convex_mixture, dominates, sup_fsd, sup_ssd, supremum, GridConfig, Order};
use domagg::risk::RiskMeasure;
use domagg::Distribution;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn atoms(p: Vec<(f64, f64)>) -> Distribution {
    Distribution::atoms(p).unwrap()
}

fn example1(eps: f64) -> Vec<Distribution> {
    vec![
        atoms(vec![(0.0, 1.0)]),
        atoms(vec![(-(2.0 - eps) / (1.0 - eps), 1.0 - eps), (1.0 / eps, eps)]),
    ]
}

#[test]
fn example1_neither_dominates() {
    let cfg = GridConfig::default();
    let s = example1(0.25);
    assert!(!dominates(Order::Ssd, &s[0], &s[1], &cfg).unwrap());
    assert!(!dominates(Order::Ssd, &s[1], &s[0], &cfg).unwrap());
}

#[test]
fn example1_ssd_sup() {
    for eps in [0.1, 0.25, 0.4] {
        let r = sup_ssd(&example1(eps), &GridConfig::default()).unwrap();
        assert!(r.exact);
        let a = r.sup.as_atoms().unwrap();
        assert_eq!(a.len(), 2);
        assert!(close(a.locations()[0], -1.0 / (1.0 - eps), 1e-12));
        assert!(close(a.locations()[1], 1.0 / eps, 1e-12));
        assert!(close(a.probabilities()[1], eps, 1e-12));
    }
}

fn example2(n_max: usize) -> Vec<Distribution> {
    (1..=n_max)
        .map(|n| {
            let n = n as f64;
            if n == 1.0 {
                atoms(vec![(-1.0, 1.0)])
            } else {
                atoms(vec![(-n, 1.0 / n), (0.0, 1.0 - 1.0 / n)])
            }
        })
        .collect()
}

#[test]
fn example2_truncations() {
    // a finite truncation is bounded by its last member; the envelope
    // approaches (-x)₊, the π of δ₀, as the family grows
    for n_max in [2, 5, 10, 40, 200] {
        let set = example2(n_max);
        let r = sup_ssd(&set, &GridConfig::default()).unwrap();
        let a = r.sup.as_atoms().unwrap();
        let n = n_max as f64;
        assert_eq!(a.locations(), &[-n, 0.0], "N = {n_max}");
        assert!(close(a.probabilities()[1], 1.0 - 1.0 / n, 1e-12));
        for x in [-3.0, -1.0, -0.5] {
            let gap = r.sup.pi(x).unwrap() - (-x);
            assert!(gap.abs() <= -x / n + 1e-12, "N = {n_max}, x = {x}");
        }
    }
}

#[test]
fn fsd_sup_examples() {
    let r = sup_fsd(&[atoms(vec![(0.0, 0.6), (2.0, 0.4)]), atoms(vec![(1.0, 1.0)])]).unwrap();
    let a = r.sup.as_atoms().unwrap();
    assert_eq!(a.locations(), &[1.0, 2.0]);
    assert!(close(a.probabilities()[0], 0.6, 1e-15));
    let f = atoms(vec![(0.5, 0.3), (2.0, 0.7)]);
    assert_eq!(sup_fsd(std::slice::from_ref(&f)).unwrap().sup, f);
    let s = sup_ssd(std::slice::from_ref(&f), &GridConfig::default()).unwrap().sup;
    assert!(s.as_atoms().unwrap().approx_eq(f.as_atoms().unwrap(), 1e-12));
}

#[test]
fn mixture_examples() {
    let f = atoms(vec![(0.0, 0.5), (3.0, 0.5)]);
    let g = atoms(vec![(1.0, 1.0)]);
    assert_eq!(convex_mixture(&[f.clone(), g.clone()], &[1.0, 0.0]).unwrap(), f);
    let m = convex_mixture(&[f.clone(), g.clone()], &[0.25, 0.75]).unwrap();
    assert!(close(m.mean().unwrap(), 0.25 * 1.5 + 0.75, 1e-14));
    assert!(convex_mixture(&[f, g], &[0.5, 0.6]).is_err());
}

#[test]
fn continuous_sup_flags_inexact() {
    let set = vec![Distribution::normal(0.0, 1.0).unwrap(), Distribution::logistic(0.2, 0.5).unwrap()];
    let cfg = GridConfig::default();
    for order in [Order::Fsd, Order::Ssd] {
        let r = supremum(order, &set, &cfg).unwrap();
        for d in &set {
            assert!(dominates(order, d, &r.sup, &GridConfig { tol: 1e-4, ..cfg }).unwrap(), "{order:?}");
        }
    }
    assert!(!sup_ssd(&set, &cfg).unwrap().exact);
}

#[test]
fn fsd_sup_is_exact_min_of_cdfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let set = lattice_set(&mut rng, 2, 5, 6);
        let sup = sup_fsd(&set).unwrap().sup;
        let mut pts: Vec<f64> = set.iter().flat_map(|d| d.as_atoms().unwrap().locations().to_vec()).collect();
        pts.extend(pts.clone().iter().flat_map(|x| [x - 1e-9, x + 1e-9]));
        for x in pts {
            let m = set.iter().map(|d| d.cdf(x)).fold(f64::INFINITY, f64::min);
            assert!(close(sup.cdf(x), m, 1e-12));
        }
    }
}

#[test]
fn mixtures_do_not_move_the_sup() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = GridConfig::default();
    for _ in 0..30 {
        let set = lattice_set(&mut rng, 2, 4, 5);
        let mut ext = set.clone();
        for _ in 0..5 {
            let w = simplex_weights(&mut rng, set.len());
            ext.push(convex_mixture(&set, &w).unwrap());
        }
        for order in [Order::Fsd, Order::Ssd] {
            let a = supremum(order, &set, &cfg).unwrap().sup;
            let b = supremum(order, &ext, &cfg).unwrap().sup;
            assert!(a.as_atoms().unwrap().approx_eq(b.as_atoms().unwrap(), 1e-10), "{order:?}");
        }
    }
}

proptest! {
    #[test]
    fn fsd_implies_ssd(f in atoms_strategy(6), g in atoms_strategy(6)) {
        let cfg = GridConfig::default();
        if dominates(Order::Fsd, &f, &g, &cfg).unwrap() {
            prop_assert!(dominates(Order::Ssd, &f, &g, &cfg).unwrap());
        }
    }

    #[test]
    fn sup_is_an_upper_bound(set in prop::collection::vec(atoms_strategy(6), 1..5)) {
        let cfg = GridConfig { tol: 1e-9, ..GridConfig::default() };
        for order in [Order::Fsd, Order::Ssd] {
            let s = supremum(order, &set, &cfg).unwrap();
            prop_assert!(s.exact);
            for d in &set {
                prop_assert!(dominates(order, d, &s.sup, &cfg).unwrap());
            }
        }
    }

    #[test]
    fn sup_is_least(set in prop::collection::vec(atoms_strategy(6), 1..5), shift in 0.0f64..2.0) {
        // any shifted copy of the sup is still an upper bound that the sup sits below
        let cfg = GridConfig::default();
        let s = sup_ssd(&set, &cfg).unwrap().sup;
        let up = s.affine(shift, 1.0).unwrap();
        prop_assert!(dominates(Order::Ssd, &s, &up, &cfg).unwrap());
        let joined = {
            let mut v = set.clone();
            v.push(up.clone());
            sup_ssd(&v, &cfg).unwrap().sup
        };
        prop_assert!(joined.as_atoms().unwrap().approx_eq(up.as_atoms().unwrap(), 1e-9));
    }

    #[test]
    fn idempotent(set in prop::collection::vec(atoms_strategy(6), 1..5)) {
        let cfg = GridConfig::default();
        for order in [Order::Fsd, Order::Ssd] {
            let s = supremum(order, &set, &cfg).unwrap().sup;
            let mut v = set.clone();
            v.push(s.clone());
            let again = supremum(order, &v, &cfg).unwrap().sup;
            prop_assert!(again.as_atoms().unwrap().approx_eq(s.as_atoms().unwrap(), 1e-9));
        }
    }

    #[test]
    fn ssd_sup_is_no_riskier_than_fsd_sup(set in prop::collection::vec(atoms_strategy(6), 1..5)) {
        let cfg = GridConfig::default();
        let s2 = sup_ssd(&set, &cfg).unwrap().sup;
        let s1 = sup_fsd(&set).unwrap().sup;
        for rho in [RiskMeasure::es(0.8).unwrap(), RiskMeasure::pd(3.0).unwrap(), RiskMeasure::expectile(0.7).unwrap()] {
            prop_assert!(rho.evaluate(&s2).unwrap() <= rho.evaluate(&s1).unwrap() + 1e-9);
        }
    }
}
