//! Bound values checked against routes that do not share code with the
//! library: plain bisection, alternative algebraic forms, and reference
//! values computed offline with an independent root finder.

use medianlab::bounds::*;
use medianlab::NormOrder;

fn q(v: f64) -> NormOrder {
    NormOrder::new(v).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// a* from the tangency system by bisection, then UB through the
// alternative form δ(λ) = (1 - λ^{q/(q-1)})^{(q-1)/q} / λ solved for λ.
fn ub_by_bisection(qv: f64) -> (f64, f64) {
    let f = |a: f64| 2.0 * (1.0 - 1.0 / qv) * a + a.powf((1.0 - qv) / qv) / qv - 2.0 + 1.0 / qv;
    let a = bisect(f, 1e-14, 0.5);
    let delta = (a.powf(1.0 / qv) + 1.0 - 2.0 * a) / (1.0 - a).powf(1.0 / qv);
    let g = |lam: f64| (1.0 - lam.powf(qv / (qv - 1.0))).powf((qv - 1.0) / qv) / lam - delta;
    let lam = bisect(g, 1e-9, 1.0 - 1e-15);
    (a, 1.0 / lam)
}

#[test]
fn ub_matches_bisection_route() {
    for &qv in &[1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0, 200.0] {
        let sol = ub(q(qv)).unwrap();
        let (a, u) = ub_by_bisection(qv);
        assert!((sol.a_star.unwrap() - a).abs() < 1e-10, "q={qv}");
        assert!((sol.ub - u).abs() < 1e-9, "q={qv}: {} vs {u}", sol.ub);
    }
}

#[test]
fn ub_reference_values() {
    // five decimals, computed offline with a separate Brent solver
    let table = [
        (1.1, 1.07536),
        (1.5, 1.32238),
        (3.0, 1.84116),
        (5.0, 2.15883),
        (10.0, 2.48232),
        (50.0, 2.85544),
        (1000.0, 2.98952),
    ];
    for (qv, expected) in table {
        let u = ub(q(qv)).unwrap().ub;
        assert!((u - expected).abs() < 6e-6, "q={qv}: {u}");
    }
}

#[test]
fn q2_closed_forms() {
    let sol = ub(NormOrder::TWO).unwrap();
    assert!((sol.delta_star.unwrap() - 1.17995968).abs() < 1e-8);
    assert!((sol.lambda_star - 0.64653455).abs() < 1e-8);
    assert!((c_star(NormOrder::TWO).unwrap() - 0.6830127).abs() < 1e-7);
}

#[test]
fn ub_approaches_three() {
    let mut prev = 0.0;
    for &qv in &[10.0, 100.0, 1e3, 1e4, 1e5] {
        let u = ub(q(qv)).unwrap().ub;
        assert!(u > prev && u < 3.0);
        prev = u;
    }
    assert!(3.0 - prev < 1e-3);
}

// Prediction bounds from the per-point program directly: solve the scalar
// tangency equation numerically, fix δ from u(a) = 0, invert for λ.
fn consistency_by_bisection(c: f64) -> f64 {
    let f = |a: f64| 2.0 * a + (1.0 + c) / a.sqrt() - 3.0 - c;
    let interior = bisect(f, 1e-12, 0.5);
    let a = interior.min((1.0 - c) / 2.0);
    let delta = ((1.0 - 2.0 * a - c) / (1.0 + c) + a.sqrt()) / (1.0 - a).sqrt();
    (1.0 + delta * delta).sqrt()
}

fn robustness_by_bisection(c: f64) -> f64 {
    let f = |a: f64| 2.0 * a + (1.0 - c) / a.sqrt() - 3.0 + c;
    let a = bisect(f, 1e-12, 0.5);
    let delta = ((1.0 - 2.0 * a + c) / (1.0 - c) + a.sqrt()) / (1.0 - a).sqrt();
    (1.0 + delta * delta).sqrt()
}

#[test]
fn prediction_bounds_match_direct_solution() {
    for i in 0..100 {
        let c = i as f64 / 100.0;
        let cons = consistency_bound(c).unwrap();
        let rob = robustness_bound(c).unwrap();
        assert!((cons - consistency_by_bisection(c)).abs() < 1e-9, "c={c}");
        assert!((rob - robustness_by_bisection(c)).abs() < 1e-9, "c={c}");
        assert!(cons >= 1.0 && rob >= cons);
    }
}

#[test]
fn prediction_certificates_hold_at_the_bound() {
    // min over a of (1±c)(δ√(1-a) - √a) - 1 + 2a ± c is zero at the computed λ
    for i in 0..20 {
        let c = i as f64 / 20.0;
        let d1 = {
            let l = 1.0 / consistency_bound(c).unwrap();
            (1.0 / (l * l) - 1.0).sqrt()
        };
        let d2 = {
            let l = 1.0 / robustness_bound(c).unwrap();
            (1.0 / (l * l) - 1.0).sqrt()
        };
        let u1 = |a: f64| (1.0 + c) * (d1 * (1.0 - a).sqrt() - a.sqrt()) - 1.0 + 2.0 * a + c;
        let u2 = |a: f64| (1.0 - c) * (d2 * (1.0 - a).sqrt() - a.sqrt()) - 1.0 + 2.0 * a - c;
        let z1 = d1.powf(-2.0 / 3.0) / (d1.powf(-2.0 / 3.0) + 1.0);
        let z2 = d2.powf(-2.0 / 3.0) / (d2.powf(-2.0 / 3.0) + 1.0);
        let hi1 = z1.min((1.0 - c) / 2.0);
        let hi2 = z2.min((1.0 + c) / 2.0);
        let m1 = (0..=20_000)
            .map(|k| u1(hi1 * k as f64 / 20_000.0))
            .fold(f64::INFINITY, f64::min);
        let m2 = (0..=20_000)
            .map(|k| u2(hi2 * k as f64 / 20_000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(m1 > -1e-9 && m1 < 1e-6, "c={c}: {m1}");
        assert!(m2 > -1e-9 && m2 < 1e-6, "c={c}: {m2}");
    }
}

#[test]
fn r_curve_shape() {
    assert!((r_b(0.0).unwrap() - 1.0936875).abs() < 1e-7);
    let grid = c_grid(1000);
    let (arg, max) = grid
        .iter()
        .map(|&c| (c, r_a(c).unwrap()))
        .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    assert!((max - 1.10524).abs() < 1e-5);
    assert!((arg - 0.252).abs() < 2e-3);
    assert!(r_b(0.999).unwrap() < 1.001);
}

#[test]
fn lb_gap_shrinks_like_one_over_d() {
    let u2 = ub(NormOrder::TWO).unwrap().ub;
    let dims = [8usize, 16, 64, 256, 1024];
    let gaps: Vec<(usize, f64)> = dims
        .iter()
        .map(|&d| (d, u2 - lb_ratio(NormOrder::TWO, d).unwrap()))
        .collect();
    // d = 8 and d = 16 share k/d = 1/8, so their gaps coincide
    assert!((gaps[0].1 - gaps[1].1).abs() < 1e-12);
    assert!(gaps.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    assert!(gaps[4].1 < gaps[0].1 / 10.0);
    let c = fit_gap_constant(&gaps).unwrap();
    assert!(c > 0.0);
    assert!(u2 - lb_ratio(NormOrder::TWO, 1_000_000).unwrap() <= 1e-3);
}

#[test]
fn lb_gap_infinity_formula() {
    for (d, gap) in [(2usize, 0.5), (10, 0.1), (100, 0.01)] {
        let g = 3.0 - lb_ratio(NormOrder::INFINITY, d).unwrap();
        assert!((g - gap).abs() < 1e-12);
    }
}
