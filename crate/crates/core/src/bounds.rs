//! Approximation-ratio bounds for the coordinate-wise median.
//!
//! The upper bound `UB(q) = 1/λ*(q)` comes from a one-parameter relaxation:
//! for a candidate `λ` with `δ(λ) = (λ^{-q/(q-1)} - 1)^{(q-1)/q}`, the ratio
//! `1/λ` is certified whenever
//!
//! ```text
//! u(a) = δ·(1-a)^{1/q} - a^{1/q} - 1 + 2a  >=  0   for all a in [0, z]
//! ```
//!
//! The tight `λ*` makes the minimum of `u` exactly zero, which pins the
//! tangency point `a*` as the root in `(0, 1/2)` of
//! `2(1 - 1/q)·a + (1/q)·a^{(1-q)/q} - 2 + 1/q = 0`. From `a*` we get
//! `δ* = (a*^{1/q} + 1 - 2a*) / (1-a*)^{1/q}` and invert `δ(λ)` for `λ*`.
//!
//! This module also holds the matching lower-bound construction parameters
//! and the closed-form consistency/robustness guarantees of the
//! prediction-augmented median in L_2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::NormOrder;
use crate::roots::newton_bisect;

/// Residual target for the tangency-point equation.
pub const A_STAR_TOL: f64 = 1e-12;

fn interior_q(q: NormOrder) -> Result<f64> {
    q.interior().ok_or_else(|| Error::UnsupportedNormOrder(q.to_string()))
}

/// `δ(λ) = (λ^{-q/(q-1)} - 1)^{(q-1)/q}`, decreasing in λ on (0, 1).
pub fn delta_of_lambda(q: f64, lambda: f64) -> f64 {
    let qq1 = q / (q - 1.0);
    let inner = (-qq1 * lambda.ln()).exp() - 1.0;
    (inner.ln() / qq1).exp()
}

/// Inverse of [`delta_of_lambda`]: `λ = (1 + δ^{q/(q-1)})^{-(q-1)/q}`.
pub fn lambda_of_delta(q: f64, delta: f64) -> f64 {
    let qq1 = q / (q - 1.0);
    let inner = 1.0 + (qq1 * delta.ln()).exp();
    (-inner.ln() / qq1).exp()
}

/// Split point between the convex and concave parts of `h`.
pub fn inflection_point(q: f64, delta: f64) -> f64 {
    let t = delta.powf(-q / (2.0 * q - 1.0));
    t / (t + 1.0)
}

/// The relaxed program at a fixed `(q, λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelaxedProblem {
    q: f64,
    lambda: f64,
    delta: f64,
    z: f64,
}

impl RelaxedProblem {
    /// Requires `1 < q < ∞` and `λ ∈ (0, 1)`. `δ >= 1` (equivalently `z <= 1/2`)
    /// holds exactly when `λ <= 2^{-(q-1)/q}`; larger `λ` is accepted so that
    /// certificates can report failure there.
    pub fn new(q: NormOrder, lambda: f64) -> Result<Self> {
        let q = interior_q(q)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in (0, 1), got {lambda}"
            )));
        }
        let delta = delta_of_lambda(q, lambda);
        Ok(RelaxedProblem {
            q,
            lambda,
            delta,
            z: inflection_point(q, delta),
        })
    }

    pub fn from_delta(q: NormOrder, delta: f64) -> Result<Self> {
        let qf = interior_q(q)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        Ok(RelaxedProblem {
            q: qf,
            lambda: lambda_of_delta(qf, delta),
            delta,
            z: inflection_point(qf, delta),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn z(&self) -> f64 {
        self.z
    }
}

/// `u(a) = δ(1-a)^{1/q} - a^{1/q} - 1 + 2a`.
pub fn u_func(a: f64, rp: &RelaxedProblem) -> f64 {
    let iq = 1.0 / rp.q;
    rp.delta * (1.0 - a).powf(iq) - a.powf(iq) - 1.0 + 2.0 * a
}

/// `u'(a) = (1/q)(-δ(1-a)^{(1-q)/q} - a^{(1-q)/q}) + 2`.
pub fn u_prime(a: f64, rp: &RelaxedProblem) -> f64 {
    let e = (1.0 - rp.q) / rp.q;
    (-rp.delta * (1.0 - a).powf(e) - a.powf(e)) / rp.q + 2.0
}

/// `u''(a) = ((q-1)/q²)(a^{(1-2q)/q} - δ(1-a)^{(1-2q)/q})`.
pub fn u_second(a: f64, rp: &RelaxedProblem) -> f64 {
    let e = (1.0 - 2.0 * rp.q) / rp.q;
    (rp.q - 1.0) / (rp.q * rp.q) * (a.powf(e) - rp.delta * (1.0 - a).powf(e))
}

/// Per-point objective of the relaxed program, `h(x) = λ(δ(1-x)^{1/q} - x^{1/q})`.
pub fn h_func(x: f64, rp: &RelaxedProblem) -> f64 {
    let iq = 1.0 / rp.q;
    rp.lambda * (rp.delta * (1.0 - x).powf(iq) - x.powf(iq))
}

/// Left-hand side of the tangency-point equation.
pub fn a_star_equation(a: f64, q: f64) -> f64 {
    2.0 * (1.0 - 1.0 / q) * a + a.powf((1.0 - q) / q) / q - 2.0 + 1.0 / q
}

fn a_star_equation_prime(a: f64, q: f64) -> f64 {
    2.0 * (1.0 - 1.0 / q) + (1.0 - q) / (q * q) * a.powf((1.0 - 2.0 * q) / q)
}

/// The tangency point `a* ∈ (0, 1/2)`, for `1 < q < ∞`.
///
/// The equation's left side is convex, positive near 0, negative at 1/2 and
/// vanishes again at 1, so `[ε, 1/2]` brackets exactly one root.
pub fn solve_a_star(q: NormOrder) -> Result<f64> {
    let q = interior_q(q)?;
    let f = |a: f64| a_star_equation(a, q);
    let mut lo = (1e-3 / q).min(1e-6);
    while f(lo) <= 0.0 {
        lo *= 1e-3;
        if lo < 1e-300 {
            return Err(Error::NoBracket { lo, hi: 0.5 });
        }
    }
    let root = newton_bisect(f, |a| a_star_equation_prime(a, q), lo, 0.5, A_STAR_TOL)?;
    Ok(root.x)
}

/// Solution of the tangency system for one `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundSolution {
    pub q: NormOrder,
    /// `None` at `q = 1` and `q = ∞`, where the bound is a limit.
    pub a_star: Option<f64>,
    pub delta_star: Option<f64>,
    pub lambda_star: f64,
    pub ub: f64,
    /// `u(a*)` at `δ*`.
    pub residual_u: f64,
    /// `u'(a*)` at `δ*`.
    pub residual_uprime: f64,
    /// Residual of the scalar equation solved for `a*`.
    pub residual_a: f64,
}

/// `UB(q)` together with the intermediate quantities and residuals.
pub fn ub(q: NormOrder) -> Result<BoundSolution> {
    if q.is_one() {
        return Ok(BoundSolution {
            q,
            a_star: None,
            delta_star: None,
            lambda_star: 1.0,
            ub: 1.0,
            residual_u: 0.0,
            residual_uprime: 0.0,
            residual_a: 0.0,
        });
    }
    if q.is_infinite() {
        return Ok(BoundSolution {
            q,
            a_star: None,
            delta_star: None,
            lambda_star: 1.0 / 3.0,
            ub: 3.0,
            residual_u: 0.0,
            residual_uprime: 0.0,
            residual_a: 0.0,
        });
    }
    let qf = interior_q(q)?;
    let a = solve_a_star(q)?;
    let iq = 1.0 / qf;
    let delta = (a.powf(iq) + 1.0 - 2.0 * a) / (1.0 - a).powf(iq);
    let rp = RelaxedProblem::from_delta(q, delta)?;
    let lambda = rp.lambda();
    Ok(BoundSolution {
        q,
        a_star: Some(a),
        delta_star: Some(delta),
        lambda_star: lambda,
        ub: 1.0 / lambda,
        residual_u: u_func(a, &rp),
        residual_uprime: u_prime(a, &rp),
        residual_a: a_star_equation(a, qf),
    })
}

/// `UB(q)` on an evenly spaced grid of finite `q` values.
pub fn ub_curve(q_min: f64, q_max: f64, steps: usize) -> Result<Vec<BoundSolution>> {
    if steps < 2 || !(q_min >= 1.0 && q_max > q_min && q_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= q_min < q_max < inf and steps >= 2, got [{q_min}, {q_max}] x {steps}"
        )));
    }
    (0..steps)
        .map(|i| {
            let q = q_min + (q_max - q_min) * i as f64 / (steps - 1) as f64;
            ub(NormOrder::new(q)?)
        })
        .collect()
}

/// Parameters of the general lower-bound construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LbParams {
    pub q: f64,
    pub a_star: f64,
    pub lambda_star: f64,
    pub c_star: f64,
    /// Value of the positive coordinates of Type I points, `1/(1-c*)`.
    pub type1_coord: f64,
    /// Fraction of Type I points, `1/(2-2a*)`.
    pub frac_type1: f64,
    /// Fraction of Type II points, `(1-2a*)/(2-2a*)`.
    pub frac_type2: f64,
}

pub fn lb_params(q: NormOrder) -> Result<LbParams> {
    let qf = interior_q(q)?;
    let sol = ub(q)?;
    let a = sol.a_star.expect("interior q has a tangency point");
    let lam = sol.lambda_star;
    let lq = lam.powf(qf / (qf - 1.0));
    let x = ((1.0 - a) / a * lq / (1.0 - lq)).powf(1.0 / qf);
    let c = x / (1.0 + x);
    Ok(LbParams {
        q: qf,
        a_star: a,
        lambda_star: lam,
        c_star: c,
        type1_coord: 1.0 / (1.0 - c),
        frac_type1: 1.0 / (2.0 - 2.0 * a),
        frac_type2: (1.0 - 2.0 * a) / (2.0 - 2.0 * a),
    })
}

pub fn c_star(q: NormOrder) -> Result<f64> {
    Ok(lb_params(q)?.c_star)
}

/// Ratio of the lower-bound construction in the limit `d → ∞`; equals `1/λ*`.
pub fn lb_limit_ratio(q: NormOrder) -> Result<f64> {
    let p = lb_params(q)?;
    let (a, c, qf) = (p.a_star, p.c_star, p.q);
    let num = a.powf(1.0 / qf) / (1.0 - c) + 1.0 - 2.0 * a;
    let den = ((c / (1.0 - c)).powf(qf) * a + 1.0 - a).powf(1.0 / qf);
    Ok(num / den)
}

/// Closed-form ratio achieved by the lower-bound instance in dimension `d`.
///
/// For finite `q > 1` this needs `⌊a*·d⌋ >= 1`. At `q = ∞` it is the
/// target `3 - 1/d`; at `q = 1` every instance has ratio 1.
pub fn lb_ratio(q: NormOrder, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if q.is_infinite() {
        return Ok(3.0 - 1.0 / d as f64);
    }
    if q.is_one() {
        return Ok(1.0);
    }
    let p = lb_params(q)?;
    let (a, c, qf) = (p.a_star, p.c_star, p.q);
    let k = (a * d as f64).floor();
    if k < 1.0 {
        return Err(Error::Infeasible(format!(
            "floor(a*·d) = floor({:.6}) = 0 for q = {qf}, d = {d}",
            a * d as f64
        )));
    }
    let df = d as f64;
    let num = k.powf(1.0 / qf) / (1.0 - c) + df.powf(1.0 / qf) * (1.0 - 2.0 * a);
    let den = ((c / (1.0 - c)).powf(qf) * k + (df - k)).powf(1.0 / qf);
    Ok(num / den)
}

/// Least-squares constant `C` in `gap(d) ≈ C/d`.
pub fn fit_gap_constant(rows: &[(usize, f64)]) -> Option<f64> {
    let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), &(dim, gap)| {
        let x = 1.0 / dim as f64;
        (n + gap * x, d + x * x)
    });
    (den > 0.0).then(|| num / den)
}

fn check_c(c: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("c must lie in [0, 1), got {c}")));
    }
    Ok(())
}

/// The two closed forms of the consistency guarantee, evaluated at the same `c`:
/// `(√(4√(2c+3)c + 6√(2c+3) - 10c - 8)/(c+1), √(2/(c+1)))`.
pub fn consistency_branches(c: f64) -> (f64, f64) {
    let s = (2.0 * c + 3.0).sqrt();
    let first = (4.0 * s * c + 6.0 * s - 10.0 * c - 8.0).sqrt() / (c + 1.0);
    let second = (2.0 / (c + 1.0)).sqrt();
    (first, second)
}

/// Tangency point of the consistency program.
pub fn consistency_a1(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(if c < 0.5 {
        (2.0 + c - (3.0 + 2.0 * c).sqrt()) / 2.0
    } else {
        (1.0 - c) / 2.0
    })
}

pub fn consistency_lambda1(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(if c < 0.5 {
        let s = (2.0 * c + 3.0).sqrt();
        (c + 1.0) / (4.0 * s * c + 6.0 * s - 10.0 * c - 8.0).sqrt()
    } else {
        ((c + 1.0) / 2.0).sqrt()
    })
}

/// Consistency guarantee of CMP(c) in L_2(R^d).
pub fn consistency_bound(c: f64) -> Result<f64> {
    check_c(c)?;
    let (first, second) = consistency_branches(c);
    Ok(if c < 0.5 { first } else { second })
}

pub fn robustness_a2(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok((2.0 - c - (3.0 - 2.0 * c).sqrt()) / 2.0)
}

pub fn robustness_lambda2(c: f64) -> Result<f64> {
    check_c(c)?;
    let s = (3.0 - 2.0 * c).sqrt();
    Ok((1.0 - c) / (-4.0 * s * c + 6.0 * s + 10.0 * c - 8.0).sqrt())
}

/// Robustness guarantee of CMP(c) in L_2(R^d).
pub fn robustness_bound(c: f64) -> Result<f64> {
    Ok(1.0 / robustness_lambda2(c)?)
}

/// Consistency in R^d relative to the known two-dimensional guarantee.
pub fn r_a(c: f64) -> Result<f64> {
    check_c(c)?;
    let s = (2.0 * c + 3.0).sqrt();
    let den = (c * c + 1.0).sqrt();
    Ok(if c < 0.5 {
        (2.0 * s * c + 3.0 * s - 5.0 * c - 4.0).sqrt() / den
    } else {
        (c + 1.0).sqrt() / den
    })
}

/// Robustness in R^d relative to the known two-dimensional guarantee.
pub fn r_b(c: f64) -> Result<f64> {
    check_c(c)?;
    let s = (3.0 - 2.0 * c).sqrt();
    Ok((-2.0 * s * c + 3.0 * s + 5.0 * c - 4.0).sqrt() / (c * c + 1.0).sqrt())
}

/// Two-dimensional consistency guarantee `√(2c²+2)/(c+1)`.
pub fn consistency_2d(c: f64) -> f64 {
    (2.0 * c * c + 2.0).sqrt() / (c + 1.0)
}

/// Two-dimensional robustness guarantee `√(2c²+2)/(1-c)`.
pub fn robustness_2d(c: f64) -> f64 {
    (2.0 * c * c + 2.0).sqrt() / (1.0 - c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictionBounds {
    pub c: f64,
    pub a1: f64,
    pub lambda1: f64,
    pub consistency: f64,
    pub a2: f64,
    pub lambda2: f64,
    pub robustness: f64,
    pub r_a: f64,
    pub r_b: f64,
}

pub fn prediction_bounds(c: f64) -> Result<PredictionBounds> {
    Ok(PredictionBounds {
        c,
        a1: consistency_a1(c)?,
        lambda1: consistency_lambda1(c)?,
        consistency: consistency_bound(c)?,
        a2: robustness_a2(c)?,
        lambda2: robustness_lambda2(c)?,
        robustness: robustness_bound(c)?,
        r_a: r_a(c)?,
        r_b: r_b(c)?,
    })
}

/// One row of the R^d vs R^2 comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub c: f64,
    pub consistency: f64,
    pub robustness: f64,
    pub r_a: f64,
    pub r_b: f64,
    /// `r_a - consistency / consistency_2d`.
    pub identity_residual_a: f64,
    /// `r_b - robustness / robustness_2d`.
    pub identity_residual_b: f64,
}

pub fn comparison_curves(c_grid: &[f64]) -> Result<Vec<ComparisonRow>> {
    c_grid
        .iter()
        .map(|&c| {
            let pb = prediction_bounds(c)?;
            Ok(ComparisonRow {
                c,
                consistency: pb.consistency,
                robustness: pb.robustness,
                r_a: pb.r_a,
                r_b: pb.r_b,
                identity_residual_a: pb.r_a - pb.consistency / consistency_2d(c),
                identity_residual_b: pb.r_b - pb.robustness / robustness_2d(c),
            })
        })
        .collect()
}

/// `steps` evenly spaced values `c = i/steps`, `i = 0..steps`, all in `[0, 1)`.
pub fn c_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|i| i as f64 / steps as f64).collect()
}

/// `λ^{q/(q-1)}`, the quantity that recurs in the per-point analysis.
fn lambda_pow(q: f64, lambda: f64) -> f64 {
    lambda.powf(q / (q - 1.0))
}

/// Scaling `c/(1-c)` at which a point supported on `S` is locally worst:
/// `(Δ_S̄/Δ_S)^{1/q} · (L/(1-L))^{1/q}` with `L = λ^{q/(q-1)}`.
pub fn support_scaling(q: f64, lambda: f64, delta_s: f64, delta_sbar: f64) -> f64 {
    let l = lambda_pow(q, lambda);
    (delta_sbar / delta_s * l / (1.0 - l)).powf(1.0 / q)
}

/// The locally worst point with positive set `S` for a unit facility `f`:
/// `p_j = f_j/(1-c)` on `S` and `0` elsewhere.
pub fn support_point(f: &[f64], in_s: &[bool], q: NormOrder, lambda: f64) -> Result<Vec<f64>> {
    let qf = interior_q(q)?;
    if f.len() != in_s.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            found: in_s.len(),
        });
    }
    let (mut ds, mut dsbar) = (0.0, 0.0);
    for (&fj, &s) in f.iter().zip(in_s) {
        if s {
            ds += fj.powf(qf);
        } else {
            dsbar += fj.powf(qf);
        }
    }
    if ds <= 0.0 || dsbar <= 0.0 {
        return Err(Error::InvalidParameter("S and its complement must carry mass".into()));
    }
    let ratio = support_scaling(qf, lambda, ds, dsbar);
    let scale = 1.0 + ratio; // 1/(1-c) with c/(1-c) = ratio
    Ok(f.iter()
        .zip(in_s)
        .map(|(&fj, &s)| if s { fj * scale } else { 0.0 })
        .collect())
}

/// `g(p) = ||p - f||_q - λ||p||_q`.
pub fn point_gain(p: &[f64], f: &[f64], q: NormOrder, lambda: f64) -> Result<f64> {
    Ok(crate::norms::lq_dist(p, f, q)? - lambda * crate::norms::lq_norm(p, q))
}

/// Closed form of `g` at [`support_point`]:
/// `(1-L)^{(q-1)/q}·Δ_S̄^{1/q} - λ·Δ_S^{1/q}`.
pub fn support_gain(q: f64, lambda: f64, delta_s: f64, delta_sbar: f64) -> f64 {
    let l = lambda_pow(q, lambda);
    (1.0 - l).powf((q - 1.0) / q) * delta_sbar.powf(1.0 / q) - lambda * delta_s.powf(1.0 / q)
}

/// Lower bound on `g(p)` for points with no positive coordinate: `(1-L)^{(q-1)/q}`.
pub fn nonpositive_gain_bound(q: f64, lambda: f64) -> f64 {
    (1.0 - lambda_pow(q, lambda)).powf((q - 1.0) / q)
}
