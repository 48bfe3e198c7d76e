//! Optimal facility `f* = argmin_f Σ w_i ||f - p_i||_q`, a brute-force grid
//! oracle, and the empirical approximation ratio of a mechanism.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::error::{Error, Result};
use crate::mechanisms::{coordinate_median, CoordinateMedian, Instance, Mechanism, TieBreak};
use crate::norms::{norm_by, social_cost, sum_with_len, NormOrder, Point};
use crate::roots::golden_section;

/// Largest dimension accepted by [`grid_oracle`].
pub const GRID_MAX_DIM: usize = 4;
/// Largest number of grid nodes [`grid_oracle`] will evaluate.
pub const GRID_MAX_NODES: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Threshold on the relative stationarity measure (see [`FacilityResult`]).
    pub grad_tol: f64,
    pub restarts: usize,
    /// Smoothing radius as a fraction of the instance diameter.
    pub smoothing_eps: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            grad_tol: 1e-8,
            restarts: 5,
            smoothing_eps: 1e-9,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.smoothing_eps > 0.0) {
            return Err(Error::InvalidParameter("smoothing_eps must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Output of [`optimal_facility`].
///
/// `stationarity` is the dual norm of the minimum-norm subgradient divided by
/// the total weight, so it lies in `[0, 1]` and is zero exactly at a
/// minimizer. It is `None` where the minimizer is exact (`q = 1`, `d = 1`,
/// single point) or where no cheap measure exists (`q = ∞`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FacilityResult {
    pub point: Point,
    pub cost: f64,
    pub converged: bool,
    pub stationarity: Option<f64>,
    pub iterations: usize,
}

// Deduplicated, flattened view of an instance.
struct Problem {
    d: usize,
    n: usize,
    pts: Vec<f64>,
    w: Vec<f64>,
    total: f64,
    q: NormOrder,
    eps: f64,
    diameter: f64,
}

impl Problem {
    fn new(instance: &Instance, q: NormOrder, rel_eps: f64) -> Problem {
        let dd = instance.deduplicated();
        let d = dd.dim();
        let n = dd.len();
        let pts: Vec<f64> = dd.points().iter().flat_map(|p| p.iter().copied()).collect();
        let w: Vec<f64> = (0..n).map(|i| dd.weight(i)).collect();
        let mut diameter = 0.0_f64;
        for j in 0..d {
            let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                let v = pts[i * d + j];
                (lo.min(v), hi.max(v))
            });
            diameter = diameter.max(hi - lo);
        }
        Problem {
            d,
            n,
            total: w.iter().sum(),
            pts,
            w,
            q,
            eps: rel_eps * diameter.max(f64::MIN_POSITIVE),
            diameter,
        }
    }

    fn with_order(&self, q: NormOrder) -> Problem {
        Problem {
            d: self.d,
            n: self.n,
            pts: self.pts.clone(),
            w: self.w.clone(),
            total: self.total,
            q,
            eps: self.eps,
            diameter: self.diameter,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.pts[i * self.d..(i + 1) * self.d]
    }

    fn dist(&self, x: &[f64], i: usize) -> f64 {
        let p = self.point(i);
        norm_by(self.d, |j| x[j] - p[j], self.q)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        sum_with_len(self.n, (0..self.n).map(|i| self.w[i] * self.dist(x, i)))
    }

    // Unit gradient of r = ||y||_q at y = x - p_i (requires r > 0), added
    // into `out` with factor `scale`.
    fn add_unit_grad(&self, x: &[f64], i: usize, r: f64, scale: f64, out: &mut [f64]) {
        let p = self.point(i);
        let q = self.q.finite().expect("finite order");
        if q == 2.0 {
            for j in 0..self.d {
                out[j] += scale * (x[j] - p[j]) / r;
            }
        } else {
            let e = q - 1.0;
            for j in 0..self.d {
                let y = x[j] - p[j];
                if y != 0.0 {
                    out[j] += scale * y.signum() * (y.abs() / r).powf(e);
                }
            }
        }
    }

    // Objective with each distance below `eps` replaced by a quadratic cap.
    fn smoothed(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut val = 0.0;
        for i in 0..self.n {
            let r = self.dist(x, i);
            let w = self.w[i];
            if r >= self.eps {
                val += w * r;
                self.add_unit_grad(x, i, r, w, grad);
            } else {
                val += w * (r * r / (2.0 * self.eps) + self.eps / 2.0);
                if r > 0.0 {
                    self.add_unit_grad(x, i, r, w * r / self.eps, grad);
                }
            }
        }
        val
    }

    /// Relative minimum-norm subgradient in the dual norm; interior q only.
    fn stationarity(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.d];
        let mut coincident = 0.0;
        let tiny = self.eps.min(1e-12 * self.diameter.max(1.0));
        for i in 0..self.n {
            let r = self.dist(x, i);
            if r <= tiny {
                coincident += self.w[i];
            } else {
                self.add_unit_grad(x, i, r, self.w[i], &mut g);
            }
        }
        let dual = norm_by(self.d, |j| g[j], self.q.dual());
        (dual - coincident).max(0.0) / self.total
    }

    fn median(&self) -> Vec<f64> {
        let mut col = Vec::with_capacity(self.n);
        (0..self.d)
            .map(|j| {
                col.clear();
                col.extend((0..self.n).map(|i| (self.pts[i * self.d + j], self.w[i])));
                crate::mechanisms::weighted_median(&mut col, TieBreak::Lower).expect("positive weights")
            })
            .collect()
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let picks = self.n.min(8);
        let mut x = vec![0.0; self.d];
        let mut total = 0.0;
        for _ in 0..picks {
            let i = rng.random_range(0..self.n);
            let e: f64 = rng.sample(Exp1);
            total += e;
            for (xj, pj) in x.iter_mut().zip(self.point(i)) {
                *xj += e * pj;
            }
        }
        x.iter_mut().for_each(|v| *v /= total);
        x
    }

    /// L-BFGS with Armijo backtracking on the smoothed objective.
    fn lbfgs(&self, x0: Vec<f64>, max_iters: usize, grad_tol: f64) -> (Vec<f64>, usize) {
        const MEMORY: usize = 8;
        let d = self.d;
        let mut x = x0;
        let mut g = vec![0.0; d];
        let mut f = self.smoothed(&x, &mut g);
        let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
        let mut xn = vec![0.0; d];
        let mut gn = vec![0.0; d];
        let scale = if self.diameter > 0.0 { self.diameter } else { 1.0 };
        let mut stalls = 0;
        for it in 0..max_iters {
            let gnorm = dot(&g, &g).sqrt();
            if gnorm <= grad_tol * self.total {
                return (x, it);
            }
            let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut alphas = Vec::with_capacity(hist.len());
            for (s, y, rho) in hist.iter().rev() {
                let a = rho * dot(s, &dir);
                axpy(-a, y, &mut dir);
                alphas.push(a);
            }
            if let Some((s, y, _)) = hist.back() {
                let gamma = dot(s, y) / dot(y, y);
                dir.iter_mut().for_each(|v| *v *= gamma);
            }
            for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
                let b = rho * dot(y, &dir);
                axpy(a - b, s, &mut dir);
            }
            let mut slope = dot(&g, &dir);
            if !(slope < 0.0) {
                hist.clear();
                dir = g.iter().map(|v| -v).collect();
                slope = -gnorm * gnorm;
            }
            let mut t = if hist.is_empty() {
                (0.1 * scale / gnorm).min(1.0)
            } else {
                1.0
            };
            let mut fnew;
            loop {
                for j in 0..d {
                    xn[j] = x[j] + t * dir[j];
                }
                fnew = self.smoothed(&xn, &mut gn);
                if fnew <= f + 1e-4 * t * slope {
                    break;
                }
                t *= 0.5;
                if t * dot(&dir, &dir).sqrt() < 1e-16 * scale {
                    return (x, it);
                }
            }
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 {
                if hist.len() == MEMORY {
                    hist.pop_front();
                }
                hist.push_back((s, y, 1.0 / sy));
            }
            if f - fnew <= 1e-16 * f.abs() {
                stalls += 1;
                if stalls >= 5 {
                    std::mem::swap(&mut x, &mut xn);
                    return (x, it + 1);
                }
            } else {
                stalls = 0;
            }
            std::mem::swap(&mut x, &mut xn);
            std::mem::swap(&mut g, &mut gn);
            f = fnew;
        }
        (x, max_iters)
    }

    /// Damped Weiszfeld iterations for q = 2.
    fn weiszfeld(&self, mut x: Vec<f64>, iters: usize) -> Vec<f64> {
        let floor = self.eps.max(f64::MIN_POSITIVE);
        for _ in 0..iters {
            let mut num = vec![0.0; self.d];
            let mut den = 0.0;
            for i in 0..self.n {
                let r = self.dist(&x, i).max(floor);
                let c = self.w[i] / r;
                den += c;
                axpy(c, self.point(i), &mut num);
            }
            num.iter_mut().for_each(|v| *v /= den);
            if self.cost(&num) > self.cost(&x) {
                break;
            }
            x = num;
        }
        x
    }

    /// One-dimensional exact minimization along coordinate `j` for q = ∞.
    fn inf_coordinate_step(&self, x: &mut [f64], j: usize, entries: &mut Vec<(f64, f64)>) {
        entries.clear();
        for i in 0..self.n {
            let p = self.point(i);
            let rho = (0..self.d)
                .filter(|&k| k != j)
                .fold(0.0_f64, |m, k| m.max((x[k] - p[k]).abs()));
            entries.push((p[j] - rho, self.w[i]));
            entries.push((p[j] + rho, self.w[i]));
        }
        if let Some(v) = crate::mechanisms::weighted_median(entries, TieBreak::Lower) {
            x[j] = v;
        }
    }

    fn line_search(&self, x: &mut [f64], dir: &[f64], fx: f64) -> f64 {
        let span = if self.diameter > 0.0 { self.diameter } else { 1.0 };
        let norm = dot(dir, dir).sqrt();
        if norm == 0.0 {
            return fx;
        }
        let mut trial = vec![0.0; self.d];
        let eval = |t: f64, trial: &mut Vec<f64>| {
            for j in 0..self.d {
                trial[j] = x[j] + t * dir[j] / norm;
            }
            self.cost(trial)
        };
        let cell = std::cell::RefCell::new(&mut trial);
        let (t, ft) = golden_section(|t| eval(t, &mut cell.borrow_mut()), -span, span, 1e-12 * span);
        if ft < fx {
            for j in 0..self.d {
                x[j] += t * dir[j] / norm;
            }
            ft
        } else {
            fx
        }
    }

    /// Coordinate descent with line searches along random and diagonal
    /// directions, for the piecewise-linear q = ∞ objective.
    fn polish_inf(&self, x: &mut Vec<f64>, max_iters: usize, rng: &mut ChaCha8Rng) -> usize {
        let d = self.d;
        let mut fx = self.cost(x);
        let mut entries = Vec::with_capacity(2 * self.n);
        let coordinate_passes = self.n * d * d <= 50_000_000;
        let diagonals = d <= 12;
        let mut it = 0;
        while it < max_iters {
            it += 1;
            let start = fx;
            if coordinate_passes {
                for j in 0..d {
                    let old = x[j];
                    self.inf_coordinate_step(x, j, &mut entries);
                    let f = self.cost(x);
                    if f <= fx {
                        fx = f;
                    } else {
                        x[j] = old;
                    }
                }
            }
            if diagonals {
                for a in 0..d {
                    for b in (a + 1)..d {
                        for sign in [1.0, -1.0] {
                            let mut dir = vec![0.0; d];
                            dir[a] = 1.0;
                            dir[b] = sign;
                            fx = self.line_search(x, &dir, fx);
                        }
                    }
                }
            }
            fx = self.line_search(x, &vec![1.0; d], fx);
            for _ in 0..d.min(8) {
                let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                fx = self.line_search(x, &dir, fx);
            }
            if start - fx <= 1e-14 * start.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        it
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn exact(point: Vec<f64>, cost: f64) -> Result<FacilityResult> {
    Ok(FacilityResult {
        point: Point::new(point)?,
        cost,
        converged: true,
        stationarity: None,
        iterations: 0,
    })
}

/// Minimizes the (weighted) social cost.
///
/// The returned cost is never above the cost at any input point or at the
/// coordinate-wise median, since all of these are evaluated as candidates.
/// `q = 1` and `d = 1` are solved exactly by the weighted median.
pub fn optimal_facility(instance: &Instance, q: NormOrder, cfg: &SolverConfig) -> Result<FacilityResult> {
    cfg.validate()?;
    if instance.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let prob = Problem::new(instance, q, cfg.smoothing_eps);
    if prob.n == 1 {
        return exact(prob.point(0).to_vec(), 0.0);
    }
    if q.is_one() || prob.d == 1 {
        let m = prob.median();
        let c = prob.cost(&m);
        return exact(m, c);
    }

    // candidates: every input point and the median
    let median = prob.median();
    let (best_idx, best_cost) = (0..prob.n)
        .into_par_iter()
        .map(|i| (i, prob.cost(prob.point(i))))
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let median_cost = prob.cost(&median);
    let (seed_point, seed_cost) = if median_cost <= best_cost {
        (median.clone(), median_cost)
    } else {
        (prob.point(best_idx).to_vec(), best_cost)
    };

    let runs: Vec<(Vec<f64>, f64, usize)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let start = if r == 0 {
                seed_point.clone()
            } else {
                prob.random_start(&mut rng)
            };
            let (x, iters) = if q.is_infinite() {
                solve_infinity(&prob, start, cfg, &mut rng)
            } else {
                let start = if q == NormOrder::TWO {
                    prob.weiszfeld(start, 50)
                } else {
                    start
                };
                prob.lbfgs(start, cfg.max_iters, cfg.grad_tol * 1e-2)
            };
            let c = prob.cost(&x);
            (x, c, iters)
        })
        .collect();

    let iterations = runs.iter().map(|r| r.2).sum();
    let (mut point, mut cost) = (seed_point, seed_cost);
    for (x, c, _) in runs {
        if c < cost {
            point = x;
            cost = c;
        }
    }
    let (stationarity, converged) = match q.interior() {
        Some(_) => {
            let s = prob.stationarity(&point);
            (Some(s), s <= cfg.grad_tol)
        }
        None => (None, iterations < cfg.max_iters * cfg.restarts),
    };
    Ok(FacilityResult {
        point: Point::new(point)?,
        cost,
        converged,
        stationarity,
        iterations,
    })
}

fn solve_infinity(prob: &Problem, start: Vec<f64>, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, usize) {
    // warm start by continuation through large finite orders
    let mut x = start;
    let mut iters = 0;
    if prob.n * prob.d <= 200_000 {
        let before = prob.cost(&x);
        let mut y = x.clone();
        for qv in [8.0, 32.0, 128.0] {
            let sub = prob.with_order(NormOrder::new(qv).expect("valid order"));
            let (z, it) = sub.lbfgs(y, cfg.max_iters.min(500), 1e-10);
            y = z;
            iters += it;
        }
        if prob.cost(&y) < before {
            x = y;
        }
    }
    iters += prob.polish_inf(&mut x, cfg.max_iters, rng);
    (x, iters)
}

/// Exhaustive minimization of the social cost over the grid
/// `lo + k·resolution` (per axis, `k = 0..=⌊(hi-lo)/resolution⌋`).
///
/// Halving the resolution yields a superset of nodes, so the returned cost
/// never increases as the grid is refined.
pub fn grid_oracle(instance: &Instance, q: NormOrder, lo: &[f64], hi: &[f64], resolution: f64) -> Result<(Point, f64)> {
    if instance.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let d = instance.dim();
    if d > GRID_MAX_DIM {
        return Err(Error::DimensionTooLarge { d, max: GRID_MAX_DIM });
    }
    crate::norms::check_dims(d, lo.len())?;
    crate::norms::check_dims(d, hi.len())?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::BadGrid(format!("resolution must be positive, got {resolution}")));
    }
    let mut counts = Vec::with_capacity(d);
    for j in 0..d {
        if !(lo[j] < hi[j]) {
            return Err(Error::BadGrid(format!("empty box on axis {j}: [{}, {}]", lo[j], hi[j])));
        }
        counts.push(((hi[j] - lo[j]) / resolution).floor() as usize + 1);
    }
    let nodes = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    let nodes = match nodes {
        Some(n) if n <= GRID_MAX_NODES => n,
        _ => {
            return Err(Error::BadGrid(format!(
                "grid {counts:?} exceeds {GRID_MAX_NODES} nodes"
            )))
        }
    };
    let node = |mut k: usize| -> Vec<f64> {
        let mut x = vec![0.0; d];
        for j in 0..d {
            x[j] = lo[j] + (k % counts[j]) as f64 * resolution;
            k /= counts[j];
        }
        x
    };
    let (k, cost) = (0..nodes)
        .into_par_iter()
        .map(|k| (k, social_cost(instance, &node(k), q).expect("dimensions checked")))
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((Point::new(node(k))?, cost))
}

/// Axis-aligned bounding box of the instance.
pub fn bounding_box(instance: &Instance) -> (Vec<f64>, Vec<f64>) {
    let d = instance.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in instance.points() {
        for j in 0..d {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub mechanism: String,
    pub mechanism_point: Point,
    pub optimal_point: Point,
    pub sc_mechanism: f64,
    pub sc_optimal: f64,
    pub empirical_ratio: f64,
    pub theoretical_ub: f64,
    pub q: NormOrder,
    pub solver_converged: bool,
}

/// Ratio of the mechanism's social cost to the (numerically) optimal one.
///
/// The mechanism's own output is also a candidate for the optimum, so the
/// reported optimum is never worse than the mechanism. An instance whose
/// points all coincide has ratio 1.
pub fn evaluate_mechanism(
    instance: &Instance,
    q: NormOrder,
    cfg: &SolverConfig,
    mechanism: &dyn Mechanism,
) -> Result<EvalReport> {
    let mech_point = mechanism.place(instance)?;
    let sc_mech = social_cost(instance, &mech_point, q)?;
    let opt = optimal_facility(instance, q, cfg)?;
    let (optimal_point, sc_opt) = if sc_mech < opt.cost {
        (mech_point.clone(), sc_mech)
    } else {
        (opt.point, opt.cost)
    };
    let ratio = if sc_opt > 0.0 { sc_mech / sc_opt } else { 1.0 };
    Ok(EvalReport {
        mechanism: mechanism.name(),
        mechanism_point: mech_point,
        optimal_point,
        sc_mechanism: sc_mech,
        sc_optimal: sc_opt,
        empirical_ratio: ratio,
        theoretical_ub: bounds::ub(q)?.ub,
        q,
        solver_converged: opt.converged,
    })
}

/// [`evaluate_mechanism`] for the plain coordinate-wise median.
pub fn empirical_ratio(
    instance: &Instance,
    q: NormOrder,
    cfg: &SolverConfig,
    tie_break: TieBreak,
) -> Result<EvalReport> {
    evaluate_mechanism(instance, q, cfg, &CoordinateMedian { tie_break })
}

/// Ratio of the median against a known optimal facility, without a solver run.
pub fn ratio_against(instance: &Instance, q: NormOrder, optimum: &[f64], tie_break: TieBreak) -> Result<f64> {
    let m = coordinate_median(instance, tie_break)?;
    let opt = social_cost(instance, optimum, q)?;
    let mech = social_cost(instance, &m, q)?;
    Ok(if opt > 0.0 { mech / opt } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(rows: &[&[f64]]) -> Instance {
        Instance::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_point() {
        let p = inst(&[&[1.5, -2.0]]);
        for q in [NormOrder::ONE, NormOrder::TWO, NormOrder::INFINITY] {
            let r = optimal_facility(&p, q, &SolverConfig::default()).unwrap();
            assert_eq!(r.point.coords(), &[1.5, -2.0]);
            assert_eq!(r.cost, 0.0);
        }
    }

    #[test]
    fn one_dimensional_median() {
        let p = inst(&[&[0.0], &[1.0], &[9.0]]);
        let r = optimal_facility(&p, NormOrder::ONE, &SolverConfig::default()).unwrap();
        assert_eq!(r.point.coords(), &[1.0]);
        assert_eq!(r.cost, 9.0);
    }

    #[test]
    fn triangle_fermat_point() {
        // the 120-degree point of (0,0), (2,0), (1,3)
        let p = inst(&[&[0.0, 0.0], &[2.0, 0.0], &[1.0, 3.0]]);
        let r = optimal_facility(&p, NormOrder::TWO, &SolverConfig::default()).unwrap();
        let expected = [1.0, 1.0 / 3f64.sqrt()];
        assert!((r.point[0] - expected[0]).abs() < 1e-7);
        assert!((r.point[1] - expected[1]).abs() < 1e-7);
        let exact_cost = 2.0 * (1.0 + 1.0 / 3.0f64).sqrt() + 3.0 - 1.0 / 3f64.sqrt();
        assert!((r.cost - exact_cost).abs() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn optimum_at_data_point_is_stationary() {
        // heavy point dominates: optimum sits on it
        let pts = vec![
            Point::new(vec![0.0, 0.0]).unwrap(),
            Point::new(vec![1.0, 0.0]).unwrap(),
            Point::new(vec![0.0, 1.0]).unwrap(),
        ];
        let p = Instance::with_weights(pts, vec![5.0, 1.0, 1.0]).unwrap();
        for q in [1.5, 2.0, 3.0] {
            let r = optimal_facility(&p, NormOrder::new(q).unwrap(), &SolverConfig::default()).unwrap();
            assert_eq!(r.cost, 2.0);
            assert_eq!(r.stationarity, Some(0.0));
        }
    }

    #[test]
    fn grid_collinear_pair() {
        let p = inst(&[&[0.0], &[2.0]]);
        let (x, c) = grid_oracle(&p, NormOrder::TWO, &[-1.0], &[3.0], 0.01).unwrap();
        assert!((c - 2.0).abs() < 1e-9);
        assert!((-1e-9..=2.0 + 1e-9).contains(&x[0]));
    }

    #[test]
    fn grid_equilateral() {
        let h = 3f64.sqrt() / 2.0;
        let p = inst(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]]);
        let res = 0.005;
        let (_, c) = grid_oracle(&p, NormOrder::TWO, &[0.0, 0.0], &[1.0, 1.0], res).unwrap();
        assert!((c - 3f64.sqrt()).abs() <= 2.0 * res);
    }

    #[test]
    fn grid_errors() {
        let p = inst(&[&[0.0, 0.0, 0.0, 0.0, 0.0]]);
        assert!(matches!(
            grid_oracle(&p, NormOrder::TWO, &[0.0; 5], &[1.0; 5], 0.5),
            Err(Error::DimensionTooLarge { .. })
        ));
        let p = inst(&[&[0.0, 0.0]]);
        assert!(matches!(
            grid_oracle(&p, NormOrder::TWO, &[1.0, 0.0], &[0.0, 1.0], 0.1),
            Err(Error::BadGrid(_))
        ));
        assert!(grid_oracle(&p, NormOrder::TWO, &[0.0, 0.0], &[1.0, 1.0], 1e-6).is_err());
    }

    #[test]
    fn two_points_ratio_one() {
        let p = inst(&[&[0.0, 0.0], &[2.0, 4.0]]);
        let r = empirical_ratio(&p, NormOrder::TWO, &SolverConfig::default(), TieBreak::Lower).unwrap();
        assert!((r.empirical_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_ratio_one() {
        let p = inst(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let r = empirical_ratio(&p, NormOrder::TWO, &SolverConfig::default(), TieBreak::Lower).unwrap();
        assert_eq!(r.empirical_ratio, 1.0);
    }

    #[test]
    fn infinity_norm_small() {
        // three points where the L∞ optimum is easy: on the segment between the far pair
        let p = inst(&[&[0.0, 0.0], &[4.0, 0.0], &[2.0, 1.0]]);
        let r = optimal_facility(&p, NormOrder::INFINITY, &SolverConfig::default()).unwrap();
        let (lo, hi) = bounding_box(&p);
        let (_, g) = grid_oracle(&p, NormOrder::INFINITY, &lo, &hi, 0.01).unwrap();
        assert!(r.cost <= g + 1e-9, "{} vs {}", r.cost, g);
        assert!((r.cost - 4.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
