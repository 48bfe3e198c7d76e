//! Certificates and stress tests: the relaxation certificate for a candidate
//! ratio, randomized strategy-proofness trials, a structured worst-case
//! search, and lower-bound convergence sweeps.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bounds::{self, u_func, u_prime, u_second, RelaxedProblem};
use crate::error::{Error, Result};
use crate::instances::{gen_lb_instance, gen_linf_instance, to_json, Encoding};
use crate::mechanisms::{
    deviation_cost_delta, CoordinateMedian, Instance, MeanMechanism, Mechanism, PredictionMedian, TieBreak,
};
use crate::norms::{social_cost, NormOrder, Point};
use crate::optfac::{evaluate_mechanism, EvalReport, SolverConfig};
use crate::roots::{golden_section, newton_bisect};

/// Pass threshold of the relaxation certificate.
pub const CERT_TOL: f64 = 1e-9;
/// Deviation gains below `-SP_TOL` count as strategy-proofness violations.
pub const SP_TOL: f64 = 1e-9;

/// Coordinate signs of a point; zero is assigned `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignVector {
    signs: Vec<i8>,
}

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidParameter(format!(
                "sign entries must be +1 or -1, got {s}"
            )));
        }
        Ok(SignVector { signs })
    }

    pub fn of_point(p: &[f64]) -> Self {
        SignVector {
            signs: p.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect(),
        }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn positives(&self) -> usize {
        self.signs.iter().filter(|s| **s == 1).count()
    }
}

/// Per-coordinate sums of signatures; all zero for a balanced configuration.
pub fn signature_balance(signatures: &[SignVector]) -> Vec<i64> {
    let d = signatures.first().map_or(0, |s| s.signs.len());
    let mut out = vec![0i64; d];
    for s in signatures {
        for (o, &v) in out.iter_mut().zip(&s.signs) {
            *o += v as i64;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub q: f64,
    pub lambda: f64,
    pub delta: f64,
    pub z: f64,
    pub min_u: f64,
    pub argmin_a: f64,
    pub pass: bool,
}

/// Checks `min_{a ∈ [0, z]} u(a) >= 0`, which certifies the ratio `1/λ`.
///
/// `u` is scanned on `grid_size + 1` evenly spaced nodes and the best node is
/// refined by a bracketed Newton solve of `u'(a) = 0`. When `δ < 1` the
/// domain is capped at `1/2`, where `u` is already negative.
pub fn certificate_check(q: NormOrder, lambda: f64, grid_size: usize) -> Result<CertificateReport> {
    if grid_size < 1000 {
        return Err(Error::InvalidParameter(format!(
            "grid_size must be >= 1000, got {grid_size}"
        )));
    }
    let rp = RelaxedProblem::new(q, lambda)?;
    let upper = rp.z().min(0.5);
    let node = |k: usize| upper * k as f64 / grid_size as f64;
    let (mut best_a, mut best_u) = (0.0, u_func(0.0, &rp));
    for k in 1..=grid_size {
        let a = node(k);
        let u = u_func(a, &rp);
        if u < best_u {
            best_a = a;
            best_u = u;
        }
    }
    // polish inside the neighbouring cells if u' changes sign there
    let k = (best_a / upper * grid_size as f64).round() as usize;
    let lo = node(k.saturating_sub(1)).max(f64::MIN_POSITIVE);
    let hi = node((k + 1).min(grid_size));
    if lo < hi && u_prime(lo, &rp) < 0.0 && u_prime(hi, &rp) > 0.0 {
        if let Ok(root) = newton_bisect(|a| u_prime(a, &rp), |a| u_second(a, &rp), lo, hi, 1e-15) {
            let u = u_func(root.x, &rp);
            if u < best_u {
                best_a = root.x;
                best_u = u;
            }
        }
    }
    Ok(CertificateReport {
        q: rp.q(),
        lambda,
        delta: rp.delta(),
        z: rp.z(),
        min_u: best_u,
        argmin_a: best_a,
        pass: best_u >= -CERT_TOL,
    })
}

/// Which mechanism a strategy-proofness run exercises.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MechanismKind {
    Median {
        tie_break: TieBreak,
    },
    /// CMP(c) with a fresh random prediction in every trial.
    Cmp {
        c: f64,
        tie_break: TieBreak,
    },
    /// The centroid; manipulable, used to check that the harness detects it.
    Mean,
}

impl MechanismKind {
    fn build(&self, d: usize, rng: &mut ChaCha8Rng) -> Result<Box<dyn Mechanism>> {
        Ok(match *self {
            MechanismKind::Median { tie_break } => Box::new(CoordinateMedian { tie_break }),
            MechanismKind::Cmp { c, tie_break } => {
                let pred = Point::new(random_coords(d, rng))?;
                Box::new(PredictionMedian::new(pred, c, tie_break)?)
            }
            MechanismKind::Mean => Box::new(MeanMechanism),
        })
    }

    pub fn label(&self) -> String {
        match self {
            MechanismKind::Median { tie_break } => format!("median[{tie_break}]"),
            MechanismKind::Cmp { c, tie_break } => format!("cmp[c={c}, {tie_break}]"),
            MechanismKind::Mean => "mean".into(),
        }
    }
}

// Half the coordinates come from a small integer lattice so that ties and
// coincident reports are common.
fn random_coords(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let lattice = rng.random_bool(0.5);
    (0..d)
        .map(|_| {
            if lattice {
                rng.random_range(-3i32..=3) as f64
            } else {
                2.0 * rng.sample::<f64, _>(StandardNormal)
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpConfig {
    pub trials: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub q: NormOrder,
}

impl Default for SpConfig {
    fn default() -> Self {
        SpConfig {
            trials: 10_000,
            seed: 0,
            dims: (1..=5).collect(),
            sizes: (1..=7).collect(),
            q: NormOrder::TWO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpReport {
    pub mechanism: String,
    pub q: NormOrder,
    pub trials: usize,
    pub violations: usize,
    /// Most negative cost change seen (0 if none was negative).
    pub worst_delta: f64,
}

fn sp_trial(mech: &MechanismKind, cfg: &SpConfig, t: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t as u64);
    let d = *cfg.dims.choose(&mut rng).expect("nonempty dims");
    let n = *cfg.sizes.choose(&mut rng).expect("nonempty sizes");
    let points = (0..n)
        .map(|_| Point::new(random_coords(d, &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    let inst = Instance::new(points)?;
    let mechanism = mech.build(d, &mut rng)?;
    let i = rng.random_range(0..n);
    let truth = inst.points()[i].clone();
    let report = match rng.random_range(0..4) {
        0 => Point::new(random_coords(d, &mut rng))?,
        1 => {
            let shift: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            truth.translated(&shift)?
        }
        2 => inst.points()[rng.random_range(0..n)].clone(),
        _ => {
            // exaggerate along a random subset of coordinates
            let mut v = truth.clone().into_inner();
            for x in v.iter_mut() {
                if rng.random_bool(0.5) {
                    *x += if rng.random_bool(0.5) { 10.0 } else { -10.0 };
                }
            }
            Point::new(v)?
        }
    };
    deviation_cost_delta(&inst, i, &report, mechanism.as_ref(), cfg.q)
}

/// Random unilateral deviations; counts those that strictly help the deviator.
pub fn strategyproofness_suite(mech: &MechanismKind, cfg: &SpConfig) -> Result<SpReport> {
    if cfg.trials == 0 || cfg.dims.is_empty() || cfg.sizes.is_empty() {
        return Err(Error::InvalidParameter(
            "need trials >= 1 and nonempty dims and sizes".into(),
        ));
    }
    if cfg.dims.contains(&0) || cfg.sizes.contains(&0) {
        return Err(Error::InvalidParameter("dims and sizes must be >= 1".into()));
    }
    let deltas = (0..cfg.trials)
        .into_par_iter()
        .map(|t| sp_trial(mech, cfg, t))
        .collect::<Result<Vec<f64>>>()?;
    let violations = deltas.iter().filter(|&&d| d < -SP_TOL).count();
    let worst = deltas.iter().copied().fold(0.0_f64, f64::min);
    Ok(SpReport {
        mechanism: mech.label(),
        q: cfg.q,
        trials: cfg.trials,
        violations,
        worst_delta: worst,
    })
}

fn serialize_instance<S: Serializer>(inst: &Instance, s: S) -> std::result::Result<S::Ok, S::Error> {
    let text = to_json(inst, Encoding::Decimal).map_err(serde::ser::Error::custom)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(serde::ser::Error::custom)?;
    value.serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    #[serde(serialize_with = "serialize_instance")]
    pub best_instance: Instance,
    /// Ratio of the best instance as re-scored by a fresh solver run.
    pub best_ratio: f64,
    /// Value of the structured objective that selected the instance.
    pub proxy_ratio: f64,
    pub restarts_used: usize,
    pub q: NormOrder,
    pub d: usize,
    pub n: usize,
    pub report: EvalReport,
}

// Per-point contributions of a structured point with k positive coordinates
// and scale t = c/(1-c), against the all-ones facility.
fn structured_costs(q: NormOrder, d: usize, k: usize, t: f64) -> (f64, f64) {
    let (kf, df) = (k as f64, d as f64);
    match q.finite() {
        None => {
            let mech = if k > 0 { 1.0 + t } else { 0.0 };
            let opt = match (k > 0, k < d) {
                (true, true) => t.max(1.0),
                (true, false) => t,
                (false, _) => 1.0,
            };
            (mech, opt)
        }
        Some(qf) => {
            let mech = kf.powf(1.0 / qf) * (1.0 + t);
            let opt = if t == 0.0 {
                (df - kf).powf(1.0 / qf)
            } else {
                (t.powf(qf) * kf + df - kf).powf(1.0 / qf)
            };
            (mech, opt)
        }
    }
}

const T_MAX: f64 = 1e3;

/// Best scale for points with `k` positive coordinates at ratio level `r`:
/// maximizes `mech - r·opt`, which is concave in `t`.
fn best_scale(q: NormOrder, d: usize, k: usize, r: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let phi = |t: f64| {
        let (m, o) = structured_costs(q, d, k, t);
        -(m - r * o)
    };
    golden_section(phi, 0.0, T_MAX, 1e-12).0
}

// Per-size contributions at a fixed ratio level.
struct SizeTable {
    scales: Vec<f64>,
    mech: Vec<f64>,
    opt: Vec<f64>,
}

impl SizeTable {
    fn at_level(q: NormOrder, d: usize, r: f64) -> SizeTable {
        let scales: Vec<f64> = (0..=d).map(|k| best_scale(q, d, k, r)).collect();
        let (mech, opt) = scales
            .iter()
            .enumerate()
            .map(|(k, &t)| structured_costs(q, d, k, t))
            .unzip();
        SizeTable { scales, mech, opt }
    }

    fn totals(&self, hist: &[usize]) -> (f64, f64) {
        hist.iter().enumerate().fold((0.0, 0.0), |(m, o), (k, &c)| {
            (m + c as f64 * self.mech[k], o + c as f64 * self.opt[k])
        })
    }
}

fn ratio_of(m: f64, o: f64) -> f64 {
    if o > 0.0 {
        m / o
    } else {
        1.0
    }
}

/// Dinkelbach iteration: alternate the ratio level and the per-size scales.
fn optimize_scales(q: NormOrder, d: usize, hist: &[usize], start: f64) -> (SizeTable, f64) {
    let mut r = start;
    let mut table = SizeTable::at_level(q, d, r);
    for _ in 0..60 {
        let (m, o) = table.totals(hist);
        let next = ratio_of(m, o);
        if next <= r * (1.0 + 1e-14) {
            return (table, next);
        }
        r = next;
        table = SizeTable::at_level(q, d, r);
    }
    let (m, o) = table.totals(hist);
    (table, ratio_of(m, o))
}

/// Positive sets of n points, each coordinate positive in exactly n/2 of them.
#[derive(Clone)]
struct Config {
    sets: Vec<Vec<bool>>,
    sizes: Vec<usize>,
}

impl Config {
    fn random(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Config {
        let mut sets = vec![vec![false; d]; n];
        let mut idx: Vec<usize> = (0..n).collect();
        for j in 0..d {
            idx.shuffle(rng);
            for &i in &idx[..n / 2] {
                sets[i][j] = true;
            }
        }
        let sizes = sets.iter().map(|s| s.iter().filter(|b| **b).count()).collect();
        Config { sets, sizes }
    }

    /// Realizes any size vector with `Σ sizes = d·n/2` by filling positive
    /// sets cyclically through a shuffled coordinate order; every coordinate
    /// is then hit exactly `n/2` times.
    fn from_sizes(sizes: &[usize], d: usize, rng: &mut ChaCha8Rng) -> Config {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        let mut pos = 0;
        let sets = sizes
            .iter()
            .map(|&k| {
                let mut s = vec![false; d];
                for _ in 0..k {
                    s[perm[pos % d]] = true;
                    pos += 1;
                }
                s
            })
            .collect();
        Config {
            sets,
            sizes: sizes.to_vec(),
        }
    }
}

// Adjusts sizes by ±1 steps until they sum to `target`.
fn repair_sizes(sizes: &mut [usize], d: usize, target: usize, rng: &mut ChaCha8Rng) {
    let n = sizes.len();
    let mut sum: usize = sizes.iter().sum();
    while sum != target {
        let i = rng.random_range(0..n);
        if sum < target && sizes[i] < d {
            sizes[i] += 1;
            sum += 1;
        } else if sum > target && sizes[i] > 0 {
            sizes[i] -= 1;
            sum -= 1;
        }
    }
}

// Starting sizes: either those of a uniformly random balanced configuration,
// or a random mix of two size classes.
fn initial_sizes(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let target = d * n / 2;
    if rng.random_bool(0.5) {
        return Config::random(d, n, rng).sizes;
    }
    let k1 = rng.random_range(0..d);
    let full = ((target as f64 - (n * k1) as f64) / (d - k1) as f64)
        .round()
        .clamp(0.0, n as f64) as usize;
    let mut sizes: Vec<usize> = (0..n).map(|i| if i < full { d } else { k1 }).collect();
    repair_sizes(&mut sizes, d, target, rng);
    sizes
}

fn local_search(q: NormOrder, d: usize, n: usize, rng: &mut ChaCha8Rng, moves: usize) -> (Vec<usize>, Vec<f64>, f64) {
    let mut sizes = initial_sizes(d, n, rng);
    let mut hist = vec![0usize; d + 1];
    sizes.iter().for_each(|&k| hist[k] += 1);
    let (mut table, mut level) = optimize_scales(q, d, &hist, 1.0);
    let (mut m, mut o) = table.totals(&hist);
    let mut current = ratio_of(m, o);
    let mut best = (sizes.clone(), current);
    let (t_start, t_end) = (1e-3f64, 1e-8f64);
    let refresh = 2000;
    for step in 0..moves {
        let temp = t_start * (t_end / t_start).powf(step as f64 / moves as f64);
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (ka, kb) = (sizes[a], sizes[b]);
        let room = ka.min(d - kb);
        if a == b || room == 0 {
            continue;
        }
        let mv = if rng.random_bool(0.7) {
            1
        } else {
            rng.random_range(1..=room)
        };
        let (na, nb) = (ka - mv, kb + mv);
        let dm = table.mech[na] + table.mech[nb] - table.mech[ka] - table.mech[kb];
        let dopt = table.opt[na] + table.opt[nb] - table.opt[ka] - table.opt[kb];
        let r = ratio_of(m + dm, o + dopt);
        if r >= current || rng.random::<f64>() < ((r - current) / temp).exp() {
            sizes[a] = na;
            sizes[b] = nb;
            hist[ka] -= 1;
            hist[kb] -= 1;
            hist[na] += 1;
            hist[nb] += 1;
            m += dm;
            o += dopt;
            current = r;
            if current > best.1 {
                best = (sizes.clone(), current);
            }
        }
        if step % refresh == refresh - 1 && (best.1 - level).abs() > 1e-9 {
            level = best.1;
            table = SizeTable::at_level(q, d, level);
            let t = table.totals(&hist);
            m = t.0;
            o = t.1;
            current = ratio_of(m, o);
        }
    }
    let mut hist = vec![0usize; d + 1];
    best.0.iter().for_each(|&k| hist[k] += 1);
    let (table, r) = optimize_scales(q, d, &hist, 1.0);
    (best.0, table.scales, r)
}

fn realize(cfg: &Config, scales: &[f64]) -> Result<Instance> {
    let points = cfg
        .sets
        .iter()
        .zip(&cfg.sizes)
        .map(|(set, &k)| {
            let v = 1.0 + scales[k];
            Point::new(set.iter().map(|&b| if b { v } else { 0.0 }).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(points)
}

/// Worst-case search over balanced structured configurations.
///
/// Each point is described by its positive set `S_i` and a scale: its
/// coordinates are `1/(1-c_i)` on `S_i` and 0 elsewhere, and every coordinate
/// is positive in exactly `n/2` points, so the LOWER median is the origin.
/// The objective is the ratio against the all-ones facility. It depends on
/// the sets only through their sizes, so moves transfer one or several
/// coordinates between two points' sets (changing both sizes) under
/// simulated annealing, and points of equal size share the optimal scale
/// from a Dinkelbach iteration. The final sizes are realized as explicit
/// balanced sets and the instance is re-scored by a fresh solver run.
pub fn adversarial_search(
    q: NormOrder,
    d: usize,
    n: usize,
    restarts: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<SearchResult> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::Infeasible(format!(
            "balanced sign patterns need even n, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let moves = 2000 * n;
    let runs: Vec<(Vec<usize>, Vec<f64>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            local_search(q, d, n, &mut rng, moves)
        })
        .collect();
    let (sizes, scales, proxy) = runs
        .into_iter()
        .fold(None::<(Vec<usize>, Vec<f64>, f64)>, |acc, run| match acc {
            Some(best) if best.2 >= run.2 => Some(best),
            _ => Some(run),
        })
        .expect("restarts >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restarts as u64);
    let cfg = Config::from_sizes(&sizes, d, &mut rng);
    let inst = realize(&cfg, &scales)?;
    let report = evaluate_with_hints(&inst, q, solver, &CoordinateMedian::default(), &[Point::splat(d, 1.0)])?;
    Ok(SearchResult {
        best_ratio: report.empirical_ratio,
        best_instance: inst,
        proxy_ratio: proxy,
        restarts_used: restarts,
        q,
        d,
        n,
        report,
    })
}

/// [`evaluate_mechanism`] where additional known facilities also compete
/// for the optimum.
pub fn evaluate_with_hints(
    instance: &Instance,
    q: NormOrder,
    solver: &SolverConfig,
    mechanism: &dyn Mechanism,
    hints: &[Point],
) -> Result<EvalReport> {
    let mut report = evaluate_mechanism(instance, q, solver, mechanism)?;
    for h in hints {
        let c = social_cost(instance, h, q)?;
        if c < report.sc_optimal {
            report.sc_optimal = c;
            report.optimal_point = h.clone();
        }
    }
    report.empirical_ratio = if report.sc_optimal > 0.0 {
        report.sc_mechanism / report.sc_optimal
    } else {
        1.0
    };
    Ok(report)
}

/// Coordinate-wise random ascent of the ratio over arbitrary small instances,
/// without the structural restriction of [`adversarial_search`]. Every step
/// re-solves for the optimum, so this is only practical for small `d` and `n`.
pub fn unstructured_search(
    q: NormOrder,
    d: usize,
    n: usize,
    iters: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<SearchResult> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter("d and n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mech = CoordinateMedian::default();
    let score = |rows: &[Vec<f64>]| -> Result<f64> {
        let inst = Instance::from_rows(rows.to_vec())?;
        Ok(evaluate_mechanism(&inst, q, solver, &mech)?.empirical_ratio)
    };
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut best = score(&rows)?;
    let mut step = 1.0;
    for it in 0..iters {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..d);
        let old = rows[i][j];
        rows[i][j] += step * rng.sample::<f64, _>(StandardNormal);
        let r = score(&rows)?;
        if r > best {
            best = r;
        } else {
            rows[i][j] = old;
        }
        if it % 200 == 199 {
            step *= 0.7;
        }
    }
    let inst = Instance::from_rows(rows)?;
    let report = evaluate_mechanism(&inst, q, solver, &mech)?;
    Ok(SearchResult {
        best_ratio: report.empirical_ratio,
        best_instance: inst,
        proxy_ratio: best,
        restarts_used: 1,
        q,
        d,
        n,
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub predicted_lb: f64,
    /// `None` when only the closed form was evaluated.
    pub empirical_lb: Option<f64>,
    pub ub: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LbSweep {
    pub q: NormOrder,
    pub rows: Vec<SweepRow>,
    /// Dimensions that could not be built, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Least-squares `C` in `gap ≈ C/d`.
    pub fitted_c: Option<f64>,
}

impl LbSweep {
    pub fn predicted_nondecreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].predicted_lb >= w[0].predicted_lb)
    }

    /// Non-increasing step to step and strictly smaller at the end. Dimensions
    /// with equal `⌊a*·d⌋/d` give identical gaps, so strict steps are not
    /// available on every grid.
    pub fn gap_decreasing(&self) -> bool {
        let steps = self.rows.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-12);
        steps && self.rows.len() >= 2 && self.rows[self.rows.len() - 1].gap < self.rows[0].gap
    }

    /// Rows whose empirical ratio is off the prediction by more than `rel_tol`.
    pub fn mismatches(&self, rel_tol: f64) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| {
                r.empirical_lb
                    .is_some_and(|e| (e - r.predicted_lb).abs() > rel_tol * r.predicted_lb)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    /// Build and evaluate instances up to this dimension; larger `d` use the
    /// closed form only.
    pub build_max_d: usize,
    pub n: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            build_max_d: 1024,
            n: 10_000,
            seed: 0,
            solver: SolverConfig {
                restarts: 1,
                ..SolverConfig::default()
            },
        }
    }
}

/// Predicted and built-instance ratios of the lower-bound family across `d`.
pub fn lb_sweep(q: NormOrder, d_list: &[usize], opts: &SweepOptions) -> Result<LbSweep> {
    if q.is_one() {
        return Err(Error::UnsupportedNormOrder(q.to_string()));
    }
    let mut dims = d_list.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let ub = bounds::ub(q)?.ub;
    let results: Vec<(usize, Result<SweepRow>)> = dims
        .par_iter()
        .map(|&d| {
            let row = (|| -> Result<SweepRow> {
                let predicted = bounds::lb_ratio(q, d)?;
                let empirical = if d <= opts.build_max_d {
                    let inst = if q.is_infinite() {
                        gen_linf_instance(d, opts.n, opts.seed)?
                    } else {
                        gen_lb_instance(q, d, opts.n, opts.seed)?
                    };
                    let rep = evaluate_with_hints(
                        &inst,
                        q,
                        &opts.solver,
                        &CoordinateMedian::default(),
                        &[Point::splat(d, 1.0)],
                    )?;
                    Some(rep.empirical_ratio)
                } else {
                    None
                };
                Ok(SweepRow {
                    d,
                    predicted_lb: predicted,
                    empirical_lb: empirical,
                    ub,
                    gap: ub - predicted,
                })
            })();
            (d, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (d, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e @ (Error::Infeasible(_) | Error::MedianValidation(_))) => skipped.push((d, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let fit: Vec<(usize, f64)> = rows.iter().map(|r| (r.d, r.gap)).collect();
    Ok(LbSweep {
        q,
        fitted_c: bounds::fit_gap_constant(&fit),
        rows,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_vector() {
        assert!(SignVector::new(vec![1, 0]).is_err());
        let s = SignVector::of_point(&[0.0, 2.0, -1.0]);
        assert_eq!(s.signs(), &[-1, 1, -1]);
        assert_eq!(s.positives(), 1);
        let bal = signature_balance(&[s.clone(), SignVector::new(vec![1, -1, 1]).unwrap()]);
        assert_eq!(bal, vec![0, 0, 0]);
    }

    #[test]
    fn certificate_at_tangency() {
        let sol = bounds::ub(NormOrder::TWO).unwrap();
        let rep = certificate_check(NormOrder::TWO, sol.lambda_star, 10_000).unwrap();
        assert!(rep.pass);
        assert!(rep.min_u.abs() <= 1e-8, "{}", rep.min_u);
        assert!((rep.argmin_a - (1.0 - 3f64.sqrt() / 2.0)).abs() <= 1e-5);
    }

    #[test]
    fn certificate_perturbations() {
        let lam = bounds::ub(NormOrder::TWO).unwrap().lambda_star;
        assert!(!certificate_check(NormOrder::TWO, lam + 0.01, 10_000).unwrap().pass);
        let below = certificate_check(NormOrder::TWO, lam - 0.01, 10_000).unwrap();
        assert!(below.pass && below.min_u > 0.0);
        assert!(certificate_check(NormOrder::TWO, lam, 10).is_err());
        assert!(certificate_check(NormOrder::TWO, 1.5, 1000).is_err());
    }

    #[test]
    fn mean_self_test() {
        let cfg = SpConfig {
            trials: 500,
            ..Default::default()
        };
        let rep = strategyproofness_suite(&MechanismKind::Mean, &cfg).unwrap();
        assert!(rep.violations > 0);
    }

    #[test]
    fn median_small_run() {
        let cfg = SpConfig {
            trials: 500,
            ..Default::default()
        };
        let rep = strategyproofness_suite(
            &MechanismKind::Median {
                tie_break: TieBreak::Lower,
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn search_rejects_odd_n() {
        assert!(adversarial_search(NormOrder::TWO, 4, 5, 1, 0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn structured_costs_match_direct_evaluation() {
        let q = NormOrder::new(3.0).unwrap();
        let d = 5;
        let t = 0.7;
        let p = [1.0 + t, 1.0 + t, 0.0, 0.0, 0.0];
        let (m, o) = structured_costs(q, d, 2, t);
        assert!((m - crate::norms::lq_norm(&p, q)).abs() < 1e-12);
        assert!((o - crate::norms::lq_dist(&p, &[1.0; 5], q).unwrap()).abs() < 1e-12);
        let (m, o) = structured_costs(NormOrder::INFINITY, d, 2, t);
        assert_eq!((m, o), (1.7, 1.0));
    }
}
