//! Lower-bound instance families, random instances, and JSON persistence.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::lb_params;
use crate::error::{Error, Result};
use crate::mechanisms::{coordinate_median, Instance, Meta, TieBreak};
use crate::norms::{NormOrder, Point};

pub const FORMAT_VERSION: &str = "1";
pub const FILE_EXTENSION: &str = ".inst.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    LbGeneral,
    LbLinf,
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    UniformCube,
    Gaussian,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" | "uniform_cube" | "cube" => Ok(Distribution::UniformCube),
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            _ => Err(Error::InvalidParameter(format!("unknown distribution '{s}'"))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::UniformCube => "uniform_cube",
            Distribution::Gaussian => "gaussian",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub q: NormOrder,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub distribution: Distribution,
}

impl GeneratorSpec {
    pub fn random(d: usize, n: usize, seed: u64, distribution: Distribution) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Random,
            q: NormOrder::TWO,
            d,
            n,
            seed,
            distribution,
        }
    }
}

/// Builds the instance described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    match spec.kind {
        GeneratorKind::LbGeneral => gen_lb_instance(spec.q, spec.d, spec.n, spec.seed),
        GeneratorKind::LbLinf => gen_linf_instance(spec.d, spec.n, spec.seed),
        GeneratorKind::Random => gen_random_instance(spec),
    }
}

fn validate_zero_median(inst: &Instance) -> Result<()> {
    let m = coordinate_median(inst, TieBreak::Lower)?;
    if let Some((j, v)) = m.iter().enumerate().find(|(_, v)| **v != 0.0) {
        return Err(Error::MedianValidation(format!(
            "coordinate {j} of the median is {v}, expected 0"
        )));
    }
    Ok(())
}

/// Lower-bound family for finite `q > 1`.
///
/// Type I points have `k = ⌊a*·d⌋` coordinates equal to `1/(1-c*)` and the
/// rest 0; Type II points are all ones. The positive sets of Type I points
/// walk round-robin through a seeded permutation of the coordinates, so every
/// coordinate receives `⌊t₁k/d⌋` or `⌈t₁k/d⌉` of them.
pub fn gen_lb_instance(q: NormOrder, d: usize, n: usize, seed: u64) -> Result<Instance> {
    if q.interior().is_none() {
        return Err(Error::UnsupportedNormOrder(q.to_string()));
    }
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let params = lb_params(q)?;
    let k = (params.a_star * d as f64).floor() as usize;
    if k == 0 {
        return Err(Error::Infeasible(format!(
            "floor(a*·d) = floor({:.6}) = 0 for q = {q}, d = {d}",
            params.a_star * d as f64
        )));
    }
    let exact_t1 = n as f64 * params.frac_type1;
    let t1 = exact_t1.round() as usize;
    let t2 = n.saturating_sub(t1);
    if t1 == 0 || t2 == 0 {
        return Err(Error::Infeasible(format!(
            "n = {n} gives {t1} Type I and {t2} Type II points; both must be positive"
        )));
    }
    // per coordinate, zeros come only from Type I points; LOWER keeps the
    // median at 0 iff zeros >= n/2
    let max_positive = (t1 * k).div_ceil(d);
    if 2 * (t1 - max_positive) < n {
        return Err(Error::MedianValidation(format!(
            "{} zero entries in some coordinate, fewer than n/2 = {}",
            t1 - max_positive,
            n as f64 / 2.0
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let value = params.type1_coord;
    let mut points = Vec::with_capacity(n);
    for t in 0..t1 {
        let mut row = vec![0.0; d];
        for s in 0..k {
            row[perm[(t * k + s) % d]] = value;
        }
        points.push(Point::new(row)?);
    }
    points.extend((0..t2).map(|_| Point::splat(d, 1.0)));

    let meta = Meta::new("lb_general")
        .param("q", q.value())
        .param("d", d)
        .param("n", n)
        .param("k", k)
        .param("a_star", params.a_star)
        .param("c_star", params.c_star)
        .param("type1", t1)
        .param("type2", t2)
        .param("type1_rounding", t1 as f64 - exact_t1)
        .seed(seed);
    let inst = Instance::new(points)?.with_meta(meta);
    validate_zero_median(&inst)?;
    Ok(inst)
}

/// The lower-bound family without integer rounding: the `d/gcd(k, d)`
/// distinct cyclic Type I patterns share weight `1/(2-2a*)` equally and the
/// all-ones point carries `(1-2a*)/(2-2a*)`. Total weight is 1.
pub fn gen_lb_weighted(q: NormOrder, d: usize) -> Result<Instance> {
    if q.interior().is_none() {
        return Err(Error::UnsupportedNormOrder(q.to_string()));
    }
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let params = lb_params(q)?;
    let k = (params.a_star * d as f64).floor() as usize;
    if k == 0 {
        return Err(Error::Infeasible(format!(
            "floor(a*·d) = floor({:.6}) = 0 for q = {q}, d = {d}",
            params.a_star * d as f64
        )));
    }
    let patterns = d / gcd(k, d);
    let mut points = Vec::with_capacity(patterns + 1);
    for t in 0..patterns {
        let mut row = vec![0.0; d];
        for s in 0..k {
            row[(t * k + s) % d] = params.type1_coord;
        }
        points.push(Point::new(row)?);
    }
    points.push(Point::splat(d, 1.0));
    let mut weights = vec![params.frac_type1 / patterns as f64; patterns];
    weights.push(params.frac_type2);
    let meta = Meta::new("lb_weighted")
        .param("q", q.value())
        .param("d", d)
        .param("k", k)
        .param("patterns", patterns);
    let inst = Instance::with_weights(points, weights)?.with_meta(meta);
    validate_zero_median(&inst)?;
    Ok(inst)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Balanced L∞ lower-bound family.
///
/// For `m = ⌈n / (2(d-1))⌉` the instance has `d·m` Type I points (one
/// coordinate equal to 2, rest 0; each coordinate used by `m` of them) and
/// `(d-2)·m` all-ones Type II points, `2(d-1)·m` in total. Every coordinate
/// then has exactly half its entries at 0, so the LOWER median is the origin,
/// while the all-ones facility is optimal. The ratio is `3 - 2/d`.
///
/// `d = 1` is rejected: in one dimension the median is optimal.
pub fn gen_linf_instance(d: usize, n: usize, seed: u64) -> Result<Instance> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if d == 1 {
        return Err(Error::Infeasible(
            "the L-infinity family needs d >= 2; in one dimension the median is optimal".into(),
        ));
    }
    let block = 2 * (d - 1);
    let m = n.div_ceil(block).max(1);
    let total = block * m;
    let mut points = Vec::with_capacity(total);
    for j in 0..d {
        let mut row = vec![0.0; d];
        row[j] = 2.0;
        let p = Point::new(row)?;
        points.extend(std::iter::repeat_n(p, m));
    }
    points.extend(std::iter::repeat_n(Point::splat(d, 1.0), (d - 2) * m));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    points.shuffle(&mut rng);

    let meta = Meta::new("lb_linf")
        .param("d", d)
        .param("n_requested", n)
        .param("n", total)
        .param("type1", d * m)
        .param("type2", (d - 2) * m)
        .param("predicted_ratio", linf_ratio(d))
        .seed(seed);
    let inst = Instance::new(points)?.with_meta(meta);
    validate_zero_median(&inst)?;
    Ok(inst)
}

/// Ratio attained by [`gen_linf_instance`], `3 - 2/d`.
pub fn linf_ratio(d: usize) -> f64 {
    3.0 - 2.0 / d as f64
}

/// `n` i.i.d. points from `spec.distribution`; deterministic in the seed.
pub fn gen_random_instance(spec: &GeneratorSpec) -> Result<Instance> {
    if spec.d == 0 {
        return Err(Error::ZeroDimension);
    }
    if spec.n == 0 {
        return Err(Error::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let points = (0..spec.n)
        .map(|_| {
            let row: Vec<f64> = (0..spec.d)
                .map(|_| match spec.distribution {
                    Distribution::UniformCube => rng.random::<f64>(),
                    Distribution::Gaussian => rng.sample(StandardNormal),
                })
                .collect();
            Point::new(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = Meta::new("random")
        .param("distribution", spec.distribution.to_string())
        .param("d", spec.d)
        .param("n", spec.n)
        .seed(spec.seed);
    Ok(Instance::new(points)?.with_meta(meta))
}

/// How coordinates are written to disk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// JSON numbers in shortest round-trip form.
    #[default]
    Decimal,
    /// C99 hexadecimal float strings such as `"0x1.8p+1"`.
    Hex,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decimal" => Ok(Encoding::Decimal),
            "hex" => Ok(Encoding::Hex),
            _ => Err(Error::InvalidParameter(format!("unknown encoding '{s}'"))),
        }
    }
}

/// Formats a finite float as a C99 hex-float literal.
pub fn format_hex(x: f64) -> String {
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x == 0.0 {
        return format!("{sign}0x0p+0");
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mut mant = bits & ((1u64 << 52) - 1);
    let (lead, exp) = if exp_bits == 0 {
        (0, -1022)
    } else {
        (1, exp_bits - 1023)
    };
    if mant == 0 {
        return format!("{sign}0x{lead}p{exp:+}");
    }
    let mut digits = 13;
    while mant & 0xf == 0 {
        mant >>= 4;
        digits -= 1;
    }
    format!("{sign}0x{lead}.{mant:0digits$x}p{exp:+}")
}

/// Parses a hex-float literal produced by [`format_hex`] (or any C99 `%a` output).
pub fn parse_hex(s: &str) -> Result<f64> {
    let bad = || Error::Format(format!("invalid hex float '{s}'"));
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).ok_or_else(bad)?;
    let (mantissa, exp) = t.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    // accumulate up to 64 bits of mantissa exactly
    let mut m: u64 = 0;
    let mut shift: i32 = 0;
    let mut sticky = false;
    for (is_frac, c) in int_part
        .chars()
        .map(|c| (false, c))
        .chain(frac_part.chars().map(|c| (true, c)))
    {
        let v = c.to_digit(16).ok_or_else(bad)? as u64;
        if m >> 60 == 0 {
            m = (m << 4) | v;
            if is_frac {
                shift -= 4;
            }
        } else {
            sticky |= v != 0;
            if !is_frac {
                shift += 4;
            }
        }
    }
    if m == 0 {
        return Ok(if neg { -0.0 } else { 0.0 });
    }
    if sticky {
        // beyond double precision; the parser only accepts exact inputs
        return Err(bad());
    }
    if 63 - m.leading_zeros() as i32 - m.trailing_zeros() as i32 >= 53 {
        return Err(bad());
    }
    // m·2^scale, applied in steps that keep intermediates normal
    let mut value = m as f64;
    let mut scale = exp + shift;
    while scale > 1000 {
        value *= 2f64.powi(1000);
        scale -= 1000;
    }
    while scale < -1000 {
        value *= 2f64.powi(-1000);
        scale += 1000;
    }
    value *= 2f64.powi(scale);
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(if neg { -value } else { value })
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default)]
    version: Option<Value>,
    d: usize,
    n: usize,
    #[serde(default)]
    encoding: Encoding,
    points: Vec<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Value>>,
    #[serde(default)]
    meta: Meta,
}

fn encode(x: f64, encoding: Encoding) -> Value {
    match encoding {
        Encoding::Decimal => Value::from(x),
        Encoding::Hex => Value::String(format_hex(x)),
    }
}

fn decode(v: &Value) -> Result<f64> {
    match v {
        Value::Number(num) => num
            .as_f64()
            .ok_or_else(|| Error::Format(format!("number {num} is not representable"))),
        Value::String(s) => parse_hex(s),
        other => Err(Error::Format(format!("expected a number, got {other}"))),
    }
}

/// Serializes an instance to the versioned JSON schema.
pub fn to_json(inst: &Instance, encoding: Encoding) -> Result<String> {
    let file = InstanceFile {
        version: Some(Value::String(FORMAT_VERSION.into())),
        d: inst.dim(),
        n: inst.len(),
        encoding,
        points: inst
            .points()
            .iter()
            .map(|p| p.iter().map(|&x| encode(x, encoding)).collect())
            .collect(),
        weights: inst.weights().map(|w| w.iter().map(|&x| encode(x, encoding)).collect()),
        meta: inst.meta().clone(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_json(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    match &file.version {
        None => return Err(Error::Version("missing version field".into())),
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(other) => {
            return Err(Error::Version(format!(
                "unsupported version {other}, expected \"{FORMAT_VERSION}\""
            )))
        }
    }
    if file.points.len() != file.n {
        return Err(Error::Format(format!(
            "header says n = {} but {} points are present",
            file.n,
            file.points.len()
        )));
    }
    let mut points = Vec::with_capacity(file.n);
    for row in &file.points {
        if row.len() != file.d {
            return Err(Error::DimensionMismatch {
                expected: file.d,
                found: row.len(),
            });
        }
        points.push(Point::new(row.iter().map(decode).collect::<Result<_>>()?)?);
    }
    let inst = match &file.weights {
        Some(w) => Instance::with_weights(points, w.iter().map(decode).collect::<Result<_>>()?)?,
        None => Instance::new(points)?,
    };
    Ok(inst.with_meta(file.meta))
}

pub fn save_instance(inst: &Instance, path: &Path, encoding: Encoding) -> Result<()> {
    let text = to_json(inst, encoding)?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text)
}
