//! L_q distances and social cost over dense real vectors.
//!
//! The exponent `q` ranges over `[1, ∞]`. The infinite case is its own
//! variant rather than a large float, and every formula that needs the
//! conjugate exponents `q/(q-1)` or `(q-1)/q` asks [`NormOrder`] for them
//! and handles their absence at `q = 1` and `q = ∞` explicitly.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mechanisms::Instance;

/// Sums longer than this use compensated accumulation.
pub const COMPENSATED_SUM_THRESHOLD: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Order {
    Finite {
        q: f64,
        // q/(q-1) and (q-1)/q, present iff 1 < q < inf
        qq1: Option<f64>,
        q1q: Option<f64>,
    },
    Infinity,
}

/// The exponent `q ∈ [1, ∞]` of an L_q norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOrder(Order);

impl NormOrder {
    pub const ONE: NormOrder = NormOrder(Order::Finite {
        q: 1.0,
        qq1: None,
        q1q: None,
    });
    pub const TWO: NormOrder = NormOrder(Order::Finite {
        q: 2.0,
        qq1: Some(2.0),
        q1q: Some(0.5),
    });
    pub const INFINITY: NormOrder = NormOrder(Order::Infinity);

    /// Builds an order from a float; `f64::INFINITY` maps to the infinite variant.
    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            return Ok(Self::INFINITY);
        }
        if !q.is_finite() || q < 1.0 {
            return Err(Error::InvalidNormOrder(q));
        }
        let (qq1, q1q) = if q > 1.0 {
            (Some(q / (q - 1.0)), Some((q - 1.0) / q))
        } else {
            (None, None)
        };
        Ok(NormOrder(Order::Finite { q, qq1, q1q }))
    }

    /// The exponent as a float (`f64::INFINITY` for the infinite variant).
    pub fn value(self) -> f64 {
        match self.0 {
            Order::Finite { q, .. } => q,
            Order::Infinity => f64::INFINITY,
        }
    }

    /// `Some(q)` when finite.
    pub fn finite(self) -> Option<f64> {
        match self.0 {
            Order::Finite { q, .. } => Some(q),
            Order::Infinity => None,
        }
    }

    /// `Some(q)` when `1 < q < ∞`, the range where the conjugate exponents exist.
    pub fn interior(self) -> Option<f64> {
        match self.0 {
            Order::Finite { q, qq1: Some(_), .. } => Some(q),
            _ => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self.0, Order::Infinity)
    }

    pub fn is_one(self) -> bool {
        matches!(self.0, Order::Finite { q, .. } if q == 1.0)
    }

    /// `q/(q-1)`, undefined at both ends.
    pub fn conjugate(self) -> Option<f64> {
        match self.0 {
            Order::Finite { qq1, .. } => qq1,
            Order::Infinity => None,
        }
    }

    /// `(q-1)/q`, undefined at both ends.
    pub fn conjugate_inv(self) -> Option<f64> {
        match self.0 {
            Order::Finite { q1q, .. } => q1q,
            Order::Infinity => None,
        }
    }

    /// The dual order `q* = q/(q-1)`, with `1* = ∞` and `∞* = 1`.
    pub fn dual(self) -> NormOrder {
        match self.0 {
            Order::Infinity => Self::ONE,
            Order::Finite { qq1: None, .. } => Self::INFINITY,
            Order::Finite { qq1: Some(d), .. } => NormOrder::new(d).expect("conjugate of q > 1 is a valid order"),
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Order::Finite { q, .. } => write!(f, "{q}"),
            Order::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Self::INFINITY);
        }
        let q: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse norm order '{s}'")))?;
        NormOrder::new(q)
    }
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Order::Finite { q, .. } => s.serialize_f64(q),
            Order::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let order = match Raw::deserialize(d)? {
            Raw::Num(q) => NormOrder::new(q),
            Raw::Text(s) => s.parse(),
        };
        order.map_err(serde::de::Error::custom)
    }
}

/// A location in R^d with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index, value });
        }
        Ok(Point(coords))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be >= 1");
        Point(vec![0.0; d])
    }

    pub fn splat(d: usize, value: f64) -> Self {
        assert!(d >= 1 && value.is_finite());
        Point(vec![value; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Point> {
        check_dims(self.dim(), shift.len())?;
        Point::new(self.0.iter().zip(shift).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Result<Point> {
        Point::new(self.0.iter().map(|a| a * alpha).collect())
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        Point::new(coords).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sums an iterator, switching to compensated accumulation for long inputs.
pub(crate) fn sum_with_len(len: usize, values: impl Iterator<Item = f64>) -> f64 {
    if len > COMPENSATED_SUM_THRESHOLD {
        let mut acc = CompensatedSum::default();
        values.for_each(|v| acc.add(v));
        acc.total()
    } else {
        values.sum()
    }
}

/// `|x|^q` as `exp(q ln|x|)`, zero at zero.
#[inline]
pub fn pow_abs(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (q * x.abs().ln()).exp()
    }
}

// Norm of the vector whose j-th entry is `entry(j)`, j in 0..len. The entries
// are rescaled by their max magnitude so that large q neither overflows nor
// underflows the dominant terms.
pub(crate) fn norm_by(len: usize, entry: impl Fn(usize) -> f64, q: NormOrder) -> f64 {
    let max = (0..len).fold(0.0_f64, |m, j| m.max(entry(j).abs()));
    let q = match q.finite() {
        None => return max,
        Some(q) => q,
    };
    if max == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return sum_with_len(len, (0..len).map(|j| entry(j).abs()));
    }
    if q == 2.0 {
        let s = sum_with_len(
            len,
            (0..len).map(|j| {
                let v = entry(j) / max;
                v * v
            }),
        );
        return max * s.sqrt();
    }
    let s = sum_with_len(len, (0..len).map(|j| pow_abs(entry(j) / max, q)));
    max * (s.ln() / q).exp()
}

/// `(Σ|x_j|^q)^{1/q}`, or `max_j |x_j|` for `q = ∞`.
pub fn lq_norm(x: &[f64], q: NormOrder) -> f64 {
    norm_by(x.len(), |j| x[j], q)
}

/// `lq_norm(x - y, q)`.
pub fn lq_dist(x: &[f64], y: &[f64], q: NormOrder) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    Ok(norm_by(x.len(), |j| x[j] - y[j], q))
}

/// Weighted sum of distances from every point of the instance to `f`.
pub fn social_cost(instance: &Instance, f: &[f64], q: NormOrder) -> Result<f64> {
    check_dims(instance.dim(), f.len())?;
    let n = instance.len();
    Ok(sum_with_len(
        n,
        (0..n).map(|i| instance.weight(i) * norm_by(f.len(), |j| instance.points()[i][j] - f[j], q)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> NormOrder {
        NormOrder::new(v).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(lq_norm(&[3.0, 4.0], NormOrder::TWO), 5.0);
        assert_eq!(lq_norm(&[-1.0, 1.0, -1.0], NormOrder::INFINITY), 1.0);
        assert_eq!(lq_norm(&[1.0, 1.0], NormOrder::ONE), 2.0);
        assert_eq!(lq_norm(&[0.0, 0.0], q(3.7)), 0.0);
    }

    #[test]
    fn dist_examples() {
        assert_eq!(lq_dist(&[0.0, 0.0], &[3.0, 4.0], NormOrder::TWO).unwrap(), 5.0);
        let x = [0.3, -2.0, 7.5];
        for order in [NormOrder::ONE, NormOrder::TWO, q(2.5), NormOrder::INFINITY] {
            assert_eq!(lq_dist(&x, &x, order).unwrap(), 0.0);
        }
        let v = lq_dist(&[0.0; 3], &[1.0; 3], q(3.0)).unwrap();
        assert!((v - 3f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((v - 1.44225).abs() < 1e-5);
    }

    #[test]
    fn dist_dimension_mismatch() {
        let err = lq_dist(&[1.0], &[1.0, 2.0], NormOrder::TWO).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, found: 2 }));
    }

    #[test]
    fn order_construction() {
        assert!(NormOrder::new(0.5).is_err());
        assert!(NormOrder::new(f64::NAN).is_err());
        assert_eq!(NormOrder::ONE.conjugate(), None);
        assert_eq!(NormOrder::INFINITY.conjugate_inv(), None);
        let o = q(3.0);
        assert_eq!(o.conjugate(), Some(1.5));
        assert!((o.conjugate_inv().unwrap() - 2.0 / 3.0).abs() < 1e-16);
        assert_eq!("inf".parse::<NormOrder>().unwrap(), NormOrder::INFINITY);
        assert_eq!("2".parse::<NormOrder>().unwrap(), NormOrder::TWO);
        assert!("0.3".parse::<NormOrder>().is_err());
        assert_eq!(NormOrder::ONE.dual(), NormOrder::INFINITY);
        assert_eq!(NormOrder::TWO.dual(), NormOrder::TWO);
    }

    #[test]
    fn order_serde() {
        let s = serde_json::to_string(&[NormOrder::TWO, NormOrder::INFINITY]).unwrap();
        assert_eq!(s, r#"[2.0,"inf"]"#);
        let back: Vec<NormOrder> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![NormOrder::TWO, NormOrder::INFINITY]);
    }

    #[test]
    fn point_rejects_non_finite() {
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(vec![]).is_err());
    }

    #[test]
    fn large_q_does_not_overflow() {
        let x = [1e200, 3e199, -1e200];
        let v = lq_norm(&x, q(50.0));
        assert!(v.is_finite() && v >= 1e200);
    }

    #[test]
    fn compensated_long_sum() {
        // 1 followed by many tiny values that plain summation drops
        let mut v = vec![1e-16; 1_000_000];
        v[0] = 1.0;
        let s = lq_norm(&v, NormOrder::ONE);
        assert!((s - (1.0 + 999_999.0 * 1e-16)).abs() < 1e-15);
    }
}
