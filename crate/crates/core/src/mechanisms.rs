//! The coordinate-wise median and its prediction-augmented variant.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{check_dims, lq_dist, NormOrder, Point};

/// Which middle order statistic to take when the weight splits evenly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    Lower,
    Upper,
}

impl std::str::FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(TieBreak::Lower),
            "upper" => Ok(TieBreak::Upper),
            _ => Err(Error::InvalidParameter(format!("unknown tie-break rule '{s}'"))),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Lower => "lower",
            TieBreak::Upper => "upper",
        })
    }
}

/// Provenance of an instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Meta {
    pub fn new(generator: impl Into<String>) -> Self {
        Meta {
            generator: generator.into(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// A nonempty set of agent locations of common dimension, optionally weighted.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    points: Vec<Point>,
    weights: Option<Vec<f64>>,
    meta: Meta,
}

impl Instance {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInstance)?;
        let d = first.dim();
        for p in &points {
            check_dims(d, p.dim())?;
        }
        Ok(Instance {
            points,
            weights: None,
            meta: Meta::default(),
        })
    }

    pub fn with_weights(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let mut inst = Instance::new(points)?;
        if weights.len() != inst.points.len() {
            return Err(Error::WeightCount {
                points: inst.points.len(),
                weights: weights.len(),
            });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeight { index, value });
        }
        inst.weights = Some(weights);
        Ok(inst)
    }

    /// Convenience constructor from raw rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Instance::new(rows.into_iter().map(Point::new).collect::<Result<_>>()?)
    }

    pub fn with_meta(mut self, meta: Meta) -> Self {
        self.meta = meta;
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn total_weight(&self) -> f64 {
        match &self.weights {
            Some(w) => w.iter().sum(),
            None => self.points.len() as f64,
        }
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut Meta {
        &mut self.meta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// A copy with point `i` replaced by `report`.
    pub fn with_point_replaced(&self, i: usize, report: Point) -> Result<Instance> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.len(),
            });
        }
        check_dims(self.dim(), report.dim())?;
        let mut out = self.clone();
        out.points[i] = report;
        Ok(out)
    }

    /// Points that coincide exactly are merged and their weights added.
    pub fn deduplicated(&self) -> Instance {
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut points = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            match index.get(&key) {
                Some(&k) => weights[k] += self.weight(i),
                None => {
                    index.insert(key, points.len());
                    points.push(p.clone());
                    weights.push(self.weight(i));
                }
            }
        }
        Instance {
            points,
            weights: Some(weights),
            meta: self.meta.clone(),
        }
    }
}

/// Weighted median of `(value, weight)` pairs.
///
/// `Lower` returns the smallest value whose cumulative weight from below
/// reaches half the total; `Upper` the largest value whose cumulative weight
/// from above reaches half the total. Zero-weight entries never win.
pub fn weighted_median(entries: &mut [(f64, f64)], tie_break: TieBreak) -> Option<f64> {
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = entries.iter().map(|e| e.1).sum();
    if total <= 0.0 {
        return None;
    }
    let half = total / 2.0;
    let mut cum = 0.0;
    match tie_break {
        TieBreak::Lower => {
            for &(v, w) in entries.iter() {
                cum += w;
                if w > 0.0 && cum >= half {
                    return Some(v);
                }
            }
        }
        TieBreak::Upper => {
            for &(v, w) in entries.iter().rev() {
                cum += w;
                if w > 0.0 && cum >= half {
                    return Some(v);
                }
            }
        }
    }
    entries.iter().rev().find(|e| e.1 > 0.0).map(|e| e.0)
}

fn median_with_extra(instance: &Instance, extra: Option<(&[f64], f64)>, tie_break: TieBreak) -> Result<Point> {
    if instance.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let d = instance.dim();
    let n = instance.len();
    let mut column: Vec<(f64, f64)> = Vec::with_capacity(n + 1);
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        column.clear();
        column.extend((0..n).map(|i| (instance.points()[i][j], instance.weight(i))));
        if let Some((p, w)) = extra {
            column.push((p[j], w));
        }
        out.push(weighted_median(&mut column, tie_break).ok_or(Error::EmptyInstance)?);
    }
    Point::new(out)
}

/// Per-coordinate (weighted) median of the instance.
pub fn coordinate_median(instance: &Instance, tie_break: TieBreak) -> Result<Point> {
    median_with_extra(instance, None, tie_break)
}

/// Coordinate-wise median after adding the prediction with weight
/// `c · total_weight(instance)`.
pub fn cmp_median(instance: &Instance, prediction: &[f64], c: f64, tie_break: TieBreak) -> Result<Point> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("c must lie in [0, 1), got {c}")));
    }
    check_dims(instance.dim(), prediction.len())?;
    if c == 0.0 {
        return coordinate_median(instance, tie_break);
    }
    median_with_extra(instance, Some((prediction, c * instance.total_weight())), tie_break)
}

/// A deterministic facility-placement rule.
pub trait Mechanism: Send + Sync {
    fn name(&self) -> String;
    fn place(&self, instance: &Instance) -> Result<Point>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CoordinateMedian {
    pub tie_break: TieBreak,
}

impl Mechanism for CoordinateMedian {
    fn name(&self) -> String {
        format!("median[{}]", self.tie_break)
    }

    fn place(&self, instance: &Instance) -> Result<Point> {
        coordinate_median(instance, self.tie_break)
    }
}

/// CMP(c): coordinate-wise median with `c·n` mass placed at a predicted point.
#[derive(Clone, Debug)]
pub struct PredictionMedian {
    pub prediction: Point,
    pub c: f64,
    pub tie_break: TieBreak,
}

impl PredictionMedian {
    pub fn new(prediction: Point, c: f64, tie_break: TieBreak) -> Result<Self> {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::InvalidParameter(format!("c must lie in [0, 1), got {c}")));
        }
        Ok(PredictionMedian {
            prediction,
            c,
            tie_break,
        })
    }
}

impl Mechanism for PredictionMedian {
    fn name(&self) -> String {
        format!("cmp[c={}, {}]", self.c, self.tie_break)
    }

    fn place(&self, instance: &Instance) -> Result<Point> {
        cmp_median(instance, &self.prediction, self.c, self.tie_break)
    }
}

/// Weighted centroid. Not strategy-proof; used to check that the
/// strategy-proofness harness can detect manipulation.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanMechanism;

impl Mechanism for MeanMechanism {
    fn name(&self) -> String {
        "mean".into()
    }

    fn place(&self, instance: &Instance) -> Result<Point> {
        if instance.is_empty() {
            return Err(Error::EmptyInstance);
        }
        let total = instance.total_weight();
        let mut acc = vec![0.0; instance.dim()];
        for (i, p) in instance.points().iter().enumerate() {
            let w = instance.weight(i);
            acc.iter_mut().zip(p.iter()).for_each(|(a, v)| *a += w * v);
        }
        acc.iter_mut().for_each(|a| *a /= total);
        Point::new(acc)
    }
}

/// Change in agent `i`'s cost (measured from its true location `p_i`) when it
/// reports `report` instead. Strategy-proofness means this is never negative.
pub fn deviation_cost_delta(
    instance: &Instance,
    i: usize,
    report: &Point,
    mechanism: &dyn Mechanism,
    q: NormOrder,
) -> Result<f64> {
    if i >= instance.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            n: instance.len(),
        });
    }
    let truth = &instance.points()[i];
    let honest = mechanism.place(instance)?;
    let deviated = mechanism.place(&instance.with_point_replaced(i, report.clone())?)?;
    Ok(lq_dist(&deviated, truth, q)? - lq_dist(&honest, truth, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(rows: &[&[f64]]) -> Instance {
        Instance::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn odd_median() {
        let p = inst(&[&[0.0], &[1.0], &[5.0]]);
        assert_eq!(coordinate_median(&p, TieBreak::Lower).unwrap().coords(), &[1.0]);
        assert_eq!(coordinate_median(&p, TieBreak::Upper).unwrap().coords(), &[1.0]);
    }

    #[test]
    fn even_median_tie_break() {
        let p = inst(&[&[0.0, 0.0], &[2.0, 4.0]]);
        assert_eq!(coordinate_median(&p, TieBreak::Lower).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(coordinate_median(&p, TieBreak::Upper).unwrap().coords(), &[2.0, 4.0]);
    }

    #[test]
    fn median_need_not_be_input_point() {
        let p = inst(&[&[1.0, 9.0], &[5.0, 2.0], &[3.0, 7.0]]);
        assert_eq!(coordinate_median(&p, TieBreak::Lower).unwrap().coords(), &[3.0, 7.0]);
        let p = inst(&[&[1.0, 9.0], &[5.0, 2.0], &[3.0, 1.0]]);
        assert_eq!(coordinate_median(&p, TieBreak::Lower).unwrap().coords(), &[3.0, 2.0]);
    }

    #[test]
    fn weighted_median_respects_weights() {
        let pts = vec![Point::new(vec![0.0]).unwrap(), Point::new(vec![10.0]).unwrap()];
        let p = Instance::with_weights(pts, vec![1.0, 3.0]).unwrap();
        assert_eq!(coordinate_median(&p, TieBreak::Lower).unwrap().coords(), &[10.0]);
    }

    #[test]
    fn cmp_examples() {
        let agents = Instance::from_rows(vec![vec![0.0]; 100]).unwrap();
        let m = cmp_median(&agents, &[7.0], 0.99, TieBreak::Lower).unwrap();
        assert_eq!(m.coords(), &[0.0]);

        let p = inst(&[&[0.0], &[0.0], &[10.0]]);
        let m = cmp_median(&p, &[10.0], 2.0 / 3.0, TieBreak::Lower).unwrap();
        assert_eq!(m.coords(), &[10.0]);

        let p = inst(&[&[1.0, 9.0], &[5.0, 2.0], &[3.0, 7.0], &[4.0, 4.0]]);
        for tb in [TieBreak::Lower, TieBreak::Upper] {
            assert_eq!(
                cmp_median(&p, &[100.0, -100.0], 0.0, tb).unwrap(),
                coordinate_median(&p, tb).unwrap()
            );
        }
    }

    #[test]
    fn cmp_rejects_bad_c_and_dims() {
        let p = inst(&[&[0.0, 1.0]]);
        assert!(cmp_median(&p, &[0.0, 0.0], 1.0, TieBreak::Lower).is_err());
        assert!(cmp_median(&p, &[0.0, 0.0], -0.1, TieBreak::Lower).is_err());
        assert!(matches!(
            cmp_median(&p, &[0.0], 0.5, TieBreak::Lower),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn deviation_examples() {
        let p = inst(&[&[0.0], &[4.0], &[10.0]]);
        let med = CoordinateMedian::default();
        let q = NormOrder::TWO;
        let same = deviation_cost_delta(&p, 1, &p.points()[1].clone(), &med, q).unwrap();
        assert_eq!(same, 0.0);
        let d0 = deviation_cost_delta(&p, 0, &Point::new(vec![5.0]).unwrap(), &med, q).unwrap();
        assert_eq!(d0, 1.0);
        let d2 = deviation_cost_delta(&p, 2, &Point::new(vec![-1.0]).unwrap(), &med, q).unwrap();
        assert_eq!(d2, 4.0);
        assert!(matches!(
            deviation_cost_delta(&p, 3, &Point::new(vec![0.0]).unwrap(), &med, q),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn mean_is_manipulable() {
        // agent 0 at 0 pulls the mean towards itself by exaggerating
        let p = inst(&[&[0.0], &[3.0], &[6.0]]);
        let d = deviation_cost_delta(&p, 0, &Point::new(vec![-3.0]).unwrap(), &MeanMechanism, NormOrder::TWO).unwrap();
        assert!(d < 0.0);
    }

    #[test]
    fn instance_validation() {
        assert!(matches!(Instance::new(vec![]), Err(Error::EmptyInstance)));
        assert!(matches!(
            Instance::from_rows(vec![vec![0.0], vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        let pts = vec![Point::new(vec![0.0]).unwrap()];
        assert!(Instance::with_weights(pts.clone(), vec![0.0]).is_err());
        assert!(Instance::with_weights(pts, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn dedup_merges_weights() {
        let p = inst(&[&[1.0, 1.0], &[0.0, 2.0], &[1.0, 1.0], &[-0.0, 2.0]]);
        let dd = p.deduplicated();
        assert_eq!(dd.len(), 2);
        assert_eq!(dd.weights().unwrap(), &[2.0, 2.0]);
    }
}
