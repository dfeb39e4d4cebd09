use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{stats, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nats,
    Reward,
    Mse,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Nats => "nats",
            Metric::Reward => "reward",
            Metric::Mse => "mse",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "nats" => Some(Metric::Nats),
            "reward" => Some(Metric::Reward),
            "mse" => Some(Metric::Mse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bucketing {
    /// One point per position.
    None,
    /// Positions grouped into buckets whose edges grow geometrically by `ratio`.
    LogSpaced { ratio_milli: u32 },
}

impl Bucketing {
    pub fn log(ratio: f64) -> Bucketing {
        Bucketing::LogSpaced { ratio_milli: (ratio * 1000.0).round() as u32 }
    }

    /// First position of the bucket holding `position`.
    fn bucket_start(self, position: usize) -> usize {
        match self {
            Bucketing::None => position,
            Bucketing::LogSpaced { ratio_milli } => {
                let ratio = f64::from(ratio_milli.max(1001)) / 1000.0;
                let mut lo = 0usize;
                let mut hi = 1usize;
                while position >= hi {
                    lo = hi;
                    hi = ((hi as f64 * ratio).ceil() as usize).max(hi + 1);
                }
                lo
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionCurve {
    pub metric: Metric,
    pub positions: Vec<usize>,
    pub mean: Vec<f64>,
    pub count: Vec<usize>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
}

/// Order-independent sum: samples are sorted before adding.
fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

impl PositionCurve {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Equal-length rows; position of column `j` is `first_position + j`.
    pub fn from_rows(rows: &[Vec<f64>], metric: Metric, first_position: usize) -> Result<Self, EvalError> {
        let Some(len) = rows.first().map(Vec::len) else { return Err(EvalError::Empty) };
        if rows.iter().any(|r| r.len() != len) {
            return Err(EvalError::Config("rows have different lengths; pass explicit positions".into()));
        }
        let tagged: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, &v)| (first_position + j, v)).collect())
            .collect();
        aggregate_positions(&tagged, metric, Bucketing::None)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "position", "mean", "ci_lo", "ci_hi", "n"])?;
        for i in 0..self.len() {
            w.write_record([
                self.metric.label().to_string(),
                self.positions[i].to_string(),
                self.mean[i].to_string(),
                self.ci_lo[i].to_string(),
                self.ci_hi[i].to_string(),
                self.count[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, EvalError> {
        let mut r = csv::Reader::from_reader(input);
        let mut curve: Option<PositionCurve> = None;
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| EvalError::Config("short CSV row".into()));
            let metric =
                Metric::parse(field(0)?).ok_or_else(|| EvalError::Config(format!("unknown metric {}", &rec[0])))?;
            let num = |i: usize| -> Result<f64, EvalError> {
                field(i)?.parse().map_err(|_| EvalError::Config(format!("bad number {:?}", &rec[i])))
            };
            let int = |i: usize| -> Result<usize, EvalError> {
                field(i)?.parse().map_err(|_| EvalError::Config(format!("bad integer {:?}", &rec[i])))
            };
            let c = curve.get_or_insert_with(|| PositionCurve {
                metric,
                positions: vec![],
                mean: vec![],
                count: vec![],
                ci_lo: vec![],
                ci_hi: vec![],
            });
            c.positions.push(int(1)?);
            c.mean.push(num(2)?);
            c.ci_lo.push(num(3)?);
            c.ci_hi.push(num(4)?);
            c.count.push(int(5)?);
        }
        curve.ok_or(EvalError::Empty)
    }
}

/// Per-position mean (with 95% interval) over rows of `(position, value)`.
///
/// Purely an aggregation: the result does not depend on row order.
pub fn aggregate_positions(
    rows: &[Vec<(usize, f64)>],
    metric: Metric,
    bucketing: Bucketing,
) -> Result<PositionCurve, EvalError> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in rows {
        for &(pos, v) in row {
            groups.entry(bucketing.bucket_start(pos)).or_default().push(v);
        }
    }
    if groups.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut curve = PositionCurve {
        metric,
        positions: Vec::with_capacity(groups.len()),
        mean: Vec::with_capacity(groups.len()),
        count: Vec::with_capacity(groups.len()),
        ci_lo: Vec::with_capacity(groups.len()),
        ci_hi: Vec::with_capacity(groups.len()),
    };
    for (pos, mut values) in groups {
        let m = sorted_mean(&mut values);
        let (lo, hi) = if values.len() >= 2 {
            // values are sorted now, so this sums in the same order
            stats::ci_95(&values)?
        } else {
            (m, m)
        };
        curve.positions.push(pos);
        curve.mean.push(m);
        curve.count.push(values.len());
        curve.ci_lo.push(lo);
        curve.ci_hi.push(hi);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rows_give_constant_curve() {
        let rows = vec![vec![2.5; 10]; 4];
        let c = PositionCurve::from_rows(&rows, Metric::Nats, 0).unwrap();
        assert!(c.mean.iter().all(|&m| m == 2.5));
        assert!(c.ci_lo.iter().zip(&c.ci_hi).all(|(a, b)| a == b));
        assert_eq!(c.count, vec![4; 10]);
    }

    #[test]
    fn simple_means() {
        let c = PositionCurve::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]], Metric::Nats, 0).unwrap();
        assert_eq!(c.mean, vec![1.0, 1.0]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(aggregate_positions(&[], Metric::Nats, Bucketing::None), Err(EvalError::Empty)));
        assert!(matches!(PositionCurve::from_rows(&[], Metric::Nats, 0), Err(EvalError::Empty)));
    }

    #[test]
    fn log_buckets_grow() {
        let b = Bucketing::log(2.0);
        let starts: Vec<usize> = (0..20).map(|p| b.bucket_start(p)).collect();
        assert_eq!(starts, vec![0, 1, 2, 2, 4, 4, 4, 4, 8, 8, 8, 8, 8, 8, 8, 8, 16, 16, 16, 16]);
        let rows = vec![(0..20).map(|p| (p, p as f64)).collect::<Vec<_>>()];
        let c = aggregate_positions(&rows, Metric::Nats, b).unwrap();
        assert_eq!(c.positions, vec![0, 1, 2, 4, 8, 16]);
        assert_eq!(c.mean[3], 5.5);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let rows = vec![vec![0.1, 1.0 / 3.0, 1e-300], vec![std::f64::consts::PI, -0.0, 7.25]];
        let c = PositionCurve::from_rows(&rows, Metric::Mse, 1).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(PositionCurve::read_csv(buf.as_slice()).unwrap(), c);
    }
}
