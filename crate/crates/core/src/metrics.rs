//! Distances between predicted and expert point sequences.
//!
//! These are evaluation metrics only. Per-pair cost is always the Euclidean
//! distance between points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::Vec2;

/// A non-empty sequence of finite points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSeq(Vec<Vec2>);

impl PointSeq {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point sequence must be non-empty"));
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::invalid("point sequence has non-finite entries"));
        }
        Ok(PointSeq(points))
    }

    pub fn points(&self) -> &[Vec2] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn last(&self) -> Vec2 {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<Vec2>> for PointSeq {
    type Error = Error;
    fn try_from(points: Vec<Vec2>) -> Result<Self> {
        PointSeq::new(points)
    }
}

/// Average displacement error over index-paired points.
pub fn ade(a: &PointSeq, b: &PointSeq) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "ade needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let sum: f64 = a.0.iter().zip(&b.0).map(|(p, q)| p.distance(*q)).sum();
    Ok(sum / a.len() as f64)
}

/// Distance between the final points.
pub fn fde(a: &PointSeq, b: &PointSeq) -> f64 {
    a.last().distance(b.last())
}

/// Cumulative-cost dynamic time warping with the symmetric step pattern
/// `(i-1, j)`, `(i, j-1)`, `(i-1, j-1)`. Not normalised by path length.
pub fn dtw(a: &PointSeq, b: &PointSeq) -> f64 {
    let (a, b) = (a.points(), b.points());
    let mut prev = vec![f64::INFINITY; b.len() + 1];
    let mut cur = vec![f64::INFINITY; b.len() + 1];
    prev[0] = 0.0;
    for p in a {
        cur[0] = f64::INFINITY;
        for (j, q) in b.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = p.distance(*q) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Discrete Fréchet distance via the coupling recurrence.
pub fn frechet_discrete(a: &PointSeq, b: &PointSeq) -> f64 {
    let (a, b) = (a.points(), b.points());
    let mut prev = vec![f64::INFINITY; b.len()];
    let mut cur = vec![0.0; b.len()];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let d = p.distance(*q);
            let reach = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]),
            };
            cur[j] = d.max(reach);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len() - 1]
}

fn nearest(p: Vec2, set: &[Vec2]) -> f64 {
    set.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min)
}

fn directed_hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().map(|p| nearest(*p, b)).fold(0.0, f64::max)
}

pub fn hausdorff(a: &PointSeq, b: &PointSeq) -> f64 {
    directed_hausdorff(a.points(), b.points()).max(directed_hausdorff(b.points(), a.points()))
}

fn mean_nearest(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().map(|p| nearest(*p, b)).sum::<f64>() / a.len() as f64
}

/// Mean nearest-neighbour distance from `a` to `b` plus the same from `b` to `a`.
pub fn chamfer(a: &PointSeq, b: &PointSeq) -> f64 {
    mean_nearest(a.points(), b.points()) + mean_nearest(b.points(), a.points())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ade,
    Fde,
    Dtw,
    Frechet,
    Hausdorff,
    Chamfer,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Ade,
        Metric::Fde,
        Metric::Dtw,
        Metric::Frechet,
        Metric::Hausdorff,
        Metric::Chamfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ade => "ade",
            Metric::Fde => "fde",
            Metric::Dtw => "dtw",
            Metric::Frechet => "frechet",
            Metric::Hausdorff => "hausdorff",
            Metric::Chamfer => "chamfer",
        }
    }

    pub fn compute(self, a: &PointSeq, b: &PointSeq) -> Result<f64> {
        Ok(match self {
            Metric::Ade => ade(a, b)?,
            Metric::Fde => fde(a, b),
            Metric::Dtw => dtw(a, b),
            Metric::Frechet => frechet_discrete(a, b),
            Metric::Hausdorff => hausdorff(a, b),
            Metric::Chamfer => chamfer(a, b),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(pairs: &[(f64, f64)]) -> PointSeq {
        PointSeq::new(pairs.iter().map(|&p| p.into()).collect()).unwrap()
    }

    #[test]
    fn ade_fde_examples() {
        let a = seq(&[(0.0, 0.0), (1.0, 2.0), (-3.0, 0.5)]);
        assert_eq!(ade(&a, &a).unwrap(), 0.0);
        assert_eq!(fde(&a, &a), 0.0);

        let a = seq(&[(0.0, 0.0), (0.0, 0.0)]);
        let b = seq(&[(3.0, 4.0), (3.0, 4.0)]);
        assert_eq!(ade(&a, &b).unwrap(), 5.0);
        assert_eq!(fde(&a, &b), 5.0);

        let a = seq(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = seq(&[(0.0, 1.0), (1.0, 2.0)]);
        assert_eq!(ade(&a, &b).unwrap(), 1.5);
        assert_eq!(fde(&a, &b), 2.0);

        assert!(matches!(
            ade(&a, &seq(&[(0.0, 0.0)])),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(fde(&a, &seq(&[(1.0, 3.0)])), 3.0);
    }

    #[test]
    fn dtw_examples() {
        let a = seq(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        assert_eq!(dtw(&a, &a), 0.0);
        assert_eq!(dtw(&seq(&[(0.0, 0.0)]), &seq(&[(3.0, 4.0)])), 5.0);
        // Repeated point aligns for free.
        let b = seq(&[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        assert_eq!(dtw(&a, &b), 0.0);
        // One-to-many: every point of b pairs with the single point of a.
        let c = seq(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        assert_eq!(dtw(&seq(&[(0.0, 0.0)]), &c), 6.0);
    }

    #[test]
    fn frechet_examples() {
        let a = seq(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(frechet_discrete(&a, &a), 0.0);
        assert_eq!(frechet_discrete(&a, &seq(&[(0.0, 1.0), (1.0, 1.0)])), 1.0);
        assert_eq!(
            frechet_discrete(&seq(&[(0.0, 0.0)]), &seq(&[(3.0, 4.0), (0.0, 1.0)])),
            5.0
        );
    }

    #[test]
    fn hausdorff_chamfer_examples() {
        let a = seq(&[(0.0, 0.0), (2.0, 1.0)]);
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert_eq!(chamfer(&a, &a), 0.0);
        let p = seq(&[(0.0, 0.0)]);
        let q = seq(&[(3.0, 4.0)]);
        assert_eq!(hausdorff(&p, &q), 5.0);
        assert_eq!(chamfer(&p, &q), 10.0);
        let a = seq(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(hausdorff(&a, &p), 1.0);
        assert_eq!(chamfer(&a, &p), 0.5);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(PointSeq::new(vec![]).is_err());
        assert!(PointSeq::new(vec![Vec2::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn metric_names() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("rmse".parse::<Metric>().is_err());
    }
}
