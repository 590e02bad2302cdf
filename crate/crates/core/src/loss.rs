//! Trajectory losses in point space and in the planner's output space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::{recover_absolute, DeltaSequence, TrainingSample, Vec2};

/// How the planner's outputs relate to the ground-truth future.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Outputs are future points relative to the current pose.
    #[serde(alias = "relative_eq4")]
    Relative,
    /// Outputs are increments, supervised with ground-truth increments.
    #[serde(alias = "delta_eq5")]
    Delta,
    /// Outputs are increments, supervised against the chain of predicted
    /// increments (see [`crate::traj::residual_chain_targets`]).
    #[serde(alias = "residual_chain_eq7")]
    ResidualChain,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Relative, Scheme::Delta, Scheme::ResidualChain];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Relative => "relative",
            Scheme::Delta => "delta",
            Scheme::ResidualChain => "residual_chain",
        }
    }

    /// Map raw planner outputs back to absolute points.
    pub fn recover(self, sample: &TrainingSample, outputs: &DeltaSequence) -> Vec<Vec2> {
        match self {
            Scheme::Relative => {
                let origin = sample.current().pos();
                outputs.as_slice().iter().map(|&o| origin + o).collect()
            }
            Scheme::Delta | Scheme::ResidualChain => recover_absolute(sample.current(), outputs),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" | "relative_eq4" => Ok(Scheme::Relative),
            "delta" | "delta_eq5" => Ok(Scheme::Delta),
            "residual_chain" | "residual_chain_eq7" => Ok(Scheme::ResidualChain),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Per-epoch losses emitted by the training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epoch: usize,
    pub train_delta_loss: f64,
    pub train_abs_loss: f64,
    pub val_abs_loss: f64,
    pub scheme: Scheme,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("sequence lengths differ: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::invalid("sequences must be non-empty"));
    }
    Ok(())
}

/// Mean absolute coordinate error, `1/(2m) * sum(|dx| + |dy|)`.
pub fn l1_loss(truth: &[Vec2], pred: &[Vec2]) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    let sum: f64 = truth
        .iter()
        .zip(pred)
        .map(|(a, b)| (a.x - b.x).abs() + (a.y - b.y).abs())
        .sum();
    Ok(sum / (2 * truth.len()) as f64)
}

/// Mean squared coordinate error, `1/(2m) * sum(dx^2 + dy^2)`.
pub fn l2_loss(truth: &[Vec2], pred: &[Vec2]) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    let sum: f64 = truth
        .iter()
        .zip(pred)
        .map(|(a, b)| {
            let (dx, dy) = (a.x - b.x, a.y - b.y);
            dx * dx + dy * dy
        })
        .sum();
    Ok(sum / (2 * truth.len()) as f64)
}

/// Squared loss in output space together with its gradient with respect to
/// `predicted`. `targets` are constants.
pub fn delta_training_loss(
    targets: &DeltaSequence,
    predicted: &DeltaSequence,
) -> Result<(f64, DeltaSequence)> {
    let value = l2_loss(targets.as_slice(), predicted.as_slice())?;
    let m = targets.len() as f64;
    let grad = targets
        .as_slice()
        .iter()
        .zip(predicted.as_slice())
        .map(|(t, p)| Vec2::new(-(t.x - p.x) / m, -(t.y - p.y) / m))
        .collect();
    Ok((value, DeltaSequence(grad)))
}

/// L2 loss between the sample's future and the absolute points recovered
/// from `predicted` under `scheme`.
pub fn evaluate_absolute(sample: &TrainingSample, predicted: &DeltaSequence, scheme: Scheme) -> Result<f64> {
    if predicted.len() != sample.m() {
        return Err(Error::invalid(format!(
            "predicted sequence has {} steps, sample horizon is {}",
            predicted.len(),
            sample.m()
        )));
    }
    l2_loss(&sample.future_positions(), &scheme.recover(sample, predicted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::{to_deltas, to_relative, PathPoint};

    fn v(pairs: &[(f64, f64)]) -> Vec<Vec2> {
        pairs.iter().map(|&p| p.into()).collect()
    }

    fn sample(current: (f64, f64), future: &[(f64, f64)]) -> TrainingSample {
        let fut = future
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| PathPoint::new(i as i64 + 1, x, y))
            .collect();
        TrainingSample::new(vec![PathPoint::new(0, current.0, current.1)], fut).unwrap()
    }

    #[test]
    fn l1_examples() {
        let a = v(&[(1.0, 2.0), (3.0, -4.0)]);
        assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(l1_loss(&v(&[(1.0, 0.0)]), &v(&[(0.0, 0.0)])).unwrap(), 0.5);
        assert_eq!(
            l1_loss(&v(&[(1.0, 1.0), (2.0, 2.0)]), &v(&[(0.0, 0.0), (0.0, 0.0)])).unwrap(),
            1.5
        );
    }

    #[test]
    fn l2_examples() {
        let a = v(&[(1.0, 2.0), (3.0, -4.0)]);
        assert_eq!(l2_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(l2_loss(&v(&[(1.0, 0.0)]), &v(&[(0.0, 0.0)])).unwrap(), 0.5);
        assert_eq!(
            l2_loss(&v(&[(3.0, 4.0), (0.0, 0.0)]), &v(&[(0.0, 0.0), (0.0, 0.0)])).unwrap(),
            6.25
        );
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = v(&[(1.0, 2.0)]);
        let b = v(&[(1.0, 2.0), (0.0, 0.0)]);
        assert!(matches!(l1_loss(&a, &b), Err(Error::InvalidArgument(_))));
        assert!(matches!(l2_loss(&a, &b), Err(Error::InvalidArgument(_))));
        assert!(l2_loss(&[], &[]).is_err());
        assert!(delta_training_loss(&DeltaSequence(a), &DeltaSequence(b)).is_err());
    }

    #[test]
    fn delta_loss_examples() {
        let t = DeltaSequence(v(&[(1.0, -2.0), (0.5, 0.5)]));
        let (val, grad) = delta_training_loss(&t, &t).unwrap();
        assert_eq!(val, 0.0);
        assert!(grad.as_slice().iter().all(|g| *g == Vec2::ZERO));

        let (val, grad) =
            delta_training_loss(&DeltaSequence(v(&[(1.0, 0.0)])), &DeltaSequence::zeros(1)).unwrap();
        assert_eq!(val, 0.5);
        assert_eq!(grad.0, v(&[(-1.0, 0.0)]));

        let p = DeltaSequence(v(&[(0.3, -1.0), (2.0, 0.0)]));
        let p2 = DeltaSequence(
            t.as_slice()
                .iter()
                .zip(p.as_slice())
                .map(|(t, p)| Vec2::new(t.x + 2.0 * (p.x - t.x), t.y + 2.0 * (p.y - t.y)))
                .collect(),
        );
        let (a, _) = delta_training_loss(&t, &p).unwrap();
        let (b, _) = delta_training_loss(&t, &p2).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-12);
    }

    #[test]
    fn delta_loss_gradient_matches_finite_differences() {
        let t = DeltaSequence(v(&[(1.0, -2.0), (0.5, 0.25), (-0.7, 1.3)]));
        let p = DeltaSequence(v(&[(0.2, 0.1), (1.5, -0.4), (0.0, 0.9)]));
        let (_, grad) = delta_training_loss(&t, &p).unwrap();
        let flat = p.to_flat();
        let g = grad.to_flat();
        let h = 1e-6;
        for i in 0..flat.len() {
            let mut up = flat.clone();
            let mut dn = flat.clone();
            up[i] += h;
            dn[i] -= h;
            let lu = delta_training_loss(&t, &DeltaSequence::from_flat(&up).unwrap())
                .unwrap()
                .0;
            let ld = delta_training_loss(&t, &DeltaSequence::from_flat(&dn).unwrap())
                .unwrap()
                .0;
            let fd = (lu - ld) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-12);
            assert!(rel < 1e-6, "entry {i}: fd {fd} analytic {}", g[i]);
        }
    }

    #[test]
    fn evaluate_examples() {
        let s = sample((0.0, 0.0), &[(1.0, 0.0), (2.0, 0.0)]);
        let pred = DeltaSequence(v(&[(1.0, 0.0), (0.5, 0.0)]));
        assert_eq!(
            evaluate_absolute(&s, &pred, Scheme::ResidualChain).unwrap(),
            0.0625
        );

        let s = sample((100.0, 200.0), &[(101.0, 202.0)]);
        let out = DeltaSequence(v(&[(1.0, 2.0)]));
        assert_eq!(evaluate_absolute(&s, &out, Scheme::Relative).unwrap(), 0.0);

        let s = sample((1.0, 1.0), &[(2.0, 3.0), (4.0, 1.0), (0.0, -1.0)]);
        assert_eq!(
            evaluate_absolute(&s, &DeltaSequence(to_relative(&s)), Scheme::Relative).unwrap(),
            0.0
        );
        for scheme in [Scheme::Delta, Scheme::ResidualChain] {
            assert_eq!(evaluate_absolute(&s, &to_deltas(&s), scheme).unwrap(), 0.0);
        }
        assert!(evaluate_absolute(&s, &DeltaSequence::zeros(2), Scheme::Delta).is_err());
    }

    #[test]
    fn scheme_names_parse() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!(
            "residual_chain_eq7".parse::<Scheme>().unwrap(),
            Scheme::ResidualChain
        );
        assert_eq!("relative_eq4".parse::<Scheme>().unwrap(), Scheme::Relative);
        assert!(matches!("l1".parse::<Scheme>(), Err(Error::InvalidArgument(_))));
    }
}
