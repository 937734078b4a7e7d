//! Structure-encoding losses, the output kernels that realize them, and the
//! weighted pairwise ranking loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram, GramMatrix, KernelSpec, Point};

/// A loss `l(y, y')` paired with the output kernel realizing its embedding.
///
/// * `ZeroOne`: `1[y != y']` on any discrete outputs, delta kernel.
/// * `Squared`: `(y - y')^2` on scalars. Smooth on compact sets, so it is
///   realized by the Abel kernel (bandwidth 1).
/// * `PairSign`: `-c z` for an orientation `c` in `{-1, +1}` and an observed
///   signed preference `z`; linear kernel on scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfLoss {
    ZeroOne,
    Squared,
    PairSign,
}

impl SelfLoss {
    pub fn name(&self) -> &'static str {
        match self {
            SelfLoss::ZeroOne => "zero_one",
            SelfLoss::Squared => "squared",
            SelfLoss::PairSign => "pair_sign",
        }
    }

    pub fn output_kernel(&self) -> KernelSpec {
        match self {
            SelfLoss::ZeroOne => KernelSpec::Delta,
            SelfLoss::Squared => KernelSpec::Abel { bandwidth: 1.0 },
            SelfLoss::PairSign => KernelSpec::Linear,
        }
    }

    /// Whether `y` belongs to the output set in the first argument slot.
    fn check_first(&self, y: &Point) -> Result<()> {
        match self {
            SelfLoss::ZeroOne => Ok(()),
            SelfLoss::Squared => scalar(self, y).map(|_| ()),
            SelfLoss::PairSign => match y.as_scalar() {
                Some(c) if c == 1.0 || c == -1.0 => Ok(()),
                _ => Err(Error::invalid(format!(
                    "pair_sign orientation must be -1 or +1, got {y:?}"
                ))),
            },
        }
    }
}

impl fmt::Display for SelfLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelfLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_one" => Ok(SelfLoss::ZeroOne),
            "squared" => Ok(SelfLoss::Squared),
            "pair_sign" => Ok(SelfLoss::PairSign),
            other => Err(Error::invalid(format!("unknown loss `{other}`"))),
        }
    }
}

fn scalar(loss: &SelfLoss, y: &Point) -> Result<f64> {
    match y.as_scalar() {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(Error::invalid(format!(
            "{loss} loss expects a finite scalar output, got {y:?}"
        ))),
    }
}

pub fn loss_eval(loss: &SelfLoss, y: &Point, y2: &Point) -> Result<f64> {
    loss.check_first(y)?;
    match loss {
        SelfLoss::ZeroOne => Ok(if y.canonical() == y2.canonical() {
            0.0
        } else {
            1.0
        }),
        SelfLoss::Squared => {
            let d = scalar(loss, y)? - scalar(loss, y2)?;
            Ok(d * d)
        }
        SelfLoss::PairSign => Ok(-scalar(loss, y)? * scalar(loss, y2)?),
    }
}

/// Output Gram matrix `K_Y` of the training outputs under the loss's kernel.
pub fn output_gram(outputs: &[Point], loss: &SelfLoss) -> Result<GramMatrix> {
    if let SelfLoss::Squared | SelfLoss::PairSign = loss {
        for y in outputs {
            scalar(loss, y)?;
        }
    }
    gram(outputs, &loss.output_kernel())
}

/// Ratings of `N` documents for one query, some of which may be missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingVector {
    values: Vec<f64>,
    present: Vec<bool>,
}

impl RatingVector {
    pub fn new(values: Vec<f64>, present: Vec<bool>) -> Result<Self> {
        if values.len() != present.len() {
            return Err(Error::invalid("rating values and mask lengths differ"));
        }
        if values
            .iter()
            .zip(&present)
            .any(|(v, p)| *p && !v.is_finite())
        {
            return Err(Error::invalid("present ratings must be finite"));
        }
        Ok(RatingVector { values, present })
    }

    pub fn full(values: Vec<f64>) -> Result<Self> {
        let present = vec![true; values.len()];
        Self::new(values, present)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.present[i].then(|| self.values[i])
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|p| **p).count()
    }
}

/// Weighted pairwise disagreement between `rank_scores` (higher is better)
/// and `ratings`.
///
/// Every present pair with different ratings contributes its rating gap,
/// fully when the higher-rated item scores strictly lower and by half when the
/// scores tie. Returns `(raw, normalized)` where the normalizer is the total
/// rating gap over present pairs (0/0 is 0).
pub fn pairwise_rank_loss(rank_scores: &[f64], ratings: &RatingVector) -> Result<(f64, f64)> {
    if rank_scores.len() != ratings.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} ratings",
            rank_scores.len(),
            ratings.len()
        )));
    }
    let mut raw = 0.0;
    let mut total = 0.0;
    let n = ratings.len();
    for i in 0..n {
        let Some(ri) = ratings.get(i) else { continue };
        for j in (i + 1)..n {
            let Some(rj) = ratings.get(j) else { continue };
            if ri == rj {
                continue;
            }
            let gap = (ri - rj).abs();
            total += gap;
            let (hi, lo) = if ri > rj { (i, j) } else { (j, i) };
            if rank_scores[hi] < rank_scores[lo] {
                raw += gap;
            } else if rank_scores[hi] == rank_scores[lo] {
                raw += 0.5 * gap;
            }
        }
    }
    let normalized = if total > 0.0 { raw / total } else { 0.0 };
    Ok((raw, normalized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    #[test]
    fn loss_examples() {
        assert_eq!(
            loss_eval(&SelfLoss::ZeroOne, &"a".into(), &"a".into()).unwrap(),
            0.0
        );
        assert_eq!(
            loss_eval(&SelfLoss::ZeroOne, &"a".into(), &"b".into()).unwrap(),
            1.0
        );
        assert_eq!(
            loss_eval(&SelfLoss::PairSign, &1.0.into(), &2.0.into()).unwrap(),
            -2.0
        );
        assert_eq!(
            loss_eval(&SelfLoss::Squared, &3.0.into(), &1.0.into()).unwrap(),
            4.0
        );
    }

    #[test]
    fn out_of_set_arguments_rejected() {
        assert!(loss_eval(&SelfLoss::PairSign, &0.5.into(), &2.0.into()).is_err());
        assert!(loss_eval(&SelfLoss::Squared, &"a".into(), &1.0.into()).is_err());
        assert!(loss_eval(&SelfLoss::Squared, &vec![1.0, 2.0].into(), &1.0.into()).is_err());
        assert!(output_gram(&["x".into()], &SelfLoss::PairSign).is_err());
    }

    #[test]
    fn output_gram_examples() {
        let outs: Vec<Point> = ["a", "b", "c"].iter().map(|s| Point::from(*s)).collect();
        let g = output_gram(&outs, &SelfLoss::ZeroOne).unwrap();
        assert_eq!(g.matrix(), &DMatrix::identity(3, 3));

        let g = output_gram(&[1.0.into(), (-2.0).into()], &SelfLoss::PairSign).unwrap();
        assert_eq!(
            g.matrix(),
            &DMatrix::from_row_slice(2, 2, &[1., -2., -2., 4.])
        );

        let g = output_gram(&["a".into(), "a".into()], &SelfLoss::ZeroOne).unwrap();
        assert_eq!(g.matrix(), &DMatrix::from_element(2, 2, 1.0));
    }

    // Squared loss as <psi(y), V psi(y')> with psi(y) = (y^2, y, 1).
    #[test]
    fn squared_loss_has_explicit_self_embedding() {
        let psi = |y: f64| DVector::from_vec(vec![y * y, y, 1.0]);
        let v = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 0., -2., 0., 1., 0., 0.]);
        for &(a, b) in &[(3.0, 1.0), (-0.5, 2.25), (0.0, 0.0), (7.0, -7.0)] {
            let embedded = psi(a).dot(&(&v * psi(b)));
            let direct = loss_eval(&SelfLoss::Squared, &a.into(), &b.into()).unwrap();
            assert!((embedded - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_loss_examples() {
        let r = RatingVector::full(vec![3.0, 1.0]).unwrap();
        assert_eq!(pairwise_rank_loss(&[2.0, 1.0], &r).unwrap(), (0.0, 0.0));
        assert_eq!(pairwise_rank_loss(&[1.0, 2.0], &r).unwrap(), (2.0, 1.0));

        let r = RatingVector::full(vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(
            pairwise_rank_loss(&[1.0, 3.0, 2.0], &r).unwrap(),
            (3.0, 0.75)
        );
    }

    #[test]
    fn rank_loss_ties_and_missing() {
        let r = RatingVector::full(vec![4.0, 2.0]).unwrap();
        assert_eq!(pairwise_rank_loss(&[1.0, 1.0], &r).unwrap(), (1.0, 0.5));

        let r = RatingVector::new(vec![5.0, 0.0, 1.0], vec![true, false, true]).unwrap();
        assert_eq!(
            pairwise_rank_loss(&[0.0, 9.0, 1.0], &r).unwrap(),
            (4.0, 1.0)
        );

        let r = RatingVector::full(vec![2.0, 2.0]).unwrap();
        assert_eq!(pairwise_rank_loss(&[0.0, 1.0], &r).unwrap(), (0.0, 0.0));

        assert!(pairwise_rank_loss(&[0.0], &r).is_err());
    }

    fn ratings_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<f64>)> {
        (2usize..9).prop_flat_map(|n| {
            (
                prop::collection::vec(1u8..6, n)
                    .prop_map(|v| v.into_iter().map(f64::from).collect()),
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(-3i32..4, n)
                    .prop_map(|v| v.into_iter().map(f64::from).collect()),
            )
        })
    }

    proptest! {
        #[test]
        fn normalized_in_unit_interval_and_zero_iff_consistent((vals, mask, scores) in ratings_strategy()) {
            let r = RatingVector::new(vals.clone(), mask.clone()).unwrap();
            let (raw, norm) = pairwise_rank_loss(&scores, &r).unwrap();
            prop_assert!((0.0..=1.0).contains(&norm));
            prop_assert!(raw >= 0.0);
            let consistent = (0..vals.len()).all(|i| (0..vals.len()).all(|j| {
                !(mask[i] && mask[j] && vals[i] > vals[j]) || scores[i] > scores[j]
            }));
            prop_assert_eq!(norm == 0.0, consistent);
        }

        #[test]
        fn invariant_under_increasing_transform((vals, mask, scores) in ratings_strategy()) {
            let r = RatingVector::new(vals, mask).unwrap();
            let warped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() * 3.0 - 1.0).collect();
            prop_assert_eq!(pairwise_rank_loss(&scores, &r).unwrap(), pairwise_rank_loss(&warped, &r).unwrap());
        }

        #[test]
        fn pair_sign_is_odd_in_orientation(z in -1e6f64..1e6) {
            let p = loss_eval(&SelfLoss::PairSign, &1.0.into(), &z.into()).unwrap();
            let m = loss_eval(&SelfLoss::PairSign, &(-1.0).into(), &z.into()).unwrap();
            prop_assert_eq!(p + m, 0.0);
        }

        #[test]
        fn zero_one_gram_is_equality_pattern(labels in prop::collection::vec(0u8..4, 1..12)) {
            let outs: Vec<Point> = labels.iter().map(|l| Point::Label(l.to_string())).collect();
            let g = output_gram(&outs, &SelfLoss::ZeroOne).unwrap();
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    let e = if labels[i] == labels[j] { 1.0 } else { 0.0 };
                    prop_assert_eq!(g.matrix()[(i, j)], e);
                }
            }
        }
    }
}
