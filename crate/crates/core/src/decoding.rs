//! Decoding surrogate predictions back to structured outputs.
//!
//! [`decode_finite`] evaluates the argmin over a finite candidate list using
//! loss values only. For rankings, per-pair weights are collected into a
//! [`Tournament`] and the best total order is found as a minimum weighted
//! feedback arc set, either heuristically ([`fas_greedy`]) or exactly for
//! small instances ([`fas_exact`]).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Point;
use crate::losses::{loss_eval, SelfLoss};

/// Returns the index of the candidate minimizing `sum_i alpha_i l(c, y_i)`
/// and its score. Ties go to the lowest index.
pub fn decode_finite(
    candidates: &[Point],
    alpha: &DVector<f64>,
    train_outputs: &[Point],
    loss: &SelfLoss,
) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to decode"));
    }
    if alpha.len() != train_outputs.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} training outputs",
            alpha.len(),
            train_outputs.len()
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for (c, cand) in candidates.iter().enumerate() {
        let mut score = 0.0;
        for (a, y) in alpha.iter().zip(train_outputs) {
            score += a * loss_eval(loss, cand, y)?;
        }
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((c, score));
        }
    }
    Ok(best.expect("nonempty candidates"))
}

/// Antisymmetric pairwise preference weights over `N` documents:
/// `weight(j, k) > 0` means `j` should rank above `k`. Only the upper
/// triangle is stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tournament {
    size: usize,
    upper: Vec<f64>,
}

impl Tournament {
    pub fn new(size: usize) -> Self {
        Tournament {
            size,
            upper: vec![0.0; size * size.saturating_sub(1) / 2],
        }
    }

    fn slot(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < k && k < self.size);
        // Row-major upper triangle without the diagonal.
        j * (2 * self.size - j - 1) / 2 + (k - j - 1)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        match j.cmp(&k) {
            std::cmp::Ordering::Less => self.upper[self.slot(j, k)],
            std::cmp::Ordering::Greater => -self.upper[self.slot(k, j)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Sets the net preference of `j` over `k` (and implicitly `k` over `j`).
    pub fn set(&mut self, j: usize, k: usize, w: f64) {
        assert!(
            j != k && j < self.size && k < self.size,
            "bad pair ({j},{k})"
        );
        if j < k {
            let s = self.slot(j, k);
            self.upper[s] = w;
        } else {
            let s = self.slot(k, j);
            self.upper[s] = -w;
        }
    }

    pub fn reversed(&self) -> Tournament {
        Tournament {
            size: self.size,
            upper: self.upper.iter().map(|w| -w).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Tournament {
        Tournament {
            size: self.size,
            upper: self.upper.iter().map(|w| w * c).collect(),
        }
    }

    /// Total weight of preferences the ordering contradicts.
    pub fn backward_weight(&self, ordering: &Ordering) -> f64 {
        let pos = ordering.positions();
        let mut total = 0.0;
        for j in 0..self.size {
            for k in (j + 1)..self.size {
                let w = self.weight(j, k);
                if (w > 0.0 && pos[j] > pos[k]) || (w < 0.0 && pos[k] > pos[j]) {
                    total += w.abs();
                }
            }
        }
        total
    }

    /// Borda scores `s_j = sum_k weight(j, k)`.
    pub fn borda(&self) -> Vec<f64> {
        (0..self.size)
            .map(|j| (0..self.size).map(|k| self.weight(j, k)).sum())
            .collect()
    }
}

/// A total order: `positions()[j]` is the rank of document `j` (0 = top).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    positions: Vec<usize>,
}

impl Ordering {
    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; positions.len()];
        for &p in &positions {
            if p >= positions.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("positions are not a permutation"));
            }
        }
        Ok(Ordering { positions })
    }

    /// From a top-first list of documents.
    pub fn from_sequence(seq: &[usize]) -> Result<Self> {
        let mut positions = vec![usize::MAX; seq.len()];
        for (rank, &doc) in seq.iter().enumerate() {
            if doc >= seq.len() || positions[doc] != usize::MAX {
                return Err(Error::invalid("sequence is not a permutation"));
            }
            positions[doc] = rank;
        }
        Ok(Ordering { positions })
    }

    pub fn identity(n: usize) -> Self {
        Ordering {
            positions: (0..n).collect(),
        }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Documents listed top first.
    pub fn sequence(&self) -> Vec<usize> {
        let mut seq = vec![0; self.positions.len()];
        for (doc, &p) in self.positions.iter().enumerate() {
            seq[p] = doc;
        }
        seq
    }

    /// Scores for [`crate::losses::pairwise_rank_loss`]: higher is better.
    pub fn rank_scores(&self) -> Vec<f64> {
        let n = self.positions.len() as f64;
        self.positions.iter().map(|&p| n - p as f64).collect()
    }
}

/// Per-pair task observations used to build a tournament: the documents
/// `(j, k)` with `j < k`, the learned weights `alpha_t`, and the signed
/// preferences `z_t`.
#[derive(Clone, Debug)]
pub struct PairEvidence<'a> {
    pub pair: (usize, usize),
    pub alpha: &'a [f64],
    pub z: &'a [f64],
}

/// Edge weight of pair `t` is `sum_i alpha_it z_it`; unobserved pairs stay 0.
pub fn build_tournament(size: usize, evidence: &[PairEvidence<'_>]) -> Result<Tournament> {
    let mut t = Tournament::new(size);
    let mut seen = std::collections::BTreeSet::new();
    for ev in evidence {
        let (j, k) = ev.pair;
        if j >= k || k >= size {
            return Err(Error::invalid(format!(
                "pair ({j},{k}) must satisfy j < k < {size}"
            )));
        }
        if !seen.insert((j, k)) {
            return Err(Error::invalid(format!("duplicate pair task ({j},{k})")));
        }
        if ev.alpha.len() != ev.z.len() {
            return Err(Error::invalid(format!(
                "pair ({j},{k}): {} weights for {} observations",
                ev.alpha.len(),
                ev.z.len()
            )));
        }
        let w: f64 = ev.alpha.iter().zip(ev.z).map(|(a, z)| a * z).sum();
        t.set(j, k, w);
    }
    Ok(t)
}

/// Borda initialization followed by local search to a fixed point.
///
/// The search moves one document at a time to its best position; when no
/// single move improves the backward weight the order is also optimal under
/// adjacent transpositions.
pub fn fas_greedy(t: &Tournament) -> Ordering {
    let n = t.size();
    let borda = t.borda();
    let mut seq: Vec<usize> = (0..n).collect();
    // Stable sort: equal scores keep the lowest index first.
    seq.sort_by(|&a, &b| {
        borda[b]
            .partial_cmp(&borda[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    // Cost contribution of placing `a` directly above `b`.
    let above = |a: usize, b: usize| t.weight(b, a).max(0.0);
    let eps = 1e-12;
    loop {
        let mut improved = false;
        for from in 0..n {
            let doc = seq[from];
            let mut best_delta = 0.0;
            let mut best_to = from;
            // Moving up: doc passes seq[to..from].
            let mut delta = 0.0;
            for to in (0..from).rev() {
                let other = seq[to];
                delta += above(doc, other) - above(other, doc);
                if delta < best_delta - eps {
                    best_delta = delta;
                    best_to = to;
                }
            }
            let mut delta = 0.0;
            for (to, &other) in seq.iter().enumerate().skip(from + 1) {
                delta += above(other, doc) - above(doc, other);
                if delta < best_delta - eps {
                    best_delta = delta;
                    best_to = to;
                }
            }
            if best_to != from {
                let d = seq.remove(from);
                seq.insert(best_to, d);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ordering::from_sequence(&seq).expect("local search keeps a permutation")
}

/// Largest tournament [`fas_exact`] accepts.
pub const FAS_EXACT_MAX: usize = 10;

/// Global minimizer of the backward weight by dynamic programming over
/// subsets. Among optimal orders the lexicographically smallest top-first
/// sequence is returned.
pub fn fas_exact(t: &Tournament) -> Result<Ordering> {
    let n = t.size();
    if n > FAS_EXACT_MAX {
        return Err(Error::Capacity(format!(
            "exact feedback arc set supports at most {FAS_EXACT_MAX} documents, got {n}"
        )));
    }
    let full = (1usize << n) - 1;
    // cost_first[s][j]: penalty of putting j above every other member of s.
    let first_cost = |s: usize, j: usize| -> f64 {
        (0..n)
            .filter(|&k| k != j && s & (1 << k) != 0)
            .map(|k| t.weight(k, j).max(0.0))
            .sum()
    };
    // best[s]: minimum backward weight among orderings of the set s.
    let mut best = vec![0.0f64; full + 1];
    for s in 1..=full {
        let mut b = f64::INFINITY;
        for j in 0..n {
            if s & (1 << j) != 0 {
                let c = first_cost(s, j) + best[s & !(1 << j)];
                if c < b {
                    b = c;
                }
            }
        }
        best[s] = b;
    }
    let scale = 1.0 + t.upper.iter().map(|w| w.abs()).sum::<f64>();
    let tol = 1e-12 * scale;
    let mut seq = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let j = (0..n)
            .find(|&j| s & (1 << j) != 0 && first_cost(s, j) + best[s & !(1 << j)] <= best[s] + tol)
            .expect("some member attains the minimum");
        seq.push(j);
        s &= !(1 << j);
    }
    Ordering::from_sequence(&seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three_cycle() -> Tournament {
        let mut t = Tournament::new(3);
        t.set(0, 1, 1.0);
        t.set(1, 2, 1.0);
        t.set(2, 0, 0.5);
        t
    }

    fn all_orders(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in all_orders(n - 1) {
            for i in 0..=rest.len() {
                let mut v = rest.clone();
                v.insert(i, n - 1);
                out.push(v);
            }
        }
        out
    }

    fn brute_min(t: &Tournament) -> f64 {
        all_orders(t.size())
            .iter()
            .map(|s| t.backward_weight(&Ordering::from_sequence(s).unwrap()))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn decode_finite_examples() {
        let alpha = DVector::from_vec(vec![0.3, 0.3, 0.5]);
        let train: Vec<Point> = ["a", "a", "b"].iter().map(|s| Point::from(*s)).collect();
        let cands: Vec<Point> = vec!["a".into(), "b".into()];
        let (idx, score) = decode_finite(&cands, &alpha, &train, &SelfLoss::ZeroOne).unwrap();
        assert_eq!(idx, 0);
        assert!((score - 0.5).abs() < 1e-15);

        let (idx, _) = decode_finite(&cands[1..], &alpha, &train, &SelfLoss::ZeroOne).unwrap();
        assert_eq!(idx, 0);

        let onehot = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let (idx, score) = decode_finite(&cands, &onehot, &train, &SelfLoss::ZeroOne).unwrap();
        assert_eq!((idx, score), (1, 0.0));

        assert!(decode_finite(&[], &alpha, &train, &SelfLoss::ZeroOne).is_err());
        assert!(decode_finite(&cands, &DVector::zeros(2), &train, &SelfLoss::ZeroOne).is_err());
    }

    #[test]
    fn decode_ties_go_to_first() {
        let alpha = DVector::zeros(1);
        let (idx, _) = decode_finite(
            &["x".into(), "y".into()],
            &alpha,
            &["z".into()],
            &SelfLoss::ZeroOne,
        )
        .unwrap();
        assert_eq!(idx, 0);
    }

    #[test]
    fn tournament_examples() {
        let t = build_tournament(
            3,
            &[PairEvidence {
                pair: (0, 1),
                alpha: &[0.0],
                z: &[3.0],
            }],
        )
        .unwrap();
        assert_eq!(t, Tournament::new(3));

        let t = build_tournament(
            2,
            &[PairEvidence {
                pair: (0, 1),
                alpha: &[1.0],
                z: &[2.5],
            }],
        )
        .unwrap();
        assert_eq!(t.weight(0, 1), 2.5);
        assert_eq!(t.weight(1, 0), -2.5);

        let t = build_tournament(
            2,
            &[PairEvidence {
                pair: (0, 1),
                alpha: &[0.5, 0.5],
                z: &[2.0, -4.0],
            }],
        )
        .unwrap();
        assert_eq!(t.weight(0, 1), -1.0);

        let dup = [
            PairEvidence {
                pair: (0, 1),
                alpha: &[1.0],
                z: &[1.0],
            },
            PairEvidence {
                pair: (0, 1),
                alpha: &[1.0],
                z: &[1.0],
            },
        ];
        assert!(build_tournament(2, &dup).is_err());
        assert!(build_tournament(
            2,
            &[PairEvidence {
                pair: (1, 0),
                alpha: &[1.0],
                z: &[1.0]
            }]
        )
        .is_err());
    }

    #[test]
    fn greedy_examples() {
        let mut t = Tournament::new(5);
        for j in 0..5 {
            for k in (j + 1)..5 {
                t.set(j, k, 1.0 + (j + k) as f64);
            }
        }
        let o = fas_greedy(&t);
        assert_eq!(o, Ordering::identity(5));
        assert_eq!(t.backward_weight(&o), 0.0);

        let t = three_cycle();
        assert_eq!(brute_min(&t), 0.5);
        assert_eq!(t.backward_weight(&fas_greedy(&t)), 0.5);

        let t = Tournament::new(4);
        let o = fas_greedy(&t);
        assert_eq!(o, Ordering::identity(4));
        assert_eq!(t.backward_weight(&o), 0.0);
    }

    #[test]
    fn exact_examples() {
        let mut t = Tournament::new(4);
        for j in 0..4 {
            for k in (j + 1)..4 {
                t.set(j, k, 2.0);
            }
        }
        assert_eq!(fas_exact(&t).unwrap(), Ordering::identity(4));

        let t = three_cycle();
        let o = fas_exact(&t).unwrap();
        assert_eq!(t.backward_weight(&o), 0.5);
        assert_eq!(o.sequence(), vec![0, 1, 2]);

        let mut t = Tournament::new(2);
        t.set(0, 1, -3.0);
        assert_eq!(fas_exact(&t).unwrap().sequence(), vec![1, 0]);

        assert!(matches!(
            fas_exact(&Tournament::new(11)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn ordering_round_trip() {
        let o = Ordering::from_sequence(&[2, 0, 1]).unwrap();
        assert_eq!(o.positions(), &[1, 2, 0]);
        assert_eq!(o.sequence(), vec![2, 0, 1]);
        assert_eq!(o.rank_scores(), vec![2.0, 1.0, 3.0]);
        assert!(Ordering::from_positions(vec![0, 0]).is_err());
        assert!(Ordering::from_sequence(&[0, 2]).is_err());
    }

    fn tournament_strategy() -> impl Strategy<Value = Tournament> {
        (2usize..7).prop_flat_map(|n| {
            prop::collection::vec(-5i32..6, n * (n - 1) / 2).prop_map(move |ws| {
                let mut t = Tournament::new(n);
                let mut it = ws.into_iter();
                for j in 0..n {
                    for k in (j + 1)..n {
                        t.set(j, k, f64::from(it.next().unwrap()) * 0.5);
                    }
                }
                t
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn exact_matches_brute_force(t in tournament_strategy()) {
            let o = fas_exact(&t).unwrap();
            prop_assert!((t.backward_weight(&o) - brute_min(&t)).abs() < 1e-9);
        }

        #[test]
        fn greedy_never_undercuts_and_is_adjacent_stable(t in tournament_strategy()) {
            let g = fas_greedy(&t);
            let e = fas_exact(&t).unwrap();
            let cost = t.backward_weight(&g);
            prop_assert!(cost >= t.backward_weight(&e) - 1e-9);
            let seq = g.sequence();
            for i in 0..seq.len().saturating_sub(1) {
                let mut s = seq.clone();
                s.swap(i, i + 1);
                let swapped = t.backward_weight(&Ordering::from_sequence(&s).unwrap());
                prop_assert!(swapped >= cost - 1e-9);
            }
        }

        #[test]
        fn reversal_reverses_optimum(t in tournament_strategy()) {
            let e = fas_exact(&t).unwrap();
            let mut rev_seq = e.sequence();
            rev_seq.reverse();
            let rev = Ordering::from_sequence(&rev_seq).unwrap();
            let r = t.reversed();
            prop_assert!((r.backward_weight(&rev) - r.backward_weight(&fas_exact(&r).unwrap())).abs() < 1e-9);
        }

        #[test]
        fn decode_invariant_to_positive_scaling(
            weights in prop::collection::vec(-2.0f64..2.0, 6),
            labels in prop::collection::vec(0u8..3, 6),
            c in 0.01f64..100.0,
        ) {
            let train: Vec<Point> = labels.iter().map(|l| Point::Label(l.to_string())).collect();
            let cands: Vec<Point> = (0..3).map(|l: u8| Point::Label(l.to_string())).collect();
            let a = DVector::from_vec(weights);
            let (i1, s1) = decode_finite(&cands, &a, &train, &SelfLoss::ZeroOne).unwrap();
            let (i2, s2) = decode_finite(&cands, &(&a * c), &train, &SelfLoss::ZeroOne).unwrap();
            prop_assert_eq!(i1, i2);
            prop_assert!((s1 * c - s2).abs() <= 1e-9 * (1.0 + s2.abs()));
        }

        #[test]
        fn tournament_linear_in_alpha(alpha in prop::collection::vec(-3.0f64..3.0, 4), z in prop::collection::vec(-4.0f64..4.0, 4)) {
            let a2: Vec<f64> = alpha.iter().map(|a| 2.0 * a).collect();
            let t1 = build_tournament(3, &[PairEvidence { pair: (0, 2), alpha: &alpha, z: &z }]).unwrap();
            let t2 = build_tournament(3, &[PairEvidence { pair: (0, 2), alpha: &a2, z: &z }]).unwrap();
            prop_assert_eq!(t1.scaled(2.0), t2);
        }
    }
}
