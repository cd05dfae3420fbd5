//! Subgoal choice from a localization result, plus the pairwise-scoring
//! baseline whose cost grows with the number of candidates.

use std::hint::black_box;

use serde::{Deserialize, Serialize};

use crate::embedding::{l2_distance, EmbeddingVector};
use crate::error::{Error, Result};
use crate::map::TopologicalMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalDecision {
    pub localized_node: usize,
    pub subgoal_node: usize,
    pub goal_reached: bool,
}

/// Next node after the match; reaching node `S` raises the goal signal.
pub fn decide_subgoal(localized_node: usize, map: &TopologicalMap) -> Result<SubgoalDecision> {
    decide_subgoal_on(localized_node, map.last_index())
}

pub fn decide_subgoal_on(localized_node: usize, last: usize) -> Result<SubgoalDecision> {
    if localized_node > last {
        return Err(Error::NodeOutOfRange {
            index: localized_node,
            last,
        });
    }
    Ok(SubgoalDecision {
        localized_node,
        subgoal_node: (localized_node + 1).min(last),
        goal_reached: localized_node == last,
    })
}

/// Minimum predicted `delta_t` (steps) for a pairwise subgoal.
pub const DEFAULT_PAIRWISE_THRESHOLD: f64 = 3.0;

/// Surrogate for a learned temporal-distance predictor.
pub trait TemporalDistance {
    fn delta_t(&self, observation: &EmbeddingVector, candidate: &EmbeddingVector) -> f64;
}

impl<F> TemporalDistance for F
where
    F: Fn(&EmbeddingVector, &EmbeddingVector) -> f64,
{
    fn delta_t(&self, observation: &EmbeddingVector, candidate: &EmbeddingVector) -> f64 {
        self(observation, candidate)
    }
}

/// Embedding distance expressed in steps: `delta_t = steps_per_unit * ||a - b||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledL2 {
    pub steps_per_unit: f64,
}

impl Default for ScaledL2 {
    fn default() -> Self {
        Self {
            steps_per_unit: 10.0,
        }
    }
}

impl TemporalDistance for ScaledL2 {
    fn delta_t(&self, observation: &EmbeddingVector, candidate: &EmbeddingVector) -> f64 {
        self.steps_per_unit * l2_distance(observation, candidate).unwrap_or(f64::INFINITY)
    }
}

/// Burns roughly `flops` floating-point operations on a dependent chain.
///
/// Stands in for one network forward pass; the result is opaque to the
/// optimizer so the work cannot be elided.
pub fn synthetic_work(flops: u64) -> f64 {
    let mut acc = black_box(1.0f64);
    let a = black_box(0.999_999_9f64);
    let b = black_box(1e-7f64);
    for _ in 0..flops / 2 {
        acc = acc * a + b;
    }
    black_box(acc)
}

/// Scores (observation, candidate) pairs one at a time, each with a fixed
/// synthetic cost.
#[derive(Debug, Clone)]
pub struct PairwiseScorerStub<D = ScaledL2> {
    pub per_pair_flops: u64,
    pub surrogate: D,
}

impl Default for PairwiseScorerStub {
    fn default() -> Self {
        Self {
            per_pair_flops: 2_000_000,
            surrogate: ScaledL2::default(),
        }
    }
}

impl<D: TemporalDistance> PairwiseScorerStub<D> {
    pub fn new(per_pair_flops: u64, surrogate: D) -> Self {
        Self {
            per_pair_flops,
            surrogate,
        }
    }

    /// One pair evaluation.
    pub fn score(&self, observation: &EmbeddingVector, candidate: &EmbeddingVector) -> f64 {
        black_box(synthetic_work(self.per_pair_flops));
        self.surrogate.delta_t(observation, candidate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseSelection {
    pub node: usize,
    pub delta_t: f64,
    /// Pair evaluations performed by this call.
    pub evaluations: usize,
}

/// Baseline selection: the candidate with the smallest predicted `delta_t`
/// at or above `threshold`. If every candidate is below it, the one with the
/// largest `delta_t`. Ties go to the lower node index.
pub fn pairwise_select<D: TemporalDistance>(
    observation: &EmbeddingVector,
    candidates: &[usize],
    map: &TopologicalMap,
    stub: &PairwiseScorerStub<D>,
    threshold: f64,
) -> Result<PairwiseSelection> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut evaluations = 0;
    let mut scored = Vec::with_capacity(candidates.len());
    for &node in candidates {
        let candidate = &map.node(node)?.embedding;
        if candidate.dim() != observation.dim() {
            return Err(Error::DimensionMismatch {
                expected: candidate.dim(),
                actual: observation.dim(),
            });
        }
        scored.push((node, stub.score(observation, candidate)));
        evaluations += 1;
    }

    let above = scored
        .iter()
        .filter(|(_, dt)| *dt >= threshold)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let (node, delta_t) = match above {
        Some(&hit) => hit,
        None => *scored
            .iter()
            .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
            .expect("candidates are non-empty"),
    };
    Ok(PairwiseSelection {
        node,
        delta_t,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(n: usize) -> TopologicalMap {
        TopologicalMap::from_embeddings(
            (0..n)
                .map(|i| EmbeddingVector::new(vec![i as f32]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    // delta_t read off the candidate's first component through a table.
    fn table(values: Vec<(usize, f64)>) -> impl Fn(&EmbeddingVector, &EmbeddingVector) -> f64 {
        move |_, c| {
            let node = c[0] as usize;
            values.iter().find(|(n, _)| *n == node).unwrap().1
        }
    }

    #[test]
    fn decide_examples() {
        let m = map(11);
        assert_eq!(
            decide_subgoal(7, &m).unwrap(),
            SubgoalDecision {
                localized_node: 7,
                subgoal_node: 8,
                goal_reached: false
            }
        );
        let d = decide_subgoal(10, &m).unwrap();
        assert_eq!((d.subgoal_node, d.goal_reached), (10, true));
        let d = decide_subgoal(9, &m).unwrap();
        assert_eq!((d.subgoal_node, d.goal_reached), (10, false));
        assert!(decide_subgoal(11, &m).is_err());
    }

    #[test]
    fn decide_is_monotone_and_signals_only_at_goal() {
        let m = map(30);
        let mut prev = 0;
        for i in 0..30 {
            let d = decide_subgoal(i, &m).unwrap();
            assert!(d.subgoal_node >= prev);
            assert_eq!(d.goal_reached, i == 29);
            prev = d.subgoal_node;
        }
    }

    #[test]
    fn pairwise_examples() {
        let m = map(10);
        let obs = EmbeddingVector::new(vec![0.0]).unwrap();
        let stub = PairwiseScorerStub::new(10, table(vec![(5, 2.0), (6, 4.0), (7, 9.0)]));
        let sel = pairwise_select(&obs, &[5, 6, 7], &m, &stub, 3.0).unwrap();
        assert_eq!(sel.node, 6);
        assert_eq!(sel.evaluations, 3);

        let stub = PairwiseScorerStub::new(10, table(vec![(5, 2.0), (6, 1.0), (7, 2.5)]));
        assert_eq!(pairwise_select(&obs, &[5, 6, 7], &m, &stub, 3.0).unwrap().node, 7);

        let stub = PairwiseScorerStub::new(10, table(vec![(2, 0.5)]));
        assert_eq!(pairwise_select(&obs, &[2], &m, &stub, 3.0).unwrap().node, 2);

        assert!(matches!(
            pairwise_select(&obs, &[], &m, &stub, 3.0),
            Err(Error::EmptyCandidates)
        ));
    }

    #[test]
    fn pairwise_ties_go_low() {
        let m = map(10);
        let obs = EmbeddingVector::new(vec![0.0]).unwrap();
        let stub = PairwiseScorerStub::new(0, table(vec![(8, 4.0), (3, 4.0), (5, 7.0)]));
        assert_eq!(pairwise_select(&obs, &[8, 3, 5], &m, &stub, 3.0).unwrap().node, 3);
        let stub = PairwiseScorerStub::new(0, table(vec![(8, 1.0), (3, 1.0)]));
        assert_eq!(pairwise_select(&obs, &[8, 3], &m, &stub, 3.0).unwrap().node, 3);
    }

    #[test]
    fn evaluation_count_equals_candidates() {
        let m = map(120);
        let obs = EmbeddingVector::new(vec![3.0]).unwrap();
        let stub = PairwiseScorerStub::new(0, ScaledL2::default());
        for n in [1, 5, 21, 101] {
            let cands: Vec<usize> = (0..n).collect();
            assert_eq!(pairwise_select(&obs, &cands, &m, &stub, 3.0).unwrap().evaluations, n);
        }
    }

    #[test]
    fn scaled_l2_surrogate() {
        let a = EmbeddingVector::new(vec![0.0, 0.0]).unwrap();
        let b = EmbeddingVector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(ScaledL2 { steps_per_unit: 2.0 }.delta_t(&a, &b), 10.0);
        assert!(synthetic_work(1000).is_finite());
    }
}
