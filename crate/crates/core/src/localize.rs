//! Candidate-source ranking by least-squares fit of observed infection times.
//!
//! For a candidate source and one cascade, the cascade's unknown start time
//! is the shift minimizing the squared residuals between observed times and
//! the candidate's expected path times; the minimizer has the closed form
//! `mean(observed times) - mean(expected times)`. Candidates are then ranked
//! across the whole cascade set by their total residual sum of squares.

use std::collections::BTreeSet;

use crate::model::{Network, NodeId, PartialObservation};
use crate::paths::{estimate_infection_times, ExpectedDistances};
use crate::{Error, Result};

/// Score of one candidate source over a cascade set.
#[derive(Debug, Clone)]
pub struct CandidateScore {
    pub candidate: NodeId,
    /// Residual sum of squares over the admissible cascades.
    pub sse: f64,
    /// Estimated start time per cascade, in cascade-set order; `None` where
    /// the candidate cannot reach every observed node of that cascade.
    pub start_times: Vec<Option<f64>>,
    /// Fraction of (cascade, observed node) pairs reachable from the
    /// candidate.
    pub coverage: f64,
    /// Number of cascades in which the candidate is admissible.
    pub admissible_cascades: usize,
}

/// Candidates ordered by ascending `sse`, ties broken by descending
/// coverage, then ascending node id. Contains exactly the candidates that
/// are admissible in at least one cascade.
#[derive(Debug, Clone)]
pub struct Ranking {
    scores: Vec<CandidateScore>,
}

impl Ranking {
    pub fn scores(&self) -> &[CandidateScore] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// 1-based rank of `candidate`, if it is ranked at all.
    pub fn position_of(&self, candidate: NodeId) -> Option<usize> {
        self.scores.iter().position(|s| s.candidate == candidate).map(|p| p + 1)
    }

    pub fn top(&self, k: usize) -> &[CandidateScore] {
        &self.scores[..k.min(self.scores.len())]
    }
}

/// Closed-form start-time estimate for one candidate and one cascade:
/// `mean(observed times) - mean(expected path times)`, the exact minimizer
/// of the squared-shift objective. `None` when some observed node has no
/// finite expected time for this candidate, which makes the candidate
/// inadmissible for the cascade.
pub fn estimate_start_time(
    candidate: NodeId,
    observation: &PartialObservation,
    t_hat: &ExpectedDistances,
) -> Option<f64> {
    let k = observation.n_observed() as f64;
    let mut sum_obs = 0.0;
    let mut sum_hat = 0.0;
    for (&i, &t_i) in observation.observed() {
        sum_obs += t_i;
        sum_hat += t_hat.t_hat(candidate, i)?;
    }
    Some(sum_obs / k - sum_hat / k)
}

/// Scores one candidate over a cascade set: per admissible cascade, the
/// start time comes from [`estimate_start_time`] and the residual sum of
/// squares is accumulated into `sse`. Inadmissible cascades are excluded and
/// reflected in `coverage` instead.
///
/// Panics if `cascade_set` is empty.
pub fn score_candidate(
    candidate: NodeId,
    cascade_set: &[(&PartialObservation, &ExpectedDistances)],
) -> CandidateScore {
    assert!(!cascade_set.is_empty(), "cascade set must not be empty");
    let mut sse = 0.0;
    let mut start_times = Vec::with_capacity(cascade_set.len());
    let mut reachable_pairs = 0usize;
    let mut total_pairs = 0usize;
    let mut admissible = 0usize;
    for &(observation, t_hat) in cascade_set {
        total_pairs += observation.n_observed();
        reachable_pairs += observation
            .observed()
            .keys()
            .filter(|&&i| t_hat.t_hat(candidate, i).is_some())
            .count();
        match estimate_start_time(candidate, observation, t_hat) {
            Some(t_s) => {
                admissible += 1;
                for (&i, &t_i) in observation.observed() {
                    let hat = t_hat.t_hat(candidate, i).expect("admissible cascade");
                    let r = hat + t_s - t_i;
                    sse += r * r;
                }
                start_times.push(Some(t_s));
            }
            None => start_times.push(None),
        }
    }
    CandidateScore {
        candidate,
        sse,
        start_times,
        coverage: reachable_pairs as f64 / total_pairs as f64,
        admissible_cascades: admissible,
    }
}

/// Ranks every hidden candidate source for a set of cascades that share one
/// unknown source.
///
/// The candidate pool is every node observed in none of the cascades. Each
/// cascade's expected infection times are estimated with the same
/// `master_seed`, so the result is a pure function of the inputs and is
/// invariant under reordering of the cascade set.
pub fn rank_sources(
    network: &Network,
    cascade_set: &[PartialObservation],
    n_samples: usize,
    master_seed: u64,
) -> Result<Ranking> {
    if cascade_set.is_empty() {
        return Err(Error::EmptyInput("no cascades to rank over".into()));
    }
    for obs in cascade_set {
        if obs.n_nodes() != network.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "observation covers {} nodes but the network has {}",
                obs.n_nodes(),
                network.n_nodes()
            )));
        }
    }
    let mut observed_anywhere = BTreeSet::new();
    for obs in cascade_set {
        observed_anywhere.extend(obs.observed().keys().copied());
    }
    let candidates: Vec<NodeId> = network
        .nodes()
        .filter(|v| !observed_anywhere.contains(v))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }

    let estimates: Vec<ExpectedDistances> = cascade_set
        .iter()
        .map(|obs| {
            let observed: Vec<NodeId> = obs.observed().keys().copied().collect();
            estimate_infection_times(network, &observed, &candidates, n_samples, master_seed)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(&PartialObservation, &ExpectedDistances)> =
        cascade_set.iter().zip(estimates.iter()).collect();

    let mut scores: Vec<CandidateScore> = candidates
        .iter()
        .map(|&c| score_candidate(c, &pairs))
        .filter(|s| s.admissible_cascades > 0)
        .collect();
    scores.sort_by(|a, b| {
        a.sse
            .total_cmp(&b.sse)
            .then(b.coverage.total_cmp(&a.coverage))
            .then(a.candidate.cmp(&b.candidate))
    });
    Ok(Ranking { scores })
}
