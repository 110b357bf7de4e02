//! Bayesian and weighted-voting ensemble (BWVE) aggregation.
//!
//! The Bayesian posterior is accurate once trust estimates are reliable; the
//! trust-weighted vote is robust while they are not. The two are mixed by the
//! mean uncertainty of the advisors who answered, so the ensemble leans on the
//! vote early and on the posterior as evidence accumulates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trust::{clamp_trust, TrustVector};
use crate::types::{AdvisorId, Answer};

/// Advisors consulted for one decision, split by their answer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSet {
    positives: Vec<AdvisorId>,
    negatives: Vec<AdvisorId>,
}

impl AnswerSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(
        positives: impl IntoIterator<Item = AdvisorId>,
        negatives: impl IntoIterator<Item = AdvisorId>,
    ) -> Result<Self> {
        let mut set = Self::new();
        for id in positives {
            set.insert(id, Answer::Positive)?;
        }
        for id in negatives {
            set.insert(id, Answer::Negative)?;
        }
        Ok(set)
    }

    /// Record `id`'s answer. An advisor may answer at most once.
    pub fn insert(&mut self, id: AdvisorId, answer: Answer) -> Result<()> {
        if self.contains(id) {
            return Err(Error::OverlappingAnswers(id));
        }
        match answer {
            Answer::Positive => self.positives.push(id),
            Answer::Negative => self.negatives.push(id),
        }
        Ok(())
    }

    pub fn contains(&self, id: AdvisorId) -> bool {
        self.positives.contains(&id) || self.negatives.contains(&id)
    }

    pub fn positives(&self) -> impl Iterator<Item = AdvisorId> + '_ {
        self.positives.iter().copied()
    }

    pub fn negatives(&self) -> impl Iterator<Item = AdvisorId> + '_ {
        self.negatives.iter().copied()
    }

    /// Every consulted advisor, positives first.
    pub fn members(&self) -> impl Iterator<Item = AdvisorId> + '_ {
        self.positives().chain(self.negatives())
    }

    pub fn answers(&self) -> impl Iterator<Item = (AdvisorId, Answer)> + '_ {
        self.positives()
            .map(|id| (id, Answer::Positive))
            .chain(self.negatives().map(|id| (id, Answer::Negative)))
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positive_count(&self) -> usize {
        self.positives.len()
    }

    pub fn negative_count(&self) -> usize {
        self.negatives.len()
    }

    /// The same advisors with every answer inverted.
    pub fn swapped(&self) -> Self {
        Self {
            positives: self.negatives.clone(),
            negatives: self.positives.clone(),
        }
    }
}

/// Prior probabilities of the two ground truths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorOdds {
    pub p_plus: f64,
    pub p_minus: f64,
}

impl Default for PriorOdds {
    fn default() -> Self {
        Self {
            p_plus: 0.5,
            p_minus: 0.5,
        }
    }
}

impl PriorOdds {
    pub fn new(p_plus: f64) -> Result<Self> {
        if !(p_plus > 0.0 && p_plus < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "prior probability {p_plus} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            p_plus,
            p_minus: 1.0 - p_plus,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutcome {
    pub p_positive: f64,
    pub p_negative: f64,
    pub answer: Answer,
    pub confidence: f64,
}

impl EnsembleOutcome {
    /// Outcome used when nobody was consulted: the tie rule answers −1 and
    /// no evidence is produced.
    pub fn abstain() -> Self {
        Self {
            p_positive: 0.5,
            p_negative: 0.5,
            answer: Answer::Negative,
            confidence: 0.0,
        }
    }

    fn from_probabilities(p_positive: f64, p_negative: f64) -> Self {
        let answer = if p_positive > p_negative {
            Answer::Positive
        } else {
            Answer::Negative
        };
        Self {
            p_positive,
            p_negative,
            answer,
            confidence: (p_positive - p_negative).abs().min(1.0),
        }
    }
}

/// One advisor's contribution to an aggregate: its trust, its uncertainty and
/// the answer it gave. Trust is clamped into the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ballot {
    pub trust: f64,
    pub uncertainty: f64,
    pub answer: Answer,
}

impl Ballot {
    pub fn new(trust: f64, uncertainty: f64, answer: Answer) -> Self {
        Self {
            trust: clamp_trust(trust),
            uncertainty,
            answer,
        }
    }
}

/// Collect ballots for an answer set from stored trust records.
pub fn ballots(answers: &AnswerSet, trust: &TrustVector) -> Result<Vec<Ballot>> {
    let mut out = Vec::with_capacity(answers.len());
    ballots_into(answers, trust, &mut out)?;
    Ok(out)
}

pub(crate) fn ballots_into(
    answers: &AnswerSet,
    trust: &TrustVector,
    out: &mut Vec<Ballot>,
) -> Result<()> {
    out.clear();
    for (id, answer) in answers.answers() {
        let record = trust.get(id)?;
        out.push(Ballot::new(
            record.trustworthiness(),
            record.uncertainty(),
            answer,
        ));
    }
    Ok(())
}

/// Posterior `(P(+), P(−))` assuming independent advisors whose accuracy is their trust.
///
/// Works in log space; the likelihood of `+` is `Π_P τ · Π_N (1−τ)`.
pub fn bayesian_from_ballots(ballots: &[Ballot], prior: PriorOdds) -> Result<(f64, f64)> {
    if ballots.is_empty() {
        return Err(Error::EmptyAnswerSet);
    }
    let mut log_plus = prior.p_plus.ln();
    let mut log_minus = prior.p_minus.ln();
    for b in ballots {
        let (right, wrong) = (b.trust.ln(), (1.0 - b.trust).ln());
        match b.answer {
            Answer::Positive => {
                log_plus += right;
                log_minus += wrong;
            }
            Answer::Negative => {
                log_plus += wrong;
                log_minus += right;
            }
        }
    }
    let p_plus = 1.0 / (1.0 + (log_minus - log_plus).exp());
    let p_minus = 1.0 / (1.0 + (log_plus - log_minus).exp());
    Ok((p_plus, p_minus))
}

/// Trust-weighted share of the vote on each side.
pub fn weighted_from_ballots(ballots: &[Ballot]) -> Result<(f64, f64)> {
    if ballots.is_empty() {
        return Err(Error::EmptyAnswerSet);
    }
    let (mut plus, mut minus) = (0.0, 0.0);
    for b in ballots {
        match b.answer {
            Answer::Positive => plus += b.trust,
            Answer::Negative => minus += b.trust,
        }
    }
    let total = plus + minus;
    Ok((plus / total, minus / total))
}

pub fn average_uncertainty_of(ballots: &[Ballot]) -> Result<f64> {
    if ballots.is_empty() {
        return Err(Error::EmptyAnswerSet);
    }
    Ok(ballots.iter().map(|b| b.uncertainty).sum::<f64>() / ballots.len() as f64)
}

pub fn ensemble_from_ballots(ballots: &[Ballot], prior: PriorOdds) -> Result<EnsembleOutcome> {
    let (bayes_plus, bayes_minus) = bayesian_from_ballots(ballots, prior)?;
    let (vote_plus, vote_minus) = weighted_from_ballots(ballots)?;
    let theta = average_uncertainty_of(ballots)?;
    let p_positive = (1.0 - theta) * bayes_plus + theta * vote_plus;
    let p_negative = (1.0 - theta) * bayes_minus + theta * vote_minus;
    Ok(EnsembleOutcome::from_probabilities(p_positive, p_negative))
}

pub fn bayesian_probabilities(
    answers: &AnswerSet,
    trust: &TrustVector,
    prior: PriorOdds,
) -> Result<(f64, f64)> {
    bayesian_from_ballots(&ballots(answers, trust)?, prior)
}

pub fn weighted_voting_probabilities(
    answers: &AnswerSet,
    trust: &TrustVector,
) -> Result<(f64, f64)> {
    weighted_from_ballots(&ballots(answers, trust)?)
}

pub fn average_uncertainty(answers: &AnswerSet, trust: &TrustVector) -> Result<f64> {
    average_uncertainty_of(&ballots(answers, trust)?)
}

pub fn ensemble_decide(
    answers: &AnswerSet,
    trust: &TrustVector,
    prior: PriorOdds,
) -> Result<EnsembleOutcome> {
    ensemble_from_ballots(&ballots(answers, trust)?, prior)
}

/// Decide, then feed the confidence back into the trust of every consulted advisor.
pub fn decide_and_update(
    answers: &AnswerSet,
    trust: &TrustVector,
    prior: PriorOdds,
) -> Result<(EnsembleOutcome, TrustVector)> {
    let outcome = ensemble_decide(answers, trust, prior)?;
    let mut updated = trust.clone();
    updated.apply_confidence_update(answers, outcome.answer, outcome.confidence)?;
    Ok((outcome, updated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::TrustRecord;
    use proptest::prelude::*;

    fn vector(records: &[(f64, f64)]) -> TrustVector {
        TrustVector::from_records(
            records
                .iter()
                .map(|&(a, b)| TrustRecord::with_evidence(a, b).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn ids(range: std::ops::Range<usize>) -> Vec<AdvisorId> {
        range.map(AdvisorId).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn answer_set_rejects_overlap() {
        assert!(AnswerSet::from_parts([AdvisorId(1)], [AdvisorId(1)]).is_err());
        let mut s = AnswerSet::new();
        s.insert(AdvisorId(0), Answer::Positive).unwrap();
        assert!(s.insert(AdvisorId(0), Answer::Negative).is_err());
    }

    #[test]
    fn bayesian_single_positive() {
        let t = vector(&[(8.0, 2.0)]);
        let set = AnswerSet::from_parts(ids(0..1), []).unwrap();
        let (p, n) = bayesian_probabilities(&set, &t, PriorOdds::default()).unwrap();
        assert!(close(p, 0.8) && close(n, 0.2));
    }

    #[test]
    fn bayesian_symmetric_split() {
        let t = vector(&[(1.0, 1.0), (1.0, 1.0)]);
        let set = AnswerSet::from_parts([AdvisorId(0)], [AdvisorId(1)]).unwrap();
        let (p, n) = bayesian_probabilities(&set, &t, PriorOdds::default()).unwrap();
        assert!(close(p, 0.5) && close(n, 0.5));
    }

    #[test]
    fn bayesian_two_against_one() {
        // L+ = 0.9·0.9·0.1 = 0.081, L− = 0.1·0.1·0.9 = 0.009 → 0.9 / 0.1
        let t = vector(&[(9.0, 1.0), (9.0, 1.0), (9.0, 1.0)]);
        let set = AnswerSet::from_parts(ids(0..2), [AdvisorId(2)]).unwrap();
        let (p, n) = bayesian_probabilities(&set, &t, PriorOdds::default()).unwrap();
        assert!(close(p, 0.9) && close(n, 0.1), "{p} {n}");
    }

    #[test]
    fn weighted_voting_examples() {
        let t = vector(&[(8.0, 2.0), (2.0, 3.0)]);
        let set = AnswerSet::from_parts([AdvisorId(0)], [AdvisorId(1)]).unwrap();
        let (p, n) = weighted_voting_probabilities(&set, &t).unwrap();
        assert!(close(p, 2.0 / 3.0) && close(n, 1.0 / 3.0));

        let t = vector(&[(1.0, 1.0)]);
        let set = AnswerSet::from_parts(ids(0..1), []).unwrap();
        assert_eq!(weighted_voting_probabilities(&set, &t).unwrap(), (1.0, 0.0));

        let t = vector(&[(3.0, 2.0); 4]);
        let set = AnswerSet::from_parts(ids(0..2), ids(2..4)).unwrap();
        let (p, n) = weighted_voting_probabilities(&set, &t).unwrap();
        assert!(close(p, 0.5) && close(n, 0.5));
    }

    #[test]
    fn average_uncertainty_examples() {
        let t = vector(&[(1.0, 1.0), (1.0, 1.0)]);
        let set = AnswerSet::from_parts(ids(0..2), []).unwrap();
        assert_eq!(average_uncertainty(&set, &t).unwrap(), 1.0);

        // θ = 0.2 and θ = 0.4
        let t = vector(&[(5.0, 5.0), (4.0, 1.0)]);
        let set = AnswerSet::from_parts([AdvisorId(0)], [AdvisorId(1)]).unwrap();
        assert!(close(average_uncertainty(&set, &t).unwrap(), 0.3));

        let t = vector(&[(9.0, 1.0)]);
        let set = AnswerSet::from_parts([], ids(0..1)).unwrap();
        assert!(close(average_uncertainty(&set, &t).unwrap(), 0.2));
    }

    #[test]
    fn empty_set_is_an_error() {
        let t = TrustVector::new(2);
        let set = AnswerSet::new();
        assert!(matches!(
            ensemble_decide(&set, &t, PriorOdds::default()),
            Err(Error::EmptyAnswerSet)
        ));
        assert!(weighted_voting_probabilities(&set, &t).is_err());
        assert!(average_uncertainty(&set, &t).is_err());
    }

    #[test]
    fn fresh_advisors_reduce_to_weighted_voting() {
        let t = TrustVector::new(3);
        let set = AnswerSet::from_parts(ids(0..2), [AdvisorId(2)]).unwrap();
        let out = ensemble_decide(&set, &t, PriorOdds::default()).unwrap();
        let (p, n) = weighted_voting_probabilities(&set, &t).unwrap();
        assert_eq!((out.p_positive, out.p_negative), (p, n));
    }

    #[test]
    fn ensemble_hand_trace() {
        let t = vector(&[(8.0, 2.0)]);
        let set = AnswerSet::from_parts(ids(0..1), []).unwrap();
        let out = ensemble_decide(&set, &t, PriorOdds::default()).unwrap();
        assert!(close(out.p_positive, 0.84));
        assert_eq!(out.answer, Answer::Positive);
        assert!(close(out.confidence, 0.68));
    }

    #[test]
    fn tie_answers_negative() {
        let t = TrustVector::new(2);
        let set = AnswerSet::from_parts([AdvisorId(0)], [AdvisorId(1)]).unwrap();
        let out = ensemble_decide(&set, &t, PriorOdds::default()).unwrap();
        assert_eq!(out.answer, Answer::Negative);
        assert_eq!(out.confidence, 0.0);
    }

    #[test]
    fn decide_and_update_examples() {
        let t = TrustVector::new(3);
        let set = AnswerSet::from_parts(ids(0..3), []).unwrap();
        let (out, updated) = decide_and_update(&set, &t, PriorOdds::default()).unwrap();
        for r in updated.records() {
            assert_eq!(r.alpha, 1.0 + out.confidence);
            assert_eq!(r.beta, 1.0);
        }

        let t = TrustVector::new(2);
        let split = AnswerSet::from_parts([AdvisorId(0)], [AdvisorId(1)]).unwrap();
        let (_, updated) = decide_and_update(&split, &t, PriorOdds::default()).unwrap();
        assert_eq!(updated, t);

        let t = vector(&[(8.0, 2.0)]);
        let set = AnswerSet::from_parts(ids(0..1), []).unwrap();
        let (_, updated) = decide_and_update(&set, &t, PriorOdds::default()).unwrap();
        assert!(close(updated.records()[0].alpha, 8.68));
    }

    fn arb_ballots() -> impl Strategy<Value = Vec<Ballot>> {
        prop::collection::vec(
            (1.0f64..200.0, 1.0f64..200.0, any::<bool>()).prop_map(|(a, b, pos)| {
                let r = TrustRecord::with_evidence(a, b).unwrap();
                let answer = if pos {
                    Answer::Positive
                } else {
                    Answer::Negative
                };
                Ballot::new(r.trustworthiness(), r.uncertainty(), answer)
            }),
            1..30,
        )
    }

    fn flip(ballots: &[Ballot]) -> Vec<Ballot> {
        ballots
            .iter()
            .map(|b| Ballot {
                answer: b.answer.flipped(),
                ..*b
            })
            .collect()
    }

    proptest! {
        #[test]
        fn probabilities_are_normalized(ballots in arb_ballots()) {
            let prior = PriorOdds::default();
            let (bp, bn) = bayesian_from_ballots(&ballots, prior).unwrap();
            let (wp, wn) = weighted_from_ballots(&ballots).unwrap();
            let e = ensemble_from_ballots(&ballots, prior).unwrap();
            prop_assert!((bp + bn - 1.0).abs() < 1e-12);
            prop_assert!((wp + wn - 1.0).abs() < 1e-12);
            prop_assert!((e.p_positive + e.p_negative - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&e.confidence));
            prop_assert_eq!(e.answer == Answer::Positive, e.p_positive > e.p_negative);
        }

        #[test]
        fn swapping_sides_swaps_probabilities(ballots in arb_ballots()) {
            let prior = PriorOdds::default();
            let flipped = flip(&ballots);
            let (bp, bn) = bayesian_from_ballots(&ballots, prior).unwrap();
            let (fbp, fbn) = bayesian_from_ballots(&flipped, prior).unwrap();
            prop_assert!((bp - fbn).abs() < 1e-12 && (bn - fbp).abs() < 1e-12);
            let (wp, wn) = weighted_from_ballots(&ballots).unwrap();
            let (fwp, fwn) = weighted_from_ballots(&flipped).unwrap();
            prop_assert!((wp - fwn).abs() < 1e-12 && (wn - fwp).abs() < 1e-12);
            let e = ensemble_from_ballots(&ballots, prior).unwrap();
            let f = ensemble_from_ballots(&flipped, prior).unwrap();
            prop_assert!((e.p_positive - f.p_negative).abs() < 1e-12);
        }

        #[test]
        fn trusted_positive_never_lowers_posterior(ballots in arb_ballots(), extra in 0.5001f64..0.9999) {
            let prior = PriorOdds::default();
            let (before, _) = bayesian_from_ballots(&ballots, prior).unwrap();
            let mut more = ballots.clone();
            more.push(Ballot::new(extra, 0.5, Answer::Positive));
            let (after, _) = bayesian_from_ballots(&more, prior).unwrap();
            prop_assert!(after >= before - 1e-15);
        }

        #[test]
        fn certain_ballots_recover_bayesian(ballots in arb_ballots()) {
            let certain: Vec<Ballot> = ballots.iter().map(|b| Ballot { uncertainty: 0.0, ..*b }).collect();
            let (bp, _) = bayesian_from_ballots(&certain, PriorOdds::default()).unwrap();
            let e = ensemble_from_ballots(&certain, PriorOdds::default()).unwrap();
            prop_assert_eq!(e.p_positive, bp);
        }
    }
}
