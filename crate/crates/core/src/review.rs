//! Review update: re-evaluate every past decision with the current trust
//! vector and recalibrate trust from the resulting confidences, repeating
//! until the trust vector stops moving.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::bwve::{ballots_into, ensemble_from_ballots, AnswerSet, Ballot, PriorOdds};
use crate::error::{Error, Result};
use crate::trust::TrustVector;
use crate::types::DecisionId;

/// Past answer sets in the order the decisions were made.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionHistory {
    entries: Vec<(DecisionId, AnswerSet)>,
    seen: HashSet<DecisionId>,
}

impl DecisionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: DecisionId, answers: AnswerSet) -> Result<()> {
        if !self.seen.insert(id) {
            return Err(Error::InvalidConfig(format!(
                "decision {id} is already in the history"
            )));
        }
        self.entries.push((id, answers));
        Ok(())
    }

    pub fn entries(&self) -> &[(DecisionId, AnswerSet)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// How evidence is carried between passes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewMode {
    /// Every pass rebuilds evidence from the `Beta(1, 1)` prior, evaluating all
    /// past decisions against the trust vector produced by the previous pass.
    #[default]
    Rebuild,
    /// Every pass adds its evidence on top of the existing records, updating
    /// trust after each re-evaluated decision.
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReviewConfig {
    /// Stop once a pass moves the trust vector by at most this much (L1 over τ).
    pub threshold: f64,
    pub max_passes: usize,
    /// Run a review after every `frequency` decisions.
    pub frequency: usize,
    pub mode: ReviewMode,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        Self {
            threshold: 1e-3,
            max_passes: 100,
            frequency: 1,
            mode: ReviewMode::Rebuild,
        }
    }
}

impl ReviewConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "review threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.max_passes == 0 || self.frequency == 0 {
            return Err(Error::InvalidConfig(
                "review max_passes and frequency must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReviewDiagnostics {
    pub passes_used: usize,
    pub final_delta_tau: f64,
}

pub fn review_update(
    history: &DecisionHistory,
    trust: &TrustVector,
    config: &ReviewConfig,
    prior: PriorOdds,
) -> Result<(TrustVector, ReviewDiagnostics)> {
    config.validate()?;
    for (_, answers) in history.entries() {
        if let Some(id) = answers.members().find(|id| !trust.contains(*id)) {
            return Err(Error::UnknownAdvisor(id));
        }
    }
    if history.is_empty() {
        return Ok((trust.clone(), ReviewDiagnostics::default()));
    }

    let mut current = trust.clone();
    let mut ballots: Vec<Ballot> = Vec::new();
    let mut diagnostics = ReviewDiagnostics::default();
    for pass in 1..=config.max_passes {
        let next = match config.mode {
            ReviewMode::Rebuild => {
                let mut next = TrustVector::new(trust.len());
                for (_, answers) in history.entries().iter().filter(|(_, a)| !a.is_empty()) {
                    ballots_into(answers, &current, &mut ballots)?;
                    let outcome = ensemble_from_ballots(&ballots, prior)?;
                    next.apply_confidence_update(answers, outcome.answer, outcome.confidence)?;
                }
                next
            }
            ReviewMode::Cumulative => {
                let mut next = current.clone();
                for (_, answers) in history.entries().iter().filter(|(_, a)| !a.is_empty()) {
                    ballots_into(answers, &next, &mut ballots)?;
                    let outcome = ensemble_from_ballots(&ballots, prior)?;
                    next.apply_confidence_update(answers, outcome.answer, outcome.confidence)?;
                }
                next
            }
        };
        let delta = next.l1_distance(&current);
        debug_assert!(delta.is_finite());
        current = next;
        diagnostics = ReviewDiagnostics {
            passes_used: pass,
            final_delta_tau: delta,
        };
        if delta <= config.threshold {
            break;
        }
    }
    Ok((current, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::TrustRecord;
    use crate::types::AdvisorId;
    use proptest::prelude::*;

    fn history(sets: Vec<AnswerSet>) -> DecisionHistory {
        let mut h = DecisionHistory::new();
        for (i, s) in sets.into_iter().enumerate() {
            h.push(DecisionId(i), s).unwrap();
        }
        h
    }

    #[test]
    fn empty_history_is_a_no_op() {
        let trust =
            TrustVector::from_records(vec![TrustRecord::with_evidence(3.0, 1.5).unwrap()]).unwrap();
        let (out, diag) = review_update(
            &DecisionHistory::new(),
            &trust,
            &ReviewConfig::default(),
            PriorOdds::default(),
        )
        .unwrap();
        assert_eq!(out, trust);
        assert_eq!(diag.passes_used, 0);
    }

    #[test]
    fn unanimous_pair_converges_quickly() {
        let h = history(vec![AnswerSet::from_parts(
            [AdvisorId(0), AdvisorId(1)],
            [],
        )
        .unwrap()]);
        let (out, diag) = review_update(
            &h,
            &TrustVector::new(2),
            &ReviewConfig::default(),
            PriorOdds::default(),
        )
        .unwrap();
        assert!(diag.passes_used <= 3, "{diag:?}");
        assert!(diag.final_delta_tau <= 1e-3);
        for r in out.records() {
            assert!(r.alpha > r.beta);
        }
    }

    #[test]
    fn split_votes_stay_at_prior() {
        let sets = (0..5)
            .map(|_| AnswerSet::from_parts([AdvisorId(0)], [AdvisorId(1)]).unwrap())
            .collect();
        let (out, diag) = review_update(
            &history(sets),
            &TrustVector::new(2),
            &ReviewConfig::default(),
            PriorOdds::default(),
        )
        .unwrap();
        assert_eq!(diag.passes_used, 1);
        assert_eq!(diag.final_delta_tau, 0.0);
        assert_eq!(out, TrustVector::new(2));
    }

    #[test]
    fn unknown_advisor_is_rejected() {
        let h = history(vec![AnswerSet::from_parts([AdvisorId(4)], []).unwrap()]);
        assert!(matches!(
            review_update(
                &h,
                &TrustVector::new(2),
                &ReviewConfig::default(),
                PriorOdds::default()
            ),
            Err(Error::UnknownAdvisor(AdvisorId(4)))
        ));
    }

    #[test]
    fn duplicate_decision_ids_rejected() {
        let mut h = DecisionHistory::new();
        h.push(DecisionId(1), AnswerSet::new()).unwrap();
        assert!(h.push(DecisionId(1), AnswerSet::new()).is_err());
    }

    #[test]
    fn cumulative_mode_respects_pass_cap() {
        let h = history(vec![AnswerSet::from_parts(
            [AdvisorId(0), AdvisorId(1)],
            [],
        )
        .unwrap()]);
        let config = ReviewConfig {
            mode: ReviewMode::Cumulative,
            max_passes: 7,
            threshold: 1e-12,
            ..ReviewConfig::default()
        };
        let (out, diag) =
            review_update(&h, &TrustVector::new(2), &config, PriorOdds::default()).unwrap();
        assert_eq!(diag.passes_used, 7);
        assert!(out.records().iter().all(|r| r.alpha > 7.0));
    }

    fn arb_history() -> impl Strategy<Value = Vec<Vec<(usize, bool)>>> {
        prop::collection::vec(
            prop::collection::vec((0usize..6, any::<bool>()), 1..6),
            0..25,
        )
    }

    fn build(raw: &[Vec<(usize, bool)>]) -> DecisionHistory {
        let sets = raw
            .iter()
            .map(|votes| {
                let mut s = AnswerSet::new();
                for &(id, pos) in votes {
                    let answer = if pos {
                        Answer::Positive
                    } else {
                        Answer::Negative
                    };
                    let _ = s.insert(AdvisorId(id), answer);
                }
                s
            })
            .collect();
        history(sets)
    }

    use crate::types::Answer;

    proptest! {
        #[test]
        fn review_keeps_records_valid(raw in arb_history(), cumulative in any::<bool>()) {
            let h = build(&raw);
            let before = h.clone();
            let config = ReviewConfig {
                mode: if cumulative { ReviewMode::Cumulative } else { ReviewMode::Rebuild },
                max_passes: 20,
                ..ReviewConfig::default()
            };
            let (out, diag) = review_update(&h, &TrustVector::new(6), &config, PriorOdds::default()).unwrap();
            prop_assert!(diag.passes_used <= 20);
            prop_assert!(diag.final_delta_tau.is_finite());
            prop_assert!(out.records().iter().all(|r| r.is_valid()));
            prop_assert_eq!(h, before);
        }

        #[test]
        fn fixed_point_is_idempotent(raw in arb_history()) {
            let h = build(&raw);
            let config = ReviewConfig { threshold: 1e-300, max_passes: 500, ..ReviewConfig::default() };
            let (out, diag) = review_update(&h, &TrustVector::new(6), &config, PriorOdds::default()).unwrap();
            if diag.final_delta_tau == 0.0 {
                let one_pass = ReviewConfig { max_passes: 1, ..config };
                let (again, _) = review_update(&h, &out, &one_pass, PriorOdds::default()).unwrap();
                for (a, b) in again.records().iter().zip(out.records()) {
                    prop_assert!((a.alpha - b.alpha).abs() <= 1e-12 * b.alpha);
                    prop_assert!((a.beta - b.beta).abs() <= 1e-12 * b.beta);
                }
            }
        }
    }
}
