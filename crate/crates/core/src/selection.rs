//! Utility-driven advisor selection.
//!
//! Each round draws a Thompson sample of every remaining advisor's accuracy,
//! estimates how much hiring that advisor would move the ensemble decision,
//! and hires the advisor with the largest expected gain net of price. The
//! loop stops once no advisor is expected to pay for itself.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bwve::{ballots_into, ensemble_from_ballots, AnswerSet, Ballot, PriorOdds};
use crate::error::Result;
use crate::trust::TrustVector;
use crate::types::{AdvisorId, AdvisorOffer, Answer, DecisionId, DecisionValue};

/// Supplies an advisor's answer to a decision once that advisor is hired.
pub trait AnswerOracle {
    fn query(&mut self, advisor: AdvisorId, decision: DecisionId) -> Answer;
}

/// Draw one answer from an advisor of the given accuracy.
pub fn draw_answer<R: Rng + ?Sized>(hidden_accuracy: f64, truth: Answer, rng: &mut R) -> Answer {
    if rng.random::<f64>() < hidden_accuracy {
        truth
    } else {
        truth.flipped()
    }
}

/// Oracle that draws answers lazily and remembers them, so repeated queries
/// for the same `(advisor, decision)` agree.
#[derive(Debug, Clone)]
pub struct MemoizedOracle<R> {
    accuracies: Vec<f64>,
    truth: Answer,
    rng: R,
    cache: HashMap<(AdvisorId, DecisionId), Answer>,
}

impl<R: Rng> MemoizedOracle<R> {
    pub fn new(accuracies: Vec<f64>, truth: Answer, rng: R) -> Self {
        Self {
            accuracies,
            truth,
            rng,
            cache: HashMap::new(),
        }
    }

    pub fn answer_oracle_query(
        &mut self,
        advisor: AdvisorId,
        decision: DecisionId,
        hidden_accuracy: f64,
        truth: Answer,
    ) -> Answer {
        let rng = &mut self.rng;
        *self
            .cache
            .entry((advisor, decision))
            .or_insert_with(|| draw_answer(hidden_accuracy, truth, rng))
    }
}

impl<R: Rng> AnswerOracle for MemoizedOracle<R> {
    fn query(&mut self, advisor: AdvisorId, decision: DecisionId) -> Answer {
        let accuracy = self.accuracies[advisor.0];
        let truth = self.truth;
        self.answer_oracle_query(advisor, decision, accuracy, truth)
    }
}

/// Result of one run of the selection loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub answers: AnswerSet,
    /// Hired advisors in hire order.
    pub hired: Vec<AdvisorId>,
    pub total_cost: f64,
    pub rounds: usize,
}

/// Expected value an advisor adds to the decision, `(2τ' − 1)(ΔV₊ + ΔV₋)`.
///
/// `ΔV₊` is the shift in the ensemble's positive probability if the candidate
/// answered `+1`, weighted by the prior of `+1` and scaled by the decision's
/// stake; `ΔV₋` mirrors it for a `−1` answer. The hypothetical ensemble uses
/// the sampled trust for the candidate and stored trust for everyone else.
pub fn marginal_contribution(
    candidate: AdvisorOffer,
    sampled_trust: f64,
    current: &AnswerSet,
    trust: &TrustVector,
    value: DecisionValue,
    prior: PriorOdds,
) -> Result<f64> {
    debug_assert!(!current.contains(candidate.id));
    let mut ballots = Vec::with_capacity(current.len() + 1);
    ballots_into(current, trust, &mut ballots)?;
    let now = current_probabilities(&ballots, prior)?;
    let theta = trust.uncertainty(candidate.id)?;
    contribution(&mut ballots, now, sampled_trust, theta, value, prior)
}

fn current_probabilities(ballots: &[Ballot], prior: PriorOdds) -> Result<(f64, f64)> {
    if ballots.is_empty() {
        return Ok((0.5, 0.5));
    }
    let e = ensemble_from_ballots(ballots, prior)?;
    Ok((e.p_positive, e.p_negative))
}

/// `ballots` holds the current answer set on entry and is restored on exit.
fn contribution(
    ballots: &mut Vec<Ballot>,
    (now_plus, now_minus): (f64, f64),
    sampled_trust: f64,
    theta: f64,
    value: DecisionValue,
    prior: PriorOdds,
) -> Result<f64> {
    let weight = 2.0 * sampled_trust - 1.0;
    if weight == 0.0 {
        return Ok(0.0);
    }
    ballots.push(Ballot::new(sampled_trust, theta, Answer::Positive));
    let if_positive = ensemble_from_ballots(ballots, prior);
    ballots.pop();
    ballots.push(Ballot::new(sampled_trust, theta, Answer::Negative));
    let if_negative = ensemble_from_ballots(ballots, prior);
    ballots.pop();
    let stake = value.stake();
    let gain_plus = prior.p_plus * (if_positive?.p_positive - now_plus).abs() * stake;
    let gain_minus = prior.p_minus * (if_negative?.p_negative - now_minus).abs() * stake;
    Ok(weight * (gain_plus + gain_minus))
}

/// Hire advisors one at a time while the best expected marginal utility is positive.
///
/// Fresh Thompson samples are drawn for every remaining advisor each round.
/// Ties on utility go to the advisor listed first in `pool`.
#[allow(clippy::too_many_arguments)]
pub fn select_advisors<O, R>(
    decision: DecisionId,
    value: DecisionValue,
    pool: &[AdvisorOffer],
    trust: &TrustVector,
    prior: PriorOdds,
    oracle: &mut O,
    rng: &mut R,
) -> Result<SelectionOutcome>
where
    O: AnswerOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut remaining: Vec<AdvisorOffer> = pool.to_vec();
    let mut answers = AnswerSet::new();
    let mut hired = Vec::new();
    let mut total_cost = 0.0;
    let mut rounds = 0;
    let mut ballots: Vec<Ballot> = Vec::with_capacity(pool.len() + 1);
    let mut now = (0.5, 0.5);

    while !remaining.is_empty() {
        rounds += 1;
        let mut best: Option<(usize, f64)> = None;
        for (slot, offer) in remaining.iter().enumerate() {
            let record = trust.get(offer.id)?;
            let sampled = record.thompson_sample(rng);
            let v = contribution(
                &mut ballots,
                now,
                sampled,
                record.uncertainty(),
                value,
                prior,
            )?;
            let utility = v - offer.cost;
            if best.is_none_or(|(_, u)| utility > u) {
                best = Some((slot, utility));
            }
        }
        let Some((slot, utility)) = best else { break };
        if utility <= 0.0 {
            break;
        }
        let offer = remaining.remove(slot);
        let answer = oracle.query(offer.id, decision);
        answers.insert(offer.id, answer)?;
        hired.push(offer.id);
        total_cost += offer.cost;
        ballots_into(&answers, trust, &mut ballots)?;
        now = current_probabilities(&ballots, prior)?;
    }

    Ok(SelectionOutcome {
        answers,
        hired,
        total_cost,
        rounds,
    })
}
