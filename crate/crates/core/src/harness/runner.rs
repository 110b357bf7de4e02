use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bwve::{ensemble_decide, AnswerSet, EnsembleOutcome, PriorOdds};
use crate::environment::Environment;
use crate::error::Result;
use crate::ledger::{DecisionRecord, Ledger};
use crate::review::{review_update, DecisionHistory, ReviewConfig, ReviewDiagnostics};
use crate::selection::{select_advisors, AnswerOracle};
use crate::trust::TrustVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaddmConfig {
    pub review: ReviewConfig,
    pub prior: PriorOdds,
    /// Hire the whole pool for this many opening decisions; 0 disables.
    pub exploration_first_rounds: usize,
}

/// Everything a MADDM run leaves behind.
#[derive(Debug, Clone)]
pub struct MaddmRun {
    pub ledger: Ledger,
    pub trust: TrustVector,
    pub reviews: Vec<ReviewDiagnostics>,
}

/// Select, decide, update trust and review, for every decision of `env`.
/// The ground truth is only read by the ledger.
pub fn run_maddm<R: Rng + ?Sized>(
    env: &Environment,
    config: &MaddmConfig,
    rng: &mut R,
    keep_trace: bool,
) -> Result<MaddmRun> {
    config.review.validate()?;
    let pool = env.offers();
    let mut trust = TrustVector::new(env.n_advisors());
    let mut history = DecisionHistory::new();
    let mut ledger = Ledger::new(keep_trace);
    let mut reviews = Vec::new();

    for (i, decision) in env.decisions.iter().enumerate() {
        let (answers, hired, cost, rounds) = if i < config.exploration_first_rounds {
            let mut oracle = env.oracle();
            let mut answers = AnswerSet::new();
            for offer in &pool {
                answers.insert(offer.id, oracle.query(offer.id, decision.id))?;
            }
            let hired = pool.iter().map(|o| o.id).collect();
            (answers, hired, env.pool_cost(), 0)
        } else {
            let out = select_advisors(
                decision.id,
                decision.value,
                &pool,
                &trust,
                config.prior,
                &mut env.oracle(),
                rng,
            )?;
            (out.answers, out.hired, out.total_cost, out.rounds)
        };

        let outcome = if answers.is_empty() {
            EnsembleOutcome::abstain()
        } else {
            let outcome = ensemble_decide(&answers, &trust, config.prior)?;
            trust.apply_confidence_update(&answers, outcome.answer, outcome.confidence)?;
            history.push(decision.id, answers)?;
            outcome
        };

        if (i + 1) % config.review.frequency == 0 && !history.is_empty() {
            let (reviewed, diag) = review_update(&history, &trust, &config.review, config.prior)?;
            trust = reviewed;
            reviews.push(diag);
        }

        ledger.record(
            decision,
            DecisionRecord {
                rounds,
                hired,
                cost,
                p_positive: outcome.p_positive,
                answer: outcome.answer,
                confidence: outcome.confidence,
            },
        );
    }
    Ok(MaddmRun {
        ledger,
        trust,
        reviews,
    })
}
