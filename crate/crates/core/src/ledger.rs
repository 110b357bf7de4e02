//! Utility accounting for one run: `u_d = v_d − C_d`, summed over decisions.

use serde::{Deserialize, Serialize};

use crate::environment::SimulatedDecision;
use crate::types::{AdvisorId, Answer, DecisionId};

/// One decision as seen by the ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub decision_id: DecisionId,
    pub rounds: usize,
    pub hired: Vec<AdvisorId>,
    pub advisors_polled: usize,
    pub total_cost: f64,
    pub p_positive: f64,
    pub answer: Answer,
    pub confidence: f64,
    pub correct: bool,
    pub utility: f64,
}

/// What a method did on one decision, before scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub rounds: usize,
    pub hired: Vec<AdvisorId>,
    pub cost: f64,
    pub p_positive: f64,
    pub answer: Answer,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    pub n_decisions: usize,
    pub correct_count: usize,
    /// Σ v⁺ over correctly answered decisions.
    pub value_won: f64,
    /// Σ v⁻ over wrongly answered decisions.
    pub value_lost: f64,
    pub total_cost: f64,
    pub advisors_hired: usize,
    pub trace: Option<Vec<DecisionTrace>>,
}

impl Ledger {
    pub fn new(keep_trace: bool) -> Self {
        Self {
            trace: keep_trace.then(Vec::new),
            ..Self::default()
        }
    }

    pub fn record(&mut self, decision: &SimulatedDecision, rec: DecisionRecord) {
        let correct = rec.answer == decision.truth();
        let value = if correct {
            self.correct_count += 1;
            self.value_won += decision.value.profit;
            decision.value.profit
        } else {
            self.value_lost += decision.value.loss;
            -decision.value.loss
        };
        self.n_decisions += 1;
        self.total_cost += rec.cost;
        self.advisors_hired += rec.hired.len();
        if let Some(trace) = &mut self.trace {
            trace.push(DecisionTrace {
                decision_id: decision.id,
                rounds: rec.rounds,
                advisors_polled: rec.hired.len(),
                hired: rec.hired,
                total_cost: rec.cost,
                p_positive: rec.p_positive,
                answer: rec.answer,
                confidence: rec.confidence,
                correct,
                utility: value - rec.cost,
            });
        }
    }

    /// `Σ_correct v⁺ − Σ_wrong v⁻ − Σ C_d`.
    pub fn utility(&self) -> f64 {
        self.value_won - self.value_lost - self.total_cost
    }

    pub fn mean_advisors(&self) -> f64 {
        if self.n_decisions == 0 {
            0.0
        } else {
            self.advisors_hired as f64 / self.n_decisions as f64
        }
    }
}
