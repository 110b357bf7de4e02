//! Comparison methods: fixed number of advisors (FNA), budget constrained (BC),
//! random voting (RV) and the best-utility upper bound (BU).

pub mod em;
pub mod strategy;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bwve::AnswerSet;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::ledger::{DecisionRecord, Ledger};
use crate::selection::AnswerOracle;
use crate::trust::TrustVector;
use crate::types::{AdvisorOffer, Answer};

pub use em::{em_aggregate, em_aggregate_traced, EmState, EmTrace};
pub use strategy::{
    cost_effectiveness, select_budget_constrained, select_fixed_number, Criterion, Estimates,
    StrategyConfig, StrategyKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Fna,
    Bc,
    Rv,
    Bu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub fna_k: usize,
    /// Per-decision budget as a fraction of `v⁺ + v⁻`.
    pub bc_budget_fraction: f64,
    pub rv_k: usize,
    /// Hire the whole pool for this many opening decisions; 0 disables.
    pub exploration_first_rounds: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::Fna,
            fna_k: 5,
            bc_budget_fraction: 0.10,
            rv_k: 3,
            exploration_first_rounds: 10,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fna_k == 0 || self.rv_k == 0 {
            return Err(Error::InvalidConfig(
                "fna_k and rv_k must be at least 1".into(),
            ));
        }
        if !(self.bc_budget_fraction > 0.0 && self.bc_budget_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bc_budget_fraction {} must lie in (0, 1]",
                self.bc_budget_fraction
            )));
        }
        Ok(())
    }
}

fn collect_answers(
    env: &Environment,
    decision: usize,
    chosen: &[AdvisorOffer],
) -> Result<(AnswerSet, f64)> {
    let mut oracle = env.oracle();
    let id = env.decisions[decision].id;
    let mut set = AnswerSet::new();
    let mut cost = 0.0;
    for offer in chosen {
        set.insert(offer.id, oracle.query(offer.id, id))?;
        cost += offer.cost;
    }
    Ok((set, cost))
}

/// Plain majority; a tie answers −1.
fn majority(set: &AnswerSet) -> Answer {
    if set.positive_count() > set.negative_count() {
        Answer::Positive
    } else {
        Answer::Negative
    }
}

/// Run one baseline over every decision of `env`.
pub fn run_baseline<R: Rng + ?Sized>(
    config: &BaselineConfig,
    strategy: &StrategyConfig,
    env: &Environment,
    rng: &mut R,
    keep_trace: bool,
) -> Result<Ledger> {
    config.validate()?;
    strategy.validate()?;
    let mut ledger = Ledger::new(keep_trace);
    match config.method {
        BaselineMethod::Bu => {
            for d in &env.decisions {
                ledger.record(
                    d,
                    DecisionRecord {
                        rounds: 0,
                        hired: Vec::new(),
                        cost: 0.0,
                        p_positive: 1.0,
                        answer: d.truth(),
                        confidence: 1.0,
                    },
                );
            }
        }
        BaselineMethod::Rv => {
            let pool = env.offers();
            for (i, d) in env.decisions.iter().enumerate() {
                let chosen: Vec<AdvisorOffer> = if i < config.exploration_first_rounds {
                    pool.clone()
                } else {
                    let k = config.rv_k.min(pool.len());
                    let mut idx = sample(rng, pool.len(), k).into_vec();
                    idx.sort_unstable();
                    idx.into_iter().map(|j| pool[j]).collect()
                };
                let (set, cost) = collect_answers(env, i, &chosen)?;
                let answer = majority(&set);
                let p_positive = set.positive_count() as f64 / set.len().max(1) as f64;
                ledger.record(
                    d,
                    DecisionRecord {
                        rounds: 1,
                        hired: chosen.iter().map(|o| o.id).collect(),
                        cost,
                        p_positive,
                        answer,
                        confidence: (2.0 * p_positive - 1.0).abs(),
                    },
                );
            }
        }
        BaselineMethod::Fna | BaselineMethod::Bc => {
            run_em_baseline(config, strategy, env, rng, &mut ledger)?;
        }
    }
    Ok(ledger)
}

/// FNA and BC: pick with a bandit strategy, aggregate the whole history with
/// EM, and feed the current decision's EM confidence back as trust evidence.
fn run_em_baseline<R: Rng + ?Sized>(
    config: &BaselineConfig,
    strategy: &StrategyConfig,
    env: &Environment,
    rng: &mut R,
    ledger: &mut Ledger,
) -> Result<()> {
    let pool = env.offers();
    let mut trust = TrustVector::new(env.n_advisors());
    let mut em = EmState::uniform(env.n_advisors(), em::EM_INITIAL_ACCURACY);
    let mut history: Vec<AnswerSet> = Vec::with_capacity(env.decisions.len());

    for (i, d) in env.decisions.iter().enumerate() {
        let chosen = if i < config.exploration_first_rounds {
            pool.clone()
        } else {
            let estimates = Estimates {
                accuracy: &em.accuracies,
                trust: &trust,
                elapsed: i,
            };
            match config.method {
                BaselineMethod::Fna => {
                    let k = config.fna_k.min(pool.len());
                    select_fixed_number(&pool, &estimates, strategy, k, rng)?
                }
                _ => {
                    let budget = config.bc_budget_fraction * d.value.stake();
                    select_budget_constrained(&pool, &estimates, strategy, budget, rng)?
                }
            }
        };
        let (set, cost) = collect_answers(env, i, &chosen)?;
        let empty = set.is_empty();
        history.push(set);
        let (answer, p_positive, confidence) = if empty {
            (Answer::Negative, 0.5, 0.0)
        } else {
            em = em_aggregate(&history, &em);
            let p = em.posterior(i);
            let answer = if p > em.posterior_negative(i) {
                Answer::Positive
            } else {
                Answer::Negative
            };
            let confidence = (p - em.posterior_negative(i)).abs().min(1.0);
            trust.apply_confidence_update(&history[i], answer, confidence)?;
            (answer, p, confidence)
        };
        ledger.record(
            d,
            DecisionRecord {
                rounds: 1,
                hired: chosen.iter().map(|o| o.id).collect(),
                cost,
                p_positive,
                answer,
                confidence,
            },
        );
    }
    Ok(())
}
