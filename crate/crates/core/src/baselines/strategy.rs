//! Bandit-style pickers used by the fixed-number and budget baselines.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trust::TrustVector;
use crate::types::{AdvisorId, AdvisorOffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    EpsilonGreedy,
    Ucb,
    Thompson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Trustworthiness,
    CostEffectiveness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub epsilon: f64,
    pub criterion: Criterion,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: StrategyKind::EpsilonGreedy,
            epsilon: 0.1,
            criterion: Criterion::CostEffectiveness,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} must lie in [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Price per unit of accuracy above chance, `c / (τ − 0.5)`; lower is better.
/// Advisors no better than chance score `+∞`.
pub fn cost_effectiveness(offer: AdvisorOffer, trust_estimate: f64) -> f64 {
    if trust_estimate > 0.5 {
        offer.cost / (trust_estimate - 0.5)
    } else {
        f64::INFINITY
    }
}

/// What a baseline knows about its advisors when it picks.
#[derive(Debug, Clone, Copy)]
pub struct Estimates<'a> {
    /// Point estimate of each advisor's accuracy.
    pub accuracy: &'a [f64],
    /// Evidence records for the UCB counts and Thompson draws.
    pub trust: &'a TrustVector,
    /// Decisions made so far.
    pub elapsed: usize,
}

impl Estimates<'_> {
    fn ucb_index(&self, id: AdvisorId) -> f64 {
        let n = self.trust.get(id).map_or(0.0, |r| r.evidence());
        if n <= 0.0 {
            return f64::INFINITY;
        }
        let t = self.elapsed.max(1) as f64;
        self.accuracy[id.0] + (2.0 * t.ln() / n).sqrt()
    }
}

/// Sort key under a criterion; smaller sorts first.
fn rank_key(criterion: Criterion, offer: AdvisorOffer, estimate: f64) -> f64 {
    match criterion {
        Criterion::Trustworthiness => -estimate,
        Criterion::CostEffectiveness => cost_effectiveness(offer, estimate),
    }
}

fn by_key_then_id(a: &(f64, AdvisorOffer), b: &(f64, AdvisorOffer)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id))
}

/// Yields advisors in the order a strategy would hire them.
pub struct Picker<'r, R: Rng + ?Sized> {
    /// Remaining advisors, best first.
    ranked: Vec<(f64, AdvisorOffer)>,
    epsilon: Option<f64>,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> Picker<'r, R> {
    pub fn new(
        pool: &[AdvisorOffer],
        estimates: &Estimates<'_>,
        strategy: &StrategyConfig,
        rng: &'r mut R,
    ) -> Result<Self> {
        strategy.validate()?;
        let mut ranked = Vec::with_capacity(pool.len());
        for &offer in pool {
            let estimate = match strategy.kind {
                StrategyKind::EpsilonGreedy => estimates.accuracy[offer.id.0],
                StrategyKind::Ucb => estimates.ucb_index(offer.id),
                StrategyKind::Thompson => estimates.trust.get(offer.id)?.thompson_sample(rng),
            };
            ranked.push((rank_key(strategy.criterion, offer, estimate), offer));
        }
        ranked.sort_by(by_key_then_id);
        let epsilon = (strategy.kind == StrategyKind::EpsilonGreedy).then_some(strategy.epsilon);
        Ok(Self {
            ranked,
            epsilon,
            rng,
        })
    }

    /// Remove and return the next advisor to hire.
    pub fn next_pick(&mut self) -> Option<AdvisorOffer> {
        if self.ranked.is_empty() {
            return None;
        }
        let slot = match self.epsilon {
            Some(eps) if self.rng.random::<f64>() < eps => {
                self.rng.random_range(0..self.ranked.len())
            }
            _ => 0,
        };
        Some(self.ranked.remove(slot).1)
    }
}

/// Exactly `k` distinct advisors chosen by the strategy.
pub fn select_fixed_number<R: Rng + ?Sized>(
    pool: &[AdvisorOffer],
    estimates: &Estimates<'_>,
    strategy: &StrategyConfig,
    k: usize,
    rng: &mut R,
) -> Result<Vec<AdvisorOffer>> {
    if k > pool.len() {
        return Err(Error::PoolTooSmall {
            k,
            pool: pool.len(),
        });
    }
    let mut picker = Picker::new(pool, estimates, strategy, rng)?;
    Ok((0..k).filter_map(|_| picker.next_pick()).collect())
}

/// Hire in strategy order until the next pick would overrun `budget`.
pub fn select_budget_constrained<R: Rng + ?Sized>(
    pool: &[AdvisorOffer],
    estimates: &Estimates<'_>,
    strategy: &StrategyConfig,
    budget: f64,
    rng: &mut R,
) -> Result<Vec<AdvisorOffer>> {
    if budget.is_nan() || budget < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "budget {budget} must be non-negative"
        )));
    }
    let mut picker = Picker::new(pool, estimates, strategy, rng)?;
    let mut spent = 0.0;
    let mut chosen = Vec::new();
    while let Some(offer) = picker.next_pick() {
        if spent + offer.cost > budget {
            break;
        }
        spent += offer.cost;
        chosen.push(offer);
    }
    Ok(chosen)
}
