//! Synthetic experiment worlds: decision values, advisor accuracies and prices,
//! and the answers every advisor would give to every decision.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::selection::{draw_answer, AnswerOracle};
use crate::types::{AdvisorId, AdvisorOffer, Answer, DecisionId, DecisionValue};

/// Gaussian draw clamped into `[lower, upper]`. Mass beyond a bound piles up
/// on the bound itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgdParams {
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl ErgdParams {
    pub fn new(mean: f64, std: f64, lower: f64, upper: Option<f64>) -> Result<Self> {
        let p = Self {
            mean,
            std,
            lower,
            upper,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.mean.is_finite()
            && self.std.is_finite()
            && self.lower.is_finite()
            && self.upper.is_none_or(f64::is_finite);
        if !finite || self.std < 0.0 || self.upper.is_some_and(|u| u < self.lower) {
            return Err(Error::InvalidConfig(format!(
                "invalid ERGd parameters {self:?}"
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mean, self.std).expect("validated ERGd parameters");
        let x = normal.sample(rng).max(self.lower);
        match self.upper {
            Some(upper) => x.min(upper),
            None => x,
        }
    }
}

pub fn ergd_sample<R: Rng + ?Sized>(params: &ErgdParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub n_decisions: usize,
    pub n_advisors: usize,
    pub profit: ErgdParams,
    pub loss: ErgdParams,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    /// Mean advisor price is `hidden_accuracy * cost_mean_factor`.
    pub cost_mean_factor: f64,
    pub cost_std: f64,
}

impl EnvironmentConfig {
    /// Decision profits and losses drawn with the given mean and standard
    /// deviation, floored at zero; 1000 decisions and 30 advisors.
    pub fn with_value_scale(scale: f64, accuracy_mean: f64) -> Self {
        let values = ErgdParams {
            mean: scale,
            std: scale,
            lower: 0.0,
            upper: None,
        };
        Self {
            n_decisions: 1000,
            n_advisors: 30,
            profit: values,
            loss: values,
            accuracy_mean,
            accuracy_std: 0.3,
            cost_mean_factor: 20.0,
            cost_std: 10.0,
        }
    }

    /// Values with mean and std 100.
    pub fn env1(accuracy_mean: f64) -> Self {
        Self::with_value_scale(100.0, accuracy_mean)
    }

    /// Values with mean and std 500.
    pub fn env2(accuracy_mean: f64) -> Self {
        Self::with_value_scale(500.0, accuracy_mean)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_decisions == 0 || self.n_advisors == 0 {
            return Err(Error::InvalidConfig(
                "environment needs at least one decision and one advisor".into(),
            ));
        }
        if !(0.5..=1.0).contains(&self.accuracy_mean) {
            return Err(Error::InvalidConfig(format!(
                "accuracy mean {} must lie in [0.5, 1]",
                self.accuracy_mean
            )));
        }
        self.profit.validate()?;
        self.loss.validate()?;
        if self.profit.lower < 0.0 || self.loss.lower < 0.0 {
            return Err(Error::InvalidConfig(
                "decision values must be floored at 0 or above".into(),
            ));
        }
        self.accuracy_params().validate()?;
        let cost_ok =
            self.cost_mean_factor.is_finite() && self.cost_std.is_finite() && self.cost_std >= 0.0;
        if !cost_ok {
            return Err(Error::InvalidConfig(
                "invalid advisor cost parameters".into(),
            ));
        }
        Ok(())
    }

    pub fn accuracy_params(&self) -> ErgdParams {
        ErgdParams {
            mean: self.accuracy_mean,
            std: self.accuracy_std,
            lower: 0.0,
            upper: Some(1.0),
        }
    }

    pub fn cost_params(&self, hidden_accuracy: f64) -> ErgdParams {
        ErgdParams {
            mean: hidden_accuracy * self.cost_mean_factor,
            std: self.cost_std,
            lower: 0.0,
            upper: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedAdvisor {
    pub id: AdvisorId,
    pub hidden_accuracy: f64,
    pub cost: f64,
}

impl SimulatedAdvisor {
    pub fn offer(&self) -> AdvisorOffer {
        AdvisorOffer {
            id: self.id,
            cost: self.cost,
        }
    }
}

/// One decision. The ground truth is always `+1` and is only consulted by
/// the answer oracle and the utility ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDecision {
    pub id: DecisionId,
    pub value: DecisionValue,
    /// Answer each advisor gives to this decision, indexed by advisor.
    pub answers: Vec<Answer>,
}

impl SimulatedDecision {
    pub const TRUTH: Answer = Answer::Positive;

    pub fn truth(&self) -> Answer {
        Self::TRUTH
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub decisions: Vec<SimulatedDecision>,
    pub advisors: Vec<SimulatedAdvisor>,
}

/// Draw a full environment: decision values, then advisors, then every
/// advisor's answer to every decision (decision-major).
pub fn generate_environment<R: Rng + ?Sized>(
    config: &EnvironmentConfig,
    rng: &mut R,
) -> Result<Environment> {
    config.validate()?;
    let values: Vec<DecisionValue> = (0..config.n_decisions)
        .map(|_| {
            let profit = config.profit.sample(rng);
            let loss = config.loss.sample(rng);
            DecisionValue::new(profit, loss)
        })
        .collect();
    let accuracy = config.accuracy_params();
    let advisors: Vec<SimulatedAdvisor> = (0..config.n_advisors)
        .map(|i| {
            let hidden_accuracy = accuracy.sample(rng);
            let cost = config.cost_params(hidden_accuracy).sample(rng);
            SimulatedAdvisor {
                id: AdvisorId(i),
                hidden_accuracy,
                cost,
            }
        })
        .collect();
    let decisions = values
        .into_iter()
        .enumerate()
        .map(|(d, value)| SimulatedDecision {
            id: DecisionId(d),
            value,
            answers: advisors
                .iter()
                .map(|a| draw_answer(a.hidden_accuracy, SimulatedDecision::TRUTH, rng))
                .collect(),
        })
        .collect();
    Ok(Environment {
        decisions,
        advisors,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentFile {
    advisors: Vec<SimulatedAdvisor>,
    decisions: Vec<DecisionRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionRow {
    id: DecisionId,
    profit: f64,
    loss: f64,
    /// One `+` or `-` per advisor.
    answers: String,
}

impl Environment {
    pub fn n_advisors(&self) -> usize {
        self.advisors.len()
    }

    pub fn offers(&self) -> Vec<AdvisorOffer> {
        self.advisors.iter().map(SimulatedAdvisor::offer).collect()
    }

    pub fn oracle(&self) -> TableOracle<'_> {
        TableOracle { env: self }
    }

    /// Sum of every advisor's price; what hiring the whole pool costs.
    pub fn pool_cost(&self) -> f64 {
        self.advisors.iter().map(|a| a.cost).sum()
    }

    pub fn to_json(&self) -> String {
        let file = EnvironmentFile {
            advisors: self.advisors.clone(),
            decisions: self
                .decisions
                .iter()
                .map(|d| DecisionRow {
                    id: d.id,
                    profit: d.value.profit,
                    loss: d.value.loss,
                    answers: d
                        .answers
                        .iter()
                        .map(|a| match a {
                            Answer::Positive => '+',
                            Answer::Negative => '-',
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("environment serializes")
    }

    /// Parse and validate the JSON audit form written by [`Environment::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: EnvironmentFile = serde_json::from_str(text)?;
        let n = file.advisors.len();
        if n == 0 {
            return Err(Error::Parse("environment has no advisors".into()));
        }
        for (i, a) in file.advisors.iter().enumerate() {
            if a.id != AdvisorId(i) {
                return Err(Error::Parse(format!(
                    "advisor ids must be dense, found {} at {i}",
                    a.id
                )));
            }
            if !(0.0..=1.0).contains(&a.hidden_accuracy) {
                return Err(Error::Parse(format!(
                    "advisor {i}: accuracy outside [0, 1]"
                )));
            }
            if !(a.cost.is_finite() && a.cost >= 0.0) {
                return Err(Error::Parse(format!("advisor {i}: invalid cost")));
            }
        }
        let mut decisions = Vec::with_capacity(file.decisions.len());
        for (i, row) in file.decisions.into_iter().enumerate() {
            if row.id != DecisionId(i) {
                return Err(Error::Parse(format!(
                    "decision ids must be dense, found {} at {i}",
                    row.id
                )));
            }
            let value = DecisionValue {
                profit: row.profit,
                loss: row.loss,
            };
            if !value.is_valid() {
                return Err(Error::Parse(format!("decision {i}: invalid value")));
            }
            let answers = row
                .answers
                .chars()
                .map(|c| match c {
                    '+' => Ok(Answer::Positive),
                    '-' => Ok(Answer::Negative),
                    other => Err(Error::Parse(format!(
                        "decision {i}: bad answer symbol {other:?}"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            if answers.len() != n {
                return Err(Error::Parse(format!(
                    "decision {i}: {} answers for {n} advisors",
                    answers.len()
                )));
            }
            decisions.push(SimulatedDecision {
                id: row.id,
                value,
                answers,
            });
        }
        Ok(Self {
            decisions,
            advisors: file.advisors,
        })
    }

    /// SHA-256 of the JSON form; equal digests mean identical worlds.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Serves the pre-drawn answers of an [`Environment`].
#[derive(Debug, Clone, Copy)]
pub struct TableOracle<'a> {
    env: &'a Environment,
}

impl AnswerOracle for TableOracle<'_> {
    fn query(&mut self, advisor: AdvisorId, decision: DecisionId) -> Answer {
        self.env.decisions[decision.0].answers[advisor.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_variance_returns_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ErgdParams::new(100.0, 0.0, 0.0, None).unwrap();
        for _ in 0..10 {
            assert_eq!(ergd_sample(&p, &mut rng), 100.0);
        }
    }

    #[test]
    fn half_mass_at_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ErgdParams::new(0.0, 1.0, 0.0, None).unwrap();
        let n = 100_000;
        let zeros = (0..n).filter(|_| p.sample(&mut rng) == 0.0).count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    /// E[clamp(X, 0, 1)] for X ~ N(μ, σ²), integrated with Simpson's rule.
    fn clamped_mean_by_quadrature(mu: f64, sigma: f64) -> f64 {
        let pdf = |x: f64| {
            (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let (a, b, n) = (mu - 12.0 * sigma, mu + 12.0 * sigma, 200_000);
        let h = (b - a) / n as f64;
        let f = |x: f64| x.clamp(0.0, 1.0) * pdf(x);
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn clamped_accuracy_mean() {
        let oracle = clamped_mean_by_quadrature(0.8, 0.3);
        // ≈ 0.7477
        assert!((0.74..=0.80).contains(&oracle), "{oracle}");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ErgdParams::new(0.8, 0.3, 0.0, Some(1.0)).unwrap();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        assert!(draws.iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((0.74..=0.80).contains(&mean));
        // Clamped variance is below 0.09; 5σ/√n ≈ 0.0047.
        assert!((mean - oracle).abs() < 0.005, "{mean} vs {oracle}");
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ErgdParams::new(0.0, -1.0, 0.0, None).is_err());
        assert!(ErgdParams::new(0.0, 1.0, 2.0, Some(1.0)).is_err());
        assert!(ErgdParams::new(f64::NAN, 1.0, 0.0, None).is_err());
    }

    #[test]
    fn templates_match_experiment_table() {
        let e1 = EnvironmentConfig::env1(0.8);
        assert_eq!(
            (e1.profit.mean, e1.profit.std, e1.loss.mean, e1.loss.std),
            (100.0, 100.0, 100.0, 100.0)
        );
        let e2 = EnvironmentConfig::env2(0.8);
        assert_eq!(
            (e2.profit.mean, e2.profit.std, e2.loss.mean, e2.loss.std),
            (500.0, 500.0, 500.0, 500.0)
        );
        assert_eq!((e1.n_decisions, e1.n_advisors), (1000, 30));
        let cost = e1.cost_params(0.9);
        assert!((cost.mean - 18.0).abs() < 1e-12);
        assert_eq!((cost.std, cost.lower), (10.0, 0.0));
    }

    #[test]
    fn generation_is_deterministic_and_bounded() {
        let config = EnvironmentConfig {
            n_decisions: 200,
            ..EnvironmentConfig::env1(0.7)
        };
        let a = generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.decisions.len(), 200);
        assert_eq!(a.advisors.len(), 30);
        for d in &a.decisions {
            assert!(d.value.profit >= 0.0 && d.value.loss >= 0.0);
        }
        for x in &a.advisors {
            assert!((0.0..=1.0).contains(&x.hidden_accuracy) && x.cost >= 0.0);
        }
        let c = generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn cost_tracks_accuracy() {
        let config = EnvironmentConfig {
            n_decisions: 1,
            n_advisors: 20_000,
            ..EnvironmentConfig::env1(0.75)
        };
        let env = generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let xs: Vec<f64> = env.advisors.iter().map(|a| a.hidden_accuracy).collect();
        let ys: Vec<f64> = env.advisors.iter().map(|a| a.cost).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r = cov / (vx * vy).sqrt();
        assert!(r > 0.2, "correlation {r}");
    }

    #[test]
    fn json_round_trip_and_validation() {
        let config = EnvironmentConfig {
            n_decisions: 5,
            n_advisors: 4,
            ..EnvironmentConfig::env2(0.9)
        };
        let env = generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let parsed = Environment::from_json(&env.to_json()).unwrap();
        assert_eq!(parsed, env);

        let broken = env
            .to_json()
            .replacen("\"answers\": \"", "\"answers\": \"x", 1);
        assert!(Environment::from_json(&broken).is_err());
        assert!(Environment::from_json("{}").is_err());
        assert!(Environment::from_json(r#"{"advisors":[],"decisions":[]}"#).is_err());
    }

    #[test]
    fn table_oracle_serves_drawn_answers() {
        let config = EnvironmentConfig {
            n_decisions: 3,
            n_advisors: 3,
            ..EnvironmentConfig::env1(0.6)
        };
        let env = generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut oracle = env.oracle();
        for d in &env.decisions {
            for x in &env.advisors {
                assert_eq!(oracle.query(x.id, d.id), d.answers[x.id.0]);
            }
        }
    }
}
