//! Multi-advisor decision making: Beta trust records, a Bayesian and
//! weighted-voting ensemble, utility-driven advisor selection, trust review,
//! a simulated environment, comparison baselines and an experiment harness.

pub mod baselines;
pub mod bwve;
pub mod environment;
pub mod error;
pub mod harness;
pub mod ledger;
pub mod review;
pub mod selection;
pub mod trust;
pub mod types;

pub use bwve::{
    average_uncertainty, bayesian_probabilities, decide_and_update, ensemble_decide,
    weighted_voting_probabilities, AnswerSet, EnsembleOutcome, PriorOdds,
};
pub use environment::{generate_environment, Environment, EnvironmentConfig};
pub use error::{Error, Result};
pub use harness::{execute_plan, ExperimentPlan, MethodKind, MethodSpec};
pub use review::{review_update, DecisionHistory, ReviewConfig, ReviewMode};
pub use selection::{select_advisors, AnswerOracle, SelectionOutcome};
pub use trust::{TrustRecord, TrustVector};
pub use types::{AdvisorId, AdvisorOffer, Answer, DecisionId, DecisionValue};
