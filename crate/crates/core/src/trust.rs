//! Beta-evidence trust records.
//!
//! Each advisor carries pseudo-counts of advice estimated to be correct
//! (`alpha`) and incorrect (`beta`) on top of a `Beta(1, 1)` prior. Evidence is
//! fractional because it comes from decision confidence rather than ground truth.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::bwve::AnswerSet;
use crate::error::{Error, Result};
use crate::types::{AdvisorId, Answer};

/// Bounds applied to a trust value wherever it enters a likelihood.
pub const TRUST_FLOOR: f64 = 1e-9;
pub const TRUST_CEIL: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustRecord {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for TrustRecord {
    fn default() -> Self {
        Self::new()
    }
}

impl TrustRecord {
    /// The uninformative `Beta(1, 1)` prior.
    pub fn new() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn with_evidence(alpha: f64, beta: f64) -> Result<Self> {
        let record = Self { alpha, beta };
        if record.is_valid() {
            Ok(record)
        } else {
            Err(Error::InvalidConfig(format!(
                "trust evidence must be finite and >= 1, got alpha={alpha}, beta={beta}"
            )))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite() && self.alpha >= 1.0 && self.beta >= 1.0
    }

    /// `τ = α / (α + β)`.
    pub fn trustworthiness(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Subjective-logic uncertainty `θ = 2 / (α + β)`; 1 at the prior.
    pub fn uncertainty(&self) -> f64 {
        2.0 / (self.alpha + self.beta)
    }

    /// Evidence accumulated beyond the prior.
    pub fn evidence(&self) -> f64 {
        self.alpha + self.beta - 2.0
    }

    /// One draw from `Beta(α, β)`.
    pub fn thompson_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Shapes are >= 1 for every valid record, so construction cannot fail.
        let dist = Beta::new(self.alpha, self.beta).expect("valid beta shape");
        dist.sample(rng)
    }
}

/// Clamp a trust value into the open unit interval before it is used as a likelihood.
pub fn clamp_trust(tau: f64) -> f64 {
    tau.clamp(TRUST_FLOOR, TRUST_CEIL)
}

/// Per-advisor trust records indexed by [`AdvisorId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrustVector {
    records: Vec<TrustRecord>,
}

impl TrustVector {
    /// A vector of `len` fresh records.
    pub fn new(len: usize) -> Self {
        Self {
            records: vec![TrustRecord::new(); len],
        }
    }

    pub fn from_records(records: Vec<TrustRecord>) -> Result<Self> {
        if let Some(bad) = records.iter().find(|r| !r.is_valid()) {
            return Err(Error::Parse(format!(
                "invalid trust record alpha={}, beta={}",
                bad.alpha, bad.beta
            )));
        }
        Ok(Self { records })
    }

    /// Parse the JSON persistence form, an array of `{alpha, beta}` objects.
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<TrustRecord> = serde_json::from_str(text)?;
        Self::from_records(records)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.records).expect("trust records serialize")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TrustRecord] {
        &self.records
    }

    pub fn get(&self, id: AdvisorId) -> Result<&TrustRecord> {
        self.records.get(id.0).ok_or(Error::UnknownAdvisor(id))
    }

    pub fn get_mut(&mut self, id: AdvisorId) -> Result<&mut TrustRecord> {
        self.records.get_mut(id.0).ok_or(Error::UnknownAdvisor(id))
    }

    pub fn trustworthiness(&self, id: AdvisorId) -> Result<f64> {
        self.get(id).map(TrustRecord::trustworthiness)
    }

    pub fn uncertainty(&self, id: AdvisorId) -> Result<f64> {
        self.get(id).map(TrustRecord::uncertainty)
    }

    pub fn contains(&self, id: AdvisorId) -> bool {
        id.0 < self.records.len()
    }

    /// Sum of `|τ_new − τ_old|` over all advisors.
    pub fn l1_distance(&self, other: &TrustVector) -> f64 {
        self.records
            .iter()
            .zip(&other.records)
            .map(|(a, b)| (a.trustworthiness() - b.trustworthiness()).abs())
            .sum()
    }

    /// Credit `confidence` as evidence: members that agreed with `answer` gain
    /// `alpha`, members that disagreed gain `beta`. Other advisors are untouched.
    ///
    /// The whole answer set is validated before anything is mutated.
    pub fn apply_confidence_update(
        &mut self,
        answers: &AnswerSet,
        answer: Answer,
        confidence: f64,
    ) -> Result<()> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidConfidence(confidence));
        }
        if let Some(id) = answers.members().find(|id| !self.contains(*id)) {
            return Err(Error::UnknownAdvisor(id));
        }
        for (id, given) in answers.answers() {
            let record = &mut self.records[id.0];
            if given == answer {
                record.alpha += confidence;
            } else {
                record.beta += confidence;
            }
        }
        Ok(())
    }
}
