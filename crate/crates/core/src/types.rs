//! Identifiers and value types shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense index of an advisor within one pool, `0..pool_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdvisorId(pub usize);

impl AdvisorId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AdvisorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionId(pub usize);

impl fmt::Display for DecisionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A binary answer. Serialized as `1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Positive,
    Negative,
}

impl Answer {
    pub fn sign(self) -> i8 {
        match self {
            Answer::Positive => 1,
            Answer::Negative => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Answer::Positive),
            -1 => Some(Answer::Negative),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Answer::Positive => Answer::Negative,
            Answer::Negative => Answer::Positive,
        }
    }
}

impl Serialize for Answer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Answer::from_sign(v).ok_or_else(|| serde::de::Error::custom("answer must be 1 or -1"))
    }
}

/// Profit gained when a decision is answered correctly and loss paid when it is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionValue {
    pub profit: f64,
    pub loss: f64,
}

impl DecisionValue {
    pub fn new(profit: f64, loss: f64) -> Self {
        debug_assert!(profit.is_finite() && profit >= 0.0);
        debug_assert!(loss.is_finite() && loss >= 0.0);
        Self { profit, loss }
    }

    /// `v⁺ + v⁻`, the swing between a right and a wrong answer.
    pub fn stake(&self) -> f64 {
        self.profit + self.loss
    }

    pub fn is_valid(&self) -> bool {
        self.profit.is_finite() && self.loss.is_finite() && self.profit >= 0.0 && self.loss >= 0.0
    }
}

/// An advisor available for hire at a given price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisorOffer {
    pub id: AdvisorId,
    pub cost: f64,
}
