//! Binary Dawid–Skene style EM over a history of answer sets.
//!
//! Each advisor has one accuracy; the truth of each decision is latent with a
//! uniform prior. The M-step uses Laplace smoothing, `(correct + 1) / (n + 2)`,
//! which is the MAP estimate under a `Beta(2, 2)` prior on every accuracy.

use crate::bwve::AnswerSet;
use crate::trust::clamp_trust;
use crate::types::Answer;

pub const EM_TOLERANCE: f64 = 1e-6;
pub const EM_MAX_ITERATIONS: usize = 100;
/// Starting accuracy for advisors with no previous estimate.
pub const EM_INITIAL_ACCURACY: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    pub accuracies: Vec<f64>,
    /// `tanh(log_odds / 2)` of each decision's truth; posteriors derive from it
    /// so that flipping every answer maps `P(+)` onto `P(−)` bit for bit.
    half_tanh: Vec<f64>,
}

impl EmState {
    pub fn uniform(n_advisors: usize, accuracy: f64) -> Self {
        Self {
            accuracies: vec![accuracy; n_advisors],
            half_tanh: Vec::new(),
        }
    }

    /// `P(truth = +1)` for decision `d`; 0.5 for decisions not yet evaluated.
    pub fn posterior(&self, d: usize) -> f64 {
        self.half_tanh.get(d).map_or(0.5, |t| 0.5 + 0.5 * t)
    }

    /// `P(truth = −1)` for decision `d`.
    pub fn posterior_negative(&self, d: usize) -> f64 {
        self.half_tanh.get(d).map_or(0.5, |t| 0.5 - 0.5 * t)
    }

    pub fn posteriors(&self) -> Vec<f64> {
        (0..self.half_tanh.len())
            .map(|d| self.posterior(d))
            .collect()
    }

    pub fn n_decisions(&self) -> usize {
        self.half_tanh.len()
    }
}

/// Per-iteration objective values, for checking EM's ascent property.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmTrace {
    /// Expected complete-data log-likelihood plus the smoothing log-prior,
    /// under the iteration's posteriors, before and after its M-step.
    pub expected_ll_before_m: Vec<f64>,
    pub expected_ll_after_m: Vec<f64>,
    /// The EM lower bound (expected log-likelihood plus log-prior plus
    /// posterior entropy) after each full iteration.
    pub bound: Vec<f64>,
    pub iterations: usize,
}

pub fn em_aggregate(history: &[AnswerSet], init: &EmState) -> EmState {
    run(history, init, None)
}

pub fn em_aggregate_traced(history: &[AnswerSet], init: &EmState) -> (EmState, EmTrace) {
    let mut trace = EmTrace::default();
    let state = run(history, init, Some(&mut trace));
    (state, trace)
}

fn run(history: &[AnswerSet], init: &EmState, mut trace: Option<&mut EmTrace>) -> EmState {
    let n_advisors = history
        .iter()
        .flat_map(|s| s.members())
        .map(|id| id.0 + 1)
        .max()
        .unwrap_or(0)
        .max(init.accuracies.len());
    let mut accuracies = init.accuracies.clone();
    accuracies.resize(n_advisors, EM_INITIAL_ACCURACY);
    let mut half_tanh = init.half_tanh.clone();
    half_tanh.resize(history.len(), f64::NAN);

    let mut weights = vec![0.0; n_advisors];
    let mut correct = vec![0.0; n_advisors];
    let mut counts = vec![0.0; n_advisors];
    for iteration in 1..=EM_MAX_ITERATIONS {
        // E-step.
        for (w, &a) in weights.iter_mut().zip(&accuracies) {
            let a = clamp_trust(a);
            *w = (a / (1.0 - a)).ln();
        }
        let mut change: f64 = 0.0;
        for (t, set) in half_tanh.iter_mut().zip(history) {
            // Summing each side separately keeps the result exactly odd
            // under swapping the two sides.
            let plus: f64 = set.positives().map(|id| weights[id.0]).sum();
            let minus: f64 = set.negatives().map(|id| weights[id.0]).sum();
            let log_odds = plus - minus;
            let next = (0.5 * log_odds).tanh();
            change = change.max(if t.is_nan() {
                f64::INFINITY
            } else {
                0.5 * (next - *t).abs()
            });
            *t = next;
        }

        let before = trace
            .as_ref()
            .map(|_| expected_log_posterior(history, &half_tanh, &accuracies));

        // M-step.
        correct.iter_mut().for_each(|c| *c = 0.0);
        counts.iter_mut().for_each(|c| *c = 0.0);
        for (t, set) in half_tanh.iter().zip(history) {
            let (p, n) = (0.5 + 0.5 * t, 0.5 - 0.5 * t);
            for (id, answer) in set.answers() {
                correct[id.0] += match answer {
                    Answer::Positive => p,
                    Answer::Negative => n,
                };
                counts[id.0] += 1.0;
            }
        }
        for ((a, c), n) in accuracies.iter_mut().zip(&correct).zip(&counts) {
            *a = (c + 1.0) / (n + 2.0);
        }

        if let Some(trace) = trace.as_deref_mut() {
            let after = expected_log_posterior(history, &half_tanh, &accuracies);
            trace.expected_ll_before_m.push(before.unwrap_or(f64::NAN));
            trace.expected_ll_after_m.push(after);
            trace.bound.push(after + entropy(&half_tanh, history));
            trace.iterations = iteration;
        }
        if change < EM_TOLERANCE {
            break;
        }
    }
    EmState {
        accuracies,
        half_tanh,
    }
}

/// `Σ_d Σ_x [q log a + (1−q) log(1−a)] + |D| log ½ + Σ_x log a(1−a)`.
fn expected_log_posterior(history: &[AnswerSet], half_tanh: &[f64], accuracies: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, set) in half_tanh.iter().zip(history) {
        let (p, n) = (0.5 + 0.5 * t, 0.5 - 0.5 * t);
        total += 0.5f64.ln();
        for (id, answer) in set.answers() {
            let a = clamp_trust(accuracies[id.0]);
            let q = match answer {
                Answer::Positive => p,
                Answer::Negative => n,
            };
            total += q * a.ln() + (1.0 - q) * (1.0 - a).ln();
        }
    }
    total
        + accuracies
            .iter()
            .map(|&a| {
                let a = clamp_trust(a);
                a.ln() + (1.0 - a).ln()
            })
            .sum::<f64>()
}

fn entropy(half_tanh: &[f64], history: &[AnswerSet]) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    half_tanh
        .iter()
        .zip(history)
        .map(|(t, _)| h(0.5 + 0.5 * t) + h(0.5 - 0.5 * t))
        .sum()
}
