//! CSV artifacts: per-run results, per-cell summaries and significance tests.
//!
//! Every file has a header row and a fixed column order. Floats are written
//! with six significant digits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::stats::{mann_whitney_u, summarize};

/// p-values below this are significant (0.05 split over three comparisons).
pub const BONFERRONI_THRESHOLD: f64 = 0.05 / 3.0;

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `[-4, 6)`, scientific otherwise, trailing zeros removed.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!(
            "{mantissa}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One row of `results.csv`: one method run on one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub environment: String,
    pub grid_index: usize,
    pub grid_point: f64,
    pub repetition: usize,
    pub method: String,
    pub kind: String,
    pub exploration_first: usize,
    pub utility: f64,
    pub utility_per_decision: f64,
    pub correct_count: usize,
    pub n_decisions: usize,
    pub total_cost: f64,
    pub mean_advisors: f64,
    pub env_digest: String,
}

pub const RESULTS_HEADER: [&str; 14] = [
    "environment",
    "grid_index",
    "grid_point",
    "repetition",
    "method",
    "kind",
    "exploration_first",
    "utility",
    "utility_per_decision",
    "correct_count",
    "n_decisions",
    "total_cost",
    "mean_advisors",
    "env_digest",
];

impl ResultRow {
    fn fields(&self) -> [String; 14] {
        [
            self.environment.clone(),
            self.grid_index.to_string(),
            fmt_sig6(self.grid_point),
            self.repetition.to_string(),
            self.method.clone(),
            self.kind.clone(),
            self.exploration_first.to_string(),
            fmt_sig6(self.utility),
            fmt_sig6(self.utility_per_decision),
            self.correct_count.to_string(),
            self.n_decisions.to_string(),
            fmt_sig6(self.total_cost),
            fmt_sig6(self.mean_advisors),
            self.env_digest.clone(),
        ]
    }
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    if header {
        w.write_record(RESULTS_HEADER)?;
    }
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Parse `results.csv`. The header must match [`RESULTS_HEADER`] exactly.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse(format!(
            "unexpected results header: {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in r.deserialize() {
        let row: ResultRow = record?;
        if !(row.utility.is_finite() && row.grid_point.is_finite() && row.total_cost.is_finite()) {
            return Err(Error::Parse("non-finite value in results".into()));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub environment: String,
    pub grid_point: f64,
    pub method: String,
    pub n: usize,
    pub mean_utility: f64,
    pub std_utility: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_utility_per_decision: f64,
    pub mean_correct: f64,
    pub mean_cost: f64,
    pub mean_advisors: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceRow {
    pub environment: String,
    pub grid_point: f64,
    pub reference: String,
    pub comparator: String,
    pub n_reference: usize,
    pub n_comparator: usize,
    pub u: f64,
    pub p_value: f64,
    pub significant: bool,
    pub mean_difference: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonReport {
    pub summary: Vec<SummaryRow>,
    pub significance: Vec<SignificanceRow>,
}

impl ComparisonReport {
    pub fn summary_for(
        &self,
        environment: &str,
        grid_point: f64,
        method: &str,
    ) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| {
            s.environment == environment && s.grid_point == grid_point && s.method == method
        })
    }
}

/// Key that keeps rows in first-seen order of environment and method.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    env_rank: usize,
    grid_index: usize,
    method_rank: usize,
}

struct Group<'a> {
    rows: Vec<&'a ResultRow>,
}

/// Aggregate result rows into per-cell summaries and Mann–Whitney tests.
///
/// Each MADDM variant is compared against every FNA/BC/RV method in the same
/// environment and grid point. FNA and BC are only compared against the
/// MADDM variant with the same exploration-first setting; RV is compared
/// against all variants.
pub fn build_report(rows: &[ResultRow]) -> Result<ComparisonReport> {
    let mut env_order: Vec<&str> = Vec::new();
    let mut method_order: Vec<&str> = Vec::new();
    for row in rows {
        if !env_order.contains(&row.environment.as_str()) {
            env_order.push(&row.environment);
        }
        if !method_order.contains(&row.method.as_str()) {
            method_order.push(&row.method);
        }
    }
    let rank = |list: &[&str], name: &str| list.iter().position(|x| *x == name).unwrap_or(0);

    let mut groups: BTreeMap<GroupKey, Group<'_>> = BTreeMap::new();
    for row in rows {
        let key = GroupKey {
            env_rank: rank(&env_order, &row.environment),
            grid_index: row.grid_index,
            method_rank: rank(&method_order, &row.method),
        };
        groups
            .entry(key)
            .or_insert_with(|| Group { rows: Vec::new() })
            .rows
            .push(row);
    }

    let mut report = ComparisonReport::default();
    for group in groups.values() {
        let first = group.rows[0];
        let utilities: Vec<f64> = group.rows.iter().map(|r| r.utility).collect();
        let s = summarize(&utilities).expect("non-empty group");
        let mean_of = |f: &dyn Fn(&ResultRow) -> f64| {
            group.rows.iter().map(|r| f(r)).sum::<f64>() / group.rows.len() as f64
        };
        report.summary.push(SummaryRow {
            environment: first.environment.clone(),
            grid_point: first.grid_point,
            method: first.method.clone(),
            n: s.n,
            mean_utility: s.mean,
            std_utility: s.std,
            ci95_low: s.ci_low,
            ci95_high: s.ci_high,
            mean_utility_per_decision: mean_of(&|r| r.utility_per_decision),
            mean_correct: mean_of(&|r| r.correct_count as f64),
            mean_cost: mean_of(&|r| r.total_cost),
            mean_advisors: mean_of(&|r| r.mean_advisors),
        });
    }

    for (key, reference) in groups.iter().filter(|(_, g)| g.rows[0].kind == "maddm") {
        let ref_row = reference.rows[0];
        for (other_key, other) in &groups {
            let (ok, k) = (other_key, other.rows[0]);
            if ok.env_rank != key.env_rank || ok.grid_index != key.grid_index {
                continue;
            }
            let comparable = match k.kind.as_str() {
                "rv" => true,
                "fna" | "bc" => k.exploration_first == ref_row.exploration_first,
                _ => false,
            };
            if !comparable {
                continue;
            }
            // Pair by repetition so the two samples cover the same cells.
            let by_rep: BTreeMap<usize, f64> = other
                .rows
                .iter()
                .map(|r| (r.repetition, r.utility))
                .collect();
            let mut a = Vec::new();
            let mut b = Vec::new();
            for r in &reference.rows {
                if let Some(&u) = by_rep.get(&r.repetition) {
                    a.push(r.utility);
                    b.push(u);
                }
            }
            if a.is_empty() {
                continue;
            }
            let test = mann_whitney_u(&a, &b)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            report.significance.push(SignificanceRow {
                environment: ref_row.environment.clone(),
                grid_point: ref_row.grid_point,
                reference: ref_row.method.clone(),
                comparator: k.method.clone(),
                n_reference: a.len(),
                n_comparator: b.len(),
                u: test.u,
                p_value: test.p,
                significant: test.p < BONFERRONI_THRESHOLD,
                mean_difference: mean(&a) - mean(&b),
            });
        }
    }
    Ok(report)
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "environment",
        "grid_point",
        "method",
        "n",
        "mean_utility",
        "std_utility",
        "ci95_low",
        "ci95_high",
        "mean_utility_per_decision",
        "mean_correct",
        "mean_cost",
        "mean_advisors",
    ])?;
    for r in rows {
        w.write_record([
            r.environment.clone(),
            fmt_sig6(r.grid_point),
            r.method.clone(),
            r.n.to_string(),
            fmt_sig6(r.mean_utility),
            fmt_sig6(r.std_utility),
            fmt_sig6(r.ci95_low),
            fmt_sig6(r.ci95_high),
            fmt_sig6(r.mean_utility_per_decision),
            fmt_sig6(r.mean_correct),
            fmt_sig6(r.mean_cost),
            fmt_sig6(r.mean_advisors),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_significance<W: Write>(out: W, rows: &[SignificanceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "environment",
        "grid_point",
        "reference",
        "comparator",
        "n_reference",
        "n_comparator",
        "u",
        "p_value",
        "significant",
        "mean_difference",
    ])?;
    for r in rows {
        w.write_record([
            r.environment.clone(),
            fmt_sig6(r.grid_point),
            r.reference.clone(),
            r.comparator.clone(),
            r.n_reference.to_string(),
            r.n_comparator.to_string(),
            fmt_sig6(r.u),
            fmt_sig6(r.p_value),
            r.significant.to_string(),
            fmt_sig6(r.mean_difference),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
