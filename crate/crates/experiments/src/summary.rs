//! Per-(value, mode) aggregation of sweep results and trend verdicts.

use std::collections::BTreeSet;

use crate::stats::{mean_stddev, monotone_nondecreasing, unimodal_interior_peak};
use crate::sweep::ResultRow;

/// Aggregated statistics for one (value, mode) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStat {
    pub value: f64,
    pub mode: String,
    pub mean: f64,
    pub stddev: f64,
    pub seeds: usize,
}

/// Trend verdicts for one mode's seed-mean series over the swept values.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendVerdict {
    pub mode: String,
    pub monotone: bool,
    /// Swept value at the interior peak, when the series is unimodal.
    pub unimodal_peak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub param: String,
    pub groups: Vec<GroupStat>,
    pub trends: Vec<TrendVerdict>,
    /// Whether the expected trend for the swept parameter holds.
    pub gate_ok: bool,
    /// Human-readable description of the gate.
    pub gate: String,
}

fn ordered_distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut set = BTreeSet::new();
    for v in values {
        set.insert(v.to_bits());
    }
    let mut out: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Aggregates rows and judges the expected trend: efficiency non-decreasing
/// in `K` and `S_L`, unimodal with an interior peak in `v`, no expectation
/// for `q`. The gate is evaluated on the `rldc` series when present.
pub fn summarize(rows: &[ResultRow]) -> Summary {
    let finite: Vec<&ResultRow> = rows.iter().filter(|r| r.mean_effi.is_finite()).collect();
    let skipped = rows.len() - finite.len();
    let param = rows
        .first()
        .map(|r| r.param.clone())
        .unwrap_or_else(|| "none".into());
    let values = ordered_distinct(finite.iter().map(|r| r.value));
    let mut modes: Vec<String> = Vec::new();
    for r in &finite {
        if !modes.contains(&r.mode) {
            modes.push(r.mode.clone());
        }
    }

    let mut groups = Vec::new();
    let mut trends = Vec::new();
    for mode in &modes {
        let mut series = Vec::new();
        for &value in &values {
            let samples: Vec<f64> = finite
                .iter()
                .filter(|r| &r.mode == mode && r.value == value)
                .map(|r| r.mean_effi)
                .collect();
            if samples.is_empty() {
                continue;
            }
            let (mean, stddev) = mean_stddev(&samples);
            groups.push(GroupStat {
                value,
                mode: mode.clone(),
                mean,
                stddev,
                seeds: samples.len(),
            });
            series.push(mean);
        }
        trends.push(TrendVerdict {
            mode: mode.clone(),
            monotone: monotone_nondecreasing(&series),
            unimodal_peak: unimodal_interior_peak(&series)
                .map(|i| values[i]),
        });
    }

    let gated = trends.iter().find(|t| t.mode == "rldc");
    let (gate_ok, gate) = match (param.as_str(), gated) {
        ("K", Some(t)) => (t.monotone, "rldc efficiency non-decreasing in K".into()),
        ("S_L", Some(t)) => (t.monotone, "rldc efficiency non-decreasing in S_L".into()),
        ("v", Some(t)) => (
            t.unimodal_peak.is_some(),
            "rldc efficiency unimodal in v with an interior peak".into(),
        ),
        ("q", _) => (true, "no expected trend for q".into()),
        (_, None) => (true, "no rldc rows; nothing to gate".into()),
        (p, _) => (true, format!("no expected trend for {p}")),
    };
    let gate = if skipped > 0 {
        format!("{gate} ({skipped} failed cells ignored)")
    } else {
        gate
    };

    Summary {
        param,
        groups,
        trends,
        gate_ok,
        gate,
    }
}

/// Renders the summary as the text report printed by the CLI.
pub fn render(summary: &Summary) -> String {
    let mut out = String::new();
    out.push_str(&format!("sweep parameter: {}\n", summary.param));
    for g in &summary.groups {
        out.push_str(&format!(
            "{} = {:<8} mode {:<8} mean_effi {:>12.4} stddev {:>10.4} seeds {}\n",
            summary.param, g.value, g.mode, g.mean, g.stddev, g.seeds
        ));
    }
    for t in &summary.trends {
        out.push_str(&format!(
            "trend {:<8} monotone: {}  unimodal: {}\n",
            t.mode,
            if t.monotone { "yes" } else { "no" },
            match t.unimodal_peak {
                Some(v) => format!("yes (peak at {v})"),
                None => "no".into(),
            }
        ));
    }
    out.push_str(&format!(
        "gate [{}]: {}\n",
        summary.gate,
        if summary.gate_ok { "pass" } else { "FAIL" }
    ));
    out
}
