//! Markdown comparison tables from round logs.
//!
//! Values are seed means printed with four decimals; `n/a` marks a class
//! whose union was empty in every seed (excluded from mIoU, as opposed to a
//! measured 0.0). Within each round the strictly largest value per column is
//! bold; ties bold every maximal entry.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::{Arm, RoundLog};

/// Seed-aggregated results of one arm at one round.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub arm: Arm,
    pub round: u64,
    pub seeds: usize,
    pub n_labeled: f64,
    /// Mean over logs with a defined mIoU.
    pub miou_mean: Option<f64>,
    /// Sample standard deviation; 0 with fewer than two values.
    pub miou_std: Option<f64>,
    /// Number of logs that contributed to `miou_mean`.
    pub miou_n: usize,
    pub per_class: Vec<Option<f64>>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sample_std(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// Groups logs by (round, arm), ascending; anchors sort after strategies.
pub fn summarize(logs: &[RoundLog]) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<(u64, Arm), Vec<&RoundLog>> = BTreeMap::new();
    for log in logs {
        groups.entry((log.round, log.strategy)).or_default().push(log);
    }
    groups
        .into_iter()
        .map(|((round, arm), g)| {
            let k = g.iter().map(|l| l.per_class_iou.len()).max().unwrap_or(0);
            let mious: Vec<f64> = g.iter().filter_map(|l| l.miou).collect();
            let per_class = (0..k)
                .map(|c| {
                    let v: Vec<f64> = g.iter().filter_map(|l| l.per_class_iou.get(c).copied().flatten()).collect();
                    mean(&v)
                })
                .collect();
            GroupSummary {
                arm,
                round,
                seeds: g.len(),
                n_labeled: g.iter().map(|l| l.n_labeled as f64).sum::<f64>() / g.len() as f64,
                miou_mean: mean(&mious),
                miou_std: sample_std(&mious),
                miou_n: mious.len(),
                per_class,
            }
        })
        .collect()
}

fn fmt_value(v: Option<f64>, best: Option<f64>) -> String {
    match v {
        None => "n/a".into(),
        Some(x) if Some(x) == best => format!("**{x:.4}**"),
        Some(x) => format!("{x:.4}"),
    }
}

fn fmt_count(n: f64) -> String {
    if n.fract() == 0.0 {
        format!("{n}")
    } else {
        format!("{n:.1}")
    }
}

/// Largest defined value.
fn best_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
}

fn round_label(round: u64) -> String {
    if round == 0 {
        "Init".into()
    } else {
        format!("R{round}")
    }
}

/// Rounds to the printed precision so that values that print alike tie.
fn rounded(v: Option<f64>) -> Option<f64> {
    v.map(|x| (x * 1e4).round() / 1e4)
}

/// Per-round strategy comparison: rows are rounds, columns are strategies,
/// cells are mean mIoU. An "All data" row carries the anchor when present.
pub fn strategy_table(logs: &[RoundLog]) -> String {
    let groups = summarize(logs);
    let arms: Vec<Arm> = {
        let mut a: Vec<Arm> = groups.iter().map(|g| g.arm).filter(|a| *a != Arm::AllData).collect();
        a.sort();
        a.dedup();
        a
    };
    let mut out = String::new();
    let _ = write!(out, "| Round | Labeled |");
    for a in &arms {
        let _ = write!(out, " {a} |");
    }
    let _ = write!(out, "\n|---|---|");
    out.push_str(&"---|".repeat(arms.len()));
    out.push('\n');

    let mut rounds: Vec<u64> = groups.iter().filter(|g| g.arm != Arm::AllData).map(|g| g.round).collect();
    rounds.dedup();
    for round in rounds {
        let row: Vec<Option<&GroupSummary>> = arms
            .iter()
            .map(|a| groups.iter().find(|g| g.round == round && g.arm == *a))
            .collect();
        let best = best_of(row.iter().map(|g| rounded(g.and_then(|g| g.miou_mean))));
        let labeled = row.iter().flatten().map(|g| g.n_labeled).fold(0.0, f64::max);
        let _ = write!(out, "| {} | {} |", round_label(round), fmt_count(labeled));
        for g in &row {
            let cell = match g {
                Some(g) => fmt_value(rounded(g.miou_mean), best),
                None => String::new(),
            };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    let anchor: Vec<&GroupSummary> = groups.iter().filter(|g| g.arm == Arm::AllData).collect();
    if let Some(a) = anchor.last() {
        let _ = write!(out, "| All data | {} |", fmt_count(a.n_labeled));
        for i in 0..arms.len() {
            let cell = if i == 0 { fmt_value(rounded(a.miou_mean), None) } else { String::new() };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out
}

/// Per-class table: one row per (round, strategy), then "All data".
/// `classes` picks and orders the columns; `names` labels them.
pub fn class_table(logs: &[RoundLog], k: usize, classes: &[usize], names: Option<&[String]>) -> Result<String> {
    if let Some(&c) = classes.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidArgument(format!("class {c} is out of range for K = {k}")));
    }
    if let Some(n) = names {
        if n.len() != classes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} class names given for {} classes",
                n.len(),
                classes.len()
            )));
        }
    }
    let groups = summarize(logs);
    let mut out = String::from("| Round & strategy | Labeled |");
    for (i, c) in classes.iter().enumerate() {
        match names {
            Some(n) => {
                let _ = write!(out, " {} |", n[i]);
            }
            None => {
                let _ = write!(out, " class {c} |");
            }
        }
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(classes.len()));
    out.push('\n');

    let mut rounds: Vec<u64> = groups.iter().filter(|g| g.arm != Arm::AllData).map(|g| g.round).collect();
    rounds.dedup();
    for round in rounds {
        let rows: Vec<&GroupSummary> = groups.iter().filter(|g| g.round == round && g.arm != Arm::AllData).collect();
        let best: Vec<Option<f64>> = classes
            .iter()
            .map(|&c| best_of(rows.iter().map(|g| rounded(g.per_class.get(c).copied().flatten()))))
            .collect();
        for g in rows {
            let _ = write!(out, "| {} {} | {} |", round_label(round), g.arm, fmt_count(g.n_labeled));
            for (i, &c) in classes.iter().enumerate() {
                let _ = write!(out, " {} |", fmt_value(rounded(g.per_class.get(c).copied().flatten()), best[i]));
            }
            out.push('\n');
        }
    }
    if let Some(a) = groups.iter().rfind(|g| g.arm == Arm::AllData) {
        let _ = write!(out, "| All data | {} |", fmt_count(a.n_labeled));
        for &c in classes {
            let _ = write!(out, " {} |", fmt_value(rounded(a.per_class.get(c).copied().flatten()), None));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Both tables with headings and the `n/a` footnote.
pub fn render_report(logs: &[RoundLog], k: usize, classes: &[usize], names: Option<&[String]>) -> Result<String> {
    if let Some(log) = logs.iter().find(|l| l.per_class_iou.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: log.per_class_iou.len(),
        });
    }
    let mut out = String::from("## Mean test mIoU per round\n\n");
    out.push_str(&strategy_table(logs));
    out.push_str("\n## Per-class IoU\n\n");
    out.push_str(&class_table(logs, k, classes, names)?);
    out.push_str("\nBold: best per round. n/a: class absent from prediction and ground truth in every seed (excluded from mIoU).\n");
    Ok(out)
}
