//! Round-log CSV.
//!
//! Header: `strategy,seed,round,n_labeled,selected_ids,miou,iou_class_0,…,iou_class_{K-1}`.
//! `selected_ids` is `;`-joined `video:index` pairs. An empty `miou` or
//! `iou_class_*` cell means "undefined" (no evaluation, or a class with an
//! empty union). Floats use the shortest decimal that parses back exactly.
//!
//! The simulation curves file uses the same columns without `selected_ids`;
//! [`parse_round_logs`] reads both.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{atomic_write, fmt_f64};
use crate::model::{Arm, FrameId, RoundLog};

const LEADING: [&str; 4] = ["strategy", "seed", "round", "n_labeled"];

fn header(k: usize, with_selected: bool) -> Vec<String> {
    let mut h: Vec<String> = LEADING.iter().map(|s| s.to_string()).collect();
    if with_selected {
        h.push("selected_ids".into());
    }
    h.push("miou".into());
    h.extend((0..k).map(|c| format!("iou_class_{c}")));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn render(logs: &[RoundLog], k: usize, with_selected: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header(k, with_selected))?;
    for log in logs {
        if log.per_class_iou.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: log.per_class_iou.len(),
            });
        }
        let mut row = vec![
            log.strategy.to_string(),
            log.seed.to_string(),
            log.round.to_string(),
            log.n_labeled.to_string(),
        ];
        if with_selected {
            row.push(log.selected.iter().map(FrameId::to_string).collect::<Vec<_>>().join(";"));
        }
        row.push(opt(log.miou));
        row.extend(log.per_class_iou.iter().map(|v| opt(*v)));
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::io("<round log buffer>", e.into_error()))
}

pub fn render_round_logs(logs: &[RoundLog], k: usize) -> Result<Vec<u8>> {
    render(logs, k, true)
}

/// Simulation curves: round logs without the `selected_ids` column.
pub fn render_curves(logs: &[RoundLog], k: usize) -> Result<Vec<u8>> {
    render(logs, k, false)
}

pub fn save_round_logs(path: impl AsRef<Path>, logs: &[RoundLog], k: usize) -> Result<()> {
    atomic_write(path, &render_round_logs(logs, k)?)
}

/// Parses a round-log or curves CSV. Returns the class count K and the logs.
pub fn parse_round_logs(text: &[u8]) -> Result<(usize, Vec<RoundLog>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for (i, name) in LEADING.iter().enumerate() {
        if headers.get(i).map(String::as_str) != Some(*name) {
            return Err(Error::MissingColumn {
                line: 1,
                column: name.to_string(),
            });
        }
    }
    let with_selected = headers.get(4).map(String::as_str) == Some("selected_ids");
    let miou_col = if with_selected { 5 } else { 4 };
    if headers.get(miou_col).map(String::as_str) != Some("miou") {
        return Err(Error::MissingColumn {
            line: 1,
            column: "miou".into(),
        });
    }
    let k = headers.len() - miou_col - 1;
    for c in 0..k {
        let want = format!("iou_class_{c}");
        if headers[miou_col + 1 + c] != want {
            return Err(Error::MissingColumn { line: 1, column: want });
        }
    }

    let mut logs = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { line, message };
        let int = |i: usize| -> Result<u64> {
            row[i].parse::<u64>().map_err(|e| bad(format!("{}: {e}", headers[i])))
        };
        let float = |i: usize| -> Result<Option<f64>> {
            let c = &row[i];
            if c.is_empty() {
                Ok(None)
            } else {
                c.parse::<f64>().map(Some).map_err(|e| bad(format!("{}: {e}", headers[i])))
            }
        };
        let strategy: Arm = row[0].parse().map_err(bad)?;
        let selected = if with_selected && !row[4].is_empty() {
            row[4]
                .split(';')
                .map(|s| s.parse::<FrameId>().map_err(bad))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        logs.push(RoundLog {
            strategy,
            seed: int(1)?,
            round: int(2)?,
            n_labeled: int(3)? as usize,
            selected,
            miou: float(miou_col)?,
            per_class_iou: (0..k).map(|c| float(miou_col + 1 + c)).collect::<Result<_>>()?,
        });
    }
    Ok((k, logs))
}

pub fn load_round_logs(path: impl AsRef<Path>) -> Result<(usize, Vec<RoundLog>)> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_round_logs(&text)
}
