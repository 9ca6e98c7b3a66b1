//! CSV and JSON emission, and the readers used by re-analysis.

use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{NormHistory, NormSample, TailEntry, TailProfile};
use crate::error::{Error, Result};
use crate::models::Equation;

/// Shortest exact decimal for a column label: `4`, `2.5`, `inf`.
pub fn label(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Seventeen significant digits: enough to round-trip every `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn norms_header(history: &NormHistory) -> Vec<String> {
    let mut h = vec!["t".to_string(), "l2".to_string()];
    h.extend(history.p_values.iter().map(|&p| format!("lp_{}", label(p))));
    h.extend(history.s_values.iter().map(|&s| format!("hs_{}", label(s))));
    h.extend(["mean_minus_phi", "grad_sq_integral", "grad_sq"].map(String::from));
    h
}

pub fn write_norms_csv(history: &NormHistory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(norms_header(history)).map_err(csv_err)?;
    for s in &history.samples {
        let mut row = vec![num(s.t), num(s.l2)];
        row.extend(s.lp.iter().chain(&s.hs).map(|&x| num(x)));
        row.extend([num(s.mean_minus_phi), num(s.grad_sq_integral), num(s.grad_sq)]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tails_csv(profiles: &[TailProfile], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "j", "threshold_index", "I_j"]).map_err(csv_err)?;
    for p in profiles {
        for e in &p.entries {
            w.write_record([num(p.time), e.j.to_string(), num(e.threshold_index), num(e.energy)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format { offset, message: format!("{other:?}") },
    }
}

fn parse_field(record: &csv::StringRecord, i: usize, column: &str) -> Result<f64> {
    let offset = record.position().map_or(0, |p| p.byte());
    let text = record
        .get(i)
        .ok_or_else(|| Error::Format { offset, message: format!("missing column {column}") })?;
    text.trim()
        .parse()
        .map_err(|_| Error::Format { offset, message: format!("column {column}: `{text}` is not a number") })
}

fn parse_label(text: &str) -> Option<f64> {
    if text == "inf" {
        Some(f64::INFINITY)
    } else {
        text.parse().ok()
    }
}

/// Reads `norms.csv`; `p` and `s` lists come from the header.
pub fn read_norms_csv(path: &Path, equation: Equation) -> Result<NormHistory> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let bad_header = || Error::Format { offset: 0, message: format!("unexpected norms.csv header {header:?}") };
    let n = header.len();
    if n < 5 || header[0] != "t" || header[1] != "l2" || header[n - 3..] != ["mean_minus_phi", "grad_sq_integral", "grad_sq"] {
        return Err(bad_header());
    }
    let mut p_values = Vec::new();
    let mut s_values = Vec::new();
    for h in &header[2..n - 3] {
        if let Some(p) = h.strip_prefix("lp_").and_then(parse_label) {
            if !s_values.is_empty() {
                return Err(bad_header());
            }
            p_values.push(p);
        } else if let Some(s) = h.strip_prefix("hs_").and_then(parse_label) {
            s_values.push(s);
        } else {
            return Err(bad_header());
        }
    }
    let np = p_values.len();
    let ns = s_values.len();
    let mut history = NormHistory::new(equation, p_values, s_values);
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let get = |i: usize| parse_field(&record, i, &header[i]);
        let sample = NormSample {
            t: get(0)?,
            l2: get(1)?,
            lp: (2..2 + np).map(get).collect::<Result<_>>()?,
            hs: (2 + np..2 + np + ns).map(get).collect::<Result<_>>()?,
            mean_minus_phi: get(n - 3)?,
            grad_sq_integral: get(n - 2)?,
            grad_sq: get(n - 1)?,
        };
        let offset = record.position().map_or(0, |p| p.byte());
        history.push(sample).map_err(|e| Error::Format { offset, message: e.to_string() })?;
    }
    Ok(history)
}

/// Reads `tails.csv`, grouping consecutive rows with equal `t`.
///
/// `total_energy` is filled from the matching norm sample.
pub fn read_tails_csv(path: &Path, multiplier: f64, norms: &NormHistory) -> Result<Vec<TailProfile>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != ["t", "j", "threshold_index", "I_j"] {
        return Err(Error::Format { offset: 0, message: format!("unexpected tails.csv header {header:?}") });
    }
    let mut profiles: Vec<TailProfile> = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let offset = record.position().map_or(0, |p| p.byte());
        let t = parse_field(&record, 0, "t")?;
        let j = parse_field(&record, 1, "j")?;
        if !(j >= 0.0 && j.fract() == 0.0) {
            return Err(Error::Format { offset, message: format!("j = {j} is not a nonnegative integer") });
        }
        let entry = TailEntry {
            j: j as u32,
            threshold_index: parse_field(&record, 2, "threshold_index")?,
            energy: parse_field(&record, 3, "I_j")?,
        };
        match profiles.last_mut() {
            Some(p) if p.time == t => p.entries.push(entry),
            _ => {
                let l2 = norms
                    .samples
                    .iter()
                    .find(|s| s.t == t)
                    .map(|s| s.l2)
                    .ok_or_else(|| Error::Format { offset, message: format!("no norm sample at t = {t}") })?;
                profiles.push(TailProfile { time: t, multiplier, total_energy: l2 * l2, entries: vec![entry] });
            }
        }
    }
    Ok(profiles)
}
