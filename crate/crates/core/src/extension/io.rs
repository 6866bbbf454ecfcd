//! Text format for extended fields: one JSON header line
//! `{"d":..,"L":..,"r":..,"t":..,"step":..}` followed by `index,value` rows.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ExtendedField;
use crate::error::{PermlabError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub r: f64,
    pub t: f64,
    pub step: f64,
}

pub fn write_field<W: Write>(header: &FieldHeader, field: &ExtendedField, mut w: W) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\nindex,value\n")?;
    for (k, v) in field.values.iter().enumerate() {
        // `{:e}` on f64 prints the shortest round-tripping digits
        writeln!(w, "{k},{v:e}")?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(r: R) -> Result<(FieldHeader, ExtendedField)> {
    let mut lines = r.lines();
    let header_line = lines.next().ok_or_else(|| PermlabError::Parse("empty field file".into()))??;
    let header: FieldHeader = serde_json::from_str(&header_line)?;
    match lines.next() {
        Some(Ok(l)) if l.trim() == "index,value" => {}
        _ => return Err(PermlabError::Parse("missing `index,value` column header".into())),
    }
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || PermlabError::Parse(format!("row {}: malformed `{line}`", lineno + 1));
        let (idx, val) = line.split_once(',').ok_or_else(bad)?;
        let idx: usize = idx.trim().parse().map_err(|_| bad())?;
        let val: f64 = val.trim().parse().map_err(|_| bad())?;
        if idx != values.len() {
            return Err(PermlabError::Parse(format!("row {}: expected index {}", lineno + 1, values.len())));
        }
        values.push(val);
    }
    let expected = header.l.checked_pow(header.d as u32).and_then(|n| n.checked_pow(n as u32));
    if expected != Some(values.len()) {
        return Err(PermlabError::Parse(format!("field has {} rows, header implies N^N", values.len())));
    }
    Ok((header.clone(), ExtendedField { t: header.t, values }))
}
