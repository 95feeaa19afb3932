use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// One sentence per line: either bare tokens, or an id and a tab before the
/// tokens. Blank lines and lines starting with `#` are skipped; bare
/// sentences are numbered by their line.
pub fn read_sentences(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading sentences {}", path.display()))?;
    Ok(parse_sentences(&text))
}

pub fn parse_sentences(text: &str) -> Vec<(String, Vec<String>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| match l.split_once('\t') {
            Some((id, rest)) => (id.trim().to_string(), tokens(rest)),
            None => (format!("{}", i + 1), tokens(l)),
        })
        .filter(|(_, t)| !t.is_empty())
        .collect()
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes only the header row, for outputs with no rows.
pub fn write_csv_header(path: &Path, header: &[&str]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        out.push(row.with_context(|| format!("{} line {}", path.display(), i + 2))?);
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Finite values as numbers, others as empty cells.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
