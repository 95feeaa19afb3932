//! Token-level reading-time rows and the lagged predictor view over them.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::RtError;

/// One word of one sentence as read by one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRow {
    pub participant_id: String,
    pub item_id: String,
    pub position: usize,
    pub token: String,
    pub rt_ms: f64,
    /// Characters in the token.
    pub length: f64,
    pub logfreq: f64,
    /// Surprisal of the token in bits.
    pub surprisal: f64,
    #[serde(default)]
    pub construction: Option<String>,
    #[serde(default)]
    pub ambiguity: Option<String>,
}

impl TokenRow {
    pub fn validate(&self) -> Result<(), RtError> {
        let bad = |what: &str| RtError::InvalidRow {
            item: self.item_id.clone(),
            position: self.position,
            reason: what.to_string(),
        };
        if !(self.rt_ms.is_finite() && self.rt_ms > 0.0) {
            return Err(bad("rt_ms must be finite and positive"));
        }
        for (name, v) in [
            ("length", self.length),
            ("logfreq", self.logfreq),
            ("surprisal", self.surprisal),
        ] {
            if !v.is_finite() {
                return Err(bad(&format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

pub fn read_rows(reader: impl Read) -> Result<Vec<TokenRow>, RtError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<TokenRow>().enumerate() {
        let row = rec.map_err(|e| RtError::Csv {
            line: i + 2,
            message: e.to_string(),
        })?;
        row.validate()?;
        out.push(row);
    }
    Ok(out)
}

pub fn write_rows(rows: &[TokenRow], writer: impl Write) -> Result<(), RtError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| RtError::Csv {
            line: 0,
            message: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The per-word measures of a token and the two tokens before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lagged {
    pub position: f64,
    pub rt_ms: f64,
    /// Index 0 is the current word, 1 and 2 the preceding ones.
    pub length: [f64; 3],
    pub logfreq: [f64; 3],
    pub surprisal: [f64; 3],
}

/// Stable identity of a row, used to check that two models saw the same
/// data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub participant_id: String,
    pub item_id: String,
    pub position: usize,
}

/// Attaches lag-1 and lag-2 measures to every row that has both
/// predecessors in the same (participant, item) sequence. Other rows are
/// dropped. Output order is sorted by participant, item, position.
pub fn lagged(rows: &[TokenRow]) -> Result<Vec<(RowKey, Lagged)>, RtError> {
    let mut groups: BTreeMap<(&str, &str), BTreeMap<usize, &TokenRow>> = BTreeMap::new();
    for r in rows {
        r.validate()?;
        let g = groups.entry((&r.participant_id, &r.item_id)).or_default();
        if g.insert(r.position, r).is_some() {
            return Err(RtError::DuplicateRow {
                participant: r.participant_id.clone(),
                item: r.item_id.clone(),
                position: r.position,
            });
        }
    }
    let mut out = Vec::new();
    for ((p, item), seq) in &groups {
        for (&pos, r) in seq {
            let (Some(p1), Some(p2)) = (pos.checked_sub(1), pos.checked_sub(2)) else {
                continue;
            };
            let (Some(r1), Some(r2)) = (seq.get(&p1), seq.get(&p2)) else {
                continue;
            };
            out.push((
                RowKey {
                    participant_id: p.to_string(),
                    item_id: item.to_string(),
                    position: pos,
                },
                Lagged {
                    position: pos as f64,
                    rt_ms: r.rt_ms,
                    length: [r.length, r1.length, r2.length],
                    logfreq: [r.logfreq, r1.logfreq, r2.logfreq],
                    surprisal: [r.surprisal, r1.surprisal, r2.surprisal],
                },
            ));
        }
    }
    Ok(out)
}

/// Unigram log frequencies with add-one smoothing, so unseen tokens get a
/// finite value below every seen one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> FrequencyTable {
        let mut counts = HashMap::new();
        let mut total = 0;
        for t in tokens {
            *counts.entry(t.to_string()).or_insert(0) += 1;
            total += 1;
        }
        FrequencyTable { counts, total }
    }

    /// Natural log of the smoothed relative frequency.
    pub fn logfreq(&self, token: &str) -> f64 {
        let c = self.counts.get(token).copied().unwrap_or(0) as f64;
        let denom = (self.total + self.counts.len() as u64 + 1) as f64;
        ((c + 1.0) / denom).ln()
    }
}

/// Token length in characters.
pub fn token_length(token: &str) -> f64 {
    token.chars().count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn row(p: &str, item: &str, pos: usize, rt: f64) -> TokenRow {
        TokenRow {
            participant_id: p.into(),
            item_id: item.into(),
            position: pos,
            token: format!("w{pos}"),
            rt_ms: rt,
            length: pos as f64 + 1.0,
            logfreq: -(pos as f64),
            surprisal: 10.0 * pos as f64,
            construction: None,
            ambiguity: None,
        }
    }

    #[test]
    fn boundary_rows_are_dropped() {
        let rows: Vec<_> = (0..5).map(|i| row("p", "i", i, 300.0)).collect();
        let l = lagged(&rows).unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l[0].1.surprisal, [20.0, 10.0, 0.0]);
        assert_eq!(l[2].0.position, 4);
    }

    #[test]
    fn gaps_break_lags() {
        let rows = vec![
            row("p", "i", 0, 1.0),
            row("p", "i", 1, 1.0),
            row("p", "i", 3, 1.0),
            row("p", "i", 4, 1.0),
        ];
        assert!(lagged(&rows).unwrap().is_empty());
    }

    #[test]
    fn duplicates_and_bad_rt_are_errors() {
        let rows = vec![row("p", "i", 0, 1.0), row("p", "i", 0, 1.0)];
        assert!(matches!(lagged(&rows), Err(RtError::DuplicateRow { .. })));
        assert!(row("p", "i", 0, 0.0).validate().is_err());
        assert!(row("p", "i", 0, f64::NAN).validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut rows: Vec<_> = (0..3)
            .map(|i| row("p1", "it", i, 250.5 + i as f64))
            .collect();
        rows[1].construction = Some("MV_RR".into());
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn frequency_table_smooths() {
        let f = FrequencyTable::from_tokens(["a", "a", "b"]);
        assert!((f.logfreq("a") - (3.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!(f.logfreq("zzz") < f.logfreq("b"));
    }
}
