//! Clinical note ingestion and section filtering.
//!
//! Notes arrive as one JSON record per line. Line numbers are assigned once
//! at ingestion and survive section filtering unchanged (gaps allowed), so
//! every later stage can cite a stable line.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::cell::parse_datetime_text;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoteCategory {
    DischargeSummary,
    PhysicianNote,
    NursingNote,
}

impl NoteCategory {
    pub fn parse(s: &str) -> Option<NoteCategory> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "dischargesummary" | "discharge" => Some(NoteCategory::DischargeSummary),
            "physiciannote" | "physician" => Some(NoteCategory::PhysicianNote),
            "nursingnote" | "nursing" => Some(NoteCategory::NursingNote),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NoteCategory::DischargeSummary => "discharge_summary",
            NoteCategory::PhysicianNote => "physician_note",
            NoteCategory::NursingNote => "nursing_note",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoteLine {
    pub line_no: u32,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Note {
    pub note_id: String,
    pub category: NoteCategory,
    pub admission_key: i64,
    pub admit_time: NaiveDateTime,
    pub chart_time: NaiveDateTime,
    pub lines: Vec<NoteLine>,
}

impl Note {
    pub fn full_text(&self) -> String {
        self.lines
            .iter()
            .map(|l| l.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn numbered_text(&self) -> String {
        self.lines
            .iter()
            .map(|l| format!("{}. {}", l.line_no, l.text))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn token_count(&self) -> usize {
        self.lines
            .iter()
            .map(|l| l.text.split_whitespace().count())
            .sum()
    }
}

#[derive(Debug, Deserialize)]
struct NoteRecord {
    #[serde(alias = "noteId", alias = "note_id")]
    note_id: String,
    category: String,
    #[serde(alias = "hadm_id", alias = "admissionKey")]
    hadm_id: i64,
    #[serde(alias = "admittime", alias = "admitTime")]
    admittime: String,
    #[serde(alias = "charttime", alias = "chartTime")]
    charttime: String,
    text: String,
}

/// Ingest notes from a JSONL stream, preserving record order. Text is split
/// on newlines and numbered from one; no reflowing.
pub fn ingest_notes<R: std::io::BufRead>(source: R) -> Result<Vec<Note>> {
    let mut notes = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: NoteRecord = serde_json::from_str(&line).map_err(|e| {
            Error::BadNote(format!("record {}", idx + 1), e.to_string())
        })?;
        notes.push(note_from_record(record)?);
    }
    Ok(notes)
}

fn note_from_record(record: NoteRecord) -> Result<Note> {
    let category = NoteCategory::parse(&record.category).ok_or_else(|| {
        Error::BadNote(
            record.note_id.clone(),
            format!("unknown category `{}`", record.category),
        )
    })?;
    let (admit_time, _) = parse_datetime_text(&record.admittime).ok_or_else(|| {
        Error::BadNote(record.note_id.clone(), format!("bad admittime `{}`", record.admittime))
    })?;
    let (chart_time, _) = parse_datetime_text(&record.charttime).ok_or_else(|| {
        Error::BadNote(record.note_id.clone(), format!("bad charttime `{}`", record.charttime))
    })?;
    if chart_time < admit_time {
        return Err(Error::BadNote(
            record.note_id.clone(),
            "charttime earlier than admittime".into(),
        ));
    }
    let lines = record
        .text
        .split('\n')
        .enumerate()
        .map(|(i, t)| NoteLine {
            line_no: i as u32 + 1,
            text: t.to_string(),
        })
        .collect();
    Ok(Note {
        note_id: record.note_id,
        category,
        admission_key: record.hadm_id,
        admit_time,
        chart_time,
        lines,
    })
}

/// A line is a section header when its trimmed text is a short run ending
/// in a colon with nothing after it, e.g. `Past Medical History:`.
fn header_title(line: &str) -> Option<&str> {
    let t = line.trim();
    let title = t.strip_suffix(':')?;
    let title = title.trim();
    if title.is_empty() || title.len() > 64 {
        return None;
    }
    Some(title)
}

/// Case-insensitive glob match where `*` matches any run of characters.
fn glob_match(pattern: &str, text: &str) -> bool {
    fn inner(p: &[u8], t: &[u8]) -> bool {
        match p.split_first() {
            None => t.is_empty(),
            Some((b'*', rest)) => {
                (0..=t.len()).any(|i| inner(rest, &t[i..]))
            }
            Some((c, rest)) => match t.split_first() {
                Some((tc, trest)) if c.eq_ignore_ascii_case(tc) => inner(rest, trest),
                _ => false,
            },
        }
    }
    inner(pattern.as_bytes(), text.as_bytes())
}

/// Remove every section whose header matches one of the patterns. A section
/// extends from its header line to the line before the next header (or the
/// end of the note). Surviving lines keep their original numbers and text.
pub fn apply_section_filter(note: &Note, patterns: &[String]) -> Note {
    if patterns.is_empty() {
        return note.clone();
    }
    let normalized: Vec<String> = patterns
        .iter()
        .map(|p| p.trim().trim_end_matches(':').trim().to_string())
        .filter(|p| !p.is_empty())
        .collect();
    let mut keep = vec![true; note.lines.len()];
    let mut i = 0;
    while i < note.lines.len() {
        let matched = header_title(&note.lines[i].text)
            .map(|title| normalized.iter().any(|p| glob_match(p, title)))
            .unwrap_or(false);
        if matched {
            keep[i] = false;
            let mut j = i + 1;
            while j < note.lines.len() && header_title(&note.lines[j].text).is_none() {
                keep[j] = false;
                j += 1;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    Note {
        lines: note
            .lines
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(l, _)| l.clone())
            .collect(),
        ..note.clone()
    }
}

/// Parse a section-filter file: one pattern per line, `#` comments.
pub fn parse_section_patterns(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect()
}

pub const DEFAULT_SECTION_FILTERS: &str = include_str!("../assets/section_filters.txt");

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str) -> String {
        serde_json::json!({
            "note_id": "n1",
            "category": "discharge_summary",
            "hadm_id": 100,
            "admittime": "2199-01-10 08:00:00",
            "charttime": "2199-01-20 16:00:00",
            "text": text,
        })
        .to_string()
    }

    #[test]
    fn lines_are_numbered_in_source_order() {
        let input = record("a\nb\nc\nd\ne");
        let notes = ingest_notes(input.as_bytes()).unwrap();
        assert_eq!(notes.len(), 1);
        let nums: Vec<u32> = notes[0].lines.iter().map(|l| l.line_no).collect();
        assert_eq!(nums, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn missing_metadata_is_an_error() {
        let bad = r#"{"note_id":"n1","category":"nursing_note","hadm_id":1,"charttime":"2199-01-20","text":"x"}"#;
        assert!(ingest_notes(bad.as_bytes()).is_err());
    }

    #[test]
    fn chart_before_admit_is_rejected() {
        let bad = serde_json::json!({
            "note_id": "n1",
            "category": "nursing_note",
            "hadm_id": 1,
            "admittime": "2199-01-20",
            "charttime": "2199-01-10",
            "text": "x",
        })
        .to_string();
        assert!(ingest_notes(bad.as_bytes()).is_err());
    }

    #[test]
    fn two_records_preserve_input_order() {
        let input = format!("{}\n{}", record("a"), record("b").replace("n1", "n2"));
        let notes = ingest_notes(input.as_bytes()).unwrap();
        assert_eq!(notes[0].note_id, "n1");
        assert_eq!(notes[1].note_id, "n2");
    }

    #[test]
    fn section_filter_removes_header_to_next_header() {
        let text = "Chief Complaint:\nfever\nPast Medical History:\nHTN\nCOPD\nMedications:\naspirin";
        let notes = ingest_notes(record(text).as_bytes()).unwrap();
        let filtered = apply_section_filter(&notes[0], &["Past Medical History".to_string()]);
        let nums: Vec<u32> = filtered.lines.iter().map(|l| l.line_no).collect();
        assert_eq!(nums, vec![1, 2, 6, 7]);
        assert_eq!(filtered.lines[2].text, "Medications:");
    }

    #[test]
    fn empty_pattern_list_is_identity_and_filter_is_idempotent() {
        let text = "Chief Complaint:\nfever\nPast Medical History:\nHTN";
        let notes = ingest_notes(record(text).as_bytes()).unwrap();
        let same = apply_section_filter(&notes[0], &[]);
        assert_eq!(same.lines.len(), notes[0].lines.len());
        let pats = vec!["Past Medical*".to_string()];
        let once = apply_section_filter(&notes[0], &pats);
        let twice = apply_section_filter(&once, &pats);
        assert_eq!(
            serde_json::to_string(&once).unwrap(),
            serde_json::to_string(&twice).unwrap()
        );
    }

    #[test]
    fn pattern_matching_every_header_removes_all_lines() {
        let text = "A:\nx\nB:\ny";
        let notes = ingest_notes(record(text).as_bytes()).unwrap();
        let filtered = apply_section_filter(&notes[0], &["*".to_string()]);
        assert!(filtered.lines.is_empty());
    }

    #[test]
    fn surviving_text_is_byte_identical() {
        let text = "Keep this  exact   spacing\nPast Medical History:\ngone";
        let notes = ingest_notes(record(text).as_bytes()).unwrap();
        let filtered = apply_section_filter(&notes[0], &["Past Medical History".to_string()]);
        assert_eq!(filtered.lines[0].text, "Keep this  exact   spacing");
    }
}
