//! Typed cell values.
//!
//! Decimals are kept as text and compared through a canonical form, so
//! equality is exact decimal equality with no binary floating point in the
//! comparison path. Datetimes accept `YYYY-MM-DD` or `YYYY-MM-DD HH:MM:SS`
//! only; a date-only cell behaves as midnight when compared to the second.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    Text,
    Decimal,
    DateTime,
    Integer,
}

/// Decimal number preserving its source text.
///
/// `raw` round-trips the input; `canonical` drives equality and hashing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecimalText {
    raw: String,
    canonical: String,
}

impl DecimalText {
    pub fn parse(s: &str) -> Option<DecimalText> {
        let canonical = canonicalize_decimal(s)?;
        Some(DecimalText {
            raw: s.to_string(),
            canonical,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }
}

impl PartialEq for DecimalText {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for DecimalText {}

impl std::fmt::Display for DecimalText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Canonical form: no sign for zero, no leading zeros, no trailing
/// fractional zeros, no bare `.`.
fn canonicalize_decimal(s: &str) -> Option<String> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    let (neg, digits) = match t.as_bytes()[0] {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let int_trim = int_part.trim_start_matches('0');
    let int_norm = if int_trim.is_empty() { "0" } else { int_trim };
    let frac_norm = frac_part.trim_end_matches('0');
    let is_zero = int_norm == "0" && frac_norm.is_empty();
    let mut out = String::new();
    if neg && !is_zero {
        out.push('-');
    }
    out.push_str(int_norm);
    if !frac_norm.is_empty() {
        out.push('.');
        out.push_str(frac_norm);
    }
    Some(out)
}

/// Parse `YYYY-MM-DD` or `YYYY-MM-DD HH:MM:SS` (also tolerating one-digit
/// month/day as they appear in de-identified notes). Returns the datetime and
/// whether a time of day was present.
pub fn parse_datetime_text(s: &str) -> Option<(NaiveDateTime, bool)> {
    let t = s.trim();
    let (date_part, time_part) = match t.split_once(' ') {
        Some((d, rest)) => (d, Some(rest.trim())),
        None => (t, None),
    };
    let date = parse_date_loose(date_part)?;
    match time_part {
        None | Some("") => Some((date.and_time(NaiveTime::MIN), false)),
        Some(tp) => {
            let time = NaiveTime::parse_from_str(tp, "%H:%M:%S").ok()?;
            Some((date.and_time(time), true))
        }
    }
}

fn parse_date_loose(s: &str) -> Option<NaiveDate> {
    let mut parts = s.split('-');
    let y: i32 = parts.next()?.parse().ok()?;
    let m: u32 = parts.next()?.parse().ok()?;
    let d: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    NaiveDate::from_ymd_opt(y, m, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellValue {
    Text(String),
    Decimal(DecimalText),
    DateTime(NaiveDateTime),
    Integer(i64),
    Null,
}

impl CellValue {
    /// Parse raw CSV text into a cell of the given kind. Empty text is Null.
    pub fn parse(kind: ValueKind, raw: &str) -> Result<CellValue> {
        let t = raw.trim();
        if t.is_empty() {
            return Ok(CellValue::Null);
        }
        match kind {
            ValueKind::Text => Ok(CellValue::Text(t.to_string())),
            ValueKind::Integer => t
                .parse::<i64>()
                .map(CellValue::Integer)
                .map_err(|_| Error::BadCell(t.to_string(), "not an integer".into())),
            ValueKind::Decimal => DecimalText::parse(t)
                .map(CellValue::Decimal)
                .ok_or_else(|| Error::BadCell(t.to_string(), "not a decimal".into())),
            ValueKind::DateTime => parse_datetime_text(t)
                .map(|(dt, _)| CellValue::DateTime(dt))
                .ok_or_else(|| Error::BadCell(t.to_string(), "not a calendar datetime".into())),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    pub fn as_datetime(&self) -> Option<NaiveDateTime> {
        match self {
            CellValue::DateTime(dt) => Some(*dt),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            CellValue::Integer(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            CellValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Text stored in the SQL mirror; comparisons there are plain equality,
    /// so the canonical decimal form and the full datetime form are used.
    pub fn sql_text(&self) -> Option<String> {
        match self {
            CellValue::Text(s) => Some(s.clone()),
            CellValue::Decimal(d) => Some(d.canonical().to_string()),
            CellValue::DateTime(dt) => Some(dt.format("%Y-%m-%d %H:%M:%S").to_string()),
            CellValue::Integer(i) => Some(i.to_string()),
            CellValue::Null => None,
        }
    }
}

pub fn format_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

pub fn format_datetime(dt: NaiveDateTime) -> String {
    dt.format("%Y-%m-%d %H:%M:%S").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_equality_is_exact() {
        let a = DecimalText::parse("94.0").unwrap();
        let b = DecimalText::parse("94").unwrap();
        let c = DecimalText::parse("94.01").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.raw(), "94.0");
    }

    #[test]
    fn decimal_canonical_forms() {
        for (input, want) in [
            ("94.0", "94"),
            ("013.30", "13.3"),
            ("-0.500", "-0.5"),
            (".5", "0.5"),
            ("+7", "7"),
            ("-0.0", "0"),
            ("0", "0"),
        ] {
            assert_eq!(DecimalText::parse(input).unwrap().canonical(), want, "{input}");
        }
        assert!(DecimalText::parse("1.2.3").is_none());
        assert!(DecimalText::parse("12a").is_none());
        assert!(DecimalText::parse(".").is_none());
    }

    #[test]
    fn datetime_accepts_two_forms_only() {
        let (dt, has_time) = parse_datetime_text("2199-01-10").unwrap();
        assert!(!has_time);
        assert_eq!(format_datetime(dt), "2199-01-10 00:00:00");
        let (dt, has_time) = parse_datetime_text("2331-02-11 21:32:33").unwrap();
        assert!(has_time);
        assert_eq!(format_datetime(dt), "2331-02-11 21:32:33");
        // single digit month/day tolerated
        assert!(parse_datetime_text("2196-2-18").is_some());
        // invalid calendar date
        assert!(parse_datetime_text("2101-13-40").is_none());
        assert!(parse_datetime_text("2101-02-03T04:05:06").is_none());
    }

    #[test]
    fn cell_parse_rejects_bad_kinds() {
        assert!(CellValue::parse(ValueKind::Integer, "12.5").is_err());
        assert!(CellValue::parse(ValueKind::DateTime, "2101-13-40").is_err());
        assert_eq!(CellValue::parse(ValueKind::Decimal, "  ").unwrap(), CellValue::Null);
    }
}
