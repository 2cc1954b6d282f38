//! Time-expression parsing for clinical note text.
//!
//! Handles de-identified literals like `[**2200-07-01**] 09:25AM`, bare
//! `YYYY-MM-DD [HH:MM[:SS]]` stamps, `MM-DD` completed with the chart year,
//! and the narrative anchors: admission, discharge, chart date, hospital
//! day k, yesterday.

use chrono::{Days, NaiveDate, NaiveDateTime, NaiveTime};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::notes::Note;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeAnchor {
    Admission,
    Discharge,
    ChartDate,
    HospitalDay(u32),
    Yesterday,
    Literal {
        datetime: NaiveDateTime,
        has_time: bool,
    },
}

fn date_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?x)
            (?:(?P<year>\d{4})-)?(?P<month>\d{1,2})-(?P<day>\d{1,2})
            (?:\s*\]?\s*\*{0,2}\]?\s*
               (?P<hour>\d{1,2}):(?P<min>\d{2})(?::(?P<sec>\d{2}))?\s*(?P<ampm>[AaPp][Mm])?
            )?
        ")
        .expect("static regex")
    })
}

fn hd_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(?:\bHD\b|\bhospital\s+day\b)\s*#?\s*(\d+)").expect("static regex")
    })
}

/// Parse a literal date/time stamp, completing `MM-DD` with the chart year.
/// De-identification brackets and asterisks are ignored.
pub fn parse_literal(raw: &str, chart_year: i32) -> Option<(NaiveDateTime, bool)> {
    let caps = date_regex().captures(raw)?;
    let year = match caps.name("year") {
        Some(y) => y.as_str().parse().ok()?,
        None => chart_year,
    };
    let month: u32 = caps["month"].parse().ok()?;
    let day: u32 = caps["day"].parse().ok()?;
    let date = NaiveDate::from_ymd_opt(year, month, day)?;
    match caps.name("hour") {
        None => Some((date.and_time(NaiveTime::MIN), false)),
        Some(h) => {
            let mut hour: u32 = h.as_str().parse().ok()?;
            let min: u32 = caps["min"].parse().ok()?;
            let sec: u32 = caps
                .name("sec")
                .map(|s| s.as_str().parse().ok())
                .unwrap_or(Some(0))?;
            if let Some(ampm) = caps.name("ampm") {
                let pm = ampm.as_str().eq_ignore_ascii_case("pm");
                hour = match (hour, pm) {
                    (12, false) => 0,
                    (12, true) => 12,
                    (h, true) => h + 12,
                    (h, false) => h,
                };
            }
            let time = NaiveTime::from_hms_opt(hour, min, sec)?;
            Some((date.and_time(time), true))
        }
    }
}

/// Parse a raw time expression into an anchor. Literal stamps win over
/// narrative keywords.
pub fn parse_time_expr(raw: &str, chart_year: i32) -> Option<TimeAnchor> {
    let t = raw.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((datetime, has_time)) = parse_literal(t, chart_year) {
        return Some(TimeAnchor::Literal { datetime, has_time });
    }
    if let Some(caps) = hd_regex().captures(t) {
        let k: u32 = caps[1].parse().ok()?;
        if k >= 1 {
            return Some(TimeAnchor::HospitalDay(k));
        }
    }
    let lower = t.to_ascii_lowercase();
    if lower.contains("yesterday") {
        return Some(TimeAnchor::Yesterday);
    }
    if lower.contains("admission") || lower.contains("admit") {
        return Some(TimeAnchor::Admission);
    }
    if lower.contains("discharge") {
        return Some(TimeAnchor::Discharge);
    }
    if lower.contains("chartdate") || lower.contains("chart date") || lower.contains("charttime") {
        return Some(TimeAnchor::ChartDate);
    }
    None
}

/// Resolve an anchor to a calendar date using the note's metadata: hospital
/// day k counts from the admission date (HD 1 is the admission date itself),
/// yesterday counts from the chart date, discharge resolves to the chart
/// date of the note.
pub fn resolve_anchor_date(anchor: TimeAnchor, note: &Note) -> NaiveDate {
    match anchor {
        TimeAnchor::Admission => note.admit_time.date(),
        TimeAnchor::Discharge | TimeAnchor::ChartDate => note.chart_time.date(),
        TimeAnchor::HospitalDay(k) => note
            .admit_time
            .date()
            .checked_add_days(Days::new(u64::from(k.saturating_sub(1))))
            .unwrap_or(note.admit_time.date()),
        TimeAnchor::Yesterday => note
            .chart_time
            .date()
            .checked_sub_days(Days::new(1))
            .unwrap_or(note.chart_time.date()),
        TimeAnchor::Literal { datetime, .. } => datetime.date(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notes::{NoteCategory, NoteLine};

    fn note(admit: &str, chart: &str) -> Note {
        Note {
            note_id: "n".into(),
            category: NoteCategory::DischargeSummary,
            admission_key: 1,
            admit_time: crate::cell::parse_datetime_text(admit).unwrap().0,
            chart_time: crate::cell::parse_datetime_text(chart).unwrap().0,
            lines: vec![NoteLine {
                line_no: 1,
                text: String::new(),
            }],
        }
    }

    #[test]
    fn deidentified_literal_with_am_time() {
        let (dt, has_time) = parse_literal("[**2200-07-01**] 09:25AM", 2200).unwrap();
        assert_eq!(dt.to_string(), "2200-07-01 09:25:00");
        assert!(has_time);
        let (dt, has_time) = parse_literal("[**2208-11-08**] 8:00 PM", 2208).unwrap();
        assert_eq!(dt.to_string(), "2208-11-08 20:00:00");
        assert!(has_time);
        let (dt, _) = parse_literal("2331-02-11 21:32:33", 2331).unwrap();
        assert_eq!(dt.to_string(), "2331-02-11 21:32:33");
    }

    #[test]
    fn month_day_completed_with_chart_year() {
        let (dt, has_time) = parse_literal("[**11-08**]", 2208).unwrap();
        assert_eq!(dt.date().to_string(), "2208-11-08");
        assert!(!has_time);
    }

    #[test]
    fn twelve_hour_edges() {
        let (dt, _) = parse_literal("2200-01-01 12:30AM", 2200).unwrap();
        assert_eq!(dt.to_string(), "2200-01-01 00:30:00");
        let (dt, _) = parse_literal("2200-01-01 12:30PM", 2200).unwrap();
        assert_eq!(dt.to_string(), "2200-01-01 12:30:00");
    }

    #[test]
    fn narrative_anchors() {
        assert_eq!(parse_time_expr("admission", 2199), Some(TimeAnchor::Admission));
        assert_eq!(parse_time_expr("on admission", 2199), Some(TimeAnchor::Admission));
        assert_eq!(parse_time_expr("shortly after discharge", 2199), Some(TimeAnchor::Discharge));
        assert_eq!(parse_time_expr("Yesterday", 2199), Some(TimeAnchor::Yesterday));
        assert_eq!(parse_time_expr("HD #3", 2199), Some(TimeAnchor::HospitalDay(3)));
        assert_eq!(parse_time_expr("hospital day 4", 2199), Some(TimeAnchor::HospitalDay(4)));
        assert_eq!(parse_time_expr("", 2199), None);
        assert_eq!(parse_time_expr("sometime", 2199), None);
    }

    #[test]
    fn hospital_day_counts_from_admission() {
        let n = note("2199-01-10 08:00:00", "2199-01-20 16:00:00");
        let d = resolve_anchor_date(TimeAnchor::HospitalDay(3), &n);
        assert_eq!(d.to_string(), "2199-01-12");
        let d = resolve_anchor_date(TimeAnchor::Yesterday, &n);
        assert_eq!(d.to_string(), "2199-01-19");
    }
}
