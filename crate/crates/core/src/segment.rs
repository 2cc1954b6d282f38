//! Long-note segmentation.
//!
//! A note longer than `l` tokens is split iteratively: take the first `l`
//! tokens (whole lines), have the splitter divide them into `n` contiguous
//! sections, keep sections 1..n-1 as sub-text cores, and merge section n
//! with the remaining text for the next round. The final residue becomes the
//! last core. Cores partition the note's lines exactly; boundary overlap is
//! added afterwards as tagged context, never as core content.
//!
//! Tokens are maximal whitespace-delimited runs.

use serde::{Deserialize, Serialize};

use crate::notes::{Note, NoteLine};

pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubText {
    pub parent_note_id: String,
    pub index: usize,
    /// Core line range (inclusive note line numbers).
    pub line_range: (u32, u32),
    pub core_lines: Vec<NoteLine>,
    pub overlap_prefix: String,
    pub overlap_suffix: String,
    pub overlap_prefix_tokens: usize,
    pub overlap_suffix_tokens: usize,
}

impl SubText {
    pub fn core_text(&self) -> String {
        self.core_lines
            .iter()
            .map(|l| l.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn core_tokens(&self) -> usize {
        self.core_lines.iter().map(|l| token_count(&l.text)).sum()
    }

    /// Full text including boundary overlap.
    pub fn text(&self) -> String {
        let mut parts = Vec::new();
        if !self.overlap_prefix.is_empty() {
            parts.push(self.overlap_prefix.clone());
        }
        parts.push(self.core_text());
        if !self.overlap_suffix.is_empty() {
            parts.push(self.overlap_suffix.clone());
        }
        parts.join("\n")
    }

    /// Prompt rendering: numbered core lines, overlap as plain context.
    pub fn prompt_text(&self) -> String {
        let mut parts = Vec::new();
        if !self.overlap_prefix.is_empty() {
            parts.push(format!("... {}", self.overlap_prefix));
        }
        for l in &self.core_lines {
            parts.push(format!("{}. {}", l.line_no, l.text));
        }
        if !self.overlap_suffix.is_empty() {
            parts.push(format!("{} ...", self.overlap_suffix));
        }
        parts.join("\n")
    }

    pub fn contains_line(&self, line_no: u32) -> bool {
        self.core_lines.iter().any(|l| l.line_no == line_no)
    }

    pub fn lines_key(&self) -> String {
        format!("{}-{}", self.line_range.0, self.line_range.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitError(pub String);

/// Divides a run of lines into `n` contiguous, covering line-number ranges.
pub trait SubtextSplitter {
    fn split(&self, lines: &[NoteLine], n: usize) -> Result<Vec<(u32, u32)>, SplitError>;
}

/// Fallback splitter: contiguous groups with line counts as even as
/// possible. Returns fewer than `n` ranges when there are fewer lines.
pub struct EvenLineSplitter;

impl SubtextSplitter for EvenLineSplitter {
    fn split(&self, lines: &[NoteLine], n: usize) -> Result<Vec<(u32, u32)>, SplitError> {
        if lines.is_empty() {
            return Err(SplitError("no lines to split".into()));
        }
        let k = n.min(lines.len());
        let base = lines.len() / k;
        let extra = lines.len() % k;
        let mut ranges = Vec::with_capacity(k);
        let mut pos = 0;
        for i in 0..k {
            let len = base + usize::from(i < extra);
            let slice = &lines[pos..pos + len];
            ranges.push((slice[0].line_no, slice[len - 1].line_no));
            pos += len;
        }
        Ok(ranges)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub subtexts: Vec<SubText>,
    /// Rounds where the splitter's answer was rejected and the even-line
    /// fallback was used instead.
    pub fallback_rounds: usize,
}

/// Longest prefix of whole lines totalling at most `l` tokens (at least one
/// line, so an oversized single line still moves forward).
fn divide_by_len(lines: &[NoteLine], l: usize) -> usize {
    let mut taken = 0;
    let mut tokens = 0;
    for line in lines {
        let t = token_count(&line.text);
        if taken > 0 && tokens + t > l {
            break;
        }
        taken += 1;
        tokens += t;
        if tokens > l {
            break;
        }
    }
    taken.max(1).min(lines.len())
}

/// Validate the splitter's ranges against the prefix: contiguous in line
/// positions, covering first to last.
fn validate_ranges(lines: &[NoteLine], ranges: &[(u32, u32)]) -> Result<Vec<usize>, SplitError> {
    if ranges.is_empty() {
        return Err(SplitError("splitter returned no ranges".into()));
    }
    let pos_of = |line_no: u32| lines.iter().position(|l| l.line_no == line_no);
    let mut boundaries = Vec::with_capacity(ranges.len());
    let mut expected_start = 0usize;
    for (i, (a, b)) in ranges.iter().enumerate() {
        let pa = pos_of(*a).ok_or_else(|| SplitError(format!("line {a} not in prefix")))?;
        let pb = pos_of(*b).ok_or_else(|| SplitError(format!("line {b} not in prefix")))?;
        if pa != expected_start {
            return Err(SplitError(format!(
                "section {} starts at position {pa}, expected {expected_start}",
                i + 1
            )));
        }
        if pb < pa {
            return Err(SplitError(format!("section {} is reversed", i + 1)));
        }
        boundaries.push(pb + 1);
        expected_start = pb + 1;
    }
    if expected_start != lines.len() {
        return Err(SplitError("sections do not cover the prefix".into()));
    }
    Ok(boundaries)
}

/// Segment a note into sub-texts of at most `l` core tokens with `overlap`
/// boundary tokens from each adjacent core.
pub fn segment(
    note: &Note,
    l: usize,
    n: usize,
    overlap: usize,
    splitter: &dyn SubtextSplitter,
) -> SegmentOutcome {
    assert!(l >= 1, "l must be at least 1");
    assert!(n >= 2, "n must be at least 2");
    let mut remaining: Vec<NoteLine> = note.lines.clone();
    let mut cores: Vec<Vec<NoteLine>> = Vec::new();
    let mut fallback_rounds = 0usize;

    let total: usize = remaining.iter().map(|l| token_count(&l.text)).sum();
    if total > l {
        loop {
            let tokens: usize = remaining.iter().map(|l| token_count(&l.text)).sum();
            if tokens <= l {
                break;
            }
            let prefix_len = divide_by_len(&remaining, l);
            let prefix = &remaining[..prefix_len];
            let boundaries = match splitter
                .split(prefix, n)
                .and_then(|r| validate_ranges(prefix, &r))
            {
                Ok(b) => b,
                Err(_) => {
                    fallback_rounds += 1;
                    let r = EvenLineSplitter
                        .split(prefix, n)
                        .expect("fallback splits a nonempty prefix");
                    validate_ranges(prefix, &r).expect("fallback ranges are valid")
                }
            };
            if boundaries.len() == 1 {
                // unsplittable prefix (single oversized line): emit as a core
                cores.push(remaining.drain(..boundaries[0]).collect());
                continue;
            }
            let keep_until = boundaries[boundaries.len() - 2];
            let mut start = 0usize;
            for &end in &boundaries[..boundaries.len() - 1] {
                cores.push(prefix[start..end].to_vec());
                start = end;
            }
            // last section stays merged with the remainder
            remaining.drain(..keep_until);
        }
    }
    if !remaining.is_empty() || cores.is_empty() {
        if !note.lines.is_empty() {
            cores.push(remaining);
        }
    }

    let core_texts: Vec<String> = cores
        .iter()
        .map(|c| {
            c.iter()
                .map(|l| l.text.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect();
    let subtexts = cores
        .iter()
        .enumerate()
        .map(|(i, core)| {
            let (prefix, ptoks) = if i > 0 && overlap > 0 {
                last_tokens(&core_texts[i - 1], overlap)
            } else {
                (String::new(), 0)
            };
            let (suffix, stoks) = if i + 1 < cores.len() && overlap > 0 {
                first_tokens(&core_texts[i + 1], overlap)
            } else {
                (String::new(), 0)
            };
            SubText {
                parent_note_id: note.note_id.clone(),
                index: i,
                line_range: (
                    core.first().map(|l| l.line_no).unwrap_or(0),
                    core.last().map(|l| l.line_no).unwrap_or(0),
                ),
                core_lines: core.clone(),
                overlap_prefix: prefix,
                overlap_suffix: suffix,
                overlap_prefix_tokens: ptoks,
                overlap_suffix_tokens: stoks,
            }
        })
        .collect();
    SegmentOutcome {
        subtexts,
        fallback_rounds,
    }
}

fn last_tokens(text: &str, k: usize) -> (String, usize) {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let start = tokens.len().saturating_sub(k);
    let slice = &tokens[start..];
    (slice.join(" "), slice.len())
}

fn first_tokens(text: &str, k: usize) -> (String, usize) {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let end = k.min(tokens.len());
    let slice = &tokens[..end];
    (slice.join(" "), slice.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notes::NoteCategory;

    fn make_note(lines: Vec<&str>) -> Note {
        Note {
            note_id: "n".into(),
            category: NoteCategory::DischargeSummary,
            admission_key: 1,
            admit_time: crate::cell::parse_datetime_text("2199-01-10").unwrap().0,
            chart_time: crate::cell::parse_datetime_text("2199-01-20").unwrap().0,
            lines: lines
                .into_iter()
                .enumerate()
                .map(|(i, t)| NoteLine {
                    line_no: i as u32 + 1,
                    text: t.to_string(),
                })
                .collect(),
        }
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn short_note_is_a_single_subtext() {
        let note = make_note(vec!["a b c", "d e", "f"]);
        let out = segment(&note, 1000, 3, 50, &EvenLineSplitter);
        assert_eq!(out.subtexts.len(), 1);
        assert_eq!(out.subtexts[0].line_range, (1, 3));
        assert_eq!(out.subtexts[0].core_text(), note.full_text());
        assert_eq!(out.fallback_rounds, 0);
    }

    #[test]
    fn cores_cover_lines_exactly_once() {
        // 250 lines of 10 tokens = 2500 tokens; l=1000, n=3
        let lines: Vec<String> = (0..250).map(|_| words(10)).collect();
        let note = make_note(lines.iter().map(|s| s.as_str()).collect());
        let out = segment(&note, 1000, 3, 50, &EvenLineSplitter);
        assert!(out.subtexts.len() > 1);
        let mut covered: Vec<u32> = Vec::new();
        for sub in &out.subtexts {
            assert!(sub.core_tokens() <= 1000, "core exceeds limit");
            for l in &sub.core_lines {
                covered.push(l.line_no);
            }
        }
        let expected: Vec<u32> = (1..=250).collect();
        assert_eq!(covered, expected);
        // re-concatenation reproduces the source
        let rebuilt: Vec<String> = out
            .subtexts
            .iter()
            .map(|s| s.core_text())
            .collect();
        assert_eq!(rebuilt.join("\n"), note.full_text());
    }

    #[test]
    fn scripted_ranges_in_bracket_form_are_honored() {
        struct Fixed;
        impl SubtextSplitter for Fixed {
            fn split(&self, lines: &[NoteLine], _n: usize) -> Result<Vec<(u32, u32)>, SplitError> {
                // mirrors a "[section1: 44-59, section2: 60-69, section3: 70-73]"
                // style answer over whatever prefix arrives
                let lo = lines[0].line_no;
                let hi = lines[lines.len() - 1].line_no;
                let third = (hi - lo) / 3;
                Ok(vec![
                    (lo, lo + third),
                    (lo + third + 1, lo + 2 * third),
                    (lo + 2 * third + 1, hi),
                ])
            }
        }
        let lines: Vec<String> = (0..90).map(|_| words(20)).collect();
        let note = make_note(lines.iter().map(|s| s.as_str()).collect());
        let out = segment(&note, 600, 3, 10, &Fixed);
        assert_eq!(out.fallback_rounds, 0);
        assert!(out.subtexts.len() >= 3);
        let mut covered = Vec::new();
        for s in &out.subtexts {
            covered.extend(s.core_lines.iter().map(|l| l.line_no));
        }
        assert_eq!(covered, (1..=90).collect::<Vec<u32>>());
    }

    #[test]
    fn bad_splitter_answers_fall_back() {
        struct Broken;
        impl SubtextSplitter for Broken {
            fn split(&self, lines: &[NoteLine], _n: usize) -> Result<Vec<(u32, u32)>, SplitError> {
                let lo = lines[0].line_no;
                Ok(vec![(lo, lo), (lo + 5, lo + 6)]) // gap: not contiguous
            }
        }
        let lines: Vec<String> = (0..80).map(|_| words(20)).collect();
        let note = make_note(lines.iter().map(|s| s.as_str()).collect());
        let out = segment(&note, 500, 3, 0, &Broken);
        assert!(out.fallback_rounds > 0);
        let mut covered = Vec::new();
        for s in &out.subtexts {
            covered.extend(s.core_lines.iter().map(|l| l.line_no));
        }
        assert_eq!(covered, (1..=80).collect::<Vec<u32>>());
    }

    #[test]
    fn overlap_is_tagged_not_core() {
        let lines: Vec<String> = (0..100).map(|_| words(15)).collect();
        let note = make_note(lines.iter().map(|s| s.as_str()).collect());
        let out = segment(&note, 500, 3, 25, &EvenLineSplitter);
        assert!(out.subtexts.len() >= 2);
        assert_eq!(out.subtexts[0].overlap_prefix_tokens, 0);
        assert_eq!(out.subtexts[0].overlap_suffix_tokens, 25);
        let last = out.subtexts.last().unwrap();
        assert_eq!(last.overlap_prefix_tokens, 25);
        assert_eq!(last.overlap_suffix_tokens, 0);
        // the overlap text equals the neighbour's boundary tokens
        let second = &out.subtexts[1];
        assert!(out.subtexts[0]
            .core_text()
            .ends_with(&second.overlap_prefix));
    }

    #[test]
    fn subtext_count_is_nondecreasing_in_note_length() {
        let mut prev = 0usize;
        for len in (10..400).step_by(13) {
            let lines: Vec<String> = (0..len).map(|_| words(7)).collect();
            let note = make_note(lines.iter().map(|s| s.as_str()).collect());
            let out = segment(&note, 300, 3, 20, &EvenLineSplitter);
            assert!(
                out.subtexts.len() >= prev,
                "count dropped from {prev} at length {len}"
            );
            prev = out.subtexts.len();
        }
    }
}
