use std::fmt;

use serde::Serialize;

use super::AnnotatedExample;

/// Per-rule counts from [`clean`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CleanReport {
    pub input: usize,
    pub output: usize,
    /// Records where at least one field had whitespace collapsed or trimmed.
    pub whitespace_normalized: usize,
    /// Records where at least one control or invisible format character was removed.
    pub special_chars_removed: usize,
    /// Records dropped because the reference starts mid-sentence.
    pub dropped_mid_sentence: usize,
}

impl fmt::Display for CleanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input: {}", self.input)?;
        writeln!(f, "output: {}", self.output)?;
        writeln!(f, "whitespace_normalized: {}", self.whitespace_normalized)?;
        writeln!(f, "special_chars_removed: {}", self.special_chars_removed)?;
        writeln!(f, "dropped_mid_sentence: {}", self.dropped_mid_sentence)
    }
}

fn is_invisible(c: char) -> bool {
    matches!(
        c,
        '\u{200B}'..='\u{200F}' | '\u{2060}' | '\u{FEFF}' | '\u{00AD}'
    )
}

struct Cleaned {
    text: String,
    whitespace: bool,
    special: bool,
}

/// Whitespace becomes a single space, other control/invisible characters are
/// dropped, then runs of spaces collapse and the ends are trimmed.
fn clean_text(raw: &str) -> Cleaned {
    let mut special = false;
    let mapped: String = raw
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if c.is_control() || is_invisible(c) {
                special = true;
                None
            } else {
                Some(c)
            }
        })
        .collect();
    let text = mapped.split_whitespace().collect::<Vec<_>>().join(" ");
    let kept: String = raw
        .chars()
        .filter(|&c| c.is_whitespace() || !(c.is_control() || is_invisible(c)))
        .collect();
    let whitespace = text != kept;
    Cleaned {
        text,
        whitespace,
        special,
    }
}

/// Heuristic for references cut out of the middle of a sentence.
fn starts_mid_sentence(reference: &str) -> bool {
    reference
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() && c.is_lowercase())
}

pub fn clean(examples: Vec<AnnotatedExample>) -> (Vec<AnnotatedExample>, CleanReport) {
    let mut report = CleanReport {
        input: examples.len(),
        ..CleanReport::default()
    };
    let mut out = Vec::with_capacity(examples.len());
    for mut ex in examples {
        let mut whitespace = false;
        let mut special = false;
        let mut apply = |field: &mut String| {
            let c = clean_text(field);
            whitespace |= c.whitespace;
            special |= c.special;
            *field = c.text;
        };
        apply(&mut ex.reference);
        apply(&mut ex.claim);
        apply(&mut ex.lss);
        if let Some(s) = ex.lss_star.as_mut() {
            apply(s);
        }
        if starts_mid_sentence(&ex.reference) {
            report.dropped_mid_sentence += 1;
            continue;
        }
        report.whitespace_normalized += whitespace as usize;
        report.special_chars_removed += special as usize;
        out.push(ex);
    }
    report.output = out.len();
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::example;

    #[test]
    fn clean_text_rules() {
        assert_eq!(clean_text("a\t\tb\n").text, "a b");
        assert_eq!(clean_text("a \u{1} b").text, "a b");
        assert_eq!(clean_text("zero\u{200B}width").text, "zerowidth");
        let c = clean_text("plain text");
        assert!(!c.whitespace && !c.special);
    }

    #[test]
    fn already_clean_is_unchanged() {
        let data = vec![example(
            "1",
            "The Queen died.",
            "The Queen died.",
            "The Queen died.",
        )];
        let (out, report) = clean(data.clone());
        assert_eq!(out, data);
        assert_eq!(
            (
                report.whitespace_normalized,
                report.special_chars_removed,
                report.dropped_mid_sentence
            ),
            (0, 0, 0)
        );
    }

    #[test]
    fn mid_sentence_reference_dropped() {
        let data = vec![
            example(
                "1",
                "was born in 1907 in Ohio.",
                "He was born in 1907.",
                "born in 1907",
            ),
            example("2", "\"Quoted\" start is fine.", "c", ""),
            example("3", "1907 is fine too.", "c", ""),
        ];
        let (out, report) = clean(data);
        assert_eq!(report.dropped_mid_sentence, 1);
        assert_eq!(
            out.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(),
            ["2", "3"]
        );
    }

    #[test]
    fn clean_is_idempotent() {
        let data = vec![
            example("1", "  The \u{7}Queen\r\n died. ", "x\u{FEFF} y", " a  b "),
            example("2", "Ok", "\t\tclaim", ""),
        ];
        let (once, r1) = clean(data);
        assert_eq!((r1.whitespace_normalized, r1.special_chars_removed), (2, 1));
        let (twice, r2) = clean(once.clone());
        assert_eq!(once, twice);
        assert_eq!((r2.whitespace_normalized, r2.special_chars_removed), (0, 0));
    }
}
