//! Segment tokens and the SCA sound-class model.
//!
//! A segment is one space-delimited unit of a transcription (`ʃ`, `ai`,
//! `tʰ`). Three tokens are reserved and never occur as ordinary segments:
//! the alignment gap `-`, the missing/unknown marker `?` and the context
//! boundary `∅`.
//!
//! Sound classes collapse segments into coarse groups. A segment is classed
//! by its first base character once combining diacritics and spacing
//! modifiers are removed, so diphthongs take the class of their first
//! vowel (`ai` is `A`, `œi` is `U`).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const GAP: &str = "-";
pub const MISSING: &str = "?";
pub const BOUNDARY: &str = "∅";

/// Class assigned to base characters the model does not know.
pub const FALLBACK_CLASS: char = '0';

/// One segment of a transcription, or one of the reserved tokens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Segment(String);

impl Segment {
    /// Builds a segment, rejecting empty text and whitespace.
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::Invalid("empty segment".into()));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!("segment {text:?} contains whitespace")));
        }
        Ok(Segment(text))
    }

    pub fn gap() -> Self {
        Segment(GAP.to_owned())
    }

    pub fn missing() -> Self {
        Segment(MISSING.to_owned())
    }

    pub fn boundary() -> Self {
        Segment(BOUNDARY.to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_gap(&self) -> bool {
        self.0 == GAP
    }

    pub fn is_missing(&self) -> bool {
        self.0 == MISSING
    }

    pub fn is_reserved(&self) -> bool {
        is_reserved(&self.0)
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Segment {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn is_reserved(text: &str) -> bool {
    matches!(text, GAP | MISSING | BOUNDARY)
}

/// Splits a space-delimited transcription into segments.
pub fn segments(text: &str) -> Result<Vec<Segment>> {
    text.split(' ').filter(|s| !s.is_empty()).map(Segment::new).collect()
}

// Base characters per SCA class.
const SCA_TABLE: &[(char, &str)] = &[
    ('A', "aɑɐäᴀ"),
    ('E', "eɛəæɜɘʌɞ"),
    ('I', "iɪɨ"),
    ('O', "oɔɒɤɵ"),
    ('U', "uʊʉɯøœɶ"),
    ('Y', "yʏ"),
    ('P', "pbɓ"),
    ('T', "tdʈɖɗ"),
    ('K', "kgɡqɢcɟ"),
    ('C', "ʦʣʧʤʨʥ"),
    ('S', "szʃʒʂʐɕʑç"),
    ('G', "xɣχ"),
    ('B', "fvɸβ"),
    ('D', "θð"),
    ('H', "hɦʔħʕ"),
    ('M', "mɱ"),
    ('N', "nŋɲɳɴ"),
    ('L', "lɭʎɫɬɮʟ"),
    ('R', "rɾɹɻʀɽʁ"),
    ('W', "wʋʍɰ"),
    ('J', "j"),
];

/// A character-to-class mapping with a total lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundClassModel {
    name: String,
    mapping: BTreeMap<char, char>,
}

impl Default for SoundClassModel {
    fn default() -> Self {
        Self::sca()
    }
}

impl SoundClassModel {
    /// The embedded SCA table.
    pub fn sca() -> Self {
        let mapping = SCA_TABLE
            .iter()
            .flat_map(|&(class, chars)| chars.chars().map(move |c| (c, class)))
            .collect();
        SoundClassModel {
            name: "sca".to_owned(),
            mapping,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Merges `CHARACTER<TAB>CLASS` rows over the current table; later rows
    /// win. Blank lines and lines starting with `#` are skipped.
    pub fn with_overrides_tsv(mut self, text: &str) -> Result<Self> {
        for (character, class) in parse_overrides(text)? {
            self.mapping.insert(character, class);
        }
        Ok(self)
    }

    /// Applies already-parsed overrides.
    pub fn with_overrides(mut self, overrides: &[(char, char)]) -> Self {
        self.mapping.extend(overrides.iter().copied());
        self
    }

    /// Class of a single base character, if the table knows it.
    pub fn class_of_char(&self, c: char) -> Option<char> {
        self.mapping.get(&c).copied()
    }

    /// Sound class of a segment as a one-character string.
    ///
    /// Reserved tokens map to themselves. Unknown base characters yield
    /// [`FALLBACK_CLASS`] and a one-time warning through `log`.
    pub fn sound_class(&self, segment: &str) -> String {
        if is_reserved(segment) {
            return segment.to_owned();
        }
        let class = match base_char(segment) {
            Some(c) => self.class_of_char(c).unwrap_or_else(|| {
                warn_unknown(c, segment);
                FALLBACK_CLASS
            }),
            None => {
                warn_unknown('\u{25CC}', segment);
                FALLBACK_CLASS
            }
        };
        class.to_string()
    }
}

/// Parses a sound-class override document: `CHARACTER<TAB>CLASS` rows,
/// optionally under a header of those two words.
pub fn parse_overrides(text: &str) -> Result<Vec<(char, char)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if out.is_empty() && line.trim_end() == "CHARACTER\tCLASS" {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(character), Some(class), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse(line_no, "expected CHARACTER<TAB>CLASS"));
        };
        let character = single_char(character)
            .ok_or_else(|| Error::parse(line_no, format!("{character:?} is not one character")))?;
        let class =
            single_char(class).ok_or_else(|| Error::parse(line_no, format!("class {class:?} is not one character")))?;
        out.push((character, class));
    }
    Ok(out)
}

fn single_char(s: &str) -> Option<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if !c.is_whitespace() => Some(c),
        _ => None,
    }
}

/// First character of `segment` that is neither a combining mark nor a
/// spacing modifier, after canonical decomposition.
pub fn base_char(segment: &str) -> Option<char> {
    segment
        .nfd()
        .find(|&c| !is_combining_mark(c) && !is_spacing_modifier(c))
}

fn is_spacing_modifier(c: char) -> bool {
    matches!(c, '\u{02B0}'..='\u{02FF}' | '\u{1D2C}'..='\u{1D6A}' | '\u{2070}'..='\u{209F}') || c == '\u{207F}'
}

fn warn_unknown(c: char, segment: &str) {
    static SEEN: OnceLock<Mutex<HashSet<char>>> = OnceLock::new();
    let seen = SEEN.get_or_init(Default::default);
    let first = seen.lock().map(|mut s| s.insert(c)).unwrap_or(false);
    if first {
        log::warn!("no sound class for {c:?} (in segment {segment:?}); using {FALLBACK_CLASS:?}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(s: &str) -> String {
        SoundClassModel::sca().sound_class(s)
    }

    #[test]
    fn table_classes() {
        assert_eq!(sc("ʃ"), "S");
        assert_eq!(sc("œi"), "U");
        assert_eq!(sc("ai"), "A");
        assert_eq!(sc("æ"), "E");
        assert_eq!(sc("ɑ"), "A");
        assert_eq!(sc("x"), "G");
        assert_eq!(sc("k"), "K");
        assert_eq!(sc("b"), "P");
        assert_eq!(sc("ə"), "E");
        assert_eq!(sc("n"), "N");
    }

    #[test]
    fn reserved_tokens_pass_through() {
        for t in [GAP, MISSING, BOUNDARY] {
            assert_eq!(sc(t), t);
            assert_eq!(sc(&sc(t)), t);
        }
    }

    #[test]
    fn diphthongs_take_first_vowel() {
        for (d, first) in [("ai", "a"), ("au", "a"), ("ɛi", "ɛ"), ("œi", "œ"), ("ou", "o")] {
            assert_eq!(sc(d), sc(first), "{d}");
        }
    }

    #[test]
    fn diacritics_are_ignored() {
        assert_eq!(sc("ã"), "A");
        assert_eq!(sc("tʰ"), "T");
        assert_eq!(sc("e\u{0303}"), "E");
        assert_eq!(sc("ʰt"), "T");
    }

    #[test]
    fn unknown_falls_back() {
        assert_eq!(sc("☃"), "0");
        assert_eq!(sc("\u{0303}"), "0");
    }

    #[test]
    fn every_class_is_one_char() {
        let m = SoundClassModel::sca();
        for (c, _) in SCA_TABLE {
            assert_eq!(m.sound_class(&c.to_string()).chars().count(), 1);
        }
    }

    #[test]
    fn overrides_merge_later_rows_win() {
        let m = SoundClassModel::sca()
            .with_overrides_tsv("# comment\nʃ\tX\n☃\tQ\nʃ\tZ\n")
            .unwrap();
        assert_eq!(m.sound_class("ʃ"), "Z");
        assert_eq!(m.sound_class("☃"), "Q");
        assert_eq!(m.sound_class("a"), "A");
    }

    #[test]
    fn overrides_reject_bad_rows() {
        let err = SoundClassModel::sca().with_overrides_tsv("ʃ\tXY\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_overrides("ab\tX").is_err());
        assert!(parse_overrides("a").is_err());
    }

    #[test]
    fn overrides_header_is_optional() {
        assert_eq!(parse_overrides("CHARACTER\tCLASS\nʃ\tX\n").unwrap(), [('ʃ', 'X')]);
        assert!(parse_overrides("ʃ\tX\nCHARACTER\tCLASS\n").is_err());
    }

    #[test]
    fn segment_rejects_whitespace() {
        assert!(Segment::new("a b").is_err());
        assert!(Segment::new("a\tb").is_err());
        assert!(Segment::new("").is_err());
        assert!(Segment::gap().is_reserved());
    }
}
