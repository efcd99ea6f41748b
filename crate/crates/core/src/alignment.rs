//! Global pairwise and progressive multiple alignment of segment sequences.
//!
//! Scores are sound-class aware: identical segments score
//! `match_identical`, segments sharing a sound class score `match_class`,
//! anything else `mismatch`, and every gap position `gap` (linear, no
//! affine opening cost).
//!
//! Tie-breaking is fixed so that alignments are reproducible. The dynamic
//! program runs over suffixes and the traceback walks forward from the first
//! positions, preferring a match, then a gap in the second sequence, then a
//! gap in the first. Among equally scored alignments this keeps residues
//! paired as early as possible and pushes gaps to the right.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phonology::{Segment, SoundClassModel};
use crate::wordlist::{join_segments, Cell, CognateSet, Wordlist};

/// Score tolerance for tie detection with averaged profile scores.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringScheme {
    pub match_identical: i32,
    pub match_class: i32,
    pub mismatch: i32,
    pub gap: i32,
}

impl Default for ScoringScheme {
    fn default() -> Self {
        ScoringScheme {
            match_identical: 2,
            match_class: 1,
            mismatch: -1,
            gap: -1,
        }
    }
}

impl ScoringScheme {
    pub fn validate(&self) -> Result<()> {
        if self.match_identical >= self.match_class && self.match_class > self.mismatch && self.gap < self.match_class {
            Ok(())
        } else {
            Err(Error::Invalid(format!("inconsistent scoring scheme {self:?}")))
        }
    }

    /// Substitution score given both segments and their sound classes.
    fn substitution(&self, a: &str, a_class: &str, b: &str, b_class: &str) -> i32 {
        if a == b {
            self.match_identical
        } else if a_class == b_class {
            self.match_class
        } else {
            self.mismatch
        }
    }

    /// Substitution score of two ordinary segments.
    pub fn score(&self, a: &Segment, b: &Segment, model: &SoundClassModel) -> i32 {
        self.substitution(
            a.as_str(),
            &model.sound_class(a.as_str()),
            b.as_str(),
            &model.sound_class(b.as_str()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    /// Pair `a[i]` with `b[j]`.
    Both,
    /// `a[i]` against a gap.
    GapInB,
    /// `b[j]` against a gap.
    GapInA,
}

/// Suffix dynamic program with forward traceback. `sub(i, j)` scores
/// pairing `a[i]` with `b[j]`; gaps cost `gap` on either side.
fn global_dp(n: usize, m: usize, gap: f64, sub: impl Fn(usize, usize) -> f64) -> (f64, Vec<Step>) {
    let w = m + 1;
    let mut best = vec![0.0f64; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            let mut v = f64::NEG_INFINITY;
            if i < n && j < m {
                v = v.max(sub(i, j) + best[(i + 1) * w + j + 1]);
            }
            if i < n {
                v = v.max(gap + best[(i + 1) * w + j]);
            }
            if j < m {
                v = v.max(gap + best[i * w + j + 1]);
            }
            best[i * w + j] = v;
        }
    }

    let (mut i, mut j) = (0, 0);
    let mut steps = Vec::with_capacity(n + m);
    while i < n || j < m {
        let here = best[i * w + j];
        if i < n && j < m && (sub(i, j) + best[(i + 1) * w + j + 1] - here).abs() < EPS {
            steps.push(Step::Both);
            i += 1;
            j += 1;
        } else if i < n && (gap + best[(i + 1) * w + j] - here).abs() < EPS {
            steps.push(Step::GapInB);
            i += 1;
        } else {
            steps.push(Step::GapInA);
            j += 1;
        }
    }
    (best[0], steps)
}

/// Result of [`pairwise_align`]: both rows padded with gaps to equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseAlignment {
    pub a: Vec<Segment>,
    pub b: Vec<Segment>,
    pub score: i32,
}

/// Optimal global alignment of two non-empty segment sequences.
pub fn pairwise_align(
    a: &[Segment],
    b: &[Segment],
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<PairwiseAlignment> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sequence to align"));
    }
    let ac: Vec<String> = a.iter().map(|s| model.sound_class(s.as_str())).collect();
    let bc: Vec<String> = b.iter().map(|s| model.sound_class(s.as_str())).collect();
    let sub = |i: usize, j: usize| -> i32 { scoring.substitution(a[i].as_str(), &ac[i], b[j].as_str(), &bc[j]) };
    let (_, steps) = global_dp(a.len(), b.len(), scoring.gap as f64, |i, j| sub(i, j) as f64);

    let mut out = PairwiseAlignment {
        a: Vec::with_capacity(steps.len()),
        b: Vec::with_capacity(steps.len()),
        score: 0,
    };
    let (mut i, mut j) = (0, 0);
    for step in steps {
        match step {
            Step::Both => {
                out.score += sub(i, j);
                out.a.push(a[i].clone());
                out.b.push(b[j].clone());
                i += 1;
                j += 1;
            }
            Step::GapInB => {
                out.score += scoring.gap;
                out.a.push(a[i].clone());
                out.b.push(Segment::gap());
                i += 1;
            }
            Step::GapInA => {
                out.score += scoring.gap;
                out.a.push(Segment::gap());
                out.b.push(b[j].clone());
                j += 1;
            }
        }
    }
    Ok(out)
}

/// A multiple alignment of one cognate set. Languages without an observed
/// form hold all-`?` rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentMatrix {
    pub cogid: String,
    pub languages: Vec<String>,
    pub rows: Vec<Vec<Segment>>,
}

impl AlignmentMatrix {
    /// Number of alignment sites.
    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, site: usize) -> impl Iterator<Item = &Segment> + '_ {
        self.rows.iter().map(move |r| &r[site])
    }

    /// Checks the structural invariants against the source row.
    pub fn check(&self, source: &CognateSet) -> Result<()> {
        let len = self.len();
        if len == 0 {
            return Err(Error::Invalid(format!("{}: empty alignment", self.cogid)));
        }
        if self.rows.len() != source.cells.len() || self.rows.iter().any(|r| r.len() != len) {
            return Err(Error::Invalid(format!("{}: ragged alignment", self.cogid)));
        }
        if (0..len).any(|c| self.column(c).all(Segment::is_gap)) {
            return Err(Error::Invalid(format!("{}: all-gap column", self.cogid)));
        }
        for (row, cell) in self.rows.iter().zip(&source.cells) {
            let ok = match cell {
                Cell::Present(segs) => {
                    row.iter().filter(|s| !s.is_gap()).eq(segs.iter()) && !row.iter().any(Segment::is_missing)
                }
                _ => row.iter().all(Segment::is_missing),
            };
            if !ok {
                return Err(Error::Invalid(format!("{}: row does not match its form", self.cogid)));
            }
        }
        Ok(())
    }
}

/// Progressive alignment of one cognate set.
///
/// Observed forms are merged in language order: the first seeds the
/// profile and each later form is aligned against it. A profile column
/// scores a residue by the mean pairwise score against its non-gap entries;
/// an all-gap column scores `gap`. Languages without a form receive `?`
/// rows once the final length is known.
pub fn msa(
    row: &CognateSet,
    languages: &[String],
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<AlignmentMatrix> {
    if row.cells.len() != languages.len() {
        return Err(Error::Invalid(format!(
            "{}: cell count differs from language count",
            row.cogid
        )));
    }
    let present: Vec<(usize, &[Segment])> = row
        .cells
        .iter()
        .enumerate()
        .filter_map(|(l, c)| c.segments().map(|s| (l, s)))
        .collect();
    let Some((&(_, seed), rest)) = present.split_first() else {
        return Err(Error::Invalid(format!("{}: no observed forms to align", row.cogid)));
    };
    if present.iter().any(|(_, s)| s.is_empty()) {
        return Err(Error::Empty("form to align"));
    }

    // Profile rows with their sound classes, kept in step.
    let classes = |s: &[Segment]| -> Vec<String> { s.iter().map(|x| model.sound_class(x.as_str())).collect() };
    let mut profile: Vec<Vec<Segment>> = vec![seed.to_vec()];
    let mut profile_classes: Vec<Vec<String>> = vec![classes(seed)];

    for &(_, seq) in rest {
        let seq_classes = classes(seq);
        let width = profile[0].len();
        let column_score = |col: usize, j: usize| -> f64 {
            let (total, count) = profile
                .iter()
                .zip(&profile_classes)
                .filter(|(r, _)| !r[col].is_gap())
                .fold((0i64, 0i64), |(t, n), (r, c)| {
                    let s = scoring.substitution(r[col].as_str(), &c[col], seq[j].as_str(), &seq_classes[j]);
                    (t + s as i64, n + 1)
                });
            if count == 0 {
                scoring.gap as f64
            } else {
                total as f64 / count as f64
            }
        };
        let (_, steps) = global_dp(width, seq.len(), scoring.gap as f64, column_score);

        let mut merged: Vec<Vec<Segment>> = vec![Vec::with_capacity(steps.len()); profile.len() + 1];
        let mut merged_classes: Vec<Vec<String>> = vec![Vec::with_capacity(steps.len()); profile.len() + 1];
        let (mut i, mut j) = (0, 0);
        for step in steps {
            let (take_col, take_res) = match step {
                Step::Both => (true, true),
                Step::GapInB => (true, false),
                Step::GapInA => (false, true),
            };
            for (k, (r, c)) in profile.iter().zip(&profile_classes).enumerate() {
                if take_col {
                    merged[k].push(r[i].clone());
                    merged_classes[k].push(c[i].clone());
                } else {
                    merged[k].push(Segment::gap());
                    merged_classes[k].push(Segment::gap().to_string());
                }
            }
            let last = profile.len();
            if take_res {
                merged[last].push(seq[j].clone());
                merged_classes[last].push(seq_classes[j].clone());
            } else {
                merged[last].push(Segment::gap());
                merged_classes[last].push(Segment::gap().to_string());
            }
            i += take_col as usize;
            j += take_res as usize;
        }
        profile = merged;
        profile_classes = merged_classes;
    }

    let len = profile[0].len();
    let mut aligned = profile.into_iter();
    let mut rows = vec![vec![Segment::missing(); len]; languages.len()];
    for &(l, _) in &present {
        rows[l] = aligned.next().expect("one profile row per form");
    }
    Ok(AlignmentMatrix {
        cogid: row.cogid.clone(),
        languages: languages.to_vec(),
        rows,
    })
}

/// Aligns every cognate set of a wordlist, preserving row order.
pub fn align_wordlist(w: &Wordlist, scoring: &ScoringScheme, model: &SoundClassModel) -> Result<Vec<AlignmentMatrix>> {
    w.rows()
        .par_iter()
        .map(|row| msa(row, w.languages(), scoring, model))
        .collect()
}

/// `COGID<TAB>LANGUAGE<TAB>ALIGNMENT` rows, one per language per set.
pub fn write_alignments(alignments: &[AlignmentMatrix]) -> String {
    let mut out = String::from("COGID\tLANGUAGE\tALIGNMENT\n");
    for a in alignments {
        for (lang, row) in a.languages.iter().zip(&a.rows) {
            out.push_str(&format!("{}\t{}\t{}\n", a.cogid, lang, join_segments(row)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::segments;

    fn segs(s: &str) -> Vec<Segment> {
        segments(s).unwrap()
    }

    fn align(a: &str, b: &str) -> PairwiseAlignment {
        pairwise_align(&segs(a), &segs(b), &ScoringScheme::default(), &SoundClassModel::sca()).unwrap()
    }

    #[test]
    fn ash_pair() {
        let p = align("a ʃ ɛ", "æ ʃ");
        assert_eq!(p.a, segs("a ʃ ɛ"));
        assert_eq!(p.b, segs("æ ʃ -"));
        assert_eq!(p.score, 0);
    }

    #[test]
    fn gaps_go_right_on_ties() {
        // s/t, ə/t and n/t all score equally; the earliest pairing wins.
        let p = align("b ai s ə n", "b ai t");
        assert_eq!(p.b, segs("b ai t - -"));
        assert_eq!(p.score, 1);
    }

    #[test]
    fn self_alignment() {
        let p = align("t a k i", "t a k i");
        assert_eq!(p.a, p.b);
        assert_eq!(p.score, 8);
    }

    #[test]
    fn empty_rejected() {
        let s = ScoringScheme::default();
        let m = SoundClassModel::sca();
        assert!(pairwise_align(&[], &segs("a"), &s, &m).is_err());
        assert!(pairwise_align(&segs("a"), &[], &s, &m).is_err());
    }

    #[test]
    fn scheme_validation() {
        assert!(ScoringScheme::default().validate().is_ok());
        let bad = ScoringScheme {
            match_class: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScoringScheme {
            gap: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn row(cogid: &str, cells: &[&str]) -> CognateSet {
        CognateSet {
            cogid: cogid.into(),
            cells: cells
                .iter()
                .map(|c| match *c {
                    "?" => Cell::ToPredict,
                    "" => Cell::Absent,
                    s => Cell::Present(segs(s)),
                })
                .collect(),
        }
    }

    fn langs() -> Vec<String> {
        ["German", "English", "Dutch"].map(String::from).to_vec()
    }

    fn run(r: &CognateSet) -> AlignmentMatrix {
        let m = msa(r, &langs(), &ScoringScheme::default(), &SoundClassModel::sca()).unwrap();
        m.check(r).unwrap();
        m
    }

    #[test]
    fn bite_msa() {
        let m = run(&row("BITE", &["b ai s ə n", "b ai t", "b ɛi t ə"]));
        assert_eq!(m.rows, vec![segs("b ai s ə n"), segs("b ai t - -"), segs("b ɛi t ə -")]);
    }

    #[test]
    fn single_form() {
        let m = run(&row("X", &["", "p a t", "?"]));
        assert_eq!(m.len(), 3);
        assert_eq!(m.rows[1], segs("p a t"));
        assert_eq!(m.rows[0], segs("? ? ?"));
        assert_eq!(m.rows[2], segs("? ? ?"));
    }

    #[test]
    fn belly_missing_row() {
        let m = run(&row("BELLY", &["b au x", "?", "b œi k"]));
        assert_eq!(m.rows[1], segs("? ? ?"));
        assert_eq!(m.rows[2], segs("b œi k"));
    }

    #[test]
    fn insertion_into_profile() {
        let m = run(&row("X", &["t a", "t a k", "k a"]));
        assert_eq!(m.len(), 3);
        assert_eq!(m.rows[0], segs("t a -"));
    }

    #[test]
    fn alignment_tsv() {
        let m = run(&row("ASH", &["a ʃ ɛ", "æ ʃ", "ɑ s"]));
        assert_eq!(
            write_alignments(&[m]),
            "COGID\tLANGUAGE\tALIGNMENT\nASH\tGerman\ta ʃ ɛ\nASH\tEnglish\tæ ʃ -\nASH\tDutch\tɑ s -\n"
        );
    }
}
