//! Transposition of alignments into site records, and tier extension.
//!
//! Every alignment column becomes an independent record. Records are then
//! widened with derived tiers: the site position counted from either end,
//! the sound class of each language's segment, and copies of the segment
//! and sound-class tiers shifted left (`L1`, `L2`) or right (`R1`, `R2`)
//! within the same alignment. A shift that falls off either end of the
//! alignment yields the boundary token `∅`; gaps and `?` propagate as
//! ordinary values.
//!
//! Tier order is fixed: `index`, `rindex`, then for each language in
//! wordlist order its segment tier, the segment shifts by ascending offset,
//! its sound-class tier and the sound-class shifts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentMatrix;
use crate::error::{Error, Result};
use crate::phonology::{SoundClassModel, BOUNDARY};

/// Largest context offset accepted in either direction.
pub const MAX_OFFSET: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseTier {
    Segment,
    SoundClass,
}

impl BaseTier {
    fn label(self) -> &'static str {
        match self {
            BaseTier::Segment => "segment",
            BaseTier::SoundClass => "sc",
        }
    }
}

/// Which tiers to derive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierSpec {
    pub base_tiers: Vec<BaseTier>,
    pub offsets: Vec<i32>,
    pub index: bool,
    pub rindex: bool,
}

impl Default for TierSpec {
    fn default() -> Self {
        TierSpec {
            base_tiers: vec![BaseTier::Segment, BaseTier::SoundClass],
            offsets: vec![-2, -1, 1, 2],
            index: true,
            rindex: true,
        }
    }
}

impl TierSpec {
    /// Builds a spec with the default base tiers; offsets are sorted and
    /// deduplicated.
    pub fn new(offsets: &[i32], index: bool, rindex: bool) -> Result<Self> {
        let mut offsets = offsets.to_vec();
        offsets.sort_unstable();
        offsets.dedup();
        let spec = TierSpec {
            offsets,
            index,
            rindex,
            ..Default::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Segment tiers only: no positions, classes or context.
    pub fn segments_only() -> Self {
        TierSpec {
            base_tiers: vec![BaseTier::Segment],
            offsets: vec![],
            index: false,
            rindex: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.offsets.iter().find(|&&k| k == 0 || k.abs() > MAX_OFFSET) {
            return Err(Error::Invalid(format!("context offset {k} not in ±1..=±{MAX_OFFSET}")));
        }
        if self.offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("context offsets must be strictly ascending".into()));
        }
        if !self.base_tiers.contains(&BaseTier::Segment) {
            return Err(Error::Invalid("the segment tier is required".into()));
        }
        let mut bases = self.base_tiers.clone();
        bases.sort();
        bases.dedup();
        if bases.len() != self.base_tiers.len() {
            return Err(Error::Invalid("duplicate base tier".into()));
        }
        Ok(())
    }

    /// Ordered tier keys for `languages`.
    pub fn tier_keys(&self, languages: &[String]) -> Vec<TierKey> {
        let mut keys = Vec::new();
        if self.index {
            keys.push(TierKey::Index);
        }
        if self.rindex {
            keys.push(TierKey::RIndex);
        }
        let mut bases = self.base_tiers.clone();
        bases.sort();
        for language in languages {
            for &base in &bases {
                for offset in std::iter::once(0).chain(self.offsets.iter().copied()) {
                    keys.push(TierKey::Language {
                        language: language.clone(),
                        base,
                        offset,
                    });
                }
            }
        }
        keys
    }
}

/// Identifies one column of a [`TierFrame`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TierKey {
    Index,
    #[serde(rename = "rindex")]
    RIndex,
    Language {
        language: String,
        base: BaseTier,
        offset: i32,
    },
}

impl TierKey {
    pub fn segment(language: &str) -> Self {
        TierKey::Language {
            language: language.to_owned(),
            base: BaseTier::Segment,
            offset: 0,
        }
    }

    pub fn language(&self) -> Option<&str> {
        match self {
            TierKey::Language { language, .. } => Some(language),
            _ => None,
        }
    }

    pub fn belongs_to(&self, language: &str) -> bool {
        self.language() == Some(language)
    }
}

impl fmt::Display for TierKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TierKey::Index => f.write_str("index"),
            TierKey::RIndex => f.write_str("rindex"),
            TierKey::Language { language, base, offset } => {
                write!(f, "{language}.{}", base.label())?;
                match offset {
                    0 => Ok(()),
                    k if *k < 0 => write!(f, ".L{}", -k),
                    k => write!(f, ".R{k}"),
                }
            }
        }
    }
}

/// One alignment site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteRecord {
    /// Global 1-based position in frame order.
    pub site_id: usize,
    pub cogid: String,
    /// 1-based position within the alignment.
    pub site_index: usize,
    pub alignment_length: usize,
    /// One value per frame tier.
    pub values: Vec<String>,
}

/// Sites as rows, tiers as columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierFrame {
    languages: Vec<String>,
    tiers: Vec<TierKey>,
    records: Vec<SiteRecord>,
}

impl TierFrame {
    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn tiers(&self) -> &[TierKey] {
        &self.tiers
    }

    pub fn records(&self) -> &[SiteRecord] {
        &self.records
    }

    pub fn tier_position(&self, key: &TierKey) -> Option<usize> {
        self.tiers.iter().position(|t| t == key)
    }

    /// Values of one tier in record order.
    pub fn column(&self, key: &TierKey) -> Option<Vec<&str>> {
        let p = self.tier_position(key)?;
        Some(self.records.iter().map(|r| r.values[p].as_str()).collect())
    }

    /// Same tiers, only the records accepted by `keep`.
    pub fn filter_records(&self, mut keep: impl FnMut(&SiteRecord) -> bool) -> TierFrame {
        TierFrame {
            languages: self.languages.clone(),
            tiers: self.tiers.clone(),
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Rebuilds the alignment grids from the segment tiers.
    pub fn to_alignments(&self) -> Result<Vec<AlignmentMatrix>> {
        let positions = self
            .languages
            .iter()
            .map(|l| {
                self.tier_position(&TierKey::segment(l))
                    .ok_or_else(|| Error::TierMismatch(format!("no segment tier for {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out: Vec<AlignmentMatrix> = Vec::new();
        for r in &self.records {
            if r.site_index == 1 {
                out.push(AlignmentMatrix {
                    cogid: r.cogid.clone(),
                    languages: self.languages.clone(),
                    rows: vec![Vec::new(); self.languages.len()],
                });
            }
            let a = out
                .last_mut()
                .ok_or_else(|| Error::Invalid("frame does not start at a first site".into()))?;
            for (row, &p) in a.rows.iter_mut().zip(&positions) {
                row.push(crate::phonology::Segment::new(r.values[p].clone())?);
            }
        }
        Ok(out)
    }
}

/// Joins alignments into a frame holding one segment tier per language.
pub fn transpose(alignments: &[AlignmentMatrix]) -> Result<TierFrame> {
    let languages = alignments.first().map(|a| a.languages.clone()).unwrap_or_default();
    let tiers: Vec<TierKey> = languages.iter().map(|l| TierKey::segment(l)).collect();
    let mut records = Vec::with_capacity(alignments.iter().map(AlignmentMatrix::len).sum());
    for a in alignments {
        if a.languages != languages {
            return Err(Error::TierMismatch(format!(
                "alignment {} has languages {:?}, expected {:?}",
                a.cogid, a.languages, languages
            )));
        }
        let len = a.len();
        for site in 0..len {
            records.push(SiteRecord {
                site_id: records.len() + 1,
                cogid: a.cogid.clone(),
                site_index: site + 1,
                alignment_length: len,
                values: a.column(site).map(|s| s.as_str().to_owned()).collect(),
            });
        }
    }
    Ok(TierFrame {
        languages,
        tiers,
        records,
    })
}

/// Derives the tiers named by `spec` from the frame's segment tiers.
///
/// Any previously derived tiers are discarded, so extending twice with the
/// same spec gives the same frame.
pub fn extend(frame: &TierFrame, spec: &TierSpec, model: &SoundClassModel) -> Result<TierFrame> {
    spec.validate()?;
    let tiers = spec.tier_keys(&frame.languages);
    let segment_cols = frame
        .languages
        .iter()
        .map(|l| {
            frame
                .tier_position(&TierKey::segment(l))
                .ok_or_else(|| Error::TierMismatch(format!("no segment tier for {l}")))
        })
        .collect::<Result<Vec<_>>>()?;

    // Base values per (language, base tier), in record order.
    let n = frame.records.len();
    let base_values = |lang: usize, base: BaseTier| -> Vec<String> {
        let p = segment_cols[lang];
        frame
            .records
            .iter()
            .map(|r| match base {
                BaseTier::Segment => r.values[p].clone(),
                BaseTier::SoundClass => model.sound_class(&r.values[p]),
            })
            .collect()
    };

    let mut columns: Vec<Vec<String>> = Vec::with_capacity(tiers.len());
    let mut cache: Option<(usize, BaseTier, Vec<String>)> = None;
    for key in &tiers {
        let col = match key {
            TierKey::Index => frame.records.iter().map(|r| r.site_index.to_string()).collect(),
            TierKey::RIndex => frame
                .records
                .iter()
                .map(|r| (r.alignment_length - r.site_index + 1).to_string())
                .collect(),
            TierKey::Language { language, base, offset } => {
                let lang = frame
                    .languages
                    .iter()
                    .position(|l| l == language)
                    .expect("key from frame languages");
                if !matches!(&cache, Some((l, b, _)) if *l == lang && b == base) {
                    cache = Some((lang, *base, base_values(lang, *base)));
                }
                let values = &cache.as_ref().expect("filled above").2;
                (0..n)
                    .map(|p| {
                        let r = &frame.records[p];
                        let target = r.site_index as i64 + *offset as i64;
                        if target < 1 || target > r.alignment_length as i64 {
                            BOUNDARY.to_owned()
                        } else {
                            values[(p as i64 + *offset as i64) as usize].clone()
                        }
                    })
                    .collect()
            }
        };
        columns.push(col);
    }

    let records = frame
        .records
        .iter()
        .enumerate()
        .map(|(p, r)| SiteRecord {
            site_id: r.site_id,
            cogid: r.cogid.clone(),
            site_index: r.site_index,
            alignment_length: r.alignment_length,
            values: columns.iter().map(|c| c[p].clone()).collect(),
        })
        .collect();
    Ok(TierFrame {
        languages: frame.languages.clone(),
        tiers,
        records,
    })
}

/// Tab-separated frame: `ID`, `COGID`, then one column per tier.
pub fn write_frame(frame: &TierFrame) -> String {
    let mut out = String::from("ID\tCOGID");
    for t in &frame.tiers {
        out.push('\t');
        out.push_str(&t.to_string());
    }
    out.push('\n');
    for r in &frame.records {
        out.push_str(&format!("{}\t{}", r.site_id, r.cogid));
        for v in &r.values {
            out.push('\t');
            out.push_str(v);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::segments;

    fn matrix(cogid: &str, rows: &[&str]) -> AlignmentMatrix {
        AlignmentMatrix {
            cogid: cogid.into(),
            languages: vec!["A".into(), "B".into()],
            rows: rows.iter().map(|r| segments(r).unwrap()).collect(),
        }
    }

    #[test]
    fn spec_validation() {
        assert!(TierSpec::new(&[0], true, true).is_err());
        assert!(TierSpec::new(&[5], true, true).is_err());
        assert_eq!(TierSpec::new(&[2, -1, 2], true, false).unwrap().offsets, vec![-1, 2]);
        let no_seg = TierSpec {
            base_tiers: vec![BaseTier::SoundClass],
            ..Default::default()
        };
        assert!(no_seg.validate().is_err());
    }

    #[test]
    fn tier_names_and_order() {
        let keys = TierSpec::new(&[-1, 1], true, true)
            .unwrap()
            .tier_keys(&["G".to_string()]);
        let names: Vec<String> = keys.iter().map(ToString::to_string).collect();
        assert_eq!(
            names,
            [
                "index",
                "rindex",
                "G.segment",
                "G.segment.L1",
                "G.segment.R1",
                "G.sc",
                "G.sc.L1",
                "G.sc.R1"
            ]
        );
    }

    #[test]
    fn single_column() {
        let f = transpose(&[matrix("X", &["a", "b"])]).unwrap();
        assert_eq!(f.records().len(), 1);
        assert_eq!(f.records()[0].values, ["a", "b"]);
    }

    #[test]
    fn language_mismatch() {
        let mut other = matrix("Y", &["a", "b"]);
        other.languages[1] = "C".into();
        assert!(transpose(&[matrix("X", &["a", "b"]), other]).is_err());
    }

    #[test]
    fn shifts_stop_at_set_boundaries() {
        let f = transpose(&[matrix("X", &["p a", "b a"]), matrix("Y", &["t", "d"])]).unwrap();
        let e = extend(
            &f,
            &TierSpec::new(&[-2, 1], true, true).unwrap(),
            &SoundClassModel::sca(),
        )
        .unwrap();
        let col = |name: &str| {
            let k = e.tiers().iter().find(|t| t.to_string() == name).unwrap().clone();
            e.column(&k).unwrap()
        };
        assert_eq!(col("A.segment.R1"), ["a", "∅", "∅"]);
        assert_eq!(col("A.segment.L2"), ["∅", "∅", "∅"]);
        assert_eq!(col("B.sc.R1"), ["A", "∅", "∅"]);
        assert_eq!(col("index"), ["1", "2", "1"]);
        assert_eq!(col("rindex"), ["2", "1", "1"]);
    }

    #[test]
    fn extension_is_idempotent() {
        let f = transpose(&[matrix("X", &["p a -", "b a k"])]).unwrap();
        let spec = TierSpec::default();
        let m = SoundClassModel::sca();
        let once = extend(&f, &spec, &m).unwrap();
        assert_eq!(extend(&once, &spec, &m).unwrap(), once);
        assert_eq!(once.tiers().len(), 2 + 2 * 2 * 5);
    }

    #[test]
    fn frame_tsv() {
        let f = transpose(&[matrix("X", &["p -", "b a"])]).unwrap();
        assert_eq!(
            write_frame(&f),
            "ID\tCOGID\tA.segment\tB.segment\n1\tX\tp\tb\n2\tX\t-\ta\n"
        );
    }
}
