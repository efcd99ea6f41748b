use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multitier::{TierFrame, TierKey};

/// Dense 0/1 matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Builds a matrix from rows of equal length; values other than 0 count
    /// as 1.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("ragged matrix rows".into()));
        }
        Ok(BinaryMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().map(|&v| (v != 0) as u8).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col] != 0
    }

    fn set(&mut self, row: usize, col: usize) {
        self.data[row * self.cols + col] = 1;
    }
}

/// Observed categories of one tier and where its block starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyBlock {
    pub tier: TierKey,
    /// Sorted by codepoint sequence.
    pub categories: Vec<String>,
    pub offset: usize,
}

/// Maps categorical tier values to positions in a one-hot vector.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureVocabulary {
    blocks: Vec<VocabularyBlock>,
}

impl FeatureVocabulary {
    /// Builds blocks from per-tier category sets, in the given tier order.
    pub fn from_categories(tiers: Vec<(TierKey, BTreeSet<String>)>) -> Self {
        let mut offset = 0;
        let blocks = tiers
            .into_iter()
            .map(|(tier, cats)| {
                let block = VocabularyBlock {
                    tier,
                    categories: cats.into_iter().collect(),
                    offset,
                };
                offset += block.categories.len();
                block
            })
            .collect();
        FeatureVocabulary { blocks }
    }

    pub fn blocks(&self) -> &[VocabularyBlock] {
        &self.blocks
    }

    pub fn tiers(&self) -> impl Iterator<Item = &TierKey> {
        self.blocks.iter().map(|b| &b.tier)
    }

    /// Length of an encoded row.
    pub fn width(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.categories.len())
    }

    /// Hot position for `value` in block `block`, if it was observed.
    pub fn position(&self, block: usize, value: &str) -> Option<usize> {
        let b = &self.blocks[block];
        b.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .ok()
            .map(|i| b.offset + i)
    }

    /// One-hot encodes one value per block; unseen values leave their block
    /// all zero.
    pub fn encode_values<'a>(&self, values: impl IntoIterator<Item = &'a str>) -> Vec<u8> {
        let mut row = vec![0u8; self.width()];
        for (b, v) in values.into_iter().enumerate().take(self.blocks.len()) {
            if let Some(p) = self.position(b, v) {
                row[p] = 1;
            }
        }
        row
    }

    /// Checks that blocks are contiguous, disjoint and sorted.
    pub fn validate(&self) -> Result<()> {
        let mut offset = 0;
        for b in &self.blocks {
            if b.offset != offset {
                return Err(Error::Corrupt(format!("vocabulary block {} misplaced", b.tier)));
            }
            if b.categories.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Corrupt(format!("vocabulary block {} unsorted", b.tier)));
            }
            offset += b.categories.len();
        }
        Ok(())
    }
}

/// One-hot encodes every tier not belonging to `target`.
///
/// Without `vocabulary` one is built from the frame; with one, its tier set
/// must equal the frame's feature tiers and unseen values encode as zeros.
pub fn encode(
    frame: &TierFrame,
    target: &str,
    vocabulary: Option<&FeatureVocabulary>,
) -> Result<(BinaryMatrix, FeatureVocabulary)> {
    if !frame.languages().iter().any(|l| l == target) {
        return Err(Error::UnknownLanguage(target.to_owned()));
    }
    let features: Vec<(usize, &TierKey)> = frame
        .tiers()
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.belongs_to(target))
        .collect();

    let vocabulary = match vocabulary {
        Some(v) => {
            if !v.tiers().eq(features.iter().map(|(_, t)| *t)) {
                return Err(Error::TierMismatch(format!(
                    "vocabulary covers {} tiers, frame supplies {} feature tiers for target {target}",
                    v.blocks.len(),
                    features.len()
                )));
            }
            v.clone()
        }
        None => FeatureVocabulary::from_categories(
            features
                .iter()
                .map(|&(p, t)| {
                    let cats = frame.records().iter().map(|r| r.values[p].clone()).collect();
                    (t.clone(), cats)
                })
                .collect(),
        ),
    };

    let mut x = BinaryMatrix::zeros(frame.records().len(), vocabulary.width());
    for (i, r) in frame.records().iter().enumerate() {
        for (b, &(p, _)) in features.iter().enumerate() {
            if let Some(col) = vocabulary.position(b, &r.values[p]) {
                x.set(i, col);
            }
        }
    }
    Ok((x, vocabulary))
}
