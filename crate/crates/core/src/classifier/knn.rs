//! Nearest-neighbour lookup over raw tier values, used as a transparent
//! reference classifier.

use std::collections::HashMap;

use super::ClassDistribution;
use crate::error::{Error, Result};
use crate::multitier::{TierFrame, TierKey};
use crate::phonology::MISSING;

/// Majority label among the `k` rows closest to `query` in Hamming
/// distance. Rows are ranked by `(distance, site id)`; a vote tie goes to
/// the label whose best-ranked row comes first.
pub fn knn_reference<S: AsRef<str>>(
    rows: &[Vec<S>],
    labels: &[S],
    site_ids: &[usize],
    query: &[S],
    k: usize,
) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if rows.len() != labels.len() || rows.len() != site_ids.len() {
        return Err(Error::Invalid("rows, labels and site ids differ in length".into()));
    }
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    let mut ranked: Vec<(usize, usize, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != query.len() {
                return Err(Error::WidthMismatch {
                    expected: row.len(),
                    got: query.len(),
                });
            }
            let d = row.iter().zip(query).filter(|(a, b)| a.as_ref() != b.as_ref()).count();
            Ok((d, site_ids[i], i))
        })
        .collect::<Result<_>>()?;
    ranked.sort_unstable();

    let mut votes: HashMap<&str, (usize, usize)> = HashMap::new();
    for (rank, &(_, _, i)) in ranked.iter().take(k).enumerate() {
        let e = votes.entry(labels[i].as_ref()).or_insert((0, rank));
        e.0 += 1;
    }
    let (label, _) = votes
        .into_iter()
        .min_by_key(|&(_, (count, first))| (std::cmp::Reverse(count), first))
        .expect("k >= 1 and rows non-empty");
    Ok(label.to_owned())
}

/// A fitted [`knn_reference`] for one target language.
#[derive(Debug, Clone)]
pub struct KnnReference {
    target: String,
    tiers: Vec<TierKey>,
    rows: Vec<Vec<String>>,
    labels: Vec<String>,
    site_ids: Vec<usize>,
    k: usize,
}

impl KnnReference {
    /// Keeps every tier not belonging to `target`; sites where the target
    /// is `?` are dropped.
    pub fn fit(frame: &TierFrame, target: &str, k: usize) -> Result<Self> {
        let label_col = frame
            .tier_position(&TierKey::segment(target))
            .ok_or_else(|| Error::UnknownLanguage(target.to_owned()))?;
        let features: Vec<usize> = (0..frame.tiers().len())
            .filter(|&p| !frame.tiers()[p].belongs_to(target))
            .collect();
        let mut out = KnnReference {
            target: target.to_owned(),
            tiers: features.iter().map(|&p| frame.tiers()[p].clone()).collect(),
            rows: Vec::new(),
            labels: Vec::new(),
            site_ids: Vec::new(),
            k,
        };
        for r in frame.records() {
            if r.values[label_col] == MISSING {
                continue;
            }
            out.rows.push(features.iter().map(|&p| r.values[p].clone()).collect());
            out.labels.push(r.values[label_col].clone());
            out.site_ids.push(r.site_id);
        }
        if out.rows.is_empty() {
            return Err(Error::Untrainable(target.to_owned()));
        }
        Ok(out)
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn tiers(&self) -> &[TierKey] {
        &self.tiers
    }

    pub fn predict(&self, query: &[String]) -> Result<String> {
        knn_reference(&self.rows, &self.labels, &self.site_ids, query, self.k)
    }

    /// Prediction for record `index` of `frame`, which must carry the same
    /// feature tiers.
    pub fn predict_record(&self, frame: &TierFrame, index: usize) -> Result<ClassDistribution> {
        let record = &frame.records()[index];
        let query = self
            .tiers
            .iter()
            .map(|t| {
                frame
                    .tier_position(t)
                    .map(|p| record.values[p].clone())
                    .ok_or_else(|| Error::TierMismatch(format!("query frame lacks tier {t}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClassDistribution::certain(self.predict(&query)?))
    }
}
