//! Scoring predicted reflexes against withheld forms.
//!
//! Three scores per (cogid, language) pair:
//!
//! * `ED`, the Levenshtein distance over whole segments;
//! * `NED`, `ED / max(|pred|, |gold|)`, zero when both are empty;
//! * `BCF`, a B-cubed F-score. Prediction and gold are aligned with
//!   [`pairwise_align`]; the alignment columns are the items, and each side
//!   clusters the items by the token it shows (a gap is a token). Per item,
//!   precision is the share of its prediction cluster that is also in its
//!   gold cluster and recall the converse; BCF is the harmonic mean of the
//!   mean precision and mean recall.

use std::collections::{BTreeMap, HashMap};

use crate::alignment::{pairwise_align, ScoringScheme};
use crate::error::{Error, Result};
use crate::phonology::{Segment, SoundClassModel};
use crate::wordlist::Form;

/// Unit-cost Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn normalized_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        edit_distance(a, b) as f64 / longest as f64
    }
}

/// B-cubed F-score of two clusterings of the same items, given as one
/// cluster token per item.
pub fn bcubed_clusterings<P: PartialEq, G: PartialEq>(pred: &[P], gold: &[G]) -> f64 {
    assert_eq!(pred.len(), gold.len(), "clusterings cover different items");
    let n = pred.len();
    if n == 0 {
        return 1.0;
    }
    let (mut precision, mut recall) = (0.0, 0.0);
    for i in 0..n {
        let mut same_pred = 0usize;
        let mut same_gold = 0usize;
        let mut both = 0usize;
        for j in 0..n {
            let p = pred[j] == pred[i];
            let g = gold[j] == gold[i];
            same_pred += p as usize;
            same_gold += g as usize;
            both += (p && g) as usize;
        }
        precision += both as f64 / same_pred as f64;
        recall += both as f64 / same_gold as f64;
    }
    precision /= n as f64;
    recall /= n as f64;
    2.0 * precision * recall / (precision + recall)
}

/// B-cubed F-score of a predicted form against the gold form.
pub fn bcubed_f(pred: &[Segment], gold: &[Segment], scoring: &ScoringScheme, model: &SoundClassModel) -> Result<f64> {
    let aligned = pairwise_align(pred, gold, scoring, model)?;
    Ok(bcubed_clusterings(&aligned.a, &aligned.b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub cogid: String,
    pub language: String,
    pub ed: usize,
    pub ned: f64,
    pub bcf: f64,
    /// No prediction was supplied; scored as the worst case.
    pub missing: bool,
}

/// Arithmetic means over a group of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub count: usize,
    pub ed: f64,
    pub ned: f64,
    pub bcf: f64,
}

impl Summary {
    fn of<'a>(pairs: impl Iterator<Item = &'a PairScore>) -> Self {
        let mut s = Summary::default();
        for p in pairs {
            s.count += 1;
            s.ed += p.ed as f64;
            s.ned += p.ned;
            s.bcf += p.bcf;
        }
        if s.count > 0 {
            let n = s.count as f64;
            s.ed /= n;
            s.ned /= n;
            s.bcf /= n;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sorted by (cogid, language).
    pub pairs: Vec<PairScore>,
    /// Sorted by language.
    pub languages: Vec<(String, Summary)>,
    pub global: Summary,
}

fn score_pair(
    pred: &[Segment],
    gold: &[Segment],
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<(usize, f64, f64)> {
    let ed = edit_distance(pred, gold);
    let ned = normalized_edit_distance(pred, gold);
    let bcf = match (pred.is_empty(), gold.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => bcubed_f(pred, gold, scoring, model)?,
    };
    Ok((ed, ned, bcf))
}

/// Scores every solution against its prediction.
pub fn evaluate(
    predictions: &[Form],
    solutions: &[Form],
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<EvalReport> {
    let gold: HashMap<(&str, &str), &Form> = solutions
        .iter()
        .map(|f| ((f.cogid.as_str(), f.language.as_str()), f))
        .collect();
    let mut pred: HashMap<(&str, &str), &Form> = HashMap::new();
    for p in predictions {
        let key = (p.cogid.as_str(), p.language.as_str());
        if !gold.contains_key(&key) {
            return Err(Error::Invalid(format!(
                "prediction {}/{} has no solution",
                p.cogid, p.language
            )));
        }
        pred.insert(key, p);
    }

    let mut pairs = solutions
        .iter()
        .map(|g| {
            let key = (g.cogid.as_str(), g.language.as_str());
            let (ed, ned, bcf, missing) = match pred.get(&key) {
                Some(p) => {
                    let (ed, ned, bcf) = score_pair(&p.segments, &g.segments, scoring, model)?;
                    (ed, ned, bcf, false)
                }
                None => {
                    log::warn!("no prediction for {}/{}", g.cogid, g.language);
                    (g.segments.len(), 1.0, 0.0, true)
                }
            };
            Ok(PairScore {
                cogid: g.cogid.clone(),
                language: g.language.clone(),
                ed,
                ned,
                bcf,
                missing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    pairs.sort_by(|a, b| (&a.cogid, &a.language).cmp(&(&b.cogid, &b.language)));

    let mut by_language: BTreeMap<&str, Vec<&PairScore>> = BTreeMap::new();
    for p in &pairs {
        by_language.entry(p.language.as_str()).or_default().push(p);
    }
    let languages = by_language
        .into_iter()
        .map(|(l, ps)| (l.to_owned(), Summary::of(ps.into_iter())))
        .collect();
    let global = Summary::of(pairs.iter());
    Ok(EvalReport {
        pairs,
        languages,
        global,
    })
}

/// `SCOPE<TAB>KEY<TAB>ED<TAB>NED<TAB>BCF`: pair rows (scope `pair`, or
/// `missing` for unanswered pairs, key `COGID/LANGUAGE`), then one
/// `language` row per language, then the `global` row.
pub fn write_report(report: &EvalReport) -> String {
    let mut out = String::from("SCOPE\tKEY\tED\tNED\tBCF\n");
    for p in &report.pairs {
        let scope = if p.missing { "missing" } else { "pair" };
        out.push_str(&format!(
            "{scope}\t{}/{}\t{}\t{:.6}\t{:.6}\n",
            p.cogid, p.language, p.ed, p.ned, p.bcf
        ));
    }
    let summary =
        |scope: &str, key: &str, s: &Summary| format!("{scope}\t{key}\t{:.6}\t{:.6}\t{:.6}\n", s.ed, s.ned, s.bcf);
    for (l, s) in &report.languages {
        out.push_str(&summary("language", l, s));
    }
    out.push_str(&summary("global", "*", &report.global));
    out
}
