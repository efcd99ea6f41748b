//! Training one classifier per language and predicting reflexes with them.
//!
//! Training aligns every cognate set, builds one extended tier frame and,
//! for each language, fits a forest that reads every tier except that
//! language's own and predicts its segment tier. Sites where the language
//! is `?` are left out of its training set but still feed the others.
//!
//! Prediction aligns the observed forms of a query set (the target row is
//! all `?`), extends the frame with the training tier spec, encodes it with
//! the stored vocabulary and takes the most probable segment per site.
//! Predicted gaps are dropped from the output form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{align_wordlist, msa, ScoringScheme};
use crate::classifier::{
    encode, train_forest, ClassDistribution, FeatureVocabulary, ForestParams, KnnReference, RandomForestModel,
};
use crate::error::{Error, Result};
use crate::multitier::{extend, transpose, TierFrame, TierKey, TierSpec};
use crate::phonology::{Segment, SoundClassModel, MISSING};
use crate::wordlist::{Cell, CognateSet, Form, Wordlist};

/// Version of the serialized bundle layout.
pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "multitier-model-bundle";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub tiers: TierSpec,
    pub scoring: ScoringScheme,
    /// Forest settings, including the seed.
    pub forest: ForestParams,
    /// Sound-class overrides merged over the embedded table.
    pub sound_classes: Vec<(char, char)>,
}

impl TrainingConfig {
    pub fn sound_class_model(&self) -> SoundClassModel {
        SoundClassModel::sca().with_overrides(&self.sound_classes)
    }
}

/// Everything needed to predict one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageModel {
    pub language: String,
    pub training_sites: usize,
    pub vocabulary: FeatureVocabulary,
    pub forest: RandomForestModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageEntry {
    pub language: String,
    /// `None` when the language had no usable training site.
    pub model: Option<LanguageModel>,
}

/// Trained models for every language of a wordlist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub format_version: u32,
    pub seed: u64,
    pub languages: Vec<String>,
    pub config: TrainingConfig,
    pub models: Vec<LanguageEntry>,
}

impl ModelBundle {
    pub fn model(&self, language: &str) -> Result<&LanguageModel> {
        let entry = self
            .models
            .iter()
            .find(|e| e.language == language)
            .ok_or_else(|| Error::UnknownLanguage(language.to_owned()))?;
        entry
            .model
            .as_ref()
            .ok_or_else(|| Error::Untrainable(language.to_owned()))
    }

    pub fn sound_class_model(&self) -> SoundClassModel {
        self.config.sound_class_model()
    }
}

/// Scores the sites of a query frame for one target language.
pub trait SiteClassifier {
    /// One distribution per record of `frame`.
    fn classify(&self, frame: &TierFrame) -> Result<Vec<ClassDistribution>>;
}

impl SiteClassifier for LanguageModel {
    fn classify(&self, frame: &TierFrame) -> Result<Vec<ClassDistribution>> {
        let (x, _) = encode(frame, &self.language, Some(&self.vocabulary))?;
        (0..x.rows()).map(|i| self.forest.predict_proba(x.row(i))).collect()
    }
}

impl SiteClassifier for KnnReference {
    fn classify(&self, frame: &TierFrame) -> Result<Vec<ClassDistribution>> {
        (0..frame.records().len())
            .map(|i| self.predict_record(frame, i))
            .collect()
    }
}

/// Aligns a wordlist and derives its extended tier frame.
pub fn build_frame(
    w: &Wordlist,
    tiers: &TierSpec,
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<TierFrame> {
    let alignments = align_wordlist(w, scoring, model)?;
    if alignments.is_empty() {
        return Err(Error::Empty("wordlist rows"));
    }
    extend(&transpose(&alignments)?, tiers, model)
}

/// Trains one forest per language.
pub fn train_all(w: &Wordlist, cfg: &TrainingConfig) -> Result<ModelBundle> {
    if w.languages().len() < 2 {
        return Err(Error::Invalid("training needs at least two languages".into()));
    }
    if w.rows().is_empty() {
        return Err(Error::Empty("wordlist rows"));
    }
    cfg.tiers.validate()?;
    cfg.scoring.validate()?;
    let model = cfg.sound_class_model();
    let frame = build_frame(w, &cfg.tiers, &cfg.scoring, &model)?;

    let models = w
        .languages()
        .iter()
        .map(|language| {
            let model = train_language(&frame, language, &cfg.forest)?;
            if model.is_none() {
                log::warn!("no training sites for {language}; it cannot be predicted");
            }
            Ok(LanguageEntry {
                language: language.clone(),
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ModelBundle {
        format: FORMAT_NAME.to_owned(),
        format_version: FORMAT_VERSION,
        seed: cfg.forest.seed,
        languages: w.languages().to_vec(),
        config: cfg.clone(),
        models,
    })
}

/// Fits the forest for `language` on the sites where it is observed.
pub fn train_language(frame: &TierFrame, language: &str, params: &ForestParams) -> Result<Option<LanguageModel>> {
    let label_col = frame
        .tier_position(&TierKey::segment(language))
        .ok_or_else(|| Error::UnknownLanguage(language.to_owned()))?;
    let usable = frame.filter_records(|r| r.values[label_col] != MISSING);
    if usable.records().is_empty() {
        return Ok(None);
    }
    let (x, vocabulary) = encode(&usable, language, None)?;
    let y: Vec<String> = usable.records().iter().map(|r| r.values[label_col].clone()).collect();
    let forest = train_forest(&x, &y, params)?;
    Ok(Some(LanguageModel {
        language: language.to_owned(),
        training_sites: y.len(),
        vocabulary,
        forest,
    }))
}

/// Predicted reflex for one cognate set and language.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub cogid: String,
    pub language: String,
    /// Argmax segments with gaps removed.
    pub segments: Vec<Segment>,
    /// One distribution per alignment site.
    pub distributions: Vec<ClassDistribution>,
}

impl PredictionResult {
    /// Argmax label per site, gaps included.
    pub fn site_labels(&self) -> Vec<&str> {
        self.distributions
            .iter()
            .map(|d| d.argmax().unwrap_or(MISSING))
            .collect()
    }
}

/// Builds the extended frame for a query set whose `target` is unknown.
pub fn query_frame(
    row: &CognateSet,
    languages: &[String],
    target: &str,
    tiers: &TierSpec,
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<TierFrame> {
    let t = languages
        .iter()
        .position(|l| l == target)
        .ok_or_else(|| Error::UnknownLanguage(target.to_owned()))?;
    if row.cells.len() != languages.len() {
        return Err(Error::Invalid(format!(
            "{}: cell count differs from language count",
            row.cogid
        )));
    }
    if row.cells[t].is_present() {
        return Err(Error::Invalid(format!("{}: {target} is already observed", row.cogid)));
    }
    if row.present_count() == 0 {
        return Err(Error::Invalid(format!("{}: no observed forms", row.cogid)));
    }
    let alignment = msa(row, languages, scoring, model)?;
    extend(&transpose(&[alignment])?, tiers, model)
}

/// Predicts `target` in `row` with any site classifier.
pub fn predict_reflex_with<C: SiteClassifier + ?Sized>(
    classifier: &C,
    row: &CognateSet,
    languages: &[String],
    target: &str,
    tiers: &TierSpec,
    scoring: &ScoringScheme,
    model: &SoundClassModel,
) -> Result<PredictionResult> {
    let frame = query_frame(row, languages, target, tiers, scoring, model)?;
    let distributions = classifier.classify(&frame)?;
    let segments = distributions
        .iter()
        .filter_map(|d| d.argmax())
        .filter(|&l| l != crate::phonology::GAP)
        .map(Segment::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionResult {
        cogid: row.cogid.clone(),
        language: target.to_owned(),
        segments,
        distributions,
    })
}

/// Predicts `target` in `row` with the bundle's forest for that language.
pub fn predict_reflex(bundle: &ModelBundle, row: &CognateSet, target: &str) -> Result<PredictionResult> {
    let model = bundle.model(target)?;
    predict_reflex_with(
        model,
        row,
        &bundle.languages,
        target,
        &bundle.config.tiers,
        &bundle.config.scoring,
        &bundle.sound_class_model(),
    )
}

/// Predicts every `?` cell of a test wordlist, in row then language order.
pub fn predict_wordlist(bundle: &ModelBundle, test: &Wordlist) -> Result<Vec<Form>> {
    if test.languages() != bundle.languages.as_slice() {
        return Err(Error::Invalid(format!(
            "test languages {:?} differ from trained languages {:?}",
            test.languages(),
            bundle.languages
        )));
    }
    let per_row = test
        .rows()
        .par_iter()
        .map(|row| {
            row.cells
                .iter()
                .enumerate()
                .filter(|(_, c)| matches!(c, Cell::ToPredict))
                .map(|(l, _)| {
                    let r = predict_reflex(bundle, row, &test.languages()[l])?;
                    Ok(Form {
                        cogid: r.cogid,
                        language: r.language,
                        segments: r.segments,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_row.into_iter().flatten().collect())
}

/// Serializes a bundle as JSON.
pub fn save_bundle(bundle: &ModelBundle) -> Result<String> {
    let mut text = serde_json::to_string(bundle)?;
    text.push('\n');
    Ok(text)
}

/// Parses and checks a serialized bundle.
pub fn load_bundle(text: &str) -> Result<ModelBundle> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT_NAME) {
        return Err(Error::Corrupt("not a model bundle".into()));
    }
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Corrupt("missing format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::Version {
            found: version.try_into().unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    let bundle: ModelBundle = serde_json::from_value(value)?;
    validate_bundle(&bundle)?;
    Ok(bundle)
}

fn validate_bundle(b: &ModelBundle) -> Result<()> {
    b.config.tiers.validate()?;
    b.config.scoring.validate()?;
    if b.seed != b.config.forest.seed {
        return Err(Error::Corrupt("seed differs from forest seed".into()));
    }
    if b.models.len() != b.languages.len() || b.models.iter().zip(&b.languages).any(|(m, l)| &m.language != l) {
        return Err(Error::Corrupt("models do not match languages".into()));
    }
    let all_tiers = b.config.tiers.tier_keys(&b.languages);
    for entry in &b.models {
        let Some(m) = &entry.model else { continue };
        if m.language != entry.language {
            return Err(Error::Corrupt(format!(
                "model for {} filed under {}",
                m.language, entry.language
            )));
        }
        m.vocabulary.validate()?;
        let expected = all_tiers.iter().filter(|t| !t.belongs_to(&m.language));
        if !m.vocabulary.tiers().eq(expected) {
            return Err(Error::Corrupt(format!(
                "vocabulary tiers of {} do not match the tier spec",
                m.language
            )));
        }
        if m.vocabulary.width() != m.forest.n_features {
            return Err(Error::Corrupt(format!(
                "vocabulary width of {} differs from its forest",
                m.language
            )));
        }
        m.forest.validate()?;
    }
    Ok(())
}
