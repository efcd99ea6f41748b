//! Cognate reflex prediction from multitiered alignments.
//!
//! The crate turns a cognate-coded wordlist into a table of alignment
//! sites, widens each site with derived tiers (sound classes, positions,
//! neighbouring segments) and trains one random forest per language to
//! predict that language's segment from everyone else's tiers.
//!
//! ```
//! use multitier::prelude::*;
//!
//! let wordlist = parse_wordlist(
//!     "COGID\tGerman\tEnglish\tDutch\n\
//!      ASH\ta ʃ ɛ\tæ ʃ\tɑ s\n\
//!      BITE\tb ai s ə n\tb ai t\tb ɛi t ə\n\
//!      BELLY\tb au x\t?\tb œi k\n",
//! )?;
//! let config = TrainingConfig::default();
//! let bundle = train_all(&wordlist, &config)?;
//! let belly = &wordlist.rows()[2];
//! let english = predict_reflex(&bundle, belly, "English")?;
//! assert_eq!(english.distributions.len(), 3);
//! # Ok::<(), multitier::Error>(())
//! ```
//!
//! The `book/` directory next to the workspace root walks through each
//! stage; its code listings are compiled and run as doc-tests of this
//! crate.

pub mod alignment;
pub mod classifier;
mod error;
pub mod evaluation;
pub mod multitier;
pub mod phonology;
pub mod pipeline;
pub mod rng;
pub mod wordlist;

pub use error::{Error, Result};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::alignment::{align_wordlist, msa, pairwise_align, write_alignments, AlignmentMatrix, ScoringScheme};
    pub use crate::classifier::{
        encode, gini, knn_reference, train_forest, ClassDistribution, ForestParams, KnnReference,
    };
    pub use crate::evaluation::{bcubed_f, edit_distance, evaluate, write_report};
    pub use crate::multitier::{extend, transpose, write_frame, TierFrame, TierKey, TierSpec};
    pub use crate::phonology::{segments, Segment, SoundClassModel};
    pub use crate::pipeline::{
        load_bundle, predict_reflex, predict_reflex_with, predict_wordlist, save_bundle, train_all, ModelBundle,
        TrainingConfig,
    };
    pub use crate::wordlist::{parse_forms, parse_wordlist, partition, write_forms, write_wordlist, Form, Wordlist};
}

// Book chapters, compiled as doc-tests so the listings stay in sync.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/wordlists.md")]
    pub mod wordlists {}
    #[doc = include_str!("../../../book/src/sound-classes.md")]
    pub mod sound_classes {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    pub mod alignment {}
    #[doc = include_str!("../../../book/src/tiers.md")]
    pub mod tiers {}
    #[doc = include_str!("../../../book/src/classifiers.md")]
    pub mod classifiers {}
    #[doc = include_str!("../../../book/src/prediction.md")]
    pub mod prediction {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
