//! Sentence similarity for short messages, built for user-defined labels
//! with only a handful of tagged examples per label.
//!
//! A message is reduced to its keywords (nouns, proper nouns and verbs) by
//! [`tagger`]. Each label keeps a weighted bag of word clusters ([`wboc`])
//! and the keyword sequences it was tagged with, which the contextual
//! sequence matcher ([`csm`]) compares word by word using embeddings from
//! [`embeddings`]. [`pipeline`] mixes both scores into a confidence and picks
//! a label or rejects the message. [`eval`] holds the evaluation protocol and
//! [`corpus`] the data plumbing plus annotator agreement.
//!
//! ```
//! use std::sync::Arc;
//! use smsim_core::embeddings::demo_embedding_table;
//! use smsim_core::pipeline::{ModelStore, PipelineConfig};
//! use smsim_core::tagger::Tagger;
//!
//! let table = Arc::new(demo_embedding_table(50, 42).unwrap());
//! let tagger = Tagger::default();
//! let mut store = ModelStore::new(PipelineConfig::default(), table).unwrap();
//! store.assign_text("Login OTP", "Your OTP is 4321", &tagger).unwrap();
//! let result = store.predict_text("Your OTP is 9921", &tagger).unwrap();
//! assert_eq!(result.chosen.as_deref(), Some("Login OTP"));
//! ```

pub mod corpus;
pub mod csm;
pub mod embeddings;
pub mod eval;
pub mod pipeline;
pub mod tagger;
pub mod wboc;

use serde::{Deserialize, Serialize};

pub use corpus::{LabeledCorpus, SmsMessage};
pub use embeddings::{EmbeddingTable, WordVector};
pub use pipeline::{ModelStore, PipelineConfig, PredictionResult};
pub use tagger::{KeywordSequence, Tag, Tagger, Token};
pub use wboc::{Cluster, LabelModel};

/// A similarity value in `[0, 1]`. `degenerate` marks inputs for which the
/// measure is undefined (for example two empty sequences); the value is then 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    pub fn degenerate() -> Self {
        Self {
            value: 0.0,
            degenerate: true,
        }
    }
}
