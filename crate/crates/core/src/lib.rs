//! Corpus duplication experiments for low-resource word embeddings.
//!
//! Builds tokenized corpora, duplicates them, trains word2vec, fastText
//! and GloVe embeddings, scores them on a sentence-ranking task with
//! Kendall's τ, and sweeps duplication factors to find a peak.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod glove;
pub mod kendall;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod sgns;
pub mod subword;
pub mod sweep;
pub mod synthetic;
pub mod train;
pub mod vecfile;
pub mod vocab;

pub use corpus::{CorpusView, TokenizedCorpus};
pub use eval::{evaluate, EvalItem, EvalSet, TauResult};
pub use glove::{fit_glove, train_glove, GloveConfig};
pub use model::{Algorithm, EmbeddingModel, Mode, ModelTag};
pub use pipeline::{Pipeline, PipelineConfig};
pub use report::emit_report;
pub use sgns::{fit_sgns, train_sgns, SgnsConfig};
pub use sweep::{run_sweep, summarize, RunRecord, SweepConfig, SweepSummary};
pub use vocab::{UnigramTable, Vocabulary};
