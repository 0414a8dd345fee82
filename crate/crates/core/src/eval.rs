//! Sentence-similarity ranking evaluation.
//!
//! Each item pairs a reference sentence with five candidates and a gold
//! ranking. Sentences are embedded as the mean of their covered word
//! vectors, candidates are ranked by cosine to the reference, and the
//! ranking is scored against gold with Kendall's τ-b.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kendall::kendall_tau;
use crate::matrix::{dot, norm};
use crate::model::EmbeddingModel;
use crate::pipeline::Pipeline;

pub const CANDIDATES: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("item {item}: {message}")]
    InvalidItem { item: usize, message: String },
    #[error("evaluation set has no items")]
    Empty,
    #[error("cannot read evaluation set: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed evaluation set: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub reference: String,
    pub candidates: Vec<String>,
    /// Rank 1 is most similar; ties allowed.
    pub gold_rank: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSet {
    /// Free-text provenance note.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub items: Vec<EvalItem>,
}

impl EvalSet {
    pub fn new(items: Vec<EvalItem>) -> Result<Self, EvalError> {
        let set = EvalSet {
            description: None,
            items,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.items.is_empty() {
            return Err(EvalError::Empty);
        }
        for (i, item) in self.items.iter().enumerate() {
            let bad = |message: String| EvalError::InvalidItem { item: i, message };
            if item.candidates.len() != CANDIDATES {
                return Err(bad(format!("expected {CANDIDATES} candidates, got {}", item.candidates.len())));
            }
            if item.gold_rank.len() != CANDIDATES {
                return Err(bad(format!("expected {CANDIDATES} gold ranks, got {}", item.gold_rank.len())));
            }
            if let Some(r) = item.gold_rank.iter().find(|&&r| !(1..=CANDIDATES as u32).contains(&r)) {
                return Err(bad(format!("gold rank {r} outside 1..={CANDIDATES}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let set: EvalSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("eval set serializes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceEmbedding {
    pub vector: Vec<f32>,
    /// Fraction of tokens with a defined vector.
    pub coverage: f64,
}

pub fn sentence_embedding<S: AsRef<str>>(model: &EmbeddingModel, tokens: &[S]) -> SentenceEmbedding {
    let mut vector = vec![0f32; model.dim()];
    if tokens.is_empty() {
        return SentenceEmbedding { vector, coverage: 0.0 };
    }
    let mut covered = 0usize;
    for t in tokens {
        let wv = model.word_vector(t.as_ref());
        if wv.oov {
            continue;
        }
        covered += 1;
        for (acc, x) in vector.iter_mut().zip(&wv.vector) {
            *acc += x;
        }
    }
    if covered > 0 {
        let scale = 1.0 / covered as f32;
        vector.iter_mut().for_each(|x| *x *= scale);
    }
    SentenceEmbedding {
        vector,
        coverage: covered as f64 / tokens.len() as f64,
    }
}

/// Cosine similarity in f64; 0 if either vector has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let a: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    let (na, nb) = (norm(&a), norm(&b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(&a, &b) / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    /// `ranks[c]` is the rank (1 = most similar) of candidate `c`.
    pub ranks: Vec<u32>,
    pub similarities: Vec<f64>,
    /// Some candidates had exactly equal similarity (broken by index).
    pub tied: bool,
    /// The reference had no covered tokens.
    pub degenerate: bool,
    pub reference_coverage: f64,
    pub candidate_coverage: Vec<f64>,
}

/// Ranks by descending similarity; exact ties go to the lower index.
pub fn ranks_from_similarities(similarities: &[f64]) -> (Vec<u32>, bool) {
    let mut order: Vec<usize> = (0..similarities.len()).collect();
    order.sort_by(|&i, &j| similarities[j].total_cmp(&similarities[i]).then(i.cmp(&j)));
    let mut ranks = vec![0u32; similarities.len()];
    for (r, &c) in order.iter().enumerate() {
        ranks[c] = r as u32 + 1;
    }
    let tied = order.windows(2).any(|w| similarities[w[0]] == similarities[w[1]]);
    (ranks, tied)
}

pub fn rank_candidates(model: &EmbeddingModel, pipeline: &Pipeline, item: &EvalItem) -> Ranking {
    let reference = sentence_embedding(model, &pipeline.sentence_tokens(&item.reference));
    let candidates: Vec<SentenceEmbedding> = item
        .candidates
        .iter()
        .map(|c| sentence_embedding(model, &pipeline.sentence_tokens(c)))
        .collect();
    let similarities: Vec<f64> = candidates
        .iter()
        .map(|c| cosine(&reference.vector, &c.vector))
        .collect();
    let (ranks, tied) = ranks_from_similarities(&similarities);
    Ranking {
        ranks,
        similarities,
        tied,
        degenerate: reference.coverage == 0.0,
        reference_coverage: reference.coverage,
        candidate_coverage: candidates.iter().map(|c| c.coverage).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemDiagnostics {
    pub ranks: Vec<u32>,
    pub reference_coverage: f64,
    pub candidate_coverage: Vec<f64>,
    pub tied_similarities: bool,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub per_item_tau: Vec<f64>,
    pub mean_tau: f64,
    /// Items with a zero-coverage reference or a fully tied gold ranking.
    pub degenerate_items: usize,
    pub items: Vec<ItemDiagnostics>,
}

impl TauResult {
    pub fn from_taus(per_item_tau: Vec<f64>) -> Self {
        let mean_tau = mean(&per_item_tau);
        TauResult {
            per_item_tau,
            mean_tau,
            degenerate_items: 0,
            items: Vec::new(),
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn evaluate(model: &EmbeddingModel, evalset: &EvalSet, pipeline: &Pipeline) -> TauResult {
    let mut taus = Vec::with_capacity(evalset.items.len());
    let mut items = Vec::with_capacity(evalset.items.len());
    let mut degenerate_items = 0;
    for item in &evalset.items {
        let ranking = rank_candidates(model, pipeline, item);
        let tau = kendall_tau(&ranking.ranks, &item.gold_rank).expect("validated item lengths");
        let degenerate = ranking.degenerate || tau.degenerate;
        if degenerate {
            degenerate_items += 1;
        }
        taus.push(tau.tau);
        items.push(ItemDiagnostics {
            ranks: ranking.ranks,
            reference_coverage: ranking.reference_coverage,
            candidate_coverage: ranking.candidate_coverage,
            tied_similarities: ranking.tied,
            degenerate,
        });
    }
    TauResult {
        mean_tau: mean(&taus),
        per_item_tau: taus,
        degenerate_items,
        items,
    }
}
