//! Trained (or loaded) embedding models and word-vector lookup.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::glove::GloveConfig;
use crate::matrix::{axpy, Matrix};
use crate::sgns::SgnsConfig;
use crate::subword::SubwordIndexer;
use crate::vocab::Vocabulary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Word2Vec,
    FastText,
    Glove,
    /// Vectors read from a text file; no training metadata.
    Vectors,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Word2Vec => "word2vec",
            Algorithm::FastText => "fasttext",
            Algorithm::Glove => "glove",
            Algorithm::Vectors => "vectors",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cbow,
    Skipgram,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbow => "cbow",
            Mode::Skipgram => "skipgram",
        })
    }
}

/// The five trainable model families of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelTag {
    W2Vcb,
    W2Vsg,
    FTcb,
    FTsg,
    Glove,
}

impl ModelTag {
    pub const ALL: [ModelTag; 5] = [
        ModelTag::W2Vcb,
        ModelTag::W2Vsg,
        ModelTag::FTcb,
        ModelTag::FTsg,
        ModelTag::Glove,
    ];

    pub fn algorithm(self) -> Algorithm {
        match self {
            ModelTag::W2Vcb | ModelTag::W2Vsg => Algorithm::Word2Vec,
            ModelTag::FTcb | ModelTag::FTsg => Algorithm::FastText,
            ModelTag::Glove => Algorithm::Glove,
        }
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            ModelTag::W2Vcb | ModelTag::FTcb => Some(Mode::Cbow),
            ModelTag::W2Vsg | ModelTag::FTsg => Some(Mode::Skipgram),
            ModelTag::Glove => None,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelTag::W2Vcb => "Word2Vec Cbow",
            ModelTag::W2Vsg => "Word2Vec Skipgram",
            ModelTag::FTcb => "FastText Cbow",
            ModelTag::FTsg => "FastText Skipgram",
            ModelTag::Glove => "Glove",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::W2Vcb => "W2Vcb",
            ModelTag::W2Vsg => "W2Vsg",
            ModelTag::FTcb => "FTcb",
            ModelTag::FTsg => "FTsg",
            ModelTag::Glove => "Glove",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model tag {s:?} (expected W2Vcb, W2Vsg, FTcb, FTsg or Glove)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Sgns(SgnsConfig),
    Glove(GloveConfig),
    None,
}

/// A word vector lookup result. OOV words under a whole-word model yield a
/// zero vector with `oov` set.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVector {
    pub vector: Vec<f32>,
    pub oov: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub algorithm: Algorithm,
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    /// Word rows `[0, V)`, followed by n-gram bucket rows for FastText.
    /// For GloVe each row is the final `w + w~` vector.
    pub input: Matrix<f32>,
    /// Output (context) vectors; empty for loaded vector files.
    pub output: Matrix<f32>,
    pub subwords: Option<SubwordIndexer>,
}

impl EmbeddingModel {
    pub fn from_vectors(tokens: Vec<String>, vectors: Matrix<f32>) -> Self {
        let dim = vectors.cols();
        EmbeddingModel {
            algorithm: Algorithm::Vectors,
            config: ModelConfig::None,
            vocab: Vocabulary::from_tokens(tokens),
            input: vectors,
            output: Matrix::zeros(0, dim),
            subwords: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn word_vector(&self, word: &str) -> WordVector {
        let id = self.vocab.id_of(word);
        match (&self.subwords, id) {
            (Some(indexer), _) => {
                let rows = indexer.indices(word, id);
                if rows.is_empty() {
                    return WordVector {
                        vector: vec![0.0; self.dim()],
                        oov: true,
                    };
                }
                let mut v = vec![0.0; self.dim()];
                compose_mean(&self.input, &rows, &mut v);
                WordVector { vector: v, oov: false }
            }
            (None, Some(id)) => WordVector {
                vector: self.input.row(id as usize).to_vec(),
                oov: false,
            },
            (None, None) => WordVector {
                vector: vec![0.0; self.dim()],
                oov: true,
            },
        }
    }

    /// The vector saved to text files for vocabulary word `id`.
    pub fn vocab_vector(&self, id: u32) -> Vec<f32> {
        match self.subwords {
            Some(_) => self.word_vector(self.vocab.token_of(id)).vector,
            None => self.input.row(id as usize).to_vec(),
        }
    }

    /// Key=value metadata recording algorithm, mode and the full config.
    pub fn metadata(&self, extra: &[(&str, String)]) -> String {
        let mut out = String::new();
        out.push_str(&format!("algorithm={}\n", self.algorithm));
        let config = match &self.config {
            ModelConfig::Sgns(c) => serde_json::to_value(c).ok(),
            ModelConfig::Glove(c) => serde_json::to_value(c).ok(),
            ModelConfig::None => None,
        };
        if let Some(Value::Object(map)) = config {
            for (k, v) in map {
                let v = match v {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        out.push_str(&format!("vocab_size={}\n", self.vocab.len()));
        out.push_str(&format!("dim={}\n", self.dim()));
        for (k, v) in extra {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn write_metadata(&self, vec_path: &Path, extra: &[(&str, String)]) -> io::Result<PathBuf> {
        let path = metadata_path(vec_path);
        fs::write(&path, self.metadata(extra))?;
        Ok(path)
    }
}

pub fn metadata_path(vec_path: &Path) -> PathBuf {
    let mut name = vec_path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// `out = mean of matrix rows`; `out` must be zeroed by the caller.
#[inline]
pub(crate) fn compose_mean(matrix: &Matrix<f32>, rows: &[usize], out: &mut [f32]) {
    for &r in rows {
        axpy(1.0, matrix.row(r), out);
    }
    let scale = 1.0 / rows.len() as f32;
    out.iter_mut().for_each(|x| *x *= scale);
}
