//! Tokenized corpora, exact duplication and the on-disk corpus format.
//!
//! A corpus is an ordered list of documents, each an ordered list of
//! sentences, each an ordered list of tokens. Duplication concatenates
//! identical copies of the document list; [`CorpusView`] offers the same
//! repetition without materializing it.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Sentence = Vec<String>;
pub type Document = Vec<Sentence>;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplication factor must be at least 1, got {0}")]
    InvalidRho(usize),
    #[error("document {document}: sentence {sentence} is empty")]
    EmptySentence { document: usize, sentence: usize },
    #[error("document {document}: sentence {sentence} contains an empty token")]
    EmptyToken { document: usize, sentence: usize },
    #[error("document {0} has no sentences")]
    EmptyDocument(usize),
    #[error("token {0:?} contains whitespace")]
    WhitespaceInToken(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedCorpus {
    documents: Vec<Document>,
    duplication_factor: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub distinct_types: usize,
}

impl TokenizedCorpus {
    /// Builds a corpus with duplication factor 1, validating that no
    /// document, sentence or token is empty.
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        for (d, doc) in documents.iter().enumerate() {
            if doc.is_empty() {
                return Err(CorpusError::EmptyDocument(d));
            }
            for (s, sentence) in doc.iter().enumerate() {
                if sentence.is_empty() {
                    return Err(CorpusError::EmptySentence {
                        document: d,
                        sentence: s,
                    });
                }
                for token in sentence {
                    if token.is_empty() {
                        return Err(CorpusError::EmptyToken {
                            document: d,
                            sentence: s,
                        });
                    }
                    if token.chars().any(char::is_whitespace) {
                        return Err(CorpusError::WhitespaceInToken(token.clone()));
                    }
                }
            }
        }
        Ok(TokenizedCorpus {
            documents,
            duplication_factor: 1,
        })
    }

    pub fn empty() -> Self {
        TokenizedCorpus {
            documents: Vec::new(),
            duplication_factor: 1,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn duplication_factor(&self) -> usize {
        self.duplication_factor
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.documents
            .iter()
            .flat_map(|doc| doc.iter().map(Vec::as_slice))
    }

    pub fn num_sentences(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn token_count(&self) -> usize {
        self.sentences().map(<[String]>::len).sum()
    }

    /// Concatenates `rho` identical copies of the documents, in order.
    ///
    /// The duplication factor of the result is the product of the input's
    /// factor and `rho`, so a base corpus duplicated by `rho` reports `rho`.
    pub fn duplicate(&self, rho: usize) -> Result<TokenizedCorpus, CorpusError> {
        if rho == 0 {
            return Err(CorpusError::InvalidRho(rho));
        }
        let mut documents = Vec::with_capacity(self.documents.len() * rho);
        for _ in 0..rho {
            documents.extend(self.documents.iter().cloned());
        }
        Ok(TokenizedCorpus {
            documents,
            duplication_factor: self.duplication_factor * rho,
        })
    }

    /// Duplicates, then shuffles document order with a seeded rng.
    pub fn duplicate_shuffled(&self, rho: usize, seed: u64) -> Result<TokenizedCorpus, CorpusError> {
        let mut out = self.duplicate(rho)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.documents.shuffle(&mut rng);
        Ok(out)
    }

    pub fn view(&self) -> CorpusView<'_> {
        CorpusView {
            corpus: self,
            repeat: 1,
        }
    }

    /// Streams `rho` repetitions of this corpus without copying it.
    pub fn repeated(&self, rho: usize) -> Result<CorpusView<'_>, CorpusError> {
        if rho == 0 {
            return Err(CorpusError::InvalidRho(rho));
        }
        Ok(CorpusView {
            corpus: self,
            repeat: rho,
        })
    }

    pub fn stats(&self) -> CorpusStats {
        corpus_stats(self.view())
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> io::Result<()> {
        writeln!(
            writer,
            "#tokens={} #sentences={} #rho={}",
            self.token_count(),
            self.num_sentences(),
            self.duplication_factor
        )?;
        let mut line = String::new();
        for (d, doc) in self.documents.iter().enumerate() {
            if d > 0 {
                writeln!(writer)?;
            }
            for sentence in doc {
                line.clear();
                for (i, token) in sentence.iter().enumerate() {
                    if i > 0 {
                        line.push(' ');
                    }
                    line.push_str(token);
                }
                writeln!(writer, "{line}")?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut writer = BufWriter::new(file);
        self.write_to(&mut writer).map_err(io_err)?;
        writer.flush().map_err(io_err)
    }

    /// Reads the format produced by [`TokenizedCorpus::write_to`]: a header
    /// line, then one sentence per line with blank lines between documents.
    /// A zero-byte input is the empty corpus.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|source| CorpusError::Io {
                path: "<input>".into(),
                source,
            })?,
            None => return Ok(TokenizedCorpus::empty()),
        };
        let header = CorpusHeader::parse(&header).ok_or_else(|| CorpusError::Parse {
            line: 1,
            message: format!("malformed header {header:?}"),
        })?;

        let mut documents = Vec::new();
        let mut current: Document = Vec::new();
        for (_, line) in lines {
            let line = line.map_err(|source| CorpusError::Io {
                path: "<input>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                if !current.is_empty() {
                    documents.push(std::mem::take(&mut current));
                }
                continue;
            }
            current.push(line.split_whitespace().map(str::to_owned).collect());
        }
        if !current.is_empty() {
            documents.push(current);
        }

        let mut corpus = TokenizedCorpus::new(documents)?;
        if corpus.token_count() != header.tokens || corpus.num_sentences() != header.sentences {
            return Err(CorpusError::Parse {
                line: 1,
                message: format!(
                    "header declares {} tokens / {} sentences, body has {} / {}",
                    header.tokens,
                    header.sentences,
                    corpus.token_count(),
                    corpus.num_sentences()
                ),
            });
        }
        if header.rho == 0 {
            return Err(CorpusError::Parse {
                line: 1,
                message: "#rho must be at least 1".into(),
            });
        }
        corpus.duplication_factor = header.rho;
        Ok(corpus)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_from(BufReader::new(file))
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tokens are valid UTF-8")
    }
}

struct CorpusHeader {
    tokens: usize,
    sentences: usize,
    rho: usize,
}

impl CorpusHeader {
    fn parse(line: &str) -> Option<Self> {
        let mut tokens = None;
        let mut sentences = None;
        let mut rho = None;
        for field in line.split_whitespace() {
            let (key, value) = field.strip_prefix('#')?.split_once('=')?;
            let value: usize = value.parse().ok()?;
            match key {
                "tokens" => tokens = Some(value),
                "sentences" => sentences = Some(value),
                "rho" => rho = Some(value),
                _ => return None,
            }
        }
        Some(CorpusHeader {
            tokens: tokens?,
            sentences: sentences?,
            rho: rho?,
        })
    }
}

/// A read-only view of a corpus repeated `repeat` times.
///
/// Traversal order is identical to that of the materialized
/// `corpus.duplicate(repeat)`.
#[derive(Clone, Copy, Debug)]
pub struct CorpusView<'a> {
    corpus: &'a TokenizedCorpus,
    repeat: usize,
}

impl<'a> CorpusView<'a> {
    pub fn base(&self) -> &'a TokenizedCorpus {
        self.corpus
    }

    pub fn repeat(&self) -> usize {
        self.repeat
    }

    pub fn duplication_factor(&self) -> usize {
        self.corpus.duplication_factor * self.repeat
    }

    pub fn sentences(&self) -> impl Iterator<Item = &'a [String]> + 'a {
        let corpus = self.corpus;
        (0..self.repeat).flat_map(move |_| corpus.sentences())
    }

    pub fn num_sentences(&self) -> usize {
        self.corpus.num_sentences() * self.repeat
    }

    pub fn token_count(&self) -> usize {
        self.corpus.token_count() * self.repeat
    }

    pub fn num_documents(&self) -> usize {
        self.corpus.documents.len() * self.repeat
    }
}

impl<'a> From<&'a TokenizedCorpus> for CorpusView<'a> {
    fn from(corpus: &'a TokenizedCorpus) -> Self {
        corpus.view()
    }
}

/// Exact counts by full traversal.
pub fn corpus_stats(view: CorpusView<'_>) -> CorpusStats {
    let mut types: HashSet<&str> = HashSet::new();
    let mut sentences = 0;
    let mut tokens = 0;
    for sentence in view.sentences() {
        sentences += 1;
        tokens += sentence.len();
        types.extend(sentence.iter().map(String::as_str));
    }
    CorpusStats {
        documents: view.num_documents(),
        sentences,
        tokens,
        distinct_types: types.len(),
    }
}

impl CorpusStats {
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "documents={}", self.documents);
        let _ = writeln!(out, "sentences={}", self.sentences);
        let _ = writeln!(out, "tokens={}", self.tokens);
        let _ = writeln!(out, "distinct_types={}", self.distinct_types);
        out
    }
}
