//! Raw text ingestion and normalization: cleaning, paragraph/sentence
//! segmentation, tokenization and stopword removal.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization as _;

use crate::corpus::{Document, TokenizedCorpus};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnicodeNormalization {
    None,
    #[default]
    CanonicalComposed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub unicode_normalization: UnicodeNormalization,
    pub sentence_delimiters: BTreeSet<char>,
    pub stopword_path: Option<PathBuf>,
    pub min_token_length: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            unicode_normalization: UnicodeNormalization::CanonicalComposed,
            sentence_delimiters: ['.', '!', '?', ':', ';'].into_iter().collect(),
            stopword_path: None,
            min_token_length: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.sentence_delimiters.is_empty() {
            return Err(PipelineError::InvalidConfig(
                "sentence_delimiters must not be empty".into(),
            ));
        }
        if self.min_token_length == 0 {
            return Err(PipelineError::InvalidConfig(
                "min_token_length must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Plain,
    JsonLines,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ingested {
    pub documents: Vec<RawDocument>,
    /// Invalid UTF-8 sequences replaced by U+FFFD.
    pub invalid_sequences: usize,
    /// Json-lines records skipped because they were malformed, lacked
    /// `id`/`text`, or repeated an earlier id.
    pub malformed_records: usize,
}

impl Ingested {
    pub fn warnings(&self) -> usize {
        self.invalid_sequences + self.malformed_records
    }
}

fn decode_lossy(bytes: &[u8]) -> (String, usize) {
    let mut text = String::with_capacity(bytes.len());
    let mut invalid = 0;
    for chunk in bytes.utf8_chunks() {
        text.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            text.push(char::REPLACEMENT_CHARACTER);
            invalid += 1;
        }
    }
    (text, invalid)
}

fn value_to_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_record(line: &str) -> Option<RawDocument> {
    let Value::Object(mut map) = serde_json::from_str::<Value>(line).ok()? else {
        return None;
    };
    let id = match map.remove("id")? {
        Value::String(s) => s,
        Value::Number(n) => n.to_string(),
        _ => return None,
    };
    let text = match map.remove("text")? {
        Value::String(s) => s,
        _ => return None,
    };
    let meta = map
        .iter()
        .map(|(k, v)| (k.clone(), value_to_string(v)))
        .collect();
    Some(RawDocument { id, text, meta })
}

/// Reads plain files (one document each) or json-lines files (one document
/// per record). An unreadable path aborts the whole ingestion.
pub fn ingest(paths: &[PathBuf], format: InputFormat) -> Result<Ingested, PipelineError> {
    let mut out = Ingested::default();
    let mut seen: HashSet<String> = HashSet::new();
    for path in paths {
        let bytes = fs::read(path).map_err(|source| PipelineError::Unreadable {
            path: path.clone(),
            source,
        })?;
        let (text, invalid) = decode_lossy(&bytes);
        out.invalid_sequences += invalid;
        match format {
            InputFormat::Plain => {
                let mut id = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                if seen.contains(&id) {
                    id = path.display().to_string();
                }
                seen.insert(id.clone());
                out.documents.push(RawDocument {
                    id,
                    text,
                    meta: BTreeMap::new(),
                });
            }
            InputFormat::JsonLines => {
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    match parse_record(line) {
                        Some(doc) if seen.insert(doc.id.clone()) => out.documents.push(doc),
                        _ => out.malformed_records += 1,
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Normalizes whitespace and control characters. Newlines survive as
/// paragraph separators; every other whitespace run becomes one space.
pub fn clean(text: &str, config: &PipelineConfig) -> String {
    let normalized: String = match config.unicode_normalization {
        UnicodeNormalization::None => text.to_owned(),
        UnicodeNormalization::CanonicalComposed => text.nfc().collect(),
    };
    let mut out = String::with_capacity(normalized.len());
    let mut pending_space = false;
    for c in normalized.chars() {
        if c == '\n' {
            pending_space = false;
            out.push('\n');
        } else if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() {
            continue;
        } else {
            if pending_space && !out.is_empty() && !out.ends_with('\n') {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    if config.lowercase {
        out.to_lowercase()
    } else {
        out
    }
}

pub fn segment(text: &str, config: &PipelineConfig) -> Vec<String> {
    text.split('\n')
        .flat_map(|paragraph| paragraph.split(|c| config.sentence_delimiters.contains(&c)))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn is_punctuation(c: char) -> bool {
    !(c.is_alphanumeric() || c.is_whitespace() || is_combining_mark(c))
}

pub fn tokenize(sentence: &str, config: &PipelineConfig) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|piece| piece.trim_matches(is_punctuation))
        .filter(|t| !t.is_empty() && t.chars().count() >= config.min_token_length)
        .map(|t| {
            if config.lowercase {
                t.to_lowercase()
            } else {
                t.to_owned()
            }
        })
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stopwords: &HashSet<String>) -> Vec<String> {
    if stopwords.is_empty() {
        return tokens;
    }
    tokens.into_iter().filter(|t| !stopwords.contains(t)).collect()
}

/// A validated config together with its loaded stopword set.
#[derive(Clone, Debug, Default)]
pub struct Pipeline {
    config: PipelineConfig,
    stopwords: HashSet<String>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let stopwords = match &config.stopword_path {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| PipelineError::Unreadable {
                    path: path.clone(),
                    source,
                })?;
                Self::normalize_stopwords(&text, &config)
            }
            None => HashSet::new(),
        };
        Ok(Pipeline { config, stopwords })
    }

    pub fn with_stopwords(config: PipelineConfig, words: &str) -> Result<Self, PipelineError> {
        config.validate()?;
        let stopwords = Self::normalize_stopwords(words, &config);
        Ok(Pipeline { config, stopwords })
    }

    // Stopwords go through the same clean + tokenize path as corpus text.
    fn normalize_stopwords(text: &str, config: &PipelineConfig) -> HashSet<String> {
        text.lines()
            .flat_map(|line| tokenize(&clean(line, config), config))
            .collect()
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    /// Tokens of a single sentence: clean, tokenize, drop stopwords.
    pub fn sentence_tokens(&self, sentence: &str) -> Vec<String> {
        let cleaned = clean(sentence, &self.config);
        remove_stopwords(tokenize(&cleaned, &self.config), &self.stopwords)
    }

    pub fn process_document(&self, text: &str) -> Document {
        let cleaned = clean(text, &self.config);
        segment(&cleaned, &self.config)
            .iter()
            .map(|s| remove_stopwords(tokenize(s, &self.config), &self.stopwords))
            .filter(|tokens| !tokens.is_empty())
            .collect()
    }

    /// Processes documents in parallel; documents with no surviving tokens
    /// are dropped. Output order follows input order.
    pub fn process(&self, documents: &[RawDocument]) -> TokenizedCorpus {
        let docs: Vec<Document> = documents
            .par_iter()
            .map(|doc| self.process_document(&doc.text))
            .collect::<Vec<_>>()
            .into_iter()
            .filter(|doc| !doc.is_empty())
            .collect();
        TokenizedCorpus::new(docs).expect("pipeline output has no empty parts")
    }
}

pub fn load_pipeline_config(path: &Path) -> anyhow::Result<PipelineConfig> {
    let text = fs::read_to_string(path)?;
    let config: PipelineConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use proptest::prelude::*;

    use super::*;

    fn cfg() -> PipelineConfig {
        PipelineConfig::default()
    }

    fn raw_cfg() -> PipelineConfig {
        PipelineConfig {
            lowercase: false,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn clean_collapses_whitespace() {
        assert_eq!(clean("In  ātl\t\tīhuān", &raw_cfg()), "In ātl īhuān");
        assert_eq!(clean("", &cfg()), "");
    }

    #[test]
    fn clean_drops_control_characters() {
        let text = "a\u{0}b\u{7}c\u{1b}d\u{7f}e\u{8}f";
        let cleaned = clean(text, &raw_cfg());
        assert_eq!(cleaned, "abcdef");
        assert_eq!(text.chars().count() - cleaned.chars().count(), 5);
    }

    #[test]
    fn clean_preserves_newlines_and_lowercases() {
        assert_eq!(clean("Ne  Kali\n  Tlen ", &cfg()), "ne kali\ntlen");
    }

    #[test]
    fn clean_composes_combining_marks() {
        let decomposed = "a\u{304}tl";
        assert_eq!(clean(decomposed, &cfg()), "ātl");
        let none = PipelineConfig {
            unicode_normalization: UnicodeNormalization::None,
            ..cfg()
        };
        assert_eq!(clean(decomposed, &none), decomposed);
    }

    #[test]
    fn segment_examples() {
        assert_eq!(segment("A. B? C", &cfg()), vec!["A", "B", "C"]);
        assert!(segment("...", &cfg()).is_empty());
    }

    #[test]
    fn segment_three_paragraphs() {
        let text = "Se. Ome! Eyi?\nNawi: Makuil;\nChikuase. Chikome.";
        assert_eq!(segment(text, &cfg()).len(), 7);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Nikneki se,", &cfg()), vec!["nikneki", "se"]);
        assert_eq!(tokenize("¡Tlazohkamati!", &cfg()), vec!["tlazohkamati"]);
    }

    #[test]
    fn tokenize_counted_fixture() {
        let sentence = "In tlakatl , kikua tlaxkalli — wan kitta in siwatl iwan ikone";
        assert_eq!(sentence.split_whitespace().count(), 12);
        assert_eq!(tokenize(sentence, &cfg()).len(), 10);
    }

    #[test]
    fn tokenize_min_length() {
        let c = PipelineConfig {
            min_token_length: 3,
            ..cfg()
        };
        assert_eq!(tokenize("in tlakatl se", &c), vec!["tlakatl"]);
    }

    #[test]
    fn stopword_examples() {
        let stop: HashSet<String> = ["in".to_string()].into();
        assert_eq!(
            remove_stopwords(vec!["in".into(), "kali".into()], &stop),
            vec!["kali"]
        );
        let tokens: Vec<String> = vec!["a".into(), "b".into()];
        assert_eq!(remove_stopwords(tokens.clone(), &HashSet::new()), tokens);
    }

    #[test]
    fn stopword_counted_fixture() {
        // 17 of 100 tokens are stopwords.
        let stop: HashSet<String> = ["in", "wan"].iter().map(|s| s.to_string()).collect();
        let mut tokens = Vec::new();
        for i in 0..100 {
            let t = match i % 6 {
                0 if i < 60 => "in".to_string(),
                3 if i < 42 => "wan".to_string(),
                _ => format!("w{i}"),
            };
            tokens.push(t);
        }
        let stop_count = tokens.iter().filter(|t| stop.contains(*t)).count();
        assert_eq!(stop_count, 17);
        assert_eq!(remove_stopwords(tokens, &stop).len(), 83);
    }

    #[test]
    fn empty_delimiters_rejected() {
        let c = PipelineConfig {
            sentence_delimiters: BTreeSet::new(),
            ..cfg()
        };
        assert!(Pipeline::new(c).is_err());
    }

    #[test]
    fn ingest_plain_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        fs::write(&path, "Niyaz.").unwrap();
        let out = ingest(&[path], InputFormat::Plain).unwrap();
        assert_eq!(
            out.documents,
            vec![RawDocument {
                id: "a.txt".into(),
                text: "Niyaz.".into(),
                meta: BTreeMap::new()
            }]
        );
        assert_eq!(out.warnings(), 0);
    }

    #[test]
    fn ingest_nothing() {
        let out = ingest(&[], InputFormat::Plain).unwrap();
        assert!(out.documents.is_empty());
    }

    #[test]
    fn ingest_json_lines_skips_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"id":"d1","text":"Se.","topic":"kali"}}"#).unwrap();
        writeln!(f, r#"{{"id":"d2","text":"Ome."}}"#).unwrap();
        writeln!(f, r#"{{"id":"d3", "text": "#).unwrap();
        writeln!(f, r#"{{"id":"d4","text":"Eyi.","variety":"nhe"}}"#).unwrap();
        drop(f);
        let out = ingest(&[path], InputFormat::JsonLines).unwrap();
        assert_eq!(out.documents.len(), 3);
        assert_eq!(out.malformed_records, 1);
        assert_eq!(out.documents[0].meta["topic"], "kali");
    }

    #[test]
    fn ingest_replaces_invalid_utf8() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, b"ka\xffli \xc3tl").unwrap();
        let out = ingest(&[path], InputFormat::Plain).unwrap();
        assert_eq!(out.invalid_sequences, 2);
        assert_eq!(out.documents[0].text, "ka\u{fffd}li \u{fffd}tl");
    }

    #[test]
    fn ingest_unreadable_path_names_it() {
        let missing = PathBuf::from("/nonexistent/x.txt");
        let err = ingest(&[missing], InputFormat::Plain).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.txt"));
    }

    #[test]
    fn pipeline_end_to_end() {
        let p = Pipeline::with_stopwords(cfg(), "in\n").unwrap();
        let doc = p.process_document("In kali kualli.\n\nIn!  Niyaz  tlamo");
        assert_eq!(doc, vec![vec!["kali", "kualli"], vec!["niyaz", "tlamo"]]);
    }

    proptest! {
        #[test]
        fn text_stages_are_total(text in "\\PC*") {
            let c = cfg();
            let cleaned = clean(&text, &c);
            for s in segment(&cleaned, &c) {
                prop_assert!(!s.is_empty());
                for t in tokenize(&s, &c) {
                    prop_assert!(!t.is_empty());
                }
            }
        }

        #[test]
        fn pipeline_is_deterministic(text in "[a-zA-Zā .!?\n\t]{0,80}") {
            let p = Pipeline::new(cfg()).unwrap();
            let docs = vec![RawDocument { id: "x".into(), text, meta: BTreeMap::new() }];
            prop_assert_eq!(p.process(&docs).to_text(), p.process(&docs).to_text());
        }
    }
}
