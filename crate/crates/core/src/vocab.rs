//! Vocabulary construction, frequent-word subsampling and the unigram
//! table used to draw negative samples.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::CorpusView;

pub const DEFAULT_MIN_COUNT: usize = 5;
pub const DEFAULT_SUBSAMPLE: f64 = 1e-3;
pub const DEFAULT_TABLE_POWER: f64 = 0.75;
pub const DEFAULT_TABLE_SIZE: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("corpus too small for min_count={0}")]
    Empty(usize),
    #[error("unigram table size {size} is smaller than vocabulary size {vocab}")]
    TableTooSmall { size: usize, vocab: usize },
    #[error("unigram table power must be positive, got {0}")]
    InvalidPower(f64),
    #[error("unigram table holds only the excluded id {0}")]
    OnlyExcluded(u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: usize,
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, counts: Vec<u64>, total_tokens: u64, min_count: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            counts,
            index,
            total_tokens,
            min_count,
        }
    }

    /// Counts tokens, drops those rarer than `min_count` and assigns ids by
    /// descending frequency, breaking ties lexicographically.
    pub fn build(corpus: CorpusView<'_>, min_count: usize) -> Result<Self, VocabError> {
        if min_count == 0 {
            return Err(VocabError::InvalidMinCount);
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sentence in corpus.base().sentences() {
            for token in sentence {
                *counts.entry(token.as_str()).or_default() += 1;
            }
        }
        let repeat = corpus.repeat() as u64;
        let total_tokens = corpus.base().token_count() as u64 * repeat;
        let mut retained: Vec<(&str, u64)> = counts
            .into_iter()
            .map(|(t, c)| (t, c * repeat))
            .filter(|&(_, c)| c >= min_count as u64)
            .collect();
        if retained.is_empty() {
            return Err(VocabError::Empty(min_count));
        }
        retained.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let (tokens, counts) = retained.into_iter().map(|(t, c)| (t.to_owned(), c)).unzip();
        Ok(Self::from_parts(tokens, counts, total_tokens, min_count))
    }

    /// A vocabulary for vectors read from a file: no frequency information.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let n = tokens.len();
        Self::from_parts(tokens, vec![0; n], 0, 0)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token_of(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Sum of counts of retained tokens (excludes min-count drops).
    pub fn retained_tokens(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "#total={} #min_count={}", self.total_tokens, self.min_count)?;
        for (t, c) in self.tokens.iter().zip(&self.counts) {
            writeln!(w, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, VocabError> {
        let parse_err = |line: usize, message: String| VocabError::Parse { line, message };
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?
            .map_err(|e| parse_err(1, e.to_string()))?;
        let mut total = None;
        let mut min_count = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("#total", v)) => total = v.parse::<u64>().ok(),
                Some(("#min_count", v)) => min_count = v.parse::<usize>().ok(),
                _ => return Err(parse_err(1, format!("unexpected header field {field:?}"))),
            }
        }
        let (total, min_count) = total
            .zip(min_count)
            .ok_or_else(|| parse_err(1, "header needs #total and #min_count".into()))?;
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            let (t, c) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(lineno, "expected token<TAB>count".into()))?;
            let c = c
                .parse::<u64>()
                .map_err(|e| parse_err(lineno, format!("bad count: {e}")))?;
            tokens.push(t.to_owned());
            counts.push(c);
        }
        Ok(Self::from_parts(tokens, counts, total, min_count))
    }
}

/// Probability of discarding an occurrence of a word with relative
/// frequency `word_count / total`: `max(0, 1 - sqrt(t / f))`.
pub fn discard_prob(word_count: u64, total: u64, threshold: f64) -> f64 {
    let f = word_count as f64 / total as f64;
    (1.0 - (threshold / f).sqrt()).max(0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnigramTable {
    entries: Vec<u32>,
    power: f64,
    distinct: usize,
}

impl UnigramTable {
    /// Fills `size` slots so that word `i` occupies the slots whose
    /// midpoints fall in its interval of the cumulative
    /// `count^power` distribution.
    pub fn build(vocab: &Vocabulary, power: f64, size: usize) -> Result<Self, VocabError> {
        if vocab.is_empty() {
            return Err(VocabError::Empty(vocab.min_count()));
        }
        if !(power > 0.0) {
            return Err(VocabError::InvalidPower(power));
        }
        if size < vocab.len() {
            return Err(VocabError::TableTooSmall {
                size,
                vocab: vocab.len(),
            });
        }
        let weights: Vec<f64> = vocab.counts().iter().map(|&c| (c as f64).powf(power)).collect();
        let norm: f64 = weights.iter().sum();
        let mut entries = Vec::with_capacity(size);
        let mut word = 0usize;
        let mut upper = weights[0] / norm;
        let last = vocab.len() - 1;
        for slot in 0..size {
            let mid = (slot as f64 + 0.5) / size as f64;
            while mid >= upper && word < last {
                word += 1;
                upper += weights[word] / norm;
            }
            entries.push(word as u32);
        }
        let mut distinct = 1;
        for w in entries.windows(2) {
            if w[0] != w[1] {
                distinct += 1;
            }
        }
        Ok(UnigramTable {
            entries,
            power,
            distinct,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Number of distinct ids present in the table.
    pub fn distinct_ids(&self) -> usize {
        self.distinct
    }

    /// Draws a uniform slot, re-drawing while it equals `exclude`.
    pub fn sample<R: Rng>(&self, rng: &mut R, exclude: Option<u32>) -> Result<u32, VocabError> {
        if let Some(ex) = exclude {
            if self.distinct == 1 && self.entries[0] == ex {
                return Err(VocabError::OnlyExcluded(ex));
            }
        }
        loop {
            let id = self.entries[rng.gen_range(0..self.entries.len())];
            if Some(id) != exclude {
                return Ok(id);
            }
        }
    }
}

pub fn sample_negative<R: Rng>(
    table: &UnigramTable,
    rng: &mut R,
    exclude: Option<u32>,
) -> Result<u32, VocabError> {
    table.sample(rng, exclude)
}

/// The seeded rng stream owned by worker `stream`.
pub fn worker_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::TokenizedCorpus;

    fn corpus_from(tokens: &[&str]) -> TokenizedCorpus {
        TokenizedCorpus::new(vec![vec![tokens.iter().map(|s| s.to_string()).collect()]]).unwrap()
    }

    fn vocab_with_counts(counts: &[u64]) -> Vocabulary {
        let tokens = (0..counts.len()).map(|i| format!("w{i}")).collect();
        Vocabulary::from_parts(tokens, counts.to_vec(), counts.iter().sum(), 1)
    }

    #[test]
    fn ids_follow_descending_frequency() {
        let mut toks = vec!["a"; 5];
        toks.extend(["b", "b", "c"]);
        let v = Vocabulary::build(corpus_from(&toks).view(), 2).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.id_of("a"), Some(0));
        assert_eq!(v.id_of("b"), Some(1));
        assert_eq!(v.id_of("c"), None);
        assert_eq!(v.total_tokens(), 8);
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = Vocabulary::build(corpus_from(&["z", "m", "a", "m", "z", "a"]).view(), 1).unwrap();
        assert_eq!(v.tokens(), &["a", "m", "z"]);
    }

    #[test]
    fn min_count_above_max_frequency() {
        let err = Vocabulary::build(corpus_from(&["a", "a"]).view(), 3).unwrap_err();
        assert_eq!(err.to_string(), "corpus too small for min_count=3");
        assert!(Vocabulary::build(corpus_from(&["a"]).view(), 0).is_err());
    }

    #[test]
    fn duplicated_counts_scale() {
        let c = corpus_from(&["a", "b", "a", "c", "b", "a"]);
        let base = Vocabulary::build(c.view(), 1).unwrap();
        let dup = c.duplicate(4).unwrap();
        let v = Vocabulary::build(dup.view(), 1).unwrap();
        let lazy = Vocabulary::build(c.repeated(4).unwrap(), 1).unwrap();
        assert_eq!(v, lazy);
        assert_eq!(v.tokens(), base.tokens());
        for id in 0..base.len() as u32 {
            assert_eq!(v.count(id), 4 * base.count(id));
        }
    }

    #[test]
    fn vocab_text_round_trip() {
        let v = Vocabulary::build(corpus_from(&["a", "b", "a"]).view(), 1).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"#total=3 #min_count=1\na\t2\nb\t1\n"));
        assert_eq!(Vocabulary::read_from(&buf[..]).unwrap(), v);
    }

    #[test]
    fn table_shares_for_power_of_sixteen() {
        // 16^0.75 = 8, so shares are 1/9 and 8/9.
        let v = vocab_with_counts(&[1, 16]);
        let t = UnigramTable::build(&v, 0.75, 900).unwrap();
        let ones = t.entries().iter().filter(|&&e| e == 1).count();
        assert_eq!(ones, 800);
    }

    #[test]
    fn single_word_table() {
        let t = UnigramTable::build(&vocab_with_counts(&[3]), 0.75, 50).unwrap();
        assert!(t.entries().iter().all(|&e| e == 0));
        assert_eq!(t.distinct_ids(), 1);
        let mut rng = worker_rng(1, 0);
        assert!(matches!(t.sample(&mut rng, Some(0)), Err(VocabError::OnlyExcluded(0))));
        assert_eq!(t.sample(&mut rng, None).unwrap(), 0);
    }

    #[test]
    fn table_matches_analytic_shares() {
        let counts = [3u64, 7, 11];
        let t = UnigramTable::build(&vocab_with_counts(&counts), 0.75, 1_000_000).unwrap();
        // Reference shares computed independently:
        // 3^0.75 = 2.2795070569547775, 7^0.75 = 4.303517070658851,
        // 11^0.75 = 6.040105354537237.
        let w = [2.2795070569547775, 4.303517070658851, 6.040105354537237];
        let norm: f64 = w.iter().sum();
        for (id, wi) in w.iter().enumerate() {
            let emp = t.entries().iter().filter(|&&e| e as usize == id).count() as f64 / 1e6;
            assert!((emp - wi / norm).abs() < 1e-4, "id {id}: {emp} vs {}", wi / norm);
        }
    }

    #[test]
    fn table_rejects_bad_args() {
        let v = vocab_with_counts(&[1, 2, 3]);
        assert!(UnigramTable::build(&v, 0.75, 2).is_err());
        assert!(UnigramTable::build(&v, 0.0, 10).is_err());
    }

    #[test]
    fn discard_examples() {
        let t = 1e-3;
        assert_eq!(discard_prob(1, 1000, t), 0.0);
        assert!((discard_prob(4, 1000, t) - 0.5).abs() < 1e-12);
        assert_eq!(discard_prob(1, 1_000_000, t), 0.0);
    }

    #[test]
    fn monte_carlo_three_quarters() {
        let t = UnigramTable {
            entries: vec![0, 0, 0, 1],
            power: 1.0,
            distinct: 2,
        };
        let mut rng = worker_rng(42, 0);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| t.sample(&mut rng, None).unwrap() == 0).count();
        assert!((zeros as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn exclusion_forces_other_id() {
        let t = UnigramTable::build(&vocab_with_counts(&[5, 5]), 0.75, 10).unwrap();
        let mut rng = worker_rng(3, 0);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng, Some(0)).unwrap(), 1);
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let t = UnigramTable::build(&vocab_with_counts(&[1, 2, 3, 4]), 0.75, 1000).unwrap();
        let draw = || {
            let mut rng = worker_rng(9, 2);
            (0..100).map(|_| t.sample(&mut rng, Some(1)).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    proptest! {
        #[test]
        fn table_law(counts in prop::collection::vec(1u64..1000, 1..30), size in 1000usize..20000) {
            let v = vocab_with_counts(&counts);
            let t = UnigramTable::build(&v, 0.75, size).unwrap();
            let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
            let norm: f64 = w.iter().sum();
            let mut hist = vec![0usize; counts.len()];
            for &e in t.entries() {
                hist[e as usize] += 1;
            }
            let bound = counts.len() as f64 / size as f64 + 1e-9;
            for (i, h) in hist.iter().enumerate() {
                let emp = *h as f64 / size as f64;
                prop_assert!((emp - w[i] / norm).abs() <= bound);
            }
        }

        #[test]
        fn discard_is_bounded_and_monotone(a in 1u64..10_000, b in 1u64..10_000, t in 1e-6f64..1e-1) {
            let total = 10_000;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p_lo = discard_prob(lo, total, t);
            let p_hi = discard_prob(hi, total, t);
            prop_assert!((0.0..1.0).contains(&p_lo));
            prop_assert!((0.0..1.0).contains(&p_hi));
            prop_assert!(p_lo <= p_hi);
        }
    }
}
