//! Character n-grams of boundary-wrapped words and their hashed buckets.

use serde::{Deserialize, Serialize};

pub const BOW: char = '<';
pub const EOW: char = '>';

const FNV_OFFSET_BASIS: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;

/// All substrings of `<word>` with `nmin..=nmax` characters, grouped by
/// length (shortest first) and left to right within a length.
///
/// The wrapped word itself is included when its length is in range; the
/// separate whole-word vector is handled by the vocabulary, not here.
pub fn extract_ngrams(word: &str, nmin: usize, nmax: usize) -> Vec<String> {
    let mut wrapped = Vec::with_capacity(word.len() + 2);
    wrapped.push(BOW);
    wrapped.extend(word.chars());
    wrapped.push(EOW);

    let mut out = Vec::new();
    for n in nmin.max(1)..=nmax.min(wrapped.len()) {
        for window in wrapped.windows(n) {
            out.push(window.iter().collect());
        }
    }
    out
}

pub fn fnv1a(bytes: &[u8]) -> u32 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |h, &b| {
        (h ^ u32::from(b)).wrapping_mul(FNV_PRIME)
    })
}

pub fn hash_ngram(ngram: &str, buckets: usize) -> usize {
    fnv1a(ngram.as_bytes()) as usize % buckets
}

/// Maps words to the input-matrix rows that compose them: the word's own
/// row (if in vocabulary) followed by one bucket row per n-gram. Bucket
/// rows start right after the `vocab_len` word rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordIndexer {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub buckets: usize,
    pub vocab_len: usize,
}

impl SubwordIndexer {
    pub fn rows(&self) -> usize {
        self.vocab_len + self.buckets
    }

    pub fn indices(&self, word: &str, id: Option<u32>) -> Vec<usize> {
        let ngrams = extract_ngrams(word, self.ngram_min, self.ngram_max);
        let mut out = Vec::with_capacity(ngrams.len() + 1);
        out.extend(id.map(|i| i as usize));
        out.extend(
            ngrams
                .iter()
                .map(|g| self.vocab_len + hash_ngram(g, self.buckets)),
        );
        out
    }
}
