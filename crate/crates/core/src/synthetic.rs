//! Synthetic corpora and evaluation sets with known structure.
//!
//! Words are pseudo-words built from consonant-vowel syllables. Topic
//! corpora draw each document mostly from one topic's lexicon plus a few
//! shared filler words, so within-topic words share contexts far more
//! often than cross-topic words.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Sentence, TokenizedCorpus};
use crate::eval::{EvalItem, EvalSet, CANDIDATES};
use crate::vocab::worker_rng;

const CONSONANTS: [&str; 13] = ["k", "t", "p", "m", "n", "s", "l", "ch", "tl", "w", "y", "x", "ts"];
const VOWELS: [&str; 4] = ["a", "e", "i", "o"];

fn pseudo_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables)
        .map(|_| {
            let c = CONSONANTS[rng.gen_range(0..CONSONANTS.len())];
            let v = VOWELS[rng.gen_range(0..VOWELS.len())];
            format!("{c}{v}")
        })
        .collect()
}

/// `n` distinct pseudo-words of 2 to 4 syllables, none containing any of
/// `avoid` as a substring.
pub fn pseudo_words(n: usize, seed: u64, avoid: &[&str]) -> Vec<String> {
    let mut rng = worker_rng(seed, 0);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=4);
        let w = pseudo_word(&mut rng, syllables);
        if avoid.iter().any(|a| w.contains(a)) || !seen.insert(w.clone()) {
            continue;
        }
        out.push(w);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopicLexicon {
    pub topics: Vec<Vec<String>>,
    pub fillers: Vec<String>,
}

impl TopicLexicon {
    pub fn new(num_topics: usize, words_per_topic: usize, num_fillers: usize, seed: u64) -> Self {
        let mut words = pseudo_words(num_topics * words_per_topic + num_fillers, seed, &[]).into_iter();
        let topics = (0..num_topics)
            .map(|_| words.by_ref().take(words_per_topic).collect())
            .collect();
        TopicLexicon {
            topics,
            fillers: words.collect(),
        }
    }

    pub fn topic_of(&self, word: &str) -> Option<usize> {
        self.topics.iter().position(|t| t.iter().any(|w| w == word))
    }
}

/// How corpus tokens are drawn for a document about one topic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopicMix {
    /// Probability of a shared filler word.
    pub filler_rate: f64,
    /// Probability of a word from a different topic.
    pub stray_rate: f64,
    /// Zipfian (1/rank) word frequencies within a topic instead of uniform.
    pub zipf: bool,
}

impl TopicMix {
    pub const PURE: TopicMix = TopicMix {
        filler_rate: 0.2,
        stray_rate: 0.0,
        zipf: false,
    };
    pub const TOY: TopicMix = TopicMix {
        filler_rate: 0.25,
        stray_rate: 0.15,
        zipf: true,
    };
}

struct WordSampler<'a> {
    lexicon: &'a TopicLexicon,
    mix: TopicMix,
    ranks: Option<WeightedIndex<f64>>,
}

impl<'a> WordSampler<'a> {
    fn new(lexicon: &'a TopicLexicon, mix: TopicMix) -> Self {
        let n = lexicon.topics[0].len();
        let ranks = mix
            .zipf
            .then(|| WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("positive weights"));
        WordSampler { lexicon, mix, ranks }
    }

    fn topic_word(&self, topic: usize, rng: &mut ChaCha8Rng) -> String {
        let words = &self.lexicon.topics[topic];
        let i = match &self.ranks {
            Some(d) => d.sample(rng),
            None => rng.gen_range(0..words.len()),
        };
        words[i].clone()
    }

    fn word(&self, topic: usize, rng: &mut ChaCha8Rng) -> String {
        let k = self.lexicon.topics.len();
        let u: f64 = rng.gen();
        if u < self.mix.filler_rate && !self.lexicon.fillers.is_empty() {
            self.lexicon.fillers.choose(rng).expect("fillers").clone()
        } else if u < self.mix.filler_rate + self.mix.stray_rate && k > 1 {
            self.topic_word((topic + rng.gen_range(1..k)) % k, rng)
        } else {
            self.topic_word(topic, rng)
        }
    }
}

/// Documents of 5 to 15 sentences, each sentence 6 to 12 tokens, until at
/// least `tokens` tokens exist. Each document has one topic.
pub fn topic_corpus(lexicon: &TopicLexicon, tokens: usize, mix: TopicMix, seed: u64) -> TokenizedCorpus {
    let mut rng = worker_rng(seed, 1);
    let sampler = WordSampler::new(lexicon, mix);
    let mut docs: Vec<Document> = Vec::new();
    let mut total = 0;
    while total < tokens {
        let topic = rng.gen_range(0..lexicon.topics.len());
        let doc: Document = (0..rng.gen_range(5..=15))
            .map(|_| {
                let len = rng.gen_range(6..=12);
                (0..len).map(|_| sampler.word(topic, &mut rng)).collect::<Sentence>()
            })
            .collect();
        total += doc.iter().map(Vec::len).sum::<usize>();
        docs.push(doc);
    }
    TokenizedCorpus::new(docs).expect("generated corpus is well formed")
}

/// Two topics of 25 words plus 5 fillers at a 20% rate.
pub fn planted_two_topic(tokens: usize, seed: u64) -> (TokenizedCorpus, TopicLexicon) {
    let lexicon = TopicLexicon::new(2, 25, 5, seed);
    let corpus = topic_corpus(&lexicon, tokens, TopicMix::PURE, seed);
    (corpus, lexicon)
}

/// Eight topics of 300 words plus 10 fillers.
pub fn toy_lexicon(seed: u64) -> TopicLexicon {
    TopicLexicon::new(8, 300, 10, seed)
}

pub fn toy_corpus(lexicon: &TopicLexicon, tokens: usize, seed: u64) -> TokenizedCorpus {
    topic_corpus(lexicon, tokens, TopicMix::TOY, seed)
}

/// Items whose gold rank follows topical overlap: the rank-`r` candidate
/// has `5 - r` of its 8 tokens from the reference topic and the rest from
/// other topics. Words are drawn with the corpus's within-topic
/// frequencies when `zipf` is set. Needs at least 2 topics.
pub fn topic_evalset(lexicon: &TopicLexicon, items: usize, zipf: bool, seed: u64) -> EvalSet {
    assert!(lexicon.topics.len() >= 2, "need at least two topics");
    let mut rng = worker_rng(seed, 2);
    let sampler = WordSampler::new(
        lexicon,
        TopicMix {
            filler_rate: 0.0,
            stray_rate: 0.0,
            zipf,
        },
    );
    let k = lexicon.topics.len();
    let items = (0..items)
        .map(|_| {
            let topic = rng.gen_range(0..k);
            let reference: Vec<String> = (0..6).map(|_| sampler.topic_word(topic, &mut rng)).collect();
            let mut ranked: Vec<(u32, String)> = (1..=CANDIDATES as u32)
                .map(|rank| {
                    let on_topic = CANDIDATES - rank as usize;
                    let mut words: Vec<String> = (0..8)
                        .map(|i| {
                            let t = if i < on_topic {
                                topic
                            } else {
                                (topic + rng.gen_range(1..k)) % k
                            };
                            sampler.topic_word(t, &mut rng)
                        })
                        .collect();
                    words.shuffle(&mut rng);
                    (rank, words.join(" "))
                })
                .collect();
            ranked.shuffle(&mut rng);
            EvalItem {
                reference: reference.join(" "),
                candidates: ranked.iter().map(|(_, s)| s.clone()).collect(),
                gold_rank: ranked.iter().map(|(r, _)| *r).collect(),
            }
        })
        .collect();
    EvalSet::new(items).expect("generated items are valid")
}

/// A corpus of stem+suffix words where one combination never occurs.
#[derive(Clone, Debug)]
pub struct MorphFixture {
    pub corpus: TokenizedCorpus,
    pub stems: Vec<String>,
    pub suffixes: Vec<String>,
    /// Built from `stems[0]` and `suffixes[0]`; absent from the corpus.
    pub held_out: String,
}

pub const MORPH_STEMS: [&str; 4] = ["kal", "tal", "pal", "sal"];
pub const MORPH_SUFFIXES: [&str; 4] = ["meh", "mitl", "tsin", "ko"];

/// Every stem and suffix meets every other, so all character 3- and
/// 4-grams of the held-out word occur in trained words. Each stem has
/// its own context words.
pub fn agglutinative(tokens: usize, seed: u64) -> MorphFixture {
    let mut rng = worker_rng(seed, 3);
    let mut avoid: Vec<&str> = MORPH_STEMS.to_vec();
    avoid.extend(MORPH_SUFFIXES);
    avoid.extend(["al", "me", "mi"]);
    let contexts: Vec<Vec<String>> = pseudo_words(MORPH_STEMS.len() * 6, seed, &avoid)
        .chunks(6)
        .map(<[String]>::to_vec)
        .collect();
    let held_out = format!("{}{}", MORPH_STEMS[0], MORPH_SUFFIXES[0]);
    let mut docs = Vec::new();
    let mut total = 0;
    while total < tokens {
        let s = rng.gen_range(0..MORPH_STEMS.len());
        let doc: Document = (0..8)
            .map(|_| {
                let mut sentence: Sentence = Vec::new();
                for _ in 0..2 {
                    let word = loop {
                        let w = format!("{}{}", MORPH_STEMS[s], MORPH_SUFFIXES.choose(&mut rng).unwrap());
                        if w != held_out {
                            break w;
                        }
                    };
                    sentence.push(word);
                }
                sentence.extend((0..5).map(|_| contexts[s].choose(&mut rng).unwrap().clone()));
                sentence.shuffle(&mut rng);
                sentence
            })
            .collect();
        total += doc.iter().map(Vec::len).sum::<usize>();
        docs.push(doc);
    }
    MorphFixture {
        corpus: TokenizedCorpus::new(docs).expect("generated corpus is well formed"),
        stems: MORPH_STEMS.map(String::from).to_vec(),
        suffixes: MORPH_SUFFIXES.map(String::from).to_vec(),
        held_out,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::subword::extract_ngrams;

    #[test]
    fn pseudo_words_are_distinct() {
        let w = pseudo_words(500, 3, &["kal"]);
        assert_eq!(w.iter().collect::<HashSet<_>>().len(), 500);
        assert!(w.iter().all(|x| !x.contains("kal")));
    }

    #[test]
    fn topic_corpus_size_and_purity() {
        let (c, lex) = planted_two_topic(50_000, 9);
        assert!(c.token_count() >= 50_000 && c.token_count() < 50_200);
        for doc in c.documents() {
            let topics: HashSet<usize> = doc.iter().flatten().filter_map(|w| lex.topic_of(w)).collect();
            assert!(topics.len() <= 1);
        }
    }

    #[test]
    fn evalset_gold_follows_overlap() {
        let lex = toy_lexicon(4);
        let set = topic_evalset(&lex, 30, true, 4);
        assert_eq!(set.items.len(), 30);
        for item in &set.items {
            let topic = lex.topic_of(item.reference.split(' ').next().unwrap()).unwrap();
            assert!(item.reference.split(' ').all(|w| lex.topic_of(w) == Some(topic)));
            for (c, &r) in item.candidates.iter().zip(&item.gold_rank) {
                let on = c.split(' ').filter(|w| lex.topic_of(w) == Some(topic)).count();
                assert_eq!(on, 5 - r as usize);
            }
        }
    }

    #[test]
    fn held_out_ngrams_are_covered() {
        let f = agglutinative(5_000, 1);
        let vocab: HashSet<&str> = f.corpus.sentences().flatten().map(String::as_str).collect();
        assert!(!vocab.contains(f.held_out.as_str()));
        let trained: HashSet<String> = vocab.iter().flat_map(|w| extract_ngrams(w, 3, 4)).collect();
        for g in extract_ngrams(&f.held_out, 3, 4) {
            assert!(trained.contains(&g), "{g} not covered");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(planted_two_topic(2_000, 5).0, planted_two_topic(2_000, 5).0);
    }
}
