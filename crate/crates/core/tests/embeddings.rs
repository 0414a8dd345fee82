use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dupembed::eval::cosine;
use dupembed::model::{Algorithm, Mode};
use dupembed::sgns::{fit_sgns, SgnsConfig};
use dupembed::synthetic::{agglutinative, planted_two_topic};
use dupembed::vecfile::read_vec;

#[test]
fn default_training_keeps_weights_bounded() {
    let (corpus, _) = planted_two_topic(50_000, 21);
    for (algorithm, mode) in [
        (Algorithm::Word2Vec, Mode::Cbow),
        (Algorithm::Word2Vec, Mode::Skipgram),
        (Algorithm::FastText, Mode::Cbow),
        (Algorithm::FastText, Mode::Skipgram),
    ] {
        let config = SgnsConfig {
            buckets: 20_000,
            ..SgnsConfig::new(algorithm, mode)
        };
        let model = fit_sgns(corpus.view(), &config).unwrap().model;
        assert!(model.input.is_finite() && model.output.is_finite());
        assert!(model.input.max_row_norm() <= 1e3);
        assert!(model.output.max_row_norm() <= 1e3);
    }
}

#[test]
fn fasttext_oov_is_closer_to_its_sibling() {
    let fixture = agglutinative(30_000, 4);
    let config = SgnsConfig {
        dim: 50,
        ngram_min: 3,
        ngram_max: 4,
        buckets: 50_000,
        ..SgnsConfig::new(Algorithm::FastText, Mode::Skipgram)
    };
    let model = fit_sgns(fixture.corpus.view(), &config).unwrap().model;
    let oov = model.word_vector(&fixture.held_out).vector;
    // Same stem, different suffix.
    let sibling = format!("{}{}", fixture.stems[0], fixture.suffixes[2]);
    assert!(model.vocab.id_of(&sibling).is_some());
    let sib = cosine(&oov, &model.word_vector(&sibling).vector);
    let unrelated = model
        .vocab
        .tokens()
        .iter()
        .filter(|w| !fixture.stems.iter().chain(&fixture.suffixes).any(|m| w.contains(m.as_str())))
        .map(|w| cosine(&oov, &model.word_vector(w).vector))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(sib > unrelated, "sibling {sib} vs best unrelated {unrelated}");
}

/// Mimics a published pretrained file: 300 dims, 4-decimal components, a
/// trailing space on each row, punctuation and non-ASCII tokens.
#[test]
fn loads_pretrained_format() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let head = [",", ".", "</s>", "de", "la", "nāhuatl", "tlahtōlli", "1999", "C++", "o'clock"];
    let mut text = String::from("1000 300\n");
    for i in 0..1000 {
        let token = head.get(i).map_or_else(|| format!("w{i}"), |t| t.to_string());
        text.push_str(&token);
        for _ in 0..300 {
            write!(text, " {:.4}", rng.gen_range(-0.5f32..0.5)).unwrap();
        }
        text.push_str(" \n");
    }
    let model = read_vec(text.as_bytes()).unwrap();
    assert_eq!(model.vocab.len(), 1000);
    assert_eq!(model.dim(), 300);
    assert!(!model.word_vector("nāhuatl").oov);
    assert!(model.word_vector("missing").oov);
    let first = text.lines().nth(1).unwrap();
    let component: f32 = first.split(' ').nth(1).unwrap().parse().unwrap();
    assert_eq!(model.word_vector(",").vector[0], component);
}
