//! Regenerates the synthetic toy corpus and evaluation set in `data/`.
//!
//! Usage: cargo run --example make_toy_data [-- <out_dir>]

use std::path::PathBuf;

use dupembed::synthetic::{toy_corpus, toy_lexicon, topic_evalset};

const SEED: u64 = 7;
const TOKENS: usize = 200_000;

fn main() -> anyhow::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&out)?;
    let lexicon = toy_lexicon(SEED);
    let corpus = toy_corpus(&lexicon, TOKENS, SEED);
    corpus.save(&out.join("toy_corpus.txt"))?;
    let mut evalset = topic_evalset(&lexicon, 30, true, SEED + 1);
    evalset.description = Some(format!(
        "SYNTHETIC evaluation set (not human-annotated): 30 items generated by make_toy_data \
         with seed {SEED}; gold ranks follow topical overlap with the reference"
    ));
    std::fs::write(out.join("eval_synthetic.json"), evalset.to_json() + "\n")?;
    println!("{}", corpus.stats().to_kv());
    Ok(())
}
