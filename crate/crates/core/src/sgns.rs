//! Skip-gram / CBOW training with negative sampling, for whole-word
//! (word2vec) and subword-composed (fastText) input vectors.
//!
//! Every positive pair `(v, u)` is trained against `negatives` sampled
//! words `u_k` under the logistic loss
//!
//! ```text
//! L = -log σ(u·v) - Σ_k log σ(-u_k·v)
//! ```
//!
//! with one plain gradient step per pair. The learning rate decays linearly
//! over the scheduled number of center positions.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusView;
use crate::matrix::{axpy, dot, Hogwild, Matrix};
use crate::model::{Algorithm, EmbeddingModel, Mode, ModelConfig};
use crate::subword::SubwordIndexer;
use crate::train::{linear_lr, partition, TrainError, TrainStats, Trained};
use crate::vocab::{
    discard_prob, worker_rng, UnigramTable, Vocabulary, DEFAULT_MIN_COUNT, DEFAULT_SUBSAMPLE,
    DEFAULT_TABLE_POWER, DEFAULT_TABLE_SIZE,
};

/// Rng stream reserved for parameter initialization; workers use 0..n.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsConfig {
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub min_count: usize,
    /// Subsampling threshold `t`; `None` disables subsampling.
    pub subsample: Option<f64>,
    pub table_power: f64,
    pub table_size: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub buckets: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            algorithm: Algorithm::Word2Vec,
            mode: Mode::Skipgram,
            dim: 100,
            window: 5,
            epochs: 5,
            negatives: 5,
            initial_lr: 0.025,
            min_count: DEFAULT_MIN_COUNT,
            subsample: Some(DEFAULT_SUBSAMPLE),
            table_power: DEFAULT_TABLE_POWER,
            table_size: DEFAULT_TABLE_SIZE,
            ngram_min: 3,
            ngram_max: 6,
            buckets: 2_000_000,
            seed: 1,
            workers: 1,
        }
    }
}

impl SgnsConfig {
    pub fn new(algorithm: Algorithm, mode: Mode) -> Self {
        SgnsConfig {
            algorithm,
            mode,
            ..SgnsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.to_owned()));
        if !matches!(self.algorithm, Algorithm::Word2Vec | Algorithm::FastText) {
            return bad("algorithm must be word2vec or fasttext");
        }
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.initial_lr > 0.0) {
            return bad("initial_lr must be positive");
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return bad("subsample threshold must be positive");
            }
        }
        if self.algorithm == Algorithm::FastText {
            if self.ngram_min > self.ngram_max {
                return bad("ngram_min must not exceed ngram_max");
            }
            if self.buckets == 0 {
                return bad("buckets must be at least 1 for fasttext");
            }
        }
        Ok(())
    }

    fn indexer(&self, vocab_len: usize) -> Option<SubwordIndexer> {
        (self.algorithm == Algorithm::FastText).then_some(SubwordIndexer {
            ngram_min: self.ngram_min,
            ngram_max: self.ngram_max,
            buckets: self.buckets,
            vocab_len,
        })
    }
}

#[inline]
pub fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// `-log σ(x)`, computed without overflow.
#[inline]
pub fn neg_log_sigmoid<F: Float>(x: F) -> F {
    // softplus(-x) = max(-x, 0) + ln(1 + e^{-|x|})
    (-x).max(F::zero()) + (-x.abs()).exp().ln_1p()
}

/// One negative-sampling update for the composed input vector `hidden`.
///
/// `targets` lists output ids with their label (`true` for the positive).
/// Output rows are updated in place; `grad` receives `-lr · ∂L/∂hidden`,
/// to be added by the caller to every input row composing `hidden`.
/// Returns the loss before the update.
pub fn negative_sampling_step<F: Float>(
    hidden: &[F],
    targets: &[(u32, bool)],
    output: &Hogwild<'_, F>,
    lr: F,
    grad: &mut [F],
) -> F {
    grad.iter_mut().for_each(|g| *g = F::zero());
    let mut loss = F::zero();
    for &(id, label) in targets {
        let u = output.row_mut(id as usize);
        let score = dot(hidden, u);
        let (residual, pair_loss) = if label {
            (F::one() - sigmoid(score), neg_log_sigmoid(score))
        } else {
            (-sigmoid(score), neg_log_sigmoid(-score))
        };
        loss = loss + pair_loss;
        let step = lr * residual;
        axpy(step, u, grad);
        axpy(step, hidden, u);
    }
    loss
}

struct Job<'a> {
    config: &'a SgnsConfig,
    sentences: &'a [Vec<u32>],
    repeat: usize,
    discard: Option<Vec<f64>>,
    table: &'a UnigramTable,
    word_rows: Vec<Vec<usize>>,
    progress: AtomicU64,
    total: u64,
    abort: AtomicBool,
}

#[derive(Default)]
struct WorkerStats {
    positions: u64,
    pairs: u64,
    epoch_losses: Vec<f64>,
}

impl Job<'_> {
    fn run_worker(
        &self,
        worker: usize,
        input: Hogwild<'_, f32>,
        output: Hogwild<'_, f32>,
    ) -> Result<WorkerStats, TrainError> {
        let cfg = self.config;
        let dim = cfg.dim;
        let mut rng = worker_rng(cfg.seed, worker as u64);
        let n_virtual = self.sentences.len() * self.repeat;
        let block = partition(n_virtual, cfg.workers, worker);

        let mut stats = WorkerStats::default();
        let mut hidden = vec![0f32; dim];
        let mut grad = vec![0f32; dim];
        let mut targets: Vec<(u32, bool)> = Vec::with_capacity(cfg.negatives + 1);
        let mut rows: Vec<usize> = Vec::new();
        let mut words: Vec<u32> = Vec::new();

        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0f64;
            for k in block.clone() {
                if self.abort.load(Ordering::Relaxed) {
                    return Ok(stats);
                }
                let sentence = &self.sentences[k % self.sentences.len()];
                let lr = linear_lr(cfg.initial_lr, self.progress.load(Ordering::Relaxed), self.total);
                let lr32 = lr as f32;

                words.clear();
                match &self.discard {
                    Some(discard) => words.extend(
                        sentence
                            .iter()
                            .copied()
                            .filter(|&w| discard[w as usize] == 0.0 || rng.gen::<f64>() >= discard[w as usize]),
                    ),
                    None => words.extend_from_slice(sentence),
                }

                let mut sentence_loss = 0f32;
                for pos in 0..words.len() {
                    let center = words[pos];
                    let b = rng.gen_range(1..=cfg.window);
                    let lo = pos.saturating_sub(b);
                    let hi = (pos + b).min(words.len() - 1);
                    stats.positions += 1;
                    match cfg.mode {
                        Mode::Skipgram => {
                            let center_rows = &self.word_rows[center as usize];
                            for c in (lo..=hi).filter(|&c| c != pos) {
                                let ctx = words[c];
                                compose(&input, center_rows, &mut hidden);
                                self.fill_targets(ctx, &mut rng, &mut targets)?;
                                sentence_loss += negative_sampling_step(&hidden, &targets, &output, lr32, &mut grad);
                                for &r in center_rows {
                                    axpy(1.0, &grad, input.row_mut(r));
                                }
                                stats.pairs += 1;
                            }
                        }
                        Mode::Cbow => {
                            rows.clear();
                            for c in (lo..=hi).filter(|&c| c != pos) {
                                rows.extend_from_slice(&self.word_rows[words[c] as usize]);
                            }
                            if rows.is_empty() {
                                continue;
                            }
                            compose(&input, &rows, &mut hidden);
                            self.fill_targets(center, &mut rng, &mut targets)?;
                            sentence_loss += negative_sampling_step(&hidden, &targets, &output, lr32, &mut grad);
                            for &r in &rows {
                                axpy(1.0, &grad, input.row_mut(r));
                            }
                            stats.pairs += 1;
                        }
                    }
                }
                if !sentence_loss.is_finite() {
                    self.abort.store(true, Ordering::Relaxed);
                    return Err(TrainError::NonFinite {
                        epoch,
                        worker,
                        item: k,
                        lr,
                        loss: sentence_loss as f64,
                    });
                }
                epoch_loss += sentence_loss as f64;
                self.progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
            }
            stats.epoch_losses.push(epoch_loss);
        }
        Ok(stats)
    }

    fn fill_targets<R: Rng>(
        &self,
        positive: u32,
        rng: &mut R,
        targets: &mut Vec<(u32, bool)>,
    ) -> Result<(), TrainError> {
        targets.clear();
        targets.push((positive, true));
        for _ in 0..self.config.negatives {
            targets.push((self.table.sample(rng, Some(positive))?, false));
        }
        Ok(())
    }
}

#[inline]
fn compose(input: &Hogwild<'_, f32>, rows: &[usize], out: &mut [f32]) {
    if let [single] = rows {
        out.copy_from_slice(input.row(*single));
        return;
    }
    out.iter_mut().for_each(|x| *x = 0.0);
    for &r in rows {
        axpy(1.0, input.row(r), out);
    }
    let scale = 1.0 / rows.len() as f32;
    out.iter_mut().for_each(|x| *x *= scale);
}

/// In-vocabulary id sentences; sentences left empty are dropped.
pub fn encode_sentences(corpus: &crate::corpus::TokenizedCorpus, vocab: &Vocabulary) -> Vec<Vec<u32>> {
    corpus
        .sentences()
        .map(|s| s.iter().filter_map(|t| vocab.id_of(t)).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Trains on `corpus` (possibly a streamed repetition) with a prebuilt
/// vocabulary and negative-sampling table.
pub fn train_sgns(
    corpus: CorpusView<'_>,
    vocab: &Vocabulary,
    table: &UnigramTable,
    config: &SgnsConfig,
) -> Result<Trained, TrainError> {
    config.validate()?;
    let start = Instant::now();
    let sentences = encode_sentences(corpus.base(), vocab);
    if sentences.is_empty() || vocab.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let tokens_per_pass: u64 = sentences.iter().map(|s| s.len() as u64).sum::<u64>() * corpus.repeat() as u64;
    let total = tokens_per_pass * config.epochs as u64;

    let v = vocab.len();
    let indexer = config.indexer(v);
    let input_rows = indexer.map_or(v, |ix| ix.rows());
    let mut init_rng = worker_rng(config.seed, INIT_STREAM);
    let bound = 0.5 / config.dim as f32;
    let mut input = Matrix::<f32>::uniform(input_rows, config.dim, bound, &mut init_rng);
    let mut output = Matrix::<f32>::zeros(v, config.dim);

    let word_rows: Vec<Vec<usize>> = match &indexer {
        Some(ix) => (0..v as u32).map(|id| ix.indices(vocab.token_of(id), Some(id))).collect(),
        None => (0..v).map(|id| vec![id]).collect(),
    };
    let discard = config.subsample.map(|t| {
        let total_tokens = vocab.total_tokens().max(1);
        vocab.counts().iter().map(|&c| discard_prob(c.max(1), total_tokens, t)).collect()
    });

    let job = Job {
        config,
        sentences: &sentences,
        repeat: corpus.repeat(),
        discard,
        table,
        word_rows,
        progress: AtomicU64::new(0),
        total,
        abort: AtomicBool::new(false),
    };

    let results: Vec<Result<WorkerStats, TrainError>> = {
        let input_view = input.hogwild();
        let output_view = output.hogwild();
        if config.workers == 1 {
            vec![job.run_worker(0, input_view, output_view)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..config.workers)
                    .map(|w| {
                        let (iv, ov, job) = (input_view.clone(), output_view.clone(), &job);
                        scope.spawn(move || job.run_worker(w, iv, ov))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        }
    };

    let mut stats = TrainStats {
        scheduled_updates: total,
        epoch_losses: vec![0.0; config.epochs],
        ..TrainStats::default()
    };
    for r in results {
        let w = r?;
        stats.positions += w.positions;
        stats.pairs += w.pairs;
        for (acc, l) in stats.epoch_losses.iter_mut().zip(&w.epoch_losses) {
            *acc += l;
        }
    }
    if stats.positions == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    if !input.is_finite() || !output.is_finite() {
        return Err(TrainError::NonFinite {
            epoch: config.epochs,
            worker: 0,
            item: 0,
            lr: 0.0,
            loss: f64::NAN,
        });
    }
    stats.wall_time = start.elapsed();

    Ok(Trained {
        model: EmbeddingModel {
            algorithm: config.algorithm,
            config: ModelConfig::Sgns(config.clone()),
            vocab: vocab.clone(),
            input,
            output,
            subwords: indexer,
        },
        stats,
    })
}

/// Builds the vocabulary and table from `corpus`, then trains.
pub fn fit_sgns(corpus: CorpusView<'_>, config: &SgnsConfig) -> Result<Trained, TrainError> {
    config.validate()?;
    let vocab = Vocabulary::build(corpus, config.min_count)?;
    let size = config.table_size.max(vocab.len());
    let table = UnigramTable::build(&vocab, config.table_power, size)?;
    train_sgns(corpus, &vocab, &table, config)
}
