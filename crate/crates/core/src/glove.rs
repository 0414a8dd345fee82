//! Windowed co-occurrence counting and GloVe training by per-entry AdaGrad
//! on the weighted least-squares objective
//!
//! ```text
//! J = Σ_ij f(x_ij) (w_i·w~_j + b_i + b~_j - ln x_ij)²
//! ```

use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusView;
use crate::matrix::{dot, Hogwild, Matrix};
use crate::model::{Algorithm, EmbeddingModel, ModelConfig};
use crate::sgns::encode_sentences;
use crate::train::{partition, TrainError, TrainStats, Trained};
use crate::vocab::{worker_rng, Vocabulary, DEFAULT_MIN_COUNT};

pub const ADAGRAD_EPS: f64 = 1e-8;
const INIT_STREAM: u64 = u64::MAX;
const SHUFFLE_STREAM: u64 = u64::MAX - 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GloveConfig {
    pub dim: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub epochs: usize,
    pub initial_lr: f64,
    pub window: usize,
    pub min_count: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 100,
            x_max: 100.0,
            alpha: 0.75,
            epochs: 25,
            initial_lr: 0.05,
            window: 5,
            min_count: DEFAULT_MIN_COUNT,
            seed: 1,
            workers: 1,
        }
    }
}

impl GloveConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.to_owned()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if !(self.x_max > 0.0) {
            return bad("x_max must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.initial_lr > 0.0) {
            return bad("initial_lr must be positive");
        }
        Ok(())
    }
}

/// Sparse symmetric co-occurrence weights, sorted by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CooccurrenceMatrix {
    entries: Vec<(u32, u32, f64)>,
    window: usize,
    vocab_len: usize,
}

impl CooccurrenceMatrix {
    pub fn from_entries(mut entries: Vec<(u32, u32, f64)>, window: usize, vocab_len: usize) -> Self {
        entries.retain(|e| e.2 > 0.0);
        entries.sort_by_key(|e| (e.0, e.1));
        CooccurrenceMatrix {
            entries,
            window,
            vocab_len,
        }
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab_len
    }

    pub fn symmetric(&self) -> bool {
        true
    }

    pub fn get(&self, i: u32, j: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&(i, j), |e| (e.0, e.1))
            .ok()
            .map(|k| self.entries[k].2)
    }

    /// `i<TAB>j<TAB>x` triples in `(i, j)` order.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for &(i, j, x) in &self.entries {
            writeln!(w, "{i}\t{j}\t{x}")?;
        }
        Ok(())
    }
}

fn accumulate(sentences: &[Vec<u32>], window: usize, map: &mut HashMap<(u32, u32), f64>) {
    for s in sentences {
        for (pos, &center) in s.iter().enumerate() {
            let lo = pos.saturating_sub(window);
            let hi = (pos + window).min(s.len() - 1);
            for (c, &ctx) in s.iter().enumerate().take(hi + 1).skip(lo) {
                if c != pos {
                    let d = pos.abs_diff(c) as f64;
                    *map.entry((center, ctx)).or_default() += 1.0 / d;
                }
            }
        }
    }
}

/// Adds `1/d` to `(center, context)` for every in-vocabulary pair at
/// distance `d <= window` inside a sentence, scanning both directions.
/// Out-of-vocabulary tokens are removed before windowing. With several
/// workers, sentence blocks accumulate into private maps merged in order.
pub fn build_cooccurrence(
    corpus: CorpusView<'_>,
    vocab: &Vocabulary,
    window: usize,
    workers: usize,
) -> CooccurrenceMatrix {
    let window = window.max(1);
    let base = encode_sentences(corpus.base(), vocab);
    let workers = workers.max(1).min(base.len().max(1));
    let mut total: HashMap<(u32, u32), f64> = HashMap::new();
    for _ in 0..corpus.repeat() {
        if workers == 1 {
            accumulate(&base, window, &mut total);
            continue;
        }
        let maps: Vec<HashMap<(u32, u32), f64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let block = &base[partition(base.len(), workers, w)];
                    scope.spawn(move || {
                        let mut m = HashMap::new();
                        accumulate(block, window, &mut m);
                        m
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("co-occurrence worker panicked")).collect()
        });
        for m in maps {
            for (k, x) in m {
                *total.entry(k).or_default() += x;
            }
        }
    }
    let entries = total.into_iter().map(|((i, j), x)| (i, j, x)).collect();
    CooccurrenceMatrix::from_entries(entries, window, vocab.len())
}

/// `(x / x_max)^alpha` below the cap, 1 above it.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Loss of one entry and its gradients. `d_wi`/`d_wj` receive `∂J/∂w_i`
/// and `∂J/∂w~_j`; the returned pair is `(loss, ∂J/∂b_i)` (which equals
/// `∂J/∂b~_j`).
pub fn entry_gradient<F: Float>(
    wi: &[F],
    wj: &[F],
    bi: F,
    bj: F,
    log_x: F,
    weight: F,
    d_wi: &mut [F],
    d_wj: &mut [F],
) -> (F, F) {
    let diff = dot(wi, wj) + bi + bj - log_x;
    let loss = weight * diff * diff;
    let scale = (F::one() + F::one()) * weight * diff;
    for ((gi, gj), (&a, &b)) in d_wi.iter_mut().zip(d_wj.iter_mut()).zip(wi.iter().zip(wj)) {
        *gi = scale * b;
        *gj = scale * a;
    }
    (loss, scale)
}

#[inline]
fn adagrad(param: &mut f64, accum: &mut f64, g: f64, lr: f64) {
    *accum += g * g;
    *param -= lr * g / (*accum + ADAGRAD_EPS).sqrt();
}

/// GloVe parameters with their AdaGrad accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct GloveParams {
    pub word: Matrix<f64>,
    pub context: Matrix<f64>,
    pub word_bias: Matrix<f64>,
    pub context_bias: Matrix<f64>,
    word_sq: Matrix<f64>,
    context_sq: Matrix<f64>,
    word_bias_sq: Matrix<f64>,
    context_bias_sq: Matrix<f64>,
}

pub struct GloveTrainer<'m> {
    matrix: &'m CooccurrenceMatrix,
    config: GloveConfig,
    log_x: Vec<f64>,
    weights: Vec<f64>,
    order: Vec<usize>,
    shuffle_rng: rand_chacha::ChaCha8Rng,
    epoch: usize,
    pub params: GloveParams,
}

struct Views<'a> {
    word: Hogwild<'a, f64>,
    context: Hogwild<'a, f64>,
    word_bias: Hogwild<'a, f64>,
    context_bias: Hogwild<'a, f64>,
    word_sq: Hogwild<'a, f64>,
    context_sq: Hogwild<'a, f64>,
    word_bias_sq: Hogwild<'a, f64>,
    context_bias_sq: Hogwild<'a, f64>,
}

impl Clone for Views<'_> {
    fn clone(&self) -> Self {
        Views {
            word: self.word.clone(),
            context: self.context.clone(),
            word_bias: self.word_bias.clone(),
            context_bias: self.context_bias.clone(),
            word_sq: self.word_sq.clone(),
            context_sq: self.context_sq.clone(),
            word_bias_sq: self.word_bias_sq.clone(),
            context_bias_sq: self.context_bias_sq.clone(),
        }
    }
}

impl<'m> GloveTrainer<'m> {
    pub fn new(matrix: &'m CooccurrenceMatrix, config: &GloveConfig) -> Result<Self, TrainError> {
        config.validate()?;
        if matrix.is_empty() {
            return Err(TrainError::EmptyMatrix);
        }
        let v = matrix.vocab_len();
        let dim = config.dim;
        let bound = 0.5 / dim as f64;
        let mut rng = worker_rng(config.seed, INIT_STREAM);
        let params = GloveParams {
            word: Matrix::uniform(v, dim, bound, &mut rng),
            context: Matrix::uniform(v, dim, bound, &mut rng),
            word_bias: Matrix::uniform(v, 1, bound, &mut rng),
            context_bias: Matrix::uniform(v, 1, bound, &mut rng),
            word_sq: Matrix::zeros(v, dim),
            context_sq: Matrix::zeros(v, dim),
            word_bias_sq: Matrix::zeros(v, 1),
            context_bias_sq: Matrix::zeros(v, 1),
        };
        Ok(GloveTrainer {
            matrix,
            log_x: matrix.entries().iter().map(|e| e.2.ln()).collect(),
            weights: matrix
                .entries()
                .iter()
                .map(|e| glove_weight(e.2, config.x_max, config.alpha))
                .collect(),
            order: (0..matrix.len()).collect(),
            shuffle_rng: worker_rng(config.seed, SHUFFLE_STREAM),
            epoch: 0,
            config: config.clone(),
            params,
        })
    }

    /// Total objective at the current parameters.
    pub fn objective(&self) -> f64 {
        let p = &self.params;
        self.matrix
            .entries()
            .iter()
            .enumerate()
            .map(|(k, &(i, j, _))| {
                let (i, j) = (i as usize, j as usize);
                let diff = dot(p.word.row(i), p.context.row(j)) + p.word_bias.row(i)[0]
                    + p.context_bias.row(j)[0]
                    - self.log_x[k];
                self.weights[k] * diff * diff
            })
            .sum()
    }

    /// One shuffled pass; returns the summed per-entry loss observed
    /// before each update.
    pub fn epoch(&mut self) -> Result<f64, TrainError> {
        self.order.shuffle(&mut self.shuffle_rng);
        let epoch = self.epoch;
        self.epoch += 1;
        let workers = self.config.workers.min(self.order.len()).max(1);
        let abort = AtomicBool::new(false);
        let p = &mut self.params;
        let views = Views {
            word: p.word.hogwild(),
            context: p.context.hogwild(),
            word_bias: p.word_bias.hogwild(),
            context_bias: p.context_bias.hogwild(),
            word_sq: p.word_sq.hogwild(),
            context_sq: p.context_sq.hogwild(),
            word_bias_sq: p.word_bias_sq.hogwild(),
            context_bias_sq: p.context_bias_sq.hogwild(),
        };
        let shared = EpochJob {
            entries: self.matrix.entries(),
            log_x: &self.log_x,
            weights: &self.weights,
            order: &self.order,
            lr: self.config.initial_lr,
            dim: self.config.dim,
            abort: &abort,
            epoch,
        };
        let results: Vec<Result<f64, TrainError>> = if workers == 1 {
            vec![shared.run(0, 1, views)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers)
                    .map(|w| {
                        let (views, shared) = (views.clone(), &shared);
                        scope.spawn(move || shared.run(w, workers, views))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("glove worker panicked")).collect()
            })
        };
        results.into_iter().sum()
    }

    pub fn into_model(self, vocab: &Vocabulary) -> EmbeddingModel {
        let p = self.params;
        let (v, dim) = (p.word.rows(), p.word.cols());
        let sum: Vec<f32> = p
            .word
            .as_slice()
            .iter()
            .zip(p.context.as_slice())
            .map(|(a, b)| (a + b) as f32)
            .collect();
        let context: Vec<f32> = p.context.as_slice().iter().map(|&x| x as f32).collect();
        EmbeddingModel {
            algorithm: Algorithm::Glove,
            config: ModelConfig::Glove(self.config),
            vocab: vocab.clone(),
            input: Matrix::from_vec(v, dim, sum),
            output: Matrix::from_vec(v, dim, context),
            subwords: None,
        }
    }
}

struct EpochJob<'a> {
    entries: &'a [(u32, u32, f64)],
    log_x: &'a [f64],
    weights: &'a [f64],
    order: &'a [usize],
    lr: f64,
    dim: usize,
    abort: &'a AtomicBool,
    epoch: usize,
}

impl EpochJob<'_> {
    fn run(&self, worker: usize, workers: usize, v: Views<'_>) -> Result<f64, TrainError> {
        let mut d_wi = vec![0f64; self.dim];
        let mut d_wj = vec![0f64; self.dim];
        let mut total = 0f64;
        for &k in &self.order[partition(self.order.len(), workers, worker)] {
            if self.abort.load(Ordering::Relaxed) {
                break;
            }
            let (i, j, _) = self.entries[k];
            let (i, j) = (i as usize, j as usize);
            let wi = v.word.row_mut(i);
            let wj = v.context.row_mut(j);
            let bi = &mut v.word_bias.row_mut(i)[0];
            let bj = &mut v.context_bias.row_mut(j)[0];
            let (loss, g_bias) =
                entry_gradient(wi, wj, *bi, *bj, self.log_x[k], self.weights[k], &mut d_wi, &mut d_wj);
            if !loss.is_finite() {
                self.abort.store(true, Ordering::Relaxed);
                return Err(TrainError::NonFinite {
                    epoch: self.epoch,
                    worker,
                    item: k,
                    lr: self.lr,
                    loss,
                });
            }
            total += loss;
            let (sq_i, sq_j) = (v.word_sq.row_mut(i), v.context_sq.row_mut(j));
            for d in 0..self.dim {
                adagrad(&mut wi[d], &mut sq_i[d], d_wi[d], self.lr);
                adagrad(&mut wj[d], &mut sq_j[d], d_wj[d], self.lr);
            }
            adagrad(bi, &mut v.word_bias_sq.row_mut(i)[0], g_bias, self.lr);
            adagrad(bj, &mut v.context_bias_sq.row_mut(j)[0], g_bias, self.lr);
        }
        Ok(total)
    }
}

/// Trains on a prebuilt co-occurrence matrix for the given vocabulary.
pub fn train_glove(
    matrix: &CooccurrenceMatrix,
    vocab: &Vocabulary,
    config: &GloveConfig,
) -> Result<Trained, TrainError> {
    let start = Instant::now();
    let mut trainer = GloveTrainer::new(matrix, config)?;
    let mut stats = TrainStats {
        scheduled_updates: (matrix.len() * config.epochs) as u64,
        ..TrainStats::default()
    };
    for _ in 0..config.epochs {
        stats.epoch_losses.push(trainer.epoch()?);
        stats.positions += matrix.len() as u64;
    }
    stats.wall_time = start.elapsed();
    Ok(Trained {
        model: trainer.into_model(vocab),
        stats,
    })
}

/// Builds vocabulary and co-occurrences from `corpus`, then trains.
pub fn fit_glove(corpus: CorpusView<'_>, config: &GloveConfig) -> Result<Trained, TrainError> {
    config.validate()?;
    let vocab = Vocabulary::build(corpus, config.min_count)?;
    let matrix = build_cooccurrence(corpus, &vocab, config.window, config.workers);
    train_glove(&matrix, &vocab, config)
}
