//! The duplication-factor sweep: train and evaluate every model at every
//! ρ for several seeds, then aggregate per cell and per model.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, TokenizedCorpus};
use crate::eval::{evaluate, EvalSet};
use crate::glove::{build_cooccurrence, train_glove, GloveConfig};
use crate::model::ModelTag;
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::sgns::{train_sgns, SgnsConfig};
use crate::train::{TrainError, Trained};
use crate::vocab::{UnigramTable, Vocabulary};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("every run of {model} at rho={rho} failed; first error: {error}")]
    CellFailed { model: ModelTag, rho: usize, error: String },
    #[error("no rho=1 records for {0}; improvement is undefined")]
    MissingBaseline(ModelTag),
    #[error("no records to summarize")]
    NoRecords,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub fn default_rho_grid() -> Vec<usize> {
    std::iter::once(1).chain((2..=30).step_by(2)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub rho_grid: Vec<usize>,
    pub models: Vec<ModelTag>,
    pub runs: usize,
    pub base_seed: u64,
    /// Shared by all word2vec/fastText models; algorithm, mode and seed are
    /// set per run.
    pub sgns: SgnsConfig,
    /// Seed is set per run.
    pub glove: GloveConfig,
    /// Concurrent training jobs.
    pub jobs: usize,
    /// Corpus file; relative paths (here and below) resolve against the
    /// config file's directory.
    pub corpus: Option<PathBuf>,
    pub evalset: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            rho_grid: default_rho_grid(),
            models: ModelTag::ALL.to_vec(),
            runs: 5,
            base_seed: 1,
            sgns: SgnsConfig::default(),
            glove: GloveConfig::default(),
            jobs: 1,
            corpus: None,
            evalset: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::InvalidConfig(m.to_owned()));
        if self.rho_grid.first() != Some(&1) {
            return bad("rho_grid must start with 1");
        }
        if !self.rho_grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("rho_grid must be strictly ascending");
        }
        if self.models.is_empty() {
            return bad("models must not be empty");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        for tag in &self.models {
            let check = match tag {
                ModelTag::Glove => self.glove_config(0).validate(),
                _ => self.sgns_config(*tag, 0).validate(),
            };
            check.map_err(|e| SweepError::InvalidConfig(format!("{tag}: {e}")))?;
        }
        Ok(())
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn sgns_config(&self, tag: ModelTag, seed: u64) -> SgnsConfig {
        SgnsConfig {
            algorithm: tag.algorithm(),
            mode: tag.mode().unwrap_or(self.sgns.mode),
            seed,
            ..self.sgns.clone()
        }
    }

    pub fn glove_config(&self, seed: u64) -> GloveConfig {
        GloveConfig {
            seed,
            ..self.glove.clone()
        }
    }

    fn config_snapshot(&self, tag: ModelTag, seed: u64) -> String {
        match tag {
            ModelTag::Glove => serde_json::to_string(&self.glove_config(seed)),
            _ => serde_json::to_string(&self.sgns_config(tag, seed)),
        }
        .expect("configs serialize")
    }

    /// Reads the config and resolves its relative paths.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let mut config: SweepConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let paths = [&mut config.corpus, &mut config.evalset, &mut config.pipeline.stopword_path];
        for p in paths.into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: ModelTag,
    pub rho: usize,
    pub run: usize,
    pub seed: u64,
    pub mean_tau: f64,
    pub wall_time_s: f64,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub model: ModelTag,
    pub rho: usize,
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

struct Prepared {
    sgns: Option<(Vocabulary, UnigramTable)>,
    glove: Option<(Vocabulary, crate::glove::CooccurrenceMatrix)>,
}

fn prepare(corpus: &TokenizedCorpus, rho: usize, config: &SweepConfig) -> Result<Prepared, TrainError> {
    let view = corpus.repeated(rho).expect("rho validated");
    let sgns = if config.models.iter().any(|t| *t != ModelTag::Glove) {
        let vocab = Vocabulary::build(view, config.sgns.min_count)?;
        let size = config.sgns.table_size.max(vocab.len());
        let table = UnigramTable::build(&vocab, config.sgns.table_power, size)?;
        Some((vocab, table))
    } else {
        None
    };
    let glove = if config.models.contains(&ModelTag::Glove) {
        let vocab = Vocabulary::build(view, config.glove.min_count)?;
        let matrix = build_cooccurrence(view, &vocab, config.glove.window, config.glove.workers);
        Some((vocab, matrix))
    } else {
        None
    };
    Ok(Prepared { sgns, glove })
}

/// Runs every (ρ, model, run) cell. Vocabulary, sampling table and
/// co-occurrences are built once per ρ over a streamed repetition of
/// `corpus`. Records come back ordered by ρ, model, then run.
pub fn run_sweep(
    corpus: &TokenizedCorpus,
    evalset: &EvalSet,
    pipeline: &Pipeline,
    config: &SweepConfig,
) -> Result<SweepOutcome, SweepError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| SweepError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let mut outcome = SweepOutcome::default();
    for &rho in &config.rho_grid {
        let view = corpus.repeated(rho)?;
        let prepared = prepare(corpus, rho, config);
        let cells: Vec<(ModelTag, usize)> = config
            .models
            .iter()
            .flat_map(|&m| (0..config.runs).map(move |r| (m, r)))
            .collect();
        let results: Vec<Result<RunRecord, RunFailure>> = pool.install(|| {
            cells
                .par_iter()
                .map(|&(model, run)| {
                    let seed = config.seed(run);
                    let trained = match &prepared {
                        Err(e) => Err(e.to_string()),
                        Ok(p) => train_cell(view, p, config, model, seed).map_err(|e| e.to_string()),
                    };
                    match trained {
                        Ok(t) => {
                            let tau = evaluate(&t.model, evalset, pipeline);
                            Ok(RunRecord {
                                model,
                                rho,
                                run,
                                seed,
                                mean_tau: tau.mean_tau,
                                wall_time_s: t.stats.wall_time.as_secs_f64(),
                                config: config.config_snapshot(model, seed),
                            })
                        }
                        Err(error) => Err(RunFailure { model, rho, run, seed, error }),
                    }
                })
                .collect()
        });
        for chunk in results.chunks(config.runs) {
            if chunk.iter().all(Result::is_err) {
                let f = chunk[0].as_ref().unwrap_err();
                return Err(SweepError::CellFailed {
                    model: f.model,
                    rho,
                    error: f.error.clone(),
                });
            }
            for r in chunk {
                match r {
                    Ok(rec) => outcome.records.push(rec.clone()),
                    Err(f) => outcome.failures.push(f.clone()),
                }
            }
        }
    }
    Ok(outcome)
}

fn train_cell(
    view: crate::corpus::CorpusView<'_>,
    prepared: &Prepared,
    config: &SweepConfig,
    model: ModelTag,
    seed: u64,
) -> Result<Trained, TrainError> {
    match model {
        ModelTag::Glove => {
            let (vocab, matrix) = prepared.glove.as_ref().expect("glove prepared");
            train_glove(matrix, vocab, &config.glove_config(seed))
        }
        tag => {
            let (vocab, table) = prepared.sgns.as_ref().expect("sgns prepared");
            train_sgns(view, vocab, table, &config.sgns_config(tag, seed))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: ModelTag,
    pub rho: usize,
    pub runs: usize,
    pub tau_mean: f64,
    /// Population standard deviation over runs.
    pub tau_std: f64,
    pub wall_time_mean_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelTag,
    pub tau_at_1x: f64,
    pub max_tau: f64,
    pub argmax_rho: usize,
    /// `None` when the 1× score is exactly 0.
    pub improvement_pct: Option<f64>,
    pub time_at_argmax_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: Vec<CellSummary>,
    pub models: Vec<ModelSummary>,
}

pub fn improvement_pct(tau_at_1x: f64, max_tau: f64) -> Option<f64> {
    (tau_at_1x != 0.0).then(|| 100.0 * (max_tau - tau_at_1x) / tau_at_1x)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates records per (model, ρ) in run order, then picks each
/// model's best ρ (smallest ρ on ties).
pub fn summarize(records: &[RunRecord]) -> Result<SweepSummary, SweepError> {
    if records.is_empty() {
        return Err(SweepError::NoRecords);
    }
    let mut grouped: BTreeMap<(ModelTag, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry((r.model, r.rho)).or_default().push(r);
    }
    let cells: Vec<CellSummary> = grouped
        .into_iter()
        .map(|((model, rho), mut rs)| {
            rs.sort_by_key(|r| r.run);
            let taus: Vec<f64> = rs.iter().map(|r| r.mean_tau).collect();
            let (tau_mean, tau_std) = mean_std(&taus);
            let times: Vec<f64> = rs.iter().map(|r| r.wall_time_s).collect();
            CellSummary {
                model,
                rho,
                runs: rs.len(),
                tau_mean,
                tau_std,
                wall_time_mean_s: mean_std(&times).0,
            }
        })
        .collect();

    let mut models = Vec::new();
    let mut i = 0;
    while i < cells.len() {
        let model = cells[i].model;
        let end = i + cells[i..].iter().take_while(|c| c.model == model).count();
        let group = &cells[i..end];
        let base = group
            .iter()
            .find(|c| c.rho == 1)
            .ok_or(SweepError::MissingBaseline(model))?;
        let best = group
            .iter()
            .fold(&group[0], |best, c| if c.tau_mean > best.tau_mean { c } else { best });
        models.push(ModelSummary {
            model,
            tau_at_1x: base.tau_mean,
            max_tau: best.tau_mean,
            argmax_rho: best.rho,
            improvement_pct: improvement_pct(base.tau_mean, best.tau_mean),
            time_at_argmax_min: best.wall_time_mean_s / 60.0,
        });
        i = end;
    }
    Ok(SweepSummary { cells, models })
}
