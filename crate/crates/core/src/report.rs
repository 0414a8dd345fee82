//! Report files for a finished sweep.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelTag;
use crate::sweep::{RunRecord, SweepSummary};

pub const SUMMARY_TABLE: &str = "summary_table.txt";
pub const CURVE_DATA: &str = "curve_data.csv";
pub const RUNS: &str = "runs.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportFiles {
    pub summary_table: PathBuf,
    pub curve_data: PathBuf,
    pub runs: PathBuf,
    pub summary_json: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub model: ModelTag,
    pub rho: usize,
    pub tau_mean: f64,
    pub tau_std: f64,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|source| ReportError::Write {
        path: path.to_owned(),
        source,
    })
}

/// Rows sorted by max τ descending, columns as in the usual results table.
pub fn summary_table(summary: &SweepSummary) -> String {
    let mut models = summary.models.clone();
    models.sort_by(|a, b| b.max_tau.total_cmp(&a.max_tau).then(a.model.cmp(&b.model)));
    let header = ["Model", "τ(1×)", "max τ", "ρ", "Improvement %", "Time(min)"].map(String::from);
    let rows: Vec<[String; 6]> = models
        .iter()
        .map(|m| {
            [
                m.model.display_name().to_owned(),
                format!("{:.3}", m.tau_at_1x),
                format!("{:.3}", m.max_tau),
                m.argmax_rho.to_string(),
                m.improvement_pct.map_or("n/a".to_owned(), |p| format!("{p:.1}")),
                format!("{:.1}", m.time_at_argmax_min),
            ]
        })
        .collect();
    let mut widths = header.clone().map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |cells: &[String; 6]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join(" | ").trim_end().to_owned()
    };
    let mut out = String::new();
    out.push_str("# τ: mean Kendall tau-b over evaluation items; sentences embedded as the unweighted mean of word vectors\n");
    out.push_str("# std (curve data): population standard deviation over runs\n");
    out.push_str("# Time(min): mean measured wall time of one training run at the best ρ\n");
    out.push_str(&render(&header));
    out.push('\n');
    for row in &rows {
        out.push_str(&render(row));
        out.push('\n');
    }
    out
}

pub fn curve_points(summary: &SweepSummary) -> Vec<CurvePoint> {
    summary
        .cells
        .iter()
        .map(|c| CurvePoint {
            model: c.model,
            rho: c.rho,
            tau_mean: c.tau_mean,
            tau_std: c.tau_std,
        })
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

/// Writes the table, curve data, raw runs and a json summary into `out_dir`.
pub fn emit_report(summary: &SweepSummary, records: &[RunRecord], out_dir: &Path) -> Result<ReportFiles, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Write {
        path: out_dir.to_owned(),
        source,
    })?;
    let files = ReportFiles {
        summary_table: out_dir.join(SUMMARY_TABLE),
        curve_data: out_dir.join(CURVE_DATA),
        runs: out_dir.join(RUNS),
        summary_json: out_dir.join(SUMMARY_JSON),
    };
    write_file(&files.summary_table, summary_table(summary))?;
    write_file(&files.curve_data, to_csv(&curve_points(summary)))?;
    write_file(&files.runs, to_csv(records))?;
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    write_file(&files.summary_json, json + "\n")?;
    Ok(files)
}

fn from_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReportError> {
    let err = |message: String| ReportError::Read {
        path: path.to_owned(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| err(e.to_string()))
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, ReportError> {
    from_csv(path)
}

pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>, ReportError> {
    from_csv(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{mean_std, summarize};

    fn records() -> Vec<RunRecord> {
        let mut out = Vec::new();
        for (k, &model) in ModelTag::ALL.iter().enumerate() {
            for rho in [1, 2, 4] {
                for run in 0..3 {
                    out.push(RunRecord {
                        model,
                        rho,
                        run,
                        seed: 7 + run as u64,
                        mean_tau: 0.1 * k as f64 + 0.013 * rho as f64 + 0.0071 * run as f64 + 1.0 / 3.0,
                        wall_time_s: 1.25 * rho as f64,
                        config: r#"{"dim":10,"window":5}"#.into(),
                    });
                }
            }
        }
        out
    }

    #[test]
    fn files_and_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records();
        let summary = summarize(&recs).unwrap();
        let files = emit_report(&summary, &recs, dir.path()).unwrap();
        let table = fs::read_to_string(&files.summary_table).unwrap();
        let data_rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data_rows.len(), 5);
        assert!(data_rows[0].starts_with("Glove"));
        assert!(table.contains("population standard deviation"));
        assert!(!table.contains(','));
        assert_eq!(read_curve(&files.curve_data).unwrap().len(), 5 * 3);
        assert_eq!(read_runs(&files.runs).unwrap(), recs);
        let json: SweepSummary = serde_json::from_str(&fs::read_to_string(&files.summary_json).unwrap()).unwrap();
        assert_eq!(json, summary);
    }

    #[test]
    fn curve_matches_recomputed_runs() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records();
        let files = emit_report(&summarize(&recs).unwrap(), &recs, dir.path()).unwrap();
        let runs = read_runs(&files.runs).unwrap();
        for p in read_curve(&files.curve_data).unwrap() {
            let taus: Vec<f64> = runs
                .iter()
                .filter(|r| r.model == p.model && r.rho == p.rho)
                .map(|r| r.mean_tau)
                .collect();
            let (m, s) = mean_std(&taus);
            assert!((m - p.tau_mean).abs() < 1e-12);
            assert!((s - p.tau_std).abs() < 1e-12);
        }
    }

    #[test]
    fn table_uses_decimal_points() {
        let mut recs = records();
        recs.retain(|r| r.model == ModelTag::FTsg);
        let s = summarize(&recs).unwrap();
        let line = summary_table(&s).lines().last().unwrap().to_owned();
        let cols: Vec<&str> = line.split('|').map(str::trim).collect();
        assert_eq!(cols[0], "FastText Skipgram");
        assert_eq!(cols[3], "4");
        assert!(cols[4].contains('.'));
    }

    #[test]
    fn unwritable_dir() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let recs = records();
        let err = emit_report(&summarize(&recs).unwrap(), &recs, &blocker.join("sub")).unwrap_err();
        assert!(matches!(err, ReportError::Write { .. }));
    }
}
