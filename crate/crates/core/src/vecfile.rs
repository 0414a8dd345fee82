//! The text vector format: a `V dim` header, then one `token v1 .. vdim`
//! line per word.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::model::EmbeddingModel;

#[derive(Debug, Error)]
pub enum VecFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> VecFileError {
    VecFileError::Parse {
        line,
        message: message.into(),
    }
}

/// Writes vocabulary words in id order. Components use the shortest
/// decimal form that reads back to the same `f32`.
pub fn write_vec<W: Write>(model: &EmbeddingModel, mut w: W) -> io::Result<()> {
    writeln!(w, "{} {}", model.vocab.len(), model.dim())?;
    let mut line = String::new();
    for id in 0..model.vocab.len() as u32 {
        line.clear();
        line.push_str(model.vocab.token_of(id));
        for x in model.vocab_vector(id) {
            line.push(' ');
            line.push_str(&x.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn save_vec(model: &EmbeddingModel, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vec(model, &mut w)?;
    w.flush()
}

/// Reads a vector file into a vectors-only model. Trailing whitespace on
/// rows is accepted.
pub fn read_vec<R: BufRead>(reader: R) -> Result<EmbeddingModel, VecFileError> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [rows, dim] = fields[..] else {
        return Err(parse_err(1, format!("expected \"V dim\", got {header:?}")));
    };
    let rows: usize = rows
        .parse()
        .map_err(|_| parse_err(1, format!("bad vocabulary size {rows:?}")))?;
    let dim: usize = dim
        .parse()
        .map_err(|_| parse_err(1, format!("bad dimension {dim:?}")))?;
    if dim == 0 {
        return Err(parse_err(1, "dimension must be at least 1"));
    }

    let mut tokens = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == rows {
            return Err(parse_err(lineno, format!("more rows than the {rows} declared")));
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line has a field");
        let before = data.len();
        for p in parts {
            let x: f32 = p
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad component {p:?}")))?;
            data.push(x);
        }
        let got = data.len() - before;
        if got != dim {
            return Err(parse_err(lineno, format!("expected {dim} components, got {got}")));
        }
        tokens.push(token.to_owned());
    }
    if tokens.len() != rows {
        return Err(parse_err(
            tokens.len() + 2,
            format!("expected {rows} rows, found {}", tokens.len()),
        ));
    }
    Ok(EmbeddingModel::from_vectors(tokens, Matrix::from_vec(rows, dim, data)))
}

pub fn load_vec(path: &Path) -> Result<EmbeddingModel, VecFileError> {
    read_vec(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_many_rows_reports_line() {
        let text = "2 3\na 1 2 3\nb 4 5 6\nc 7 8 9\n";
        match read_vec(text.as_bytes()) {
            Err(VecFileError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_reports_line() {
        let text = "2 3\na 1 2 3\nb 4 5\n";
        match read_vec(text.as_bytes()) {
            Err(VecFileError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(
            read_vec("x y\n".as_bytes()),
            Err(VecFileError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_vec("3\n".as_bytes()),
            Err(VecFileError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_rows() {
        assert!(matches!(
            read_vec("3 1\na 1\n".as_bytes()),
            Err(VecFileError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn trailing_spaces_accepted() {
        let m = read_vec("1 2\nkali 0.5 -1.25 \n".as_bytes()).unwrap();
        assert_eq!(m.word_vector("kali").vector, vec![0.5, -1.25]);
        assert!(m.word_vector("atl").oov);
    }

    #[test]
    fn round_trip_is_exact() {
        let vectors = Matrix::from_vec(2, 3, vec![1e-7, -0.123456789, 3.0, f32::MIN_POSITIVE, 1e20, -0.0]);
        let m = EmbeddingModel::from_vectors(vec!["a".into(), "b".into()], vectors);
        let mut buf = Vec::new();
        write_vec(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('e'), "decimal notation expected: {text}");
        let back = read_vec(&buf[..]).unwrap();
        assert_eq!(back.input, m.input);
    }
}
