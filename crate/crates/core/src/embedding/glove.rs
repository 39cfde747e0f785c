use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{check_token, log_summary, EmbeddingFormat, EmbeddingStore, StoreBuilder};
use crate::error::{Error, Result};

/// Read a GloVe-style text file. The first data line fixes the dimension;
/// `limit` caps the number of distinct words kept.
pub fn load_glove_text(path: impl AsRef<Path>, limit: Option<usize>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut builder: Option<StoreBuilder> = None;
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        if limit.is_some_and(|l| builder.as_ref().is_some_and(|b| b.len() >= l)) {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (token, rest) = line
            .split_once(' ')
            .ok_or_else(|| parse_err(lineno, "expected `<token> <f1> ... <fd>`".into()))?;
        if token.is_empty() {
            return Err(parse_err(lineno, "empty token".into()));
        }
        values.clear();
        for field in rest.split_ascii_whitespace() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(lineno, format!("cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        let b = match builder.as_mut() {
            Some(b) => b,
            None => {
                if values.is_empty() {
                    return Err(parse_err(lineno, "no vector components".into()));
                }
                builder.insert(StoreBuilder::new(values.len())?)
            }
        };
        if values.len() != b.store.dim {
            return Err(parse_err(
                lineno,
                format!("dimension mismatch: expected {}, found {}", b.store.dim, values.len()),
            ));
        }
        b.push(token, &values)?;
    }

    let store = builder
        .ok_or_else(|| Error::EmptyFile {
            path: path.to_path_buf(),
        })?
        .finish();
    log_summary(path, EmbeddingFormat::GloveText, &store);
    Ok(store)
}

/// Write one `<token> <f1> ... <fd>` line per word. Values are written at
/// single precision.
pub fn save_glove_text(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for (word, row) in store.words().iter().zip(store.rows()) {
        check_token(word)?;
        w.write_all(word.as_bytes()).map_err(io)?;
        for v in row {
            write!(w, " {}", *v as f32).map_err(io)?;
        }
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}
