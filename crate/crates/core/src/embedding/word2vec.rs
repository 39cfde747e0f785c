use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::path::Path;

use super::{check_token, log_summary, EmbeddingFormat, EmbeddingStore, StoreBuilder};
use crate::error::{Error, Result};

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: BufRead> CountingReader<R> {
    fn read_exact_at(&mut self, buf: &mut [u8]) -> std::io::Result<bool> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(true)
            }
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn next_byte(&mut self) -> std::io::Result<Option<u8>> {
        let mut b = [0u8; 1];
        Ok(self.read_exact_at(&mut b)?.then_some(b[0]))
    }
}

/// Read the original word2vec binary layout.
pub fn load_word2vec_binary(path: impl AsRef<Path>, limit: Option<usize>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = CountingReader {
        inner: BufReader::with_capacity(1 << 20, file),
        offset: 0,
    };
    let bin_err = |offset: u64, message: String| Error::Binary {
        path: path.to_path_buf(),
        offset,
        message,
    };
    let io = |e| Error::io(path, e);

    let mut header = Vec::new();
    loop {
        match r.next_byte().map_err(io)? {
            Some(b'\n') => break,
            Some(b) => header.push(b),
            None => {
                if header.is_empty() {
                    return Err(Error::EmptyFile {
                        path: path.to_path_buf(),
                    });
                }
                return Err(bin_err(r.offset, "header is not newline-terminated".into()));
            }
        }
    }
    let header = String::from_utf8_lossy(&header);
    let mut fields = header.split_ascii_whitespace();
    let (vocab_size, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(n), Some(d), None) => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) if d > 0 => (n, d),
            _ => return Err(bin_err(0, format!("unparseable header {header:?}"))),
        },
        _ => return Err(bin_err(0, format!("unparseable header {header:?}"))),
    };

    let wanted = limit.map_or(vocab_size, |l| l.min(vocab_size));
    let mut builder = StoreBuilder::with_capacity(dim, wanted.min(1 << 22))?;
    let mut token = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut values = vec![0.0f64; dim];
    for entry in 0..wanted {
        token.clear();
        loop {
            match r.next_byte().map_err(io)? {
                Some(b' ') => break,
                Some(b'\n') if token.is_empty() => {}
                Some(b) => token.push(b),
                None => {
                    return Err(bin_err(
                        r.offset,
                        format!("truncated file: header declares {vocab_size} words, entry {entry} is incomplete"),
                    ))
                }
            }
        }
        let start = r.offset;
        if !r.read_exact_at(&mut raw).map_err(io)? {
            return Err(bin_err(
                start,
                format!("truncated file: vector for entry {entry} needs {} bytes", dim * 4),
            ));
        }
        for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
            let x = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !x.is_finite() {
                return Err(bin_err(start, format!("non-finite value in entry {entry}")));
            }
            *v = x as f64;
        }
        builder.push(String::from_utf8_lossy(&token).into_owned(), &values)?;
    }

    let store = builder.finish();
    log_summary(path, EmbeddingFormat::Word2vecBinary, &store);
    Ok(store)
}

/// Write the word2vec binary layout with a trailing `\n` after each vector.
/// Values are stored as f32.
pub fn save_word2vec_binary(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", store.len(), store.dim()).map_err(io)?;
    for (word, row) in store.words().iter().zip(store.rows()) {
        check_token(word)?;
        w.write_all(word.as_bytes()).map_err(io)?;
        w.write_all(b" ").map_err(io)?;
        for v in row {
            w.write_all(&(*v as f32).to_le_bytes()).map_err(io)?;
        }
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}
