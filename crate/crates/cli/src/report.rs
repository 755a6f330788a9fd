//! Record emission (CSV or JSON array) and run manifests.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A flat output row with a fixed column order.
pub trait Record: Serialize {
    const HEADER: &'static [&'static str];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Streams `records` to `w`. CSV always starts with the header, so an empty
/// stream yields a header-only file; rows end in a bare LF.
pub fn write_report<R, I, W>(records: I, w: W, format: Format) -> Result<usize, ReportError>
where
    R: Record,
    I: IntoIterator<Item = R>,
    W: Write,
{
    let mut count = 0;
    match format {
        Format::Csv => {
            let mut csv = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(w);
            csv.write_record(R::HEADER)?;
            for r in records {
                csv.serialize(r)?;
                count += 1;
            }
            csv.flush()?;
        }
        Format::Json => {
            let mut w = w;
            w.write_all(b"[")?;
            for r in records {
                if count > 0 {
                    w.write_all(b",")?;
                }
                w.write_all(b"\n")?;
                serde_json::to_writer(&mut w, &r)?;
                count += 1;
            }
            w.write_all(if count > 0 { b"\n]\n" } else { b"]\n" })?;
            w.flush()?;
        }
    }
    Ok(count)
}

/// [`write_report`] into a file; returns the file's SHA-256.
pub fn emit_report<R, I>(records: I, path: &Path, format: Format) -> Result<String, ReportError>
where
    R: Record,
    I: IntoIterator<Item = R>,
{
    let mut w = HashingWriter::new(BufWriter::new(File::create(path)?));
    write_report(records, &mut w, format)?;
    w.finish()
}

/// Writer that hashes everything passing through it.
pub struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, hasher: Sha256::new() }
    }

    pub fn finish(mut self) -> Result<String, ReportError> {
        self.inner.flush()?;
        Ok(hex::encode(self.hasher.finalize()))
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let k = self.inner.write(buf)?;
        self.hasher.update(&buf[..k]);
        Ok(k)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 over `blob <len>\0<bytes>`, the framing git uses for objects.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}
