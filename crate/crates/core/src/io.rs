//! Line-oriented readers and writers: bitext, Pharaoh files and JSONL.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn open(path: impl AsRef<Path>) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Number of lines in a file, without holding it in memory.
pub fn count_lines(path: impl AsRef<Path>) -> Result<usize> {
    let mut n = 0;
    for line in open(path)?.lines() {
        line?;
        n += 1;
    }
    Ok(n)
}

/// Splits a `source<TAB>target` line.
pub fn split_tsv(line: &str) -> (&str, &str) {
    line.split_once('\t').unwrap_or((line, ""))
}

/// Streams JSONL values, skipping blank lines. Errors carry 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> impl Iterator<Item = Result<T>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(k, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(serde_json::from_str(&l).map_err(|source| Error::Json { line: k + 1, source })),
        })
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<'a, T: Serialize + 'a, W: Write>(
    writer: &mut W,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<usize> {
    let mut n = 0;
    for rec in records {
        serde_json::to_writer(&mut *writer, rec).map_err(|source| Error::Json { line: n + 1, source })?;
        writer.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}
