//! JSON-lines readers and writers with line-numbered diagnostics.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// Streaming reader over one JSON value per line. Blank lines are skipped.
pub struct JsonlReader<T> {
    lines: std::io::Lines<BufReader<File>>,
    file: String,
    line: usize,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned> JsonlReader<T> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let handle = File::open(path).map_err(|e| Error::io(format!("opening {file}"), e))?;
        Ok(JsonlReader {
            lines: BufReader::new(handle).lines(),
            file,
            line: 0,
            _marker: PhantomData,
        })
    }
}

impl<T: DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line += 1;
            match self.lines.next()? {
                Err(e) => {
                    return Some(Err(Error::io(
                        format!("reading {}:{}", self.file, self.line),
                        e,
                    )))
                }
                Ok(raw) => {
                    if raw.trim().is_empty() {
                        continue;
                    }
                    return Some(
                        serde_json::from_str(&raw)
                            .map_err(|e| Error::data(&self.file, self.line, e.to_string())),
                    );
                }
            }
        }
    }
}

/// Collect a whole JSON-lines file into memory.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    JsonlReader::open(path)?.collect()
}

/// Buffered JSON-lines writer.
pub struct JsonlWriter<W: Write> {
    out: W,
}

impl JsonlWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let handle = File::create(path).map_err(|e| Error::io(format!("creating {file}"), e))?;
        Ok(JsonlWriter {
            out: BufWriter::new(handle),
        })
    }
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        JsonlWriter { out }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)
            .map_err(|e| Error::data("<output>", 0, e.to_string()))?;
        self.out
            .write_all(b"\n")
            .map_err(|e| Error::io("writing record", e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io("flushing output", e))
    }
}

/// Write every record of an iterator to `path`.
pub fn write_all<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = JsonlWriter::create(path)?;
    for record in records {
        writer.write(&record)?;
    }
    writer.finish()
}
