use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tempfile::NamedTempFile;

use super::{Document, EvalSample};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct DocumentLine {
    id: String,
    text: String,
}

/// Streaming reader over a JSONL corpus. Yields one document per line.
pub struct CorpusReader<R> {
    reader: R,
    buf: Vec<u8>,
    line: usize,
    offset: usize,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            buf: Vec::new(),
            line: 0,
            offset: 0,
        }
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        self.buf.clear();
        let read = self.reader.read_until(b'\n', &mut self.buf)?;
        if read == 0 {
            return Ok(None);
        }
        self.line += 1;
        let start = self.offset;
        self.offset += read;
        if self.buf.last() == Some(&b'\n') {
            self.buf.pop();
        }
        match std::str::from_utf8(&self.buf) {
            Ok(s) => Ok(Some(s.to_owned())),
            Err(e) => Err(Error::InvalidUtf8 {
                offset: start + e.valid_up_to(),
            }),
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        let raw = match self.next_line() {
            Ok(Some(raw)) => raw,
            Ok(None) => return None,
            Err(e) => return Some(Err(e)),
        };
        let line = self.line;
        Some(
            serde_json::from_str::<DocumentLine>(&raw)
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })
                .and_then(|d| {
                    if d.id.is_empty() {
                        Err(Error::Parse {
                            line,
                            message: "empty document id".into(),
                        })
                    } else {
                        Ok(Document::with_raw(d.id, d.text, raw))
                    }
                }),
        )
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .map_err(|e| Error::io(path, e))
}

/// Opens a JSONL corpus for streaming.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<CorpusReader<BufReader<File>>> {
    Ok(CorpusReader::new(open(path.as_ref())?))
}

/// Loads a whole evaluation set, rejecting duplicate ids and empty inputs.
pub fn read_eval(path: impl AsRef<Path>) -> Result<Vec<EvalSample>> {
    parse_eval(open(path.as_ref())?)
}

pub(crate) fn parse_eval<R: BufRead>(reader: R) -> Result<Vec<EvalSample>> {
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut lines = CorpusReader::new(reader);
    while let Some(raw) = lines.next_line()? {
        let line = lines.line;
        let sample: EvalSample = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if sample.id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty sample id".into(),
            });
        }
        if sample.input_text.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("sample {:?} has empty text", sample.id),
            });
        }
        if !seen.insert(sample.id.clone()) {
            return Err(Error::DuplicateSample {
                id: sample.id,
                line,
            });
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// An output file that only appears at its destination once committed.
///
/// Writes go to a temporary file in the destination directory; dropping the
/// value without calling [`AtomicFile::commit`] removes the temporary file.
pub struct AtomicFile {
    writer: BufWriter<NamedTempFile>,
    dest: PathBuf,
}

impl AtomicFile {
    pub fn create(dest: impl AsRef<Path>) -> Result<Self> {
        let dest = dest.as_ref().to_path_buf();
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let tmp = tempfile::Builder::new()
            .prefix(".contamkit-")
            .tempfile_in(&dir)
            .map_err(|e| Error::io(&dest, e))?;
        Ok(Self {
            writer: BufWriter::with_capacity(1 << 20, tmp),
            dest,
        })
    }

    pub fn commit(self) -> Result<()> {
        let dest = self.dest;
        let tmp = self
            .writer
            .into_inner()
            .map_err(|e| Error::io(&dest, e.into_error()))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(&dest, e))?;
        tmp.persist(&dest).map_err(|e| Error::io(&dest, e.error))?;
        Ok(())
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }
}

/// Writes documents as JSONL, one per line, in the order given.
pub struct CorpusWriter<W: Write> {
    out: W,
}

impl<W: Write> CorpusWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, doc: &Document) -> Result<()> {
        match &doc.raw {
            Some(raw) => self.out.write_all(raw.as_bytes())?,
            None => serde_json::to_writer(
                &mut self.out,
                &super::DocumentRecord {
                    id: &doc.id,
                    text: &doc.text,
                },
            )
            .map_err(std::io::Error::from)?,
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Writes a corpus atomically to `path`.
pub fn write_corpus<I>(docs: I, path: impl AsRef<Path>) -> Result<()>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut writer = CorpusWriter::new(AtomicFile::create(path)?);
    for doc in docs {
        writer.write(&doc?)?;
    }
    writer.into_inner().commit()
}

/// Writes evaluation samples atomically to `path`.
pub fn write_eval<'a, I>(samples: I, path: impl AsRef<Path>) -> Result<()>
where
    I: IntoIterator<Item = &'a EvalSample>,
{
    let mut out = AtomicFile::create(path)?;
    for s in samples {
        serde_json::to_writer(&mut out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(input: &str) -> Vec<Result<Document>> {
        CorpusReader::new(input.as_bytes()).collect()
    }

    #[test]
    fn reads_three_documents() {
        let input = "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"y\",\"meta\":1}\n{\"id\":\"c\",\"text\":\"\"}\n";
        let out: Vec<_> = docs(input).into_iter().map(|d| d.unwrap()).collect();
        assert_eq!(out.len(), 3);
        assert_eq!(out[1].id, "b");
        assert_eq!(out[2].text, "");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\": oops}\n";
        let err = docs(input).into_iter().nth(1).unwrap().unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }

    #[test]
    fn empty_id_is_rejected() {
        let err = docs("{\"id\":\"\",\"text\":\"x\"}\n")
            .remove(0)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn invalid_utf8_offset_is_file_relative() {
        let mut input = b"{\"id\":\"a\",\"text\":\"x\"}\n".to_vec();
        let second_line = input.len();
        input.extend_from_slice(b"{\"id\":\"b\",\"text\":\"\xfe\"}\n");
        let err = CorpusReader::new(&input[..]).nth(1).unwrap().unwrap_err();
        match err {
            Error::InvalidUtf8 { offset } => assert_eq!(offset, second_line + 18),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn writer_preserves_raw_lines() {
        let input = "{\"text\": \"x\",  \"id\":\"a\", \"extra\": [1,2]}\n";
        let mut w = CorpusWriter::new(Vec::new());
        for d in docs(input) {
            w.write(&d.unwrap()).unwrap();
        }
        assert_eq!(String::from_utf8(w.into_inner()).unwrap(), input);
    }

    #[test]
    fn duplicate_eval_ids_fail_to_load() {
        let input = "{\"id\":\"1\",\"dataset\":\"d\",\"text\":\"a\"}\n{\"id\":\"1\",\"dataset\":\"d\",\"text\":\"b\"}\n";
        let err = parse_eval(input.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateSample { line: 2, .. }));
    }

    #[test]
    fn eval_optional_fields() {
        let input = "{\"id\":\"1\",\"dataset\":\"mmlu\",\"text\":\"q\",\"answer\":\"B\",\"choices\":[\"x\",\"y\"]}\n";
        let s = parse_eval(input.as_bytes()).unwrap().remove(0);
        assert_eq!(s.answer.as_deref(), Some("B"));
        assert_eq!(s.choices.unwrap().len(), 2);
        assert!(s.prompt.is_none());
    }

    #[test]
    fn empty_eval_text_is_rejected() {
        let input = "{\"id\":\"1\",\"dataset\":\"d\",\"text\":\"\"}\n";
        assert!(parse_eval(input.as_bytes()).is_err());
    }

    #[test]
    fn uncommitted_atomic_file_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("out.jsonl");
        {
            let mut f = AtomicFile::create(&dest).unwrap();
            f.write_all(b"partial").unwrap();
        }
        assert!(!dest.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        let mut f = AtomicFile::create(&dest).unwrap();
        f.write_all(b"done").unwrap();
        f.commit().unwrap();
        assert_eq!(std::fs::read(&dest).unwrap(), b"done");
    }
}
