use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::hash::{BuildHasherDefault, Hasher};
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fingerprint::{NGramFingerprint, NGramHasher};
use crate::corpus_io::AtomicFile;
use crate::error::{Error, Result};

/// Which collection an index was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    EvalSide,
    CorpusSide,
}

impl IndexSource {
    fn tag(self) -> u8 {
        match self {
            IndexSource::EvalSide => 0,
            IndexSource::CorpusSide => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(IndexSource::EvalSide),
            1 => Ok(IndexSource::CorpusSide),
            t => Err(Error::IndexFormat(format!("unknown source tag {t}"))),
        }
    }
}

// Fingerprints are already mixed; hashing them again is wasted work.
#[derive(Default)]
struct IdentityHasher(u64);

impl Hasher for IdentityHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 << 8) | u64::from(b);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

type FingerprintSet = HashSet<u64, BuildHasherDefault<IdentityHasher>>;
type VerifyStore = HashMap<u64, Vec<Vec<String>>, BuildHasherDefault<IdentityHasher>>;

/// Immutable membership set of n-gram fingerprints.
#[derive(Debug, Clone)]
pub struct NGramIndex {
    hasher: NGramHasher,
    source: IndexSource,
    entries: FingerprintSet,
    verify: Option<VerifyStore>,
}

impl PartialEq for NGramIndex {
    fn eq(&self, other: &Self) -> bool {
        self.hasher == other.hasher
            && self.source == other.source
            && self.entries == other.entries
            && self.verify == other.verify
    }
}

impl NGramIndex {
    pub fn n(&self) -> usize {
        self.hasher.n()
    }

    pub fn seed(&self) -> u64 {
        self.hasher.seed()
    }

    pub fn source(&self) -> IndexSource {
        self.source
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn has_verify_store(&self) -> bool {
        self.verify.is_some()
    }

    pub fn hasher(&self) -> &NGramHasher {
        &self.hasher
    }

    /// Membership of an `n`-token window. With a verify store the tokens are
    /// compared exactly, so fingerprint collisions never produce a hit.
    pub fn contains<S: AsRef<str>>(&self, window: &[S]) -> Result<bool> {
        let fp = self.hasher.fingerprint(window)?;
        Ok(self.contains_checked(fp, window))
    }

    pub fn contains_fingerprint(&self, fp: NGramFingerprint) -> bool {
        self.entries.contains(&fp.0)
    }

    fn contains_checked<S: AsRef<str>>(&self, fp: NGramFingerprint, window: &[S]) -> bool {
        match &self.verify {
            None => self.entries.contains(&fp.0),
            Some(store) => store.get(&fp.0).is_some_and(|seqs| {
                seqs.iter().any(|seq| {
                    seq.len() == window.len()
                        && seq.iter().zip(window).all(|(a, b)| a == b.as_ref())
                })
            }),
        }
    }

    /// For every window start in `tokens`, whether that window is in the index.
    pub fn window_hits<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<bool> {
        let n = self.n();
        if tokens.len() < n {
            return Vec::new();
        }
        let hashes: Vec<u64> = tokens
            .iter()
            .map(|t| self.hasher.token_hash(t.as_ref()))
            .collect();
        self.hasher
            .windows(&hashes)
            .enumerate()
            .map(|(i, fp)| self.contains_checked(fp, &tokens[i..i + n]))
            .collect()
    }

    /// Sorted fingerprints, the on-disk order.
    pub fn sorted_entries(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.entries.iter().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = AtomicFile::create(path)?;
        self.write_to(&mut out)?;
        out.commit()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::with_capacity(1 << 20, file))
    }
}

/// Single-pass builder for [`NGramIndex`].
pub struct IndexBuilder {
    hasher: NGramHasher,
    source: IndexSource,
    entries: FingerprintSet,
    verify: Option<VerifyStore>,
}

impl IndexBuilder {
    pub fn new(n: usize, seed: u64, source: IndexSource, verify: bool) -> Result<Self> {
        Ok(Self {
            hasher: NGramHasher::new(n, seed)?,
            source,
            entries: FingerprintSet::default(),
            verify: verify.then(VerifyStore::default),
        })
    }

    /// Adds every window of one token sequence. Windows never span two calls.
    pub fn add<S: AsRef<str>>(&mut self, tokens: &[S]) {
        let n = self.hasher.n();
        let hashes: Vec<u64> = tokens
            .iter()
            .map(|t| self.hasher.token_hash(t.as_ref()))
            .collect();
        for (i, fp) in self.hasher.windows(&hashes).enumerate() {
            self.entries.insert(fp.0);
            if let Some(store) = &mut self.verify {
                let window = &tokens[i..i + n];
                let seqs = store.entry(fp.0).or_default();
                if !seqs
                    .iter()
                    .any(|s| s.iter().zip(window).all(|(a, b)| a == b.as_ref()))
                {
                    seqs.push(window.iter().map(|t| t.as_ref().to_owned()).collect());
                }
            }
        }
    }

    pub fn finish(self) -> NGramIndex {
        NGramIndex {
            hasher: self.hasher,
            source: self.source,
            entries: self.entries,
            verify: self.verify,
        }
    }
}

/// Builds an index over a stream of token sequences in one pass.
pub fn build_index<I, T, S>(
    source: I,
    n: usize,
    seed: u64,
    side: IndexSource,
    verify: bool,
) -> Result<NGramIndex>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut builder = IndexBuilder::new(n, seed, side, verify)?;
    for seq in source {
        builder.add(seq.as_ref());
    }
    Ok(builder.finish())
}

// On-disk layout, all integers little-endian:
//   magic "CKNGIDX\0" | version u32 | n u32 | seed u64 | source u8 | has_verify u8
//   | reserved [u8; 2] | entry_count u64 | entry_count x u64 (ascending)
//   [verify section: record_count u64, then per record: fp u64, n x (len u32, utf-8 bytes)]
const MAGIC: &[u8; 8] = b"CKNGIDX\0";
pub const INDEX_FORMAT_VERSION: u32 = 1;

impl NGramIndex {
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        let n = u32::try_from(self.n()).map_err(|_| Error::param("n too large"))?;
        out.write_all(MAGIC)?;
        out.write_all(&INDEX_FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&n.to_le_bytes())?;
        out.write_all(&self.seed().to_le_bytes())?;
        out.write_all(&[self.source.tag(), u8::from(self.verify.is_some()), 0, 0])?;
        out.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for fp in self.sorted_entries() {
            out.write_all(&fp.to_le_bytes())?;
        }
        if let Some(store) = &self.verify {
            let mut records: Vec<(u64, &Vec<String>)> = store
                .iter()
                .flat_map(|(fp, seqs)| seqs.iter().map(move |s| (*fp, s)))
                .collect();
            records.sort();
            out.write_all(&(records.len() as u64).to_le_bytes())?;
            for (fp, seq) in records {
                out.write_all(&fp.to_le_bytes())?;
                for tok in seq {
                    let len =
                        u32::try_from(tok.len()).map_err(|_| Error::param("token too long"))?;
                    out.write_all(&len.to_le_bytes())?;
                    out.write_all(tok.as_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut r = FieldReader(input);
        let magic: [u8; 8] = r.array()?;
        if &magic != MAGIC {
            return Err(Error::IndexFormat("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != INDEX_FORMAT_VERSION {
            return Err(Error::IndexFormat(format!(
                "unsupported version {version}, expected {INDEX_FORMAT_VERSION}"
            )));
        }
        let n = u32::from_le_bytes(r.array()?) as usize;
        let seed = u64::from_le_bytes(r.array()?);
        let [source, has_verify, _, _]: [u8; 4] = r.array()?;
        let source = IndexSource::from_tag(source)?;
        let hasher = NGramHasher::new(n, seed)
            .map_err(|_| Error::IndexFormat("n-gram length of 0".into()))?;
        let count = u64::from_le_bytes(r.array()?);
        let mut entries = FingerprintSet::default();
        entries.reserve(count.min(1 << 24) as usize);
        let mut prev = None;
        for _ in 0..count {
            let fp = u64::from_le_bytes(r.array()?);
            if prev.is_some_and(|p| p >= fp) {
                return Err(Error::IndexFormat(
                    "fingerprints not strictly ascending".into(),
                ));
            }
            prev = Some(fp);
            entries.insert(fp);
        }
        let verify =
            match has_verify {
                0 => None,
                1 => {
                    let records = u64::from_le_bytes(r.array()?);
                    let mut store = VerifyStore::default();
                    for _ in 0..records {
                        let fp = u64::from_le_bytes(r.array()?);
                        if !entries.contains(&fp) {
                            return Err(Error::IndexFormat(
                                "verify record for unknown fingerprint".into(),
                            ));
                        }
                        let mut seq = Vec::with_capacity(n);
                        for _ in 0..n {
                            let len = u32::from_le_bytes(r.array()?) as usize;
                            let bytes = r.bytes(len)?;
                            seq.push(String::from_utf8(bytes).map_err(|_| {
                                Error::IndexFormat("verify token is not UTF-8".into())
                            })?);
                        }
                        store.entry(fp).or_default().push(seq);
                    }
                    Some(store)
                }
                v => return Err(Error::IndexFormat(format!("bad verify flag {v}"))),
            };
        let mut rest = [0u8; 1];
        if r.0.read(&mut rest)? != 0 {
            return Err(Error::IndexFormat("trailing bytes".into()));
        }
        Ok(Self {
            hasher,
            source,
            entries,
            verify,
        })
    }
}

struct FieldReader<'a, R>(&'a mut R);

impl<R: Read> FieldReader<'_, R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.fill(&mut buf)?;
        Ok(buf)
    }

    fn bytes(&mut self, len: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; len];
        self.fill(&mut buf)?;
        Ok(buf)
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.0.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::IndexFormat("truncated file".into())
            } else {
                Error::Stream(e)
            }
        })
    }
}
