//! N-gram extraction, rolling fingerprints and membership indexes.

mod fingerprint;
mod index;

pub use fingerprint::{extract_ngrams, NGramFingerprint, NGramHasher, RollingState};
pub use index::{build_index, IndexBuilder, IndexSource, NGramIndex, INDEX_FORMAT_VERSION};
