//! Seeded polynomial rolling fingerprints over token windows.
//!
//! Each token is first mapped to a stable 64-bit hash (FNV-1a, seeded, then
//! finalized with the SplitMix64 mixer). A window `t_0 .. t_{n-1}` has raw
//! value `sum h(t_i) * B^(n-1-i) mod 2^64` with an odd base `B` derived from
//! the seed, so sliding by one token is a constant-time update. The public
//! fingerprint is the raw value passed through the same bijective mixer.

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
pub(crate) fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Fingerprint of one n-gram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NGramFingerprint(pub u64);

/// Rolling hash state for a full window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RollingState {
    raw: u64,
}

impl RollingState {
    pub fn fingerprint(self) -> NGramFingerprint {
        NGramFingerprint(mix64(self.raw))
    }
}

/// Fingerprint function for a fixed `(n, seed)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NGramHasher {
    n: usize,
    seed: u64,
    token_key: u64,
    base: u64,
    // base^(n-1), the weight of the outgoing token
    lead: u64,
}

impl NGramHasher {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n-gram length must be at least 1"));
        }
        let token_key = mix64(seed ^ 0x5851_f42d_4c95_7f2d);
        let base = mix64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) | 1;
        let lead = (1..n).fold(1u64, |acc, _| acc.wrapping_mul(base));
        Ok(Self {
            n,
            seed,
            token_key,
            base,
            lead,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn token_hash(&self, token: &str) -> u64 {
        let mut h = FNV_OFFSET;
        for &b in token.as_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        mix64(h ^ self.token_key)
    }

    fn start_hashed(&self, hashes: &[u64]) -> RollingState {
        debug_assert_eq!(hashes.len(), self.n);
        let raw = hashes
            .iter()
            .fold(0u64, |acc, &h| acc.wrapping_mul(self.base).wrapping_add(h));
        RollingState { raw }
    }

    #[inline]
    fn roll_hashed(&self, state: RollingState, outgoing: u64, incoming: u64) -> RollingState {
        let raw = state
            .raw
            .wrapping_sub(outgoing.wrapping_mul(self.lead))
            .wrapping_mul(self.base)
            .wrapping_add(incoming);
        RollingState { raw }
    }

    /// State for a window of exactly `n` tokens, computed from scratch.
    pub fn start<S: AsRef<str>>(&self, window: &[S]) -> Result<RollingState> {
        self.check_len(window.len())?;
        let hashes: Vec<u64> = window.iter().map(|t| self.token_hash(t.as_ref())).collect();
        Ok(self.start_hashed(&hashes))
    }

    /// Slides the window one token: drops `outgoing` from the front, appends `incoming`.
    pub fn roll(&self, state: RollingState, outgoing: &str, incoming: &str) -> RollingState {
        self.roll_hashed(state, self.token_hash(outgoing), self.token_hash(incoming))
    }

    pub fn fingerprint<S: AsRef<str>>(&self, window: &[S]) -> Result<NGramFingerprint> {
        Ok(self.start(window)?.fingerprint())
    }

    /// One fingerprint per sliding window, in order.
    pub fn extract<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<NGramFingerprint> {
        let hashes: Vec<u64> = tokens.iter().map(|t| self.token_hash(t.as_ref())).collect();
        self.windows(&hashes).collect()
    }

    /// Fingerprints of every window over precomputed token hashes.
    pub(crate) fn windows<'a>(&'a self, hashes: &'a [u64]) -> Windows<'a> {
        Windows {
            hasher: self,
            hashes,
            next: 0,
            state: None,
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::param(format!(
                "window has {len} tokens, expected {}",
                self.n
            )));
        }
        Ok(())
    }
}

pub(crate) struct Windows<'a> {
    hasher: &'a NGramHasher,
    hashes: &'a [u64],
    next: usize,
    state: Option<RollingState>,
}

impl Iterator for Windows<'_> {
    type Item = NGramFingerprint;

    fn next(&mut self) -> Option<NGramFingerprint> {
        let n = self.hasher.n;
        let start = self.next;
        if start + n > self.hashes.len() {
            return None;
        }
        let state = match self.state {
            None => self.hasher.start_hashed(&self.hashes[..n]),
            Some(prev) => {
                self.hasher
                    .roll_hashed(prev, self.hashes[start - 1], self.hashes[start + n - 1])
            }
        };
        self.state = Some(state);
        self.next += 1;
        Some(state.fingerprint())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.hashes.len() + 1).saturating_sub(self.next + self.hasher.n);
        (left, Some(left))
    }
}

/// Fingerprints of every length-`n` window of `tokens`.
pub fn extract_ngrams<S: AsRef<str>>(
    tokens: &[S],
    n: usize,
    seed: u64,
) -> Result<Vec<NGramFingerprint>> {
    Ok(NGramHasher::new(n, seed)?.extract(tokens))
}
